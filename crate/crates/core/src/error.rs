use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An unbounded pathloss law was evaluated at zero distance.
    #[error("unbounded pathloss model is singular at distance {distance_m} m")]
    Singularity { distance_m: f64 },

    #[error("deployment contains no points")]
    EmptyDeployment,

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error(
        "inconsistent field regions: critical distance {critical_m} m is below \
         Fraunhofer distance {fraunhofer_m} m"
    )]
    InconsistentRegions { fraunhofer_m: f64, critical_m: f64 },

    /// The throughput maximum sits on an edge of the searched interval.
    #[error("throughput maximum at search boundary {density_per_km2} /km^2; widen the interval")]
    Boundary { density_per_km2: f64 },
}

impl Error {
    /// `true` for errors caused by bad inputs rather than by the numerics.
    pub fn is_invalid_input(&self) -> bool {
        matches!(self, Error::InvalidArgument(_))
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
