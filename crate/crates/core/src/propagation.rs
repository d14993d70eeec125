//! Distance-dependent channel gain and near/far-field region boundaries.
//!
//! Two multi-slope families are supported. On segment `n`, i.e. for
//! `R_n < d <= R_{n+1}` with `R_0 = 0` and `R_N = ∞`:
//!
//! * bounded:   `g(d) = η_n / (1 + d^α_n)`
//! * unbounded: `g(d) = η_n · d^(−α_n)`
//!
//! The continuity factors `η_n` are derived from the breakpoints and exponents
//! so that the gain is continuous at every breakpoint. The bounded law never
//! exceeds unit gain; the unbounded law diverges at `d → 0`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{linear_to_db, SPEED_OF_LIGHT};

/// Exponents above this are rejected at construction: `d^α` overflows long
/// before any physically meaningful decay rate is reached.
pub const MAX_EXPONENT: f64 = 10.0;

pub fn wavelength(frequency_hz: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) || !frequency_hz.is_finite() {
        return Err(invalid(format!("frequency must be positive, got {frequency_hz}")));
    }
    Ok(SPEED_OF_LIGHT / frequency_hz)
}

/// Boundaries of the reactive near-field, radiative near-field and the two-ray
/// critical distance for one carrier/antenna configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRegions {
    pub wavelength_m: f64,
    pub antenna_dimension_m: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    /// `λ / 2π`
    pub reactive_boundary_m: f64,
    /// `2 D² / λ`
    pub fraunhofer_m: f64,
    /// `4 h_tx h_rx / λ`
    pub critical_m: f64,
}

impl FieldRegions {
    pub fn from_wavelength(
        wavelength_m: f64,
        antenna_dimension_m: f64,
        tx_height_m: f64,
        rx_height_m: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("wavelength", wavelength_m),
            ("antenna dimension", antenna_dimension_m),
            ("tx height", tx_height_m),
            ("rx height", rx_height_m),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            wavelength_m,
            antenna_dimension_m,
            tx_height_m,
            rx_height_m,
            reactive_boundary_m: wavelength_m / (2.0 * PI),
            fraunhofer_m: 2.0 * antenna_dimension_m * antenna_dimension_m / wavelength_m,
            critical_m: 4.0 * tx_height_m * rx_height_m / wavelength_m,
        })
    }

    /// An antenna larger than half a wavelength.
    pub fn is_electromagnetically_long(&self) -> bool {
        self.antenna_dimension_m > self.wavelength_m / 2.0
    }
}

pub fn field_regions(
    frequency_hz: f64,
    antenna_dimension_m: f64,
    tx_height_m: f64,
    rx_height_m: f64,
) -> Result<FieldRegions> {
    FieldRegions::from_wavelength(
        wavelength(frequency_hz)?,
        antenna_dimension_m,
        tx_height_m,
        rx_height_m,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    ReactiveNearField,
    RadiativeNearField,
    FarFieldWithinCritical,
    FarFieldBeyondCritical,
}

/// Partition `[0, ∞)` at `R_B`, `R_F` and `R_C`; each boundary belongs to the
/// inner region.
pub fn classify_region(distance_m: f64, regions: &FieldRegions) -> Result<Region> {
    if !(distance_m >= 0.0) {
        return Err(invalid(format!("distance must be non-negative, got {distance_m}")));
    }
    if regions.critical_m < regions.fraunhofer_m {
        return Err(Error::InconsistentRegions {
            fraunhofer_m: regions.fraunhofer_m,
            critical_m: regions.critical_m,
        });
    }
    if regions.fraunhofer_m < regions.reactive_boundary_m {
        return Err(invalid(
            "Fraunhofer distance below reactive boundary (antenna is electromagnetically short)",
        ));
    }
    Ok(if distance_m <= regions.reactive_boundary_m {
        Region::ReactiveNearField
    } else if distance_m <= regions.fraunhofer_m {
        Region::RadiativeNearField
    } else if distance_m <= regions.critical_m {
        Region::FarFieldWithinCritical
    } else {
        Region::FarFieldBeyondCritical
    })
}

/// A licensed band from the link-distance table, with the band-averaged
/// Fraunhofer distance the table's column header uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPreset {
    pub name: &'static str,
    pub low_hz: f64,
    pub high_hz: f64,
    pub antenna_dimension_m: f64,
    pub stated_fraunhofer_mean_m: f64,
    pub stated_fraunhofer_range_m: (f64, f64),
}

pub const TABLE1_BANDS: [BandPreset; 3] = [
    BandPreset {
        name: "band2",
        low_hz: 1.93e9,
        high_hz: 1.99e9,
        antenna_dimension_m: 1.5,
        stated_fraunhofer_mean_m: 29.45,
        stated_fraunhofer_range_m: (29.0, 29.9),
    },
    BandPreset {
        name: "band4",
        low_hz: 2.11e9,
        high_hz: 2.155e9,
        antenna_dimension_m: 1.0,
        stated_fraunhofer_mean_m: 13.1,
        stated_fraunhofer_range_m: (12.9, 13.3),
    },
    BandPreset {
        name: "band38",
        low_hz: 2.57e9,
        high_hz: 2.62e9,
        antenna_dimension_m: 0.5,
        stated_fraunhofer_mean_m: 3.25,
        stated_fraunhofer_range_m: (3.2, 3.3),
    },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCheck {
    pub name: String,
    pub fraunhofer_low_edge_m: f64,
    pub fraunhofer_high_edge_m: f64,
    pub fraunhofer_mean_m: f64,
    pub stated_mean_m: f64,
    /// Set when the computed range misses the stated range by more than 0.1 m.
    pub mismatch: Option<String>,
}

/// Compute the Fraunhofer range across a band and compare it with the stated one.
pub fn check_band(band: &BandPreset) -> Result<BandCheck> {
    let rf = |f: f64| -> Result<f64> {
        Ok(field_regions(f, band.antenna_dimension_m, 1.0, 1.0)?.fraunhofer_m)
    };
    let lo = rf(band.low_hz)?;
    let hi = rf(band.high_hz)?;
    let (stated_lo, stated_hi) = band.stated_fraunhofer_range_m;
    let tol = 0.1;
    let mismatch = if (lo - stated_lo).abs() > tol || (hi - stated_hi).abs() > tol {
        Some(format!(
            "{}: 2D^2/lambda gives {:.2}-{:.2} m but the table states {}-{} m (mean {} m); \
             the stated mean is used as the table threshold",
            band.name, lo, hi, stated_lo, stated_hi, band.stated_fraunhofer_mean_m
        ))
    } else {
        None
    };
    Ok(BandCheck {
        name: band.name.to_string(),
        fraunhofer_low_edge_m: lo,
        fraunhofer_high_edge_m: hi,
        fraunhofer_mean_m: 0.5 * (lo + hi),
        stated_mean_m: band.stated_fraunhofer_mean_m,
        mismatch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "bpm")]
    BoundedMultiSlope,
    #[serde(rename = "upm")]
    UnboundedMultiSlope,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::BoundedMultiSlope => "bpm",
            Family::UnboundedMultiSlope => "upm",
        })
    }
}

/// `d^α` with fast paths for integer and half-integer exponents, which cover
/// every setting the experiments use.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Power {
    Int(i32),
    HalfInt(i32),
    Real(f64),
}

impl Power {
    fn new(alpha: f64) -> Self {
        if alpha.fract() == 0.0 {
            Power::Int(alpha as i32)
        } else if (2.0 * alpha).fract() == 0.0 {
            Power::HalfInt(alpha.floor() as i32)
        } else {
            Power::Real(alpha)
        }
    }

    #[inline]
    fn eval(self, d: f64) -> f64 {
        match self {
            Power::Int(k) => d.powi(k),
            Power::HalfInt(k) => d.powi(k) * d.sqrt(),
            Power::Real(a) => d.powf(a),
        }
    }
}

/// JSON form of a model: `{"family": "bpm"|"upm", "breakpoints_m": [...], "exponents": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    #[serde(default)]
    pub breakpoints_m: Vec<f64>,
    pub exponents: Vec<f64>,
}

/// A validated multi-slope pathloss law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct PathlossModel {
    family: Family,
    breakpoints_m: Vec<f64>,
    exponents: Vec<f64>,
    continuity_factors: Vec<f64>,
    powers: Vec<Power>,
}

impl PathlossModel {
    pub fn new(family: Family, breakpoints_m: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(invalid("at least one exponent is required"));
        }
        if exponents.len() != breakpoints_m.len() + 1 {
            return Err(invalid(format!(
                "{} exponents need {} breakpoints, got {}",
                exponents.len(),
                exponents.len() - 1,
                breakpoints_m.len()
            )));
        }
        for &a in &exponents {
            if !(a > 0.0 && a <= MAX_EXPONENT) {
                return Err(invalid(format!("exponent {a} outside (0, {MAX_EXPONENT}]")));
            }
        }
        for &r in &breakpoints_m {
            if !(r > 0.0) || !r.is_finite() {
                return Err(invalid(format!("breakpoint {r} must be positive and finite")));
            }
        }
        if breakpoints_m.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("breakpoints must be strictly increasing"));
        }

        let powers: Vec<Power> = exponents.iter().map(|&a| Power::new(a)).collect();
        let mut continuity_factors = Vec::with_capacity(exponents.len());
        let mut eta = 1.0;
        continuity_factors.push(eta);
        for (i, &r) in breakpoints_m.iter().enumerate() {
            let (prev, next) = (powers[i], powers[i + 1]);
            eta *= match family {
                Family::BoundedMultiSlope => (1.0 + next.eval(r)) / (1.0 + prev.eval(r)),
                Family::UnboundedMultiSlope => next.eval(r) / prev.eval(r),
            };
            continuity_factors.push(eta);
        }

        Ok(Self { family, breakpoints_m, exponents, continuity_factors, powers })
    }

    pub fn bounded(breakpoints_m: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        Self::new(Family::BoundedMultiSlope, breakpoints_m, exponents)
    }

    pub fn unbounded(breakpoints_m: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        Self::new(Family::UnboundedMultiSlope, breakpoints_m, exponents)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn breakpoints_m(&self) -> &[f64] {
        &self.breakpoints_m
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn continuity_factors(&self) -> &[f64] {
        &self.continuity_factors
    }

    pub fn slope_count(&self) -> usize {
        self.exponents.len()
    }

    pub fn largest_breakpoint_m(&self) -> f64 {
        self.breakpoints_m.last().copied().unwrap_or(0.0)
    }

    /// Segment `n` covers `(R_n, R_{n+1}]`; zero distance belongs to segment 0.
    #[inline]
    pub fn segment(&self, distance_m: f64) -> usize {
        self.breakpoints_m.iter().take_while(|&&r| distance_m > r).count()
    }

    /// Linear power gain at `distance_m`.
    #[inline]
    pub fn gain(&self, distance_m: f64) -> Result<f64> {
        if !(distance_m >= 0.0) {
            return Err(invalid(format!("distance must be non-negative, got {distance_m}")));
        }
        let n = self.segment(distance_m);
        let eta = self.continuity_factors[n];
        match self.family {
            Family::BoundedMultiSlope => Ok(eta / (1.0 + self.powers[n].eval(distance_m))),
            Family::UnboundedMultiSlope => {
                if distance_m == 0.0 {
                    return Err(Error::Singularity { distance_m });
                }
                Ok(eta / self.powers[n].eval(distance_m))
            }
        }
    }

    pub fn gain_db(&self, distance_m: f64) -> Result<f64> {
        Ok(linear_to_db(self.gain(distance_m)?))
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            family: self.family,
            breakpoints_m: self.breakpoints_m.clone(),
            exponents: self.exponents.clone(),
        }
    }
}

impl TryFrom<ModelSpec> for PathlossModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        PathlossModel::new(spec.family, spec.breakpoints_m, spec.exponents)
    }
}

impl From<PathlossModel> for ModelSpec {
    fn from(model: PathlossModel) -> Self {
        model.spec()
    }
}

/// Compact comma-free form such as `bpm[1 ; 2 4]`, safe inside CSV fields.
impl fmt::Display for PathlossModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "{}[{} ; {}]", self.family, join(&self.breakpoints_m), join(&self.exponents))
    }
}
