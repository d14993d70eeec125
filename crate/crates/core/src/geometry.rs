//! Transmitter deployments, nearest-point association and link-distance
//! statistics under nearest-BS association.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seeding::SeedSchedule;
use crate::units::per_km2_to_per_m2;

/// Expected point counts above this are refused.
pub const MAX_EXPECTED_POINTS: f64 = 1e8;

/// Minimum expected number of points in a typical-user simulation window.
pub const MIN_EXPECTED_POINTS: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Observation window, centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Window {
    Disk { radius_m: f64 },
    Square { side_m: f64 },
}

impl Window {
    pub fn area(&self) -> f64 {
        match *self {
            Window::Disk { radius_m } => PI * radius_m * radius_m,
            Window::Square { side_m } => side_m * side_m,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            Window::Disk { radius_m } => p.x.hypot(p.y) <= radius_m,
            Window::Square { side_m } => {
                let h = side_m / 2.0;
                p.x.abs() <= h && p.y.abs() <= h
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let size = match *self {
            Window::Disk { radius_m } => radius_m,
            Window::Square { side_m } => side_m,
        };
        if size > 0.0 && size.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("window size must be positive, got {size}")))
        }
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match *self {
            Window::Disk { radius_m } => {
                let r = radius_m * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                Point::new(r * theta.cos(), r * theta.sin())
            }
            Window::Square { side_m } => Point::new(
                side_m * (rng.random::<f64>() - 0.5),
                side_m * (rng.random::<f64>() - 0.5),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub positions: Vec<Point>,
    pub window: Window,
    /// Declared intensity in points/m².
    pub density_per_m2: f64,
}

impl Deployment {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn check_density(density_per_m2: f64) -> Result<()> {
    if density_per_m2 > 0.0 && density_per_m2.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("density must be positive, got {density_per_m2}")))
    }
}

/// Homogeneous Poisson point process in `window`.
pub fn sample_ppp<R: Rng + ?Sized>(
    density_per_m2: f64,
    window: Window,
    rng: &mut R,
) -> Result<Deployment> {
    check_density(density_per_m2)?;
    window.validate()?;
    let expected = density_per_m2 * window.area();
    if expected > MAX_EXPECTED_POINTS {
        return Err(Error::Resource(format!(
            "expected {expected:.3e} points exceeds the limit of {MAX_EXPECTED_POINTS:.0e}"
        )));
    }
    let count = Poisson::new(expected)
        .map_err(|e| invalid(format!("poisson mean {expected}: {e}")))?
        .sample(rng) as usize;
    let positions = (0..count).map(|_| window.sample_uniform(rng)).collect();
    Ok(Deployment { positions, window, density_per_m2 })
}

/// Square lattice with spacing `1/√density`, offset half a spacing from the
/// window corner. A spacing wider than the window yields a single centre point.
pub fn grid_deployment(density_per_m2: f64, side_m: f64) -> Result<Deployment> {
    check_density(density_per_m2)?;
    let window = Window::Square { side_m };
    window.validate()?;
    let spacing = 1.0 / density_per_m2.sqrt();
    let positions = if spacing > side_m {
        vec![Point::ORIGIN]
    } else {
        // Relative slack so that e.g. 50 m / 16.666… m counts as 3 intervals.
        let per_side = (side_m / spacing * (1.0 + 1e-9)).floor() as usize;
        let coord = |i: usize| i as f64 * spacing + spacing / 2.0 - side_m / 2.0;
        let mut positions = Vec::with_capacity(per_side * per_side);
        for j in 0..per_side {
            for i in 0..per_side {
                positions.push(Point::new(coord(i), coord(j)));
            }
        }
        positions
    };
    Ok(Deployment { positions, window, density_per_m2 })
}

/// Index and distance of the point closest to `query`; ties go to the lowest index.
pub fn nearest_point(deployment: &Deployment, query: Point) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in deployment.positions.iter().enumerate() {
        let d = p.distance(&query);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.ok_or(Error::EmptyDeployment)
}

/// Void probability of a PPP: `P(nearest < r) = 1 − exp(−π μ r²)`.
pub fn nearest_distance_cdf(density_per_m2: f64, r_m: f64) -> Result<f64> {
    check_density(density_per_m2)?;
    if !(r_m >= 0.0) {
        return Err(invalid(format!("radius must be non-negative, got {r_m}")));
    }
    Ok(-(-PI * density_per_m2 * r_m * r_m).exp_m1())
}

/// Mean nearest-neighbour link length `1 / (2√μ)`.
pub fn mean_link_length(density_per_m2: f64) -> Result<f64> {
    check_density(density_per_m2)?;
    Ok(0.5 / density_per_m2.sqrt())
}

/// Radius of the disk simulated around a typical user: large enough to hold
/// [`MIN_EXPECTED_POINTS`] on average, at least 20 mean link lengths, and at
/// least 10× the largest pathloss breakpoint.
pub fn typical_user_radius(density_per_m2: f64, largest_breakpoint_m: f64) -> Result<f64> {
    let by_count = (MIN_EXPECTED_POINTS / (PI * density_per_m2)).sqrt();
    let by_link = 20.0 * mean_link_length(density_per_m2)?;
    Ok(by_count.max(by_link).max(10.0 * largest_breakpoint_m))
}

/// Draws a PPP in a disk centred on the origin in order of increasing distance.
///
/// Point `k` sits at `√(Γ_k / (π μ))` where `Γ_k` is a sum of `k` unit
/// exponentials, so one random sequence serves every density: changing `μ`
/// only rescales and truncates it. This is what gives common random numbers
/// across a density sweep.
pub struct RadialPpp<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    scale: f64,
    radius_m: f64,
    arrival: f64,
}

impl<'a, R: Rng + ?Sized> RadialPpp<'a, R> {
    pub fn new(density_per_m2: f64, radius_m: f64, rng: &'a mut R) -> Result<Self> {
        check_density(density_per_m2)?;
        if !(radius_m > 0.0) {
            return Err(invalid(format!("radius must be positive, got {radius_m}")));
        }
        let expected = density_per_m2 * PI * radius_m * radius_m;
        if expected > MAX_EXPECTED_POINTS {
            return Err(Error::Resource(format!(
                "expected {expected:.3e} points exceeds the limit of {MAX_EXPECTED_POINTS:.0e}"
            )));
        }
        Ok(Self { rng, scale: 1.0 / (PI * density_per_m2), radius_m, arrival: 0.0 })
    }

    /// Next distance inside the disk, or `None` once the disk is exhausted.
    /// `mark` is called once per point (inside or not) to draw per-point marks
    /// from the same stream.
    #[inline]
    pub fn next_with<M>(&mut self, mut mark: impl FnMut(&mut R) -> M) -> Option<(f64, M)> {
        let step: f64 = Exp1.sample(self.rng);
        self.arrival += step;
        let m = mark(self.rng);
        let d = (self.arrival * self.scale).sqrt();
        (d <= self.radius_m).then_some((d, m))
    }

    pub fn rng(&mut self) -> &mut R {
        self.rng
    }
}

/// Full point pattern from [`RadialPpp`], with uniform angles.
pub fn sample_ppp_radial<R: Rng + ?Sized>(
    density_per_m2: f64,
    radius_m: f64,
    rng: &mut R,
) -> Result<Deployment> {
    let mut ppp = RadialPpp::new(density_per_m2, radius_m, rng)?;
    let mut positions = Vec::new();
    while let Some((d, theta)) = ppp.next_with(|r| 2.0 * PI * r.random::<f64>()) {
        positions.push(Point::new(d * theta.cos(), d * theta.sin()));
    }
    Ok(Deployment { positions, window: Window::Disk { radius_m }, density_per_m2 })
}

/// Nearest-BS distance from the origin for `trials` independent PPP
/// realizations, sampled via [`sample_ppp`] + [`nearest_point`]. Realizations
/// with no points are resampled.
pub fn nearest_distance_samples(
    density_per_m2: f64,
    trials: usize,
    schedule: &SeedSchedule,
) -> Result<Vec<f64>> {
    let radius_m = typical_user_radius(density_per_m2, 0.0)?;
    let window = Window::Disk { radius_m };
    let family = schedule.family("geometry.link_cdf");
    let results: Vec<Result<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = family.stream(t);
            loop {
                let dep = sample_ppp(density_per_m2, window, &mut rng)?;
                match nearest_point(&dep, Point::ORIGIN) {
                    Ok((_, d)) => return Ok(d),
                    Err(Error::EmptyDeployment) => continue,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub trials: usize,
}

impl ProbabilityEstimate {
    pub fn from_counts(successes: usize, trials: usize) -> Self {
        let p_hat = successes as f64 / trials as f64;
        Self { p_hat, std_err: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(), trials }
    }
}

/// Monte Carlo estimate of `P(nearest < r)`.
pub fn empirical_link_cdf(
    density_per_m2: f64,
    r_m: f64,
    trials: usize,
    schedule: &SeedSchedule,
) -> Result<ProbabilityEstimate> {
    if trials < 100 {
        return Err(invalid(format!("at least 100 trials required, got {trials}")));
    }
    if !(r_m >= 0.0) {
        return Err(invalid(format!("radius must be non-negative, got {r_m}")));
    }
    let samples = nearest_distance_samples(density_per_m2, trials, schedule)?;
    let hits = samples.iter().filter(|&&d| d < r_m).count();
    Ok(ProbabilityEstimate::from_counts(hits, trials))
}

/// One row of the link-distance table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkStatsRow {
    pub mean_link_m: f64,
    pub density_per_km2: f64,
    pub thresholds_m: Vec<f64>,
    pub probabilities: Vec<f64>,
}

pub const TABLE1_DENSITIES_PER_KM2: [f64; 6] = [1.0, 25.0, 100.0, 2500.0, 1e4, 2.5e5];
pub const TABLE1_THRESHOLDS_M: [f64; 4] = [1.0, 29.45, 13.1, 3.25];

pub fn table1(densities_per_km2: &[f64], thresholds_m: &[f64]) -> Result<Vec<LinkStatsRow>> {
    if densities_per_km2.is_empty() || thresholds_m.is_empty() {
        return Err(invalid("densities and thresholds must be non-empty"));
    }
    densities_per_km2
        .iter()
        .map(|&density| {
            let mu = per_km2_to_per_m2(density);
            Ok(LinkStatsRow {
                mean_link_m: mean_link_length(mu)?,
                density_per_km2: density,
                thresholds_m: thresholds_m.to_vec(),
                probabilities: thresholds_m
                    .iter()
                    .map(|&r| nearest_distance_cdf(mu, r))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}
