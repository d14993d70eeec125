//! Monte Carlo SINR at a typical user with nearest-BS association.
//!
//! The user sits at the origin of a Poisson field of base stations drawn in a
//! disk (see [`geometry::typical_user_radius`]). The nearest BS serves it and
//! every other BS interferes (full buffer). Trial `t` always uses stream
//! `(seed, "linklevel", t)` and draws the field in order of distance, so the
//! same trial at a different density is the same realization rescaled.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{self, nearest_point, Deployment, Point, RadialPpp};
use crate::mitigation::SignalProfile;
use crate::propagation::PathlossModel;
use crate::seeding::{SeedSchedule, StreamFamily};
use crate::units::{db_to_linear, per_km2_to_per_m2};

pub use crate::geometry::ProbabilityEstimate as CoverageEstimate;

pub const STREAM_TAG: &str = "linklevel";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Fading {
    #[default]
    #[serde(rename = "rayleigh")]
    RayleighUnitMean,
    #[serde(rename = "none")]
    None,
}

/// Power factor of one link: unit-mean exponential under Rayleigh fading.
pub fn sample_fading<R: Rng + ?Sized>(fading: Fading, rng: &mut R) -> f64 {
    match fading {
        Fading::RayleighUnitMean => Exp1.sample(rng),
        Fading::None => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub density_per_km2: f64,
    pub model: PathlossModel,
    #[serde(default)]
    pub sinr_threshold_db: f64,
    #[serde(default = "default_tx_power")]
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub fading: Fading,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub include_noise: bool,
    #[serde(default = "default_noise")]
    pub noise_dbm: f64,
    /// Multiplier on the simulation disk radius; used by truncation checks.
    #[serde(default = "default_window_scale")]
    pub window_scale: f64,
}

fn default_tx_power() -> f64 {
    20.0
}
fn default_trials() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}
fn default_noise() -> f64 {
    -104.0
}
fn default_window_scale() -> f64 {
    1.0
}

impl SimConfig {
    pub fn new(density_per_km2: f64, model: PathlossModel) -> Self {
        Self {
            density_per_km2,
            model,
            sinr_threshold_db: 0.0,
            tx_power_dbm: default_tx_power(),
            fading: Fading::RayleighUnitMean,
            trials: default_trials(),
            seed: default_seed(),
            include_noise: false,
            noise_dbm: default_noise(),
            window_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density_per_km2 > 0.0) || !self.density_per_km2.is_finite() {
            return Err(invalid(format!("density must be positive, got {}", self.density_per_km2)));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !self.sinr_threshold_db.is_finite() {
            return Err(invalid("SINR threshold must be finite"));
        }
        if !(self.window_scale > 0.0) {
            return Err(invalid("window scale must be positive"));
        }
        Ok(())
    }

    pub fn threshold_linear(&self) -> f64 {
        db_to_linear(self.sinr_threshold_db)
    }

    /// Noise power relative to the (common) transmit power; zero when disabled.
    pub fn relative_noise(&self) -> f64 {
        if self.include_noise {
            db_to_linear(self.noise_dbm - self.tx_power_dbm)
        } else {
            0.0
        }
    }

    pub fn window_radius_m(&self) -> Result<f64> {
        let r = geometry::typical_user_radius(
            per_km2_to_per_m2(self.density_per_km2),
            self.model.largest_breakpoint_m(),
        )?;
        Ok(r * self.window_scale)
    }
}

/// Draws the received-signal profile of the typical user for a given trial.
#[derive(Debug, Clone)]
pub struct ProfileSampler<'a> {
    config: &'a SimConfig,
    density_per_m2: f64,
    radius_m: f64,
    noise: f64,
    family: StreamFamily,
}

impl<'a> ProfileSampler<'a> {
    pub fn new(config: &'a SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            density_per_m2: per_km2_to_per_m2(config.density_per_km2),
            radius_m: config.window_radius_m()?,
            noise: config.relative_noise(),
            family: SeedSchedule::new(config.seed).family(STREAM_TAG),
        })
    }

    pub fn sample(&self, trial: u64) -> Result<SignalProfile> {
        self.sample_with(&mut self.family.stream(trial))
    }

    /// Empty realizations are redrawn. A singular gain (unbounded model with a
    /// BS exactly at the user) is redrawn once, then reported.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SignalProfile> {
        let mut singular = 0;
        loop {
            match self.draw(rng) {
                Ok(Some(profile)) => return Ok(profile),
                Ok(None) => continue,
                Err(e @ Error::Singularity { .. }) => {
                    singular += 1;
                    if singular > 1 {
                        return Err(e);
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<SignalProfile>> {
        let fading = self.config.fading;
        let model = &self.config.model;
        let mut ppp = RadialPpp::new(self.density_per_m2, self.radius_m, rng)?;
        let Some((d0, h0)) = ppp.next_with(|r| sample_fading(fading, r)) else {
            return Ok(None);
        };
        let desired = model.gain(d0)? * h0;
        let mut interferers = Vec::with_capacity(600);
        while let Some((d, h)) = ppp.next_with(|r| sample_fading(fading, r)) {
            interferers.push(model.gain(d)? * h);
        }
        Ok(Some(SignalProfile { desired, interferers, noise: self.noise }))
    }
}

/// One SINR realization at the typical user; `+∞` when nothing interferes.
pub fn sinr_trial<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<f64> {
    Ok(ProfileSampler::new(config)?.sample_with(rng)?.sinr())
}

/// SINR at `user` for an explicit deployment with per-BS fading factors.
pub fn sinr_for_deployment(
    deployment: &Deployment,
    user: Point,
    model: &PathlossModel,
    fades: &[f64],
    relative_noise: f64,
) -> Result<f64> {
    if fades.len() != deployment.len() {
        return Err(invalid("one fading factor per transmitter required"));
    }
    let (serving, _) = nearest_point(deployment, user)?;
    let mut desired = 0.0;
    let mut interference = relative_noise;
    for (i, (p, h)) in deployment.positions.iter().zip(fades).enumerate() {
        let rx = model.gain(p.distance(&user))? * h;
        if i == serving {
            desired = rx;
        } else {
            interference += rx;
        }
    }
    Ok(if interference > 0.0 { desired / interference } else { f64::INFINITY })
}

/// Fraction of trials whose SINR exceeds the threshold.
pub fn coverage_probability(config: &SimConfig) -> Result<CoverageEstimate> {
    let sampler = ProfileSampler::new(config)?;
    let tau = config.threshold_linear();
    let hits: Vec<Result<bool>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| Ok(sampler.sample(t)?.sinr() > tau))
        .collect();
    let mut count = 0;
    for h in hits {
        count += usize::from(h?);
    }
    Ok(CoverageEstimate::from_counts(count, config.trials))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputPoint {
    pub density_per_km2: f64,
    pub coverage: CoverageEstimate,
    /// bits/(s·Hz·m²)
    pub st: f64,
}

impl ThroughputPoint {
    /// Standard error of `st`, propagated from the coverage estimate.
    pub fn st_std_err(&self) -> f64 {
        if self.coverage.p_hat > 0.0 {
            self.st * self.coverage.std_err / self.coverage.p_hat
        } else {
            0.0
        }
    }
}

/// `μ · P(SINR > τ) · log2(1 + τ)` with `μ` converted to per m².
pub fn spatial_throughput(
    density_per_km2: f64,
    coverage: CoverageEstimate,
    threshold_db: f64,
) -> ThroughputPoint {
    let st = per_km2_to_per_m2(density_per_km2)
        * coverage.p_hat
        * (1.0 + db_to_linear(threshold_db)).log2();
    ThroughputPoint { density_per_km2, coverage, st }
}

pub fn throughput_curve(config: &SimConfig, densities_per_km2: &[f64]) -> Result<Vec<ThroughputPoint>> {
    if densities_per_km2.is_empty() {
        return Err(invalid("density list must be non-empty"));
    }
    densities_per_km2
        .iter()
        .map(|&density| {
            let cfg = SimConfig { density_per_km2: density, ..config.clone() };
            let coverage = coverage_probability(&cfg)?;
            Ok(spatial_throughput(density, coverage, cfg.sinr_threshold_db))
        })
        .collect()
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}
