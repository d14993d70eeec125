//! Fitting multi-slope pathloss models to distance/received-power measurements.
//!
//! Residuals are taken in dB. Exponents (and breakpoints, unless fixed) are
//! searched in log coordinates with a multistart compass search; start points
//! come from a Halton sequence over the bound box.

use std::io::Read;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::propagation::{Family, PathlossModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub distance_m: f64,
    pub rx_power_dbm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
}

impl Measurement {
    pub fn new(distance_m: f64, rx_power_dbm: f64) -> Self {
        Self { distance_m, rx_power_dbm, frequency_hz: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0) || !self.distance_m.is_finite() {
            return Err(invalid(format!("measurement distance must be positive, got {}", self.distance_m)));
        }
        if !self.rx_power_dbm.is_finite() {
            return Err(invalid("measurement power must be finite"));
        }
        Ok(())
    }
}

/// Parse `distance_m,rx_power_dbm[,frequency_hz]` CSV with a header row.
pub fn read_measurements<R: Read>(reader: R) -> Result<Vec<Measurement>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Measurement>().enumerate() {
        let m = row.map_err(|e| invalid(format!("measurement row {}: {e}", i + 1)))?;
        m.validate().map_err(|e| invalid(format!("measurement row {}: {e}", i + 1)))?;
        out.push(m);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub family: Family,
    #[serde(default = "one")]
    pub slopes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_breakpoints: Option<Vec<f64>>,
    #[serde(default = "default_bounds")]
    pub exponent_bounds: (f64, f64),
    #[serde(default)]
    pub tx_power_dbm: f64,
    #[serde(default = "default_multistart")]
    pub multistart: usize,
}

fn one() -> usize {
    1
}
fn default_bounds() -> (f64, f64) {
    (0.5, 8.0)
}
fn default_multistart() -> usize {
    16
}

impl FitSpec {
    pub fn new(family: Family, slopes: usize) -> Self {
        Self {
            family,
            slopes,
            fixed_breakpoints: None,
            exponent_bounds: default_bounds(),
            tx_power_dbm: 0.0,
            multistart: default_multistart(),
        }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.fixed_breakpoints = Some(breakpoints);
        self
    }

    pub fn free_parameters(&self) -> usize {
        let free_breaks = if self.fixed_breakpoints.is_some() { 0 } else { self.slopes.saturating_sub(1) };
        self.slopes + free_breaks
    }

    fn validate(&self) -> Result<()> {
        if self.slopes == 0 {
            return Err(invalid("at least one slope is required"));
        }
        let (lo, hi) = self.exponent_bounds;
        if !(lo > 0.0 && lo <= hi && hi <= crate::propagation::MAX_EXPONENT) {
            return Err(invalid(format!("exponent bounds ({lo}, {hi}] are not well ordered")));
        }
        if self.multistart == 0 {
            return Err(invalid("multistart must be at least 1"));
        }
        if let Some(b) = &self.fixed_breakpoints {
            if b.len() + 1 != self.slopes {
                return Err(invalid(format!(
                    "{} slopes need {} fixed breakpoints, got {}",
                    self.slopes,
                    self.slopes - 1,
                    b.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub spec: FitSpec,
    pub model: PathlossModel,
    pub rmse_db: f64,
    /// `measured − (tx_power + gain_db)`, in input order.
    pub per_point_residuals_db: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Maps a point in log-parameter space to a model.
struct Problem<'a> {
    spec: &'a FitSpec,
    data: &'a [Measurement],
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Problem<'_> {
    fn model(&self, x: &[f64]) -> Result<PathlossModel> {
        let n = self.spec.slopes;
        let exponents: Vec<f64> = x[..n].iter().map(|v| v.exp()).collect();
        let breakpoints = match &self.spec.fixed_breakpoints {
            Some(b) => b.clone(),
            None => x[n..].iter().map(|v| v.exp()).collect(),
        };
        PathlossModel::new(self.spec.family, breakpoints, exponents)
    }

    fn residuals(&self, model: &PathlossModel) -> Result<Vec<f64>> {
        self.data
            .iter()
            .map(|m| Ok(m.rx_power_dbm - (self.spec.tx_power_dbm + model.gain_db(m.distance_m)?)))
            .collect()
    }

    fn sse(&self, x: &[f64]) -> f64 {
        match self.model(x).and_then(|m| self.residuals(&m)) {
            Ok(r) => r.iter().map(|v| v * v).sum(),
            Err(_) => f64::INFINITY,
        }
    }
}

const STEP_FLOOR: f64 = 1e-7;
const MAX_EVALUATIONS: usize = 200_000;

/// Compass search: try ± steps along each coordinate, halve when stuck.
fn compass_search(problem: &Problem<'_>, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut fx = problem.sse(&x);
    let mut steps: Vec<f64> =
        problem.lower.iter().zip(&problem.upper).map(|(l, u)| 0.25 * (u - l)).collect();
    let mut evals = 1;
    while steps.iter().any(|&s| s >= STEP_FLOOR) && evals < MAX_EVALUATIONS {
        let mut improved = false;
        for i in 0..x.len() {
            if steps[i] < STEP_FLOOR {
                continue;
            }
            for dir in [1.0, -1.0] {
                let mut trial = x.clone();
                trial[i] = (x[i] + dir * steps[i]).clamp(problem.lower[i], problem.upper[i]);
                if trial[i] == x[i] {
                    continue;
                }
                let ft = problem.sse(&trial);
                evals += 1;
                if ft < fx {
                    x = trial;
                    fx = ft;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    (x, fx)
}

/// Radical inverse of `index` in `base`.
fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub fn fit_pathloss(measurements: &[Measurement], spec: &FitSpec) -> Result<FitResult> {
    spec.validate()?;
    if measurements.is_empty() {
        return Err(Error::InsufficientData("no measurements".into()));
    }
    for m in measurements {
        m.validate()?;
    }
    let dmin = measurements.iter().map(|m| m.distance_m).fold(f64::INFINITY, f64::min);
    let dmax = measurements.iter().map(|m| m.distance_m).fold(0.0, f64::max);
    if measurements.len() > 1 && dmin == dmax {
        return Err(Error::DegenerateDesign(format!("all measurements at {dmin} m")));
    }
    let dims = spec.free_parameters();
    if dims > PRIMES.len() {
        return Err(invalid(format!("too many free parameters ({dims})")));
    }

    let mut warnings = Vec::new();
    if measurements.len() < 2 * dims {
        warnings.push(format!(
            "{} measurements for {dims} free parameters; at least {} recommended",
            measurements.len(),
            2 * dims
        ));
    }
    if dmax < 10.0 * dmin {
        warnings.push(format!("distances span less than a decade ({dmin} to {dmax} m)"));
    }

    let (alo, ahi) = spec.exponent_bounds;
    let mut lower = vec![alo.ln(); spec.slopes];
    let mut upper = vec![ahi.ln(); spec.slopes];
    lower.resize(dims, dmin.ln());
    upper.resize(dims, dmax.ln());
    let problem = Problem { spec, data: measurements, lower, upper };

    let starts: Vec<Vec<f64>> = (0..spec.multistart)
        .map(|s| {
            let mut x: Vec<f64> = (0..dims)
                .map(|i| {
                    let u = halton(s + 1, PRIMES[i]);
                    problem.lower[i] + u * (problem.upper[i] - problem.lower[i])
                })
                .collect();
            // breakpoints must start increasing
            x[spec.slopes..].sort_by(f64::total_cmp);
            x
        })
        .collect();
    let runs: Vec<(Vec<f64>, f64)> =
        starts.into_par_iter().map(|x0| compass_search(&problem, x0)).collect();
    let (best, sse) = runs
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("multistart >= 1");
    if !sse.is_finite() {
        return Err(Error::DegenerateDesign("no feasible parameter set found".into()));
    }

    let model = problem.model(&best)?;
    let residuals = problem.residuals(&model)?;
    let rmse_db = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(FitResult { spec: spec.clone(), model, rmse_db, per_point_residuals_db: residuals, warnings })
}

/// `rx = tx + gain_db(d) + N(0, σ²)` at each distance.
pub fn synth_measurements<R: Rng + ?Sized>(
    model: &PathlossModel,
    distances_m: &[f64],
    tx_power_dbm: f64,
    noise_sigma_db: f64,
    rng: &mut R,
) -> Result<Vec<Measurement>> {
    if !(noise_sigma_db >= 0.0) || !noise_sigma_db.is_finite() {
        return Err(invalid(format!("noise sigma must be non-negative, got {noise_sigma_db}")));
    }
    let noise = Normal::new(0.0, noise_sigma_db).map_err(|e| invalid(e.to_string()))?;
    distances_m
        .iter()
        .map(|&d| {
            if !(d > 0.0) {
                return Err(invalid(format!("distance must be positive, got {d}")));
            }
            let n = if noise_sigma_db > 0.0 { noise.sample(rng) } else { 0.0 };
            Ok(Measurement::new(d, tx_power_dbm + model.gain_db(d)? + n))
        })
        .collect()
}

/// Fit every spec and rank by RMSE, best first.
pub fn compare_families(measurements: &[Measurement], specs: &[FitSpec]) -> Result<Vec<FitResult>> {
    if specs.is_empty() {
        return Err(invalid("no fit specifications given"));
    }
    let mut results: Vec<FitResult> =
        specs.iter().map(|s| fit_pathloss(measurements, s)).collect::<Result<_>>()?;
    results.sort_by(|a, b| a.rmse_db.total_cmp(&b.rmse_db));
    Ok(results)
}
