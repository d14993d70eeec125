//! Locating the throughput-maximising ("critical") density and fitting the
//! `st(μ) = c·μ·exp(−κμ)` scaling law.
//!
//! The search runs in three stages over `ln μ`: a 13-point coarse grid, a
//! 9-point grid spanning the coarse neighbours of the best probe, then a
//! golden-section refinement of the best refined bracket with a larger trial
//! budget. Monte Carlo objectives use common random numbers throughout, so
//! every probe of one search sees the same realizations.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linklevel::{log_space, spatial_throughput, SimConfig};
use crate::mitigation::{strategy_coverage, DecodingStrategy};
use crate::propagation::PathlossModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub density_per_km2: f64,
    pub st: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Something whose spatial throughput can be probed at a density.
pub trait ThroughputObjective: Sync {
    /// `trial_factor` multiplies the objective's base trial budget.
    fn probe(&self, density_per_km2: f64, trial_factor: usize) -> Result<Probe>;
}

/// Monte Carlo spatial throughput, optionally under a decoding strategy.
#[derive(Debug, Clone)]
pub struct MonteCarloObjective {
    pub config: SimConfig,
    pub strategy: Option<Arc<dyn DecodingStrategy>>,
}

impl MonteCarloObjective {
    pub fn new(config: SimConfig) -> Self {
        Self { config, strategy: None }
    }

    pub fn with_strategy(config: SimConfig, strategy: Arc<dyn DecodingStrategy>) -> Self {
        Self { config, strategy: Some(strategy) }
    }
}

impl ThroughputObjective for MonteCarloObjective {
    fn probe(&self, density_per_km2: f64, trial_factor: usize) -> Result<Probe> {
        let cfg = SimConfig {
            density_per_km2,
            trials: self.config.trials * trial_factor.max(1),
            ..self.config.clone()
        };
        let coverage = match &self.strategy {
            Some(s) => strategy_coverage(&cfg, s)?,
            None => crate::linklevel::coverage_probability(&cfg)?,
        };
        let point = spatial_throughput(density_per_km2, coverage, cfg.sinr_threshold_db);
        Ok(Probe {
            density_per_km2,
            st: point.st,
            std_err: point.st_std_err(),
            trials: cfg.trials,
        })
    }
}

/// Deterministic objective wrapping a closure; used to validate the search.
pub struct FnObjective<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> ThroughputObjective for FnObjective<F> {
    fn probe(&self, density_per_km2: f64, _trial_factor: usize) -> Result<Probe> {
        Ok(Probe { density_per_km2, st: (self.0)(density_per_km2), std_err: 0.0, trials: 0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSettings {
    pub coarse_points: usize,
    pub refine_points: usize,
    pub golden_trial_factor: usize,
    /// Target relative width of the final bracket; must not exceed 0.15.
    pub bracket_tolerance: f64,
    /// Noise allowance (in combined standard errors) for the unimodality check.
    pub unimodal_sigmas: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            coarse_points: 13,
            refine_points: 9,
            golden_trial_factor: 4,
            bracket_tolerance: 0.01,
            unimodal_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalDensityResult {
    pub mu_star_per_km2: f64,
    pub st_star: f64,
    pub search_trace: Vec<Probe>,
    /// Relative width of the final golden-section bracket.
    pub tolerance: f64,
    pub warnings: Vec<String>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn argmax(probes: &[Probe]) -> usize {
    // first maximum wins, so ties resolve deterministically
    let mut best = 0;
    for (i, p) in probes.iter().enumerate() {
        if p.st > probes[best].st {
            best = i;
        }
    }
    best
}

fn grid(objective: &dyn ThroughputObjective, lo: f64, hi: f64, n: usize) -> Result<Vec<Probe>> {
    log_space(lo, hi, n).into_iter().map(|mu| objective.probe(mu, 1)).collect()
}

fn unimodality_warnings(coarse: &[Probe], peak: usize, sigmas: f64) -> Vec<String> {
    let mut warnings = Vec::new();
    for (i, w) in coarse.windows(2).enumerate() {
        let slack = sigmas * w[0].std_err.hypot(w[1].std_err);
        let violated = if i < peak { w[1].st + slack < w[0].st } else { w[1].st > w[0].st + slack };
        if violated {
            warnings.push(format!(
                "non-unimodal coarse probes between {:.4e} and {:.4e} /km^2",
                w[0].density_per_km2, w[1].density_per_km2
            ));
        }
    }
    warnings
}

pub fn find_critical_density(
    objective: &dyn ThroughputObjective,
    mu_min: f64,
    mu_max: f64,
    settings: &SearchSettings,
) -> Result<CriticalDensityResult> {
    if !(mu_min > 0.0 && mu_min < mu_max && mu_max.is_finite()) {
        return Err(invalid(format!("need 0 < mu_min < mu_max, got [{mu_min}, {mu_max}]")));
    }
    if settings.coarse_points < 3 || settings.refine_points < 3 {
        return Err(invalid("grids need at least 3 points"));
    }
    if !(settings.bracket_tolerance > 0.0 && settings.bracket_tolerance <= 0.15) {
        return Err(invalid("bracket tolerance must lie in (0, 0.15]"));
    }

    let coarse = grid(objective, mu_min, mu_max, settings.coarse_points)?;
    let peak = argmax(&coarse);
    if peak == 0 || peak == coarse.len() - 1 {
        return Err(Error::Boundary { density_per_km2: coarse[peak].density_per_km2 });
    }
    let warnings = unimodality_warnings(&coarse, peak, settings.unimodal_sigmas);

    let fine = grid(
        objective,
        coarse[peak - 1].density_per_km2,
        coarse[peak + 1].density_per_km2,
        settings.refine_points,
    )?;
    let fpeak = argmax(&fine);
    let lo = fine[fpeak.saturating_sub(1)].density_per_km2;
    let hi = fine[(fpeak + 1).min(fine.len() - 1)].density_per_km2;

    let mut trace = coarse;
    trace.extend(fine);

    // Golden-section maximisation over ln μ.
    let factor = settings.golden_trial_factor;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut pc = objective.probe(c.exp(), factor)?;
    let mut pd = objective.probe(d.exp(), factor)?;
    trace.push(pc);
    trace.push(pd);
    let rel_width = |a: f64, b: f64| (b.exp() - a.exp()) / (0.5 * (a + b)).exp();
    while rel_width(a, b) > settings.bracket_tolerance {
        if pc.st >= pd.st {
            b = d;
            d = c;
            pd = pc;
            c = b - INV_PHI * (b - a);
            pc = objective.probe(c.exp(), factor)?;
            trace.push(pc);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + INV_PHI * (b - a);
            pd = objective.probe(d.exp(), factor)?;
            trace.push(pd);
        }
    }

    let best = trace[argmax(&trace)];
    Ok(CriticalDensityResult {
        mu_star_per_km2: best.density_per_km2,
        st_star: best.st,
        search_trace: trace,
        tolerance: rel_width(a, b),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Amplitude in `st = c·μ·exp(−κμ)` (μ per km²).
    pub c: f64,
    /// Decay rate per (BS/km²).
    pub kappa: f64,
    /// RMS residual of `ln(st/μ)`.
    pub rmse: f64,
    pub points_used: usize,
}

impl ScalingFit {
    pub fn is_decaying(&self) -> bool {
        self.kappa > 0.0
    }

    /// Location of the fitted maximum, `1/κ`.
    pub fn peak_density_per_km2(&self) -> Option<f64> {
        self.is_decaying().then(|| 1.0 / self.kappa)
    }
}

/// Least squares of `ln(st/μ) = ln c − κμ` over the points with `st > 0`.
pub fn fit_scaling_decay(curve: &[(f64, f64)]) -> Result<ScalingFit> {
    if curve.len() < 5 {
        return Err(invalid(format!("need at least 5 curve points, got {}", curve.len())));
    }
    if let Some(&(mu, st)) = curve.iter().find(|(mu, st)| !(*st >= 0.0) || !(*mu > 0.0)) {
        return Err(invalid(format!("invalid curve point ({mu}, {st})")));
    }
    let pts: Vec<(f64, f64)> =
        curve.iter().filter(|(_, st)| *st > 0.0).map(|&(mu, st)| (mu, (st / mu).ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} points with positive throughput; need 2",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateDesign("all curve densities are identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rmse = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ScalingFit { c: intercept.exp(), kappa: -slope, rmse, points_used: pts.len() })
}

pub const TABLE2_TAUS_DB: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];
pub const TABLE2_ALPHA1: [f64; 3] = [3.0, 3.5, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Cell {
    pub tau_db: f64,
    pub alpha1: f64,
    pub result: std::result::Result<CriticalDensityResult, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table2Setup {
    pub alpha0: f64,
    pub breakpoint_m: f64,
    pub mu_min_per_km2: f64,
    pub mu_max_per_km2: f64,
}

impl Default for Table2Setup {
    fn default() -> Self {
        Self { alpha0: 2.0, breakpoint_m: 1.0, mu_min_per_km2: 1e2, mu_max_per_km2: 1e7 }
    }
}

/// Critical density for each `(τ, α₁)` pair under a dual-slope bounded model.
/// Per-cell failures are recorded in the cell rather than aborting the table.
pub fn table2(
    taus_db: &[f64],
    alpha1s: &[f64],
    setup: &Table2Setup,
    base: &SimConfig,
    settings: &SearchSettings,
) -> Result<Vec<Table2Cell>> {
    if taus_db.is_empty() || alpha1s.is_empty() {
        return Err(invalid("tau and alpha1 lists must be non-empty"));
    }
    let mut cells = Vec::with_capacity(taus_db.len() * alpha1s.len());
    for &tau_db in taus_db {
        for &alpha1 in alpha1s {
            let model = PathlossModel::bounded(vec![setup.breakpoint_m], vec![setup.alpha0, alpha1])?;
            let cfg = SimConfig { model, sinr_threshold_db: tau_db, ..base.clone() };
            let objective = MonteCarloObjective::new(cfg);
            let result = find_critical_density(
                &objective,
                setup.mu_min_per_km2,
                setup.mu_max_per_km2,
                settings,
            );
            let result = match result {
                Ok(r) => Ok(r),
                Err(e @ Error::Boundary { .. }) => Err(e.to_string()),
                Err(e) => return Err(e),
            };
            cells.push(Table2Cell { tau_db, alpha1, result });
        }
    }
    Ok(cells)
}
