//! Interference-management strategies applied to a received-signal profile.
//!
//! Every strategy walks the interferers from strongest to weakest and removes
//! a prefix of that order:
//!
//! * SIC decodes and subtracts an interferer while its SINR against everything
//!   not yet removed (desired signal included) clears the decoding threshold.
//! * IA removes the `c` strongest interferers unconditionally (ideal alignment
//!   with `c` spatial dimensions).
//! * ICA runs the SIC walk but spends an IA slot on each interferer that would
//!   stall it, until the slots run out.
//!
//! Strategies implement [`DecodingStrategy`] and are looked up by name through
//! a [`StrategyRegistry`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linklevel::{self, spatial_throughput, CoverageEstimate, SimConfig, ThroughputPoint};
use crate::units::db_to_linear;

/// Received powers at one receiver, all linear and relative to the same scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile {
    pub desired: f64,
    pub interferers: Vec<f64>,
    #[serde(default)]
    pub noise: f64,
}

impl SignalProfile {
    pub fn new(desired: f64, interferers: Vec<f64>) -> Result<Self> {
        let profile = Self { desired, interferers, noise: 0.0 };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.desired > 0.0) || !self.desired.is_finite() {
            return Err(invalid(format!("desired power must be positive, got {}", self.desired)));
        }
        if let Some(p) = self.interferers.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(invalid(format!("interferer power must be positive, got {p}")));
        }
        if !(self.noise >= 0.0) {
            return Err(invalid(format!("noise must be non-negative, got {}", self.noise)));
        }
        Ok(())
    }

    /// SINR without any mitigation; `+∞` when nothing interferes.
    pub fn sinr(&self) -> f64 {
        ratio(self.desired, self.interferers.iter().sum::<f64>() + self.noise)
    }

    /// Interferer indices sorted by descending power, ties by index.
    pub fn strongest_first(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.interferers.len()).collect();
        order.sort_by(|&a, &b| self.interferers[b].total_cmp(&self.interferers[a]));
        order
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Sic,
    Ia,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub interferer: usize,
    pub power: f64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodingOutcome {
    /// Removed interferers, in removal order.
    pub cancelled: Vec<usize>,
    /// The subset of `cancelled` removed by alignment.
    pub ia_assigned: Vec<usize>,
    /// `desired / (Σ surviving interferers + noise)`; `+∞` when nothing survives.
    pub residual_sinr: f64,
    pub decisions: Vec<Decision>,
}

/// Prefix walk shared by every strategy. `sic_threshold = None` disables SIC,
/// `ia_budget` caps alignment, `max_sic_stages` caps SIC depth.
fn walk(
    profile: &SignalProfile,
    sic_threshold: Option<f64>,
    ia_budget: usize,
    max_sic_stages: Option<usize>,
) -> DecodingOutcome {
    let order = profile.strongest_first();
    let n = order.len();
    // suffix[k] = Σ powers of order[k..], summed weakest-first.
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + profile.interferers[order[k]];
    }

    let mut cancelled = Vec::new();
    let mut ia_assigned = Vec::new();
    let mut decisions = Vec::new();
    let mut sic_used = 0usize;
    let mut k = 0;
    while k < n {
        let idx = order[k];
        let power = profile.interferers[idx];
        let sic_ok = sic_threshold.is_some_and(|tau| {
            max_sic_stages.map_or(true, |m| sic_used < m)
                && power / (profile.desired + profile.noise + suffix[k + 1]) >= tau
        });
        let action = if sic_ok {
            sic_used += 1;
            Action::Sic
        } else if ia_assigned.len() < ia_budget {
            ia_assigned.push(idx);
            Action::Ia
        } else {
            Action::Stop
        };
        decisions.push(Decision { interferer: idx, power, action });
        if action == Action::Stop {
            break;
        }
        cancelled.push(idx);
        k += 1;
    }

    DecodingOutcome {
        cancelled,
        ia_assigned,
        residual_sinr: ratio(profile.desired, suffix[k] + profile.noise),
        decisions,
    }
}

pub fn no_mitigation(profile: &SignalProfile) -> DecodingOutcome {
    walk(profile, None, 0, None)
}

pub fn sic_decode(profile: &SignalProfile, decode_threshold: f64) -> DecodingOutcome {
    walk(profile, Some(decode_threshold), 0, None)
}

pub fn ia_decode(profile: &SignalProfile, budget: usize) -> DecodingOutcome {
    walk(profile, None, budget, None)
}

pub fn ica_decode(profile: &SignalProfile, decode_threshold: f64, budget: usize) -> DecodingOutcome {
    walk(profile, Some(decode_threshold), budget, None)
}

/// A decoding procedure applied at a single receiver.
pub trait DecodingStrategy: Send + Sync + fmt::Debug {
    /// Label used in output files, e.g. `ica(c=2)`.
    fn label(&self) -> String;

    fn decode(&self, profile: &SignalProfile) -> DecodingOutcome;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoMitigation;

impl DecodingStrategy for NoMitigation {
    fn label(&self) -> String {
        "none".into()
    }

    fn decode(&self, profile: &SignalProfile) -> DecodingOutcome {
        no_mitigation(profile)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sic {
    pub decode_threshold: f64,
    pub max_stages: Option<usize>,
}

impl DecodingStrategy for Sic {
    fn label(&self) -> String {
        "sic".into()
    }

    fn decode(&self, profile: &SignalProfile) -> DecodingOutcome {
        walk(profile, Some(self.decode_threshold), 0, self.max_stages)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ia {
    pub budget: usize,
}

impl DecodingStrategy for Ia {
    fn label(&self) -> String {
        format!("ia(c={})", self.budget)
    }

    fn decode(&self, profile: &SignalProfile) -> DecodingOutcome {
        ia_decode(profile, self.budget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ica {
    pub decode_threshold: f64,
    pub budget: usize,
    pub max_sic_stages: Option<usize>,
}

impl DecodingStrategy for Ica {
    fn label(&self) -> String {
        format!("ica(c={})", self.budget)
    }

    fn decode(&self, profile: &SignalProfile) -> DecodingOutcome {
        walk(profile, Some(self.decode_threshold), self.budget, self.max_sic_stages)
    }
}

/// Configuration-file form of a strategy: `{"name": "ica", "budget": 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub name: String,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Linear decoding threshold; defaults to the coverage threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sic_stages: Option<usize>,
}

fn default_budget() -> usize {
    2
}

impl StrategySpec {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), budget: default_budget(), decode_threshold: None, max_sic_stages: None }
    }
}

/// Resolved parameters handed to a strategy constructor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    pub decode_threshold: f64,
    pub budget: usize,
    pub max_sic_stages: Option<usize>,
}

type Constructor = fn(&StrategyParams) -> Arc<dyn DecodingStrategy>;

/// Name → constructor table for decoding strategies.
#[derive(Clone)]
pub struct StrategyRegistry {
    entries: BTreeMap<String, Constructor>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Registry holding `none`, `sic`, `ia` and `ica`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("none", |_| Arc::new(NoMitigation));
        reg.register("sic", |p| {
            Arc::new(Sic { decode_threshold: p.decode_threshold, max_stages: p.max_sic_stages })
        });
        reg.register("ia", |p| Arc::new(Ia { budget: p.budget }));
        reg.register("ica", |p| {
            Arc::new(Ica {
                decode_threshold: p.decode_threshold,
                budget: p.budget,
                max_sic_stages: p.max_sic_stages,
            })
        });
        reg
    }

    pub fn register(&mut self, name: &str, ctor: Constructor) {
        self.entries.insert(name.to_string(), ctor);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, params: &StrategyParams) -> Result<Arc<dyn DecodingStrategy>> {
        if !(params.decode_threshold > 0.0) {
            return Err(invalid(format!(
                "decode threshold must be positive, got {}",
                params.decode_threshold
            )));
        }
        let ctor = self.entries.get(name).ok_or_else(|| {
            invalid(format!(
                "unknown strategy `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        Ok(ctor(params))
    }

    /// Resolve a spec; the decoding threshold defaults to `coverage_threshold`.
    pub fn resolve(
        &self,
        spec: &StrategySpec,
        coverage_threshold: f64,
    ) -> Result<Arc<dyn DecodingStrategy>> {
        self.build(
            &spec.name,
            &StrategyParams {
                decode_threshold: spec.decode_threshold.unwrap_or(coverage_threshold),
                budget: spec.budget,
                max_sic_stages: spec.max_sic_stages,
            },
        )
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

/// Success counts of several strategies over the same trials.
fn strategy_counts(
    config: &SimConfig,
    strategies: &[Arc<dyn DecodingStrategy>],
) -> Result<Vec<usize>> {
    config.validate()?;
    let tau = db_to_linear(config.sinr_threshold_db);
    let sampler = linklevel::ProfileSampler::new(config)?;
    let per_trial: Vec<Result<Vec<bool>>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let profile = sampler.sample(t)?;
            Ok(strategies.iter().map(|s| s.decode(&profile).residual_sinr > tau).collect())
        })
        .collect();
    let mut counts = vec![0usize; strategies.len()];
    for outcome in per_trial {
        for (c, ok) in counts.iter_mut().zip(outcome?) {
            *c += usize::from(ok);
        }
    }
    Ok(counts)
}

/// Coverage of the typical user when it decodes with `strategy`.
pub fn strategy_coverage(
    config: &SimConfig,
    strategy: &Arc<dyn DecodingStrategy>,
) -> Result<CoverageEstimate> {
    let counts = strategy_counts(config, std::slice::from_ref(strategy))?;
    Ok(CoverageEstimate::from_counts(counts[0], config.trials))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyCurve {
    pub strategy: String,
    pub points: Vec<ThroughputPoint>,
}

/// Throughput curves for several strategies; every strategy sees the same
/// realizations at each density.
pub fn strategy_throughput_curve(
    config: &SimConfig,
    strategies: &[Arc<dyn DecodingStrategy>],
    densities_per_km2: &[f64],
) -> Result<Vec<StrategyCurve>> {
    if densities_per_km2.is_empty() || strategies.is_empty() {
        return Err(invalid("need at least one density and one strategy"));
    }
    let mut curves: Vec<StrategyCurve> = strategies
        .iter()
        .map(|s| StrategyCurve { strategy: s.label(), points: Vec::new() })
        .collect();
    for &density in densities_per_km2 {
        let cfg = SimConfig { density_per_km2: density, ..config.clone() };
        let counts = strategy_counts(&cfg, strategies)?;
        for (curve, c) in curves.iter_mut().zip(counts) {
            let coverage = CoverageEstimate::from_counts(c, cfg.trials);
            curve.points.push(spatial_throughput(density, coverage, cfg.sinr_threshold_db));
        }
    }
    Ok(curves)
}
