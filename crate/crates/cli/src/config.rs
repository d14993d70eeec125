//! Run configuration: one optional JSON block per command. Missing blocks and
//! fields fall back to the defaults below; command-line flags win over both.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use udn_core::critical_density::{TABLE2_ALPHA1, TABLE2_TAUS_DB};
use udn_core::geometry::{TABLE1_DENSITIES_PER_KM2, TABLE1_THRESHOLDS_M};
use udn_core::linklevel::{log_space, Fading};
use udn_core::mitigation::StrategySpec;
use udn_core::propagation::PathlossModel;

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub regions: RegionsConfig,
    pub table1: Table1Config,
    pub throughput: ThroughputConfig,
    pub critical: CriticalConfig,
    pub heatmap: HeatmapBlock,
    pub mitigation: MitigationConfig,
    pub fit: FitConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Densities as an explicit list or as a log-spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Densities {
    List(Vec<f64>),
    Log { lo_per_km2: f64, hi_per_km2: f64, points: usize },
}

impl Densities {
    pub fn log(lo_per_km2: f64, hi_per_km2: f64, points: usize) -> Self {
        Densities::Log { lo_per_km2, hi_per_km2, points }
    }

    pub fn resolve(&self) -> CliResult<Vec<f64>> {
        let v = match self {
            Densities::List(v) => v.clone(),
            Densities::Log { lo_per_km2, hi_per_km2, points } => {
                if !(*lo_per_km2 > 0.0 && lo_per_km2 < hi_per_km2) || *points < 2 {
                    return Err(CliError::Config(format!(
                        "density grid needs 0 < lo < hi and at least 2 points, got {lo_per_km2}..{hi_per_km2} x {points}"
                    )));
                }
                log_space(*lo_per_km2, *hi_per_km2, *points)
            }
        };
        if v.is_empty() || v.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(CliError::Config("densities must be a non-empty list of positive values".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionsConfig {
    pub frequency_hz: f64,
    pub antenna_dimension_m: f64,
    pub h_tx_m: f64,
    pub h_rx_m: f64,
}

impl Default for RegionsConfig {
    fn default() -> Self {
        Self { frequency_hz: 1.93e9, antenna_dimension_m: 1.5, h_tx_m: 10.0, h_rx_m: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table1Config {
    pub densities_per_km2: Vec<f64>,
    pub thresholds_m: Vec<f64>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            densities_per_km2: TABLE1_DENSITIES_PER_KM2.to_vec(),
            thresholds_m: TABLE1_THRESHOLDS_M.to_vec(),
        }
    }
}

fn dual_slope(family_bounded: bool, breakpoint_m: f64) -> PathlossModel {
    let (b, a) = (vec![breakpoint_m], vec![2.0, 4.0]);
    if family_bounded {
        PathlossModel::bounded(b, a)
    } else {
        PathlossModel::unbounded(b, a)
    }
    .expect("built-in model is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThroughputConfig {
    pub models: Vec<PathlossModel>,
    pub densities: Densities,
    pub sinr_threshold_db: f64,
    pub tx_power_dbm: f64,
    pub fading: Fading,
    pub include_noise: bool,
    pub noise_dbm: f64,
    pub trials: usize,
}

impl Default for ThroughputConfig {
    fn default() -> Self {
        Self {
            models: vec![dual_slope(true, 1.0), dual_slope(false, 1.0)],
            densities: Densities::log(1e3, 3e6, 15),
            sinr_threshold_db: 0.0,
            tx_power_dbm: 20.0,
            fading: Fading::RayleighUnitMean,
            include_noise: false,
            noise_dbm: -104.0,
            trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalConfig {
    pub taus_db: Vec<f64>,
    pub alpha1: Vec<f64>,
    pub alpha0: f64,
    pub breakpoint_m: f64,
    pub mu_min_per_km2: f64,
    pub mu_max_per_km2: f64,
    pub trials: usize,
    pub coarse_points: usize,
    pub refine_points: usize,
    pub golden_trial_factor: usize,
    pub bracket_tolerance: f64,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self {
            taus_db: TABLE2_TAUS_DB.to_vec(),
            alpha1: TABLE2_ALPHA1.to_vec(),
            alpha0: 2.0,
            breakpoint_m: 1.0,
            mu_min_per_km2: 1e2,
            mu_max_per_km2: 1e7,
            trials: 10_000,
            coarse_points: 13,
            refine_points: 9,
            golden_trial_factor: 4,
            bracket_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapBlock {
    pub densities_per_km2: Vec<f64>,
    pub models: Vec<PathlossModel>,
    pub side_m: f64,
    pub resolution: usize,
    pub tx_power_dbm: f64,
    pub fading: Fading,
}

impl Default for HeatmapBlock {
    fn default() -> Self {
        Self {
            densities_per_km2: vec![3.6e3, 2.5e5],
            models: vec![
                PathlossModel::unbounded(vec![], vec![4.0]).expect("valid"),
                dual_slope(false, 12.5),
                dual_slope(true, 12.5),
            ],
            side_m: 50.0,
            resolution: 500,
            tx_power_dbm: 20.0,
            fading: Fading::None,
        }
    }
}

/// The hand-built profile decoded by every strategy in the trace output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExampleProfile {
    pub desired: f64,
    pub interferers: Vec<f64>,
    pub decode_threshold: f64,
    pub budget: usize,
}

impl Default for ExampleProfile {
    fn default() -> Self {
        Self { desired: 1.0, interferers: vec![20.0, 6.0, 4.0, 1.5, 1.2], decode_threshold: 1.0, budget: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitigationConfig {
    pub model: PathlossModel,
    pub densities: Densities,
    pub sinr_threshold_db: f64,
    pub strategies: Vec<StrategySpec>,
    pub trials: usize,
    pub example: ExampleProfile,
    /// Published average ICA-over-IA gain, printed next to the measured one.
    pub reference_gain: f64,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        Self {
            model: dual_slope(true, 1.0),
            densities: Densities::log(1e2, 1e6, 9),
            sinr_threshold_db: 0.0,
            strategies: ["sic", "ia", "ica"].iter().map(|n| StrategySpec::named(n)).collect(),
            trials: 10_000,
            example: ExampleProfile::default(),
            reference_gain: 0.13,
        }
    }
}

/// Synthetic measurement set used when no input file is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticData {
    pub model: PathlossModel,
    pub min_distance_m: f64,
    pub max_distance_m: f64,
    pub points: usize,
    pub noise_sigma_db: f64,
    pub tx_power_dbm: f64,
}

impl Default for SyntheticData {
    fn default() -> Self {
        Self {
            model: PathlossModel::bounded(vec![3.3], vec![1.5, 3.5]).expect("valid"),
            min_distance_m: 0.1,
            max_distance_m: 30.0,
            points: 40,
            noise_sigma_db: 1.0,
            tx_power_dbm: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    pub specs: Vec<udn_core::fitting::FitSpec>,
    pub synthetic: SyntheticData,
}

impl Default for FitConfig {
    fn default() -> Self {
        use udn_core::fitting::FitSpec;
        use udn_core::propagation::Family;
        Self {
            input: None,
            specs: vec![
                FitSpec::new(Family::UnboundedMultiSlope, 1),
                FitSpec::new(Family::BoundedMultiSlope, 1),
                FitSpec::new(Family::UnboundedMultiSlope, 2),
                FitSpec::new(Family::BoundedMultiSlope, 2),
            ],
            synthetic: SyntheticData::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"tabel1": {}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"table1": {"densities": [1]}}"#).is_err());
    }

    #[test]
    fn density_forms() {
        let list: Densities = serde_json::from_str("[1, 10]").unwrap();
        assert_eq!(list.resolve().unwrap(), vec![1.0, 10.0]);
        let grid: Densities =
            serde_json::from_str(r#"{"lo_per_km2": 1, "hi_per_km2": 100, "points": 3}"#).unwrap();
        assert_eq!(grid.resolve().unwrap().len(), 3);
        assert!(Densities::List(vec![]).resolve().is_err());
        assert!(Densities::log(10.0, 1.0, 3).resolve().is_err());
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
