//! Monte Carlo coverage against an independent numeric-integration oracle.

use udn_core::linklevel::{coverage_probability, SimConfig};
use udn_core::mitigation::{strategy_coverage, StrategyRegistry, StrategySpec};
use udn_core::propagation::PathlossModel;

/// Interference-limited nearest-BS coverage under Rayleigh fading and a
/// single-slope power law: `1 / (1 + ρ)` with
/// `ρ = τ^{2/α} ∫_{τ^{-2/α}}^∞ du / (1 + u^{α/2})`.
/// With `u = a/s²` the integral becomes `∫_0^1 2a s^{α-3} / (s^α + a^{α/2}) ds`,
/// which is smooth for `α ≥ 3`; evaluated by composite Simpson.
fn oracle(alpha: f64, tau_db: f64) -> f64 {
    let tau = 10f64.powf(tau_db / 10.0);
    let a = tau.powf(-2.0 / alpha);
    let f = |s: f64| 2.0 * a * s.powf(alpha - 3.0) / (s.powf(alpha) + a.powf(alpha / 2.0));
    let n = 4000;
    let h = 1.0 / n as f64;
    let mut sum = f(0.0) + f(1.0);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    let rho = tau.powf(2.0 / alpha) * sum * h / 3.0;
    1.0 / (1.0 + rho)
}

#[test]
fn oracle_matches_known_closed_form() {
    assert!((oracle(4.0, 0.0) - 1.0 / (1.0 + std::f64::consts::FRAC_PI_4)).abs() < 1e-10);
}

#[test]
fn coverage_matches_oracle() {
    for alpha in [3.0, 4.0] {
        for tau_db in [0.0, 5.0, 10.0] {
            let mut cfg = SimConfig::new(1e4, PathlossModel::unbounded(vec![], vec![alpha]).unwrap());
            cfg.sinr_threshold_db = tau_db;
            cfg.trials = 20_000;
            cfg.seed = 11;
            let est = coverage_probability(&cfg).unwrap();
            let expect = oracle(alpha, tau_db);
            assert!(
                (est.p_hat - expect).abs() < 3.0 * est.std_err,
                "alpha={alpha} tau={tau_db}: {} vs {expect} (se {})",
                est.p_hat,
                est.std_err
            );
        }
    }
}

#[test]
fn coverage_is_density_invariant_for_single_slope() {
    let model = PathlossModel::unbounded(vec![], vec![4.0]).unwrap();
    let mut lo = SimConfig::new(10.0, model.clone());
    lo.trials = 10_000;
    let mut hi = SimConfig { density_per_km2: 1e6, ..lo.clone() };
    hi.seed = 2;
    let (a, b) = (coverage_probability(&lo).unwrap(), coverage_probability(&hi).unwrap());
    let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
    assert!((a.p_hat - b.p_hat).abs() < 4.0 * se, "{} vs {}", a.p_hat, b.p_hat);
}

#[test]
fn doubling_window_does_not_move_coverage() {
    let model = PathlossModel::bounded(vec![1.0], vec![2.0, 4.0]).unwrap();
    let mut cfg = SimConfig::new(1e5, model);
    cfg.trials = 10_000;
    let base = coverage_probability(&cfg).unwrap();
    let wide = coverage_probability(&SimConfig { window_scale: 2.0, seed: 99, ..cfg }).unwrap();
    let se = (base.std_err.powi(2) + wide.std_err.powi(2)).sqrt();
    assert!((base.p_hat - wide.p_hat).abs() < 3.0 * se, "{} vs {}", base.p_hat, wide.p_hat);
}

#[test]
fn no_mitigation_strategy_equals_plain_coverage() {
    let model = PathlossModel::bounded(vec![1.0], vec![2.0, 4.0]).unwrap();
    let mut cfg = SimConfig::new(3e4, model);
    cfg.trials = 3000;
    cfg.sinr_threshold_db = 5.0;
    let none = StrategyRegistry::with_builtins()
        .resolve(&StrategySpec::named("none"), cfg.threshold_linear())
        .unwrap();
    assert_eq!(strategy_coverage(&cfg, &none).unwrap(), coverage_probability(&cfg).unwrap());
}

#[test]
fn noise_only_lowers_coverage() {
    let model = PathlossModel::bounded(vec![1.0], vec![2.0, 4.0]).unwrap();
    let mut cfg = SimConfig::new(10.0, model);
    cfg.trials = 2000;
    let quiet = coverage_probability(&cfg).unwrap();
    let noisy = coverage_probability(&SimConfig { include_noise: true, ..cfg }).unwrap();
    assert!(noisy.p_hat <= quiet.p_hat);
}
