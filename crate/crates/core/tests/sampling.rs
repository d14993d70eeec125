//! Point-process sampling checks and thread-count invariance.

use std::sync::Arc;

use udn_core::geometry::{
    empirical_link_cdf, nearest_distance_cdf, nearest_distance_samples, sample_ppp, Window,
};
use udn_core::interference_field::{interference_field, HeatmapConfig};
use udn_core::linklevel::{coverage_probability, SimConfig};
use udn_core::mitigation::{strategy_throughput_curve, DecodingStrategy, StrategyRegistry, StrategySpec};
use udn_core::propagation::PathlossModel;
use udn_core::seeding::SeedSchedule;

#[test]
fn nearest_distance_ecdf_within_dkw_band() {
    let density = 1e-4;
    let n = 5000;
    let mut d = nearest_distance_samples(density, n, &SeedSchedule::new(3)).unwrap();
    d.sort_by(f64::total_cmp);
    // P(sup |F_n - F| > eps) <= 2 exp(-2 n eps²), at 1e-3 false-alarm rate
    let eps = ((2.0f64 / 1e-3).ln() / (2.0 * n as f64)).sqrt();
    let mut worst: f64 = 0.0;
    for (i, &x) in d.iter().enumerate() {
        let f = nearest_distance_cdf(density, x).unwrap();
        worst = worst.max((f - i as f64 / n as f64).abs()).max((f - (i + 1) as f64 / n as f64).abs());
    }
    assert!(worst < eps, "sup deviation {worst} exceeds {eps}");
}

#[test]
fn link_cdf_estimate_near_analytic_value() {
    let density = 100.0 * 1e-6;
    let est = empirical_link_cdf(density, 29.45, 10_000, &SeedSchedule::new(1)).unwrap();
    let exact = nearest_distance_cdf(density, 29.45).unwrap();
    assert!((est.p_hat - exact).abs() < 3.0 * est.std_err, "{} vs {exact}", est.p_hat);
}

#[test]
fn ppp_count_matches_mean() {
    use rand::SeedableRng;
    let window = Window::Square { side_m: 1000.0 };
    let mut total = 0usize;
    let reps = 200;
    for s in 0..reps {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
        total += sample_ppp(1e-3, window, &mut rng).unwrap().len();
    }
    let mean = total as f64 / reps as f64;
    // mean 1000, std of the average ≈ 2.24
    assert!((mean - 1000.0).abs() < 10.0, "{mean}");
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let model = PathlossModel::bounded(vec![1.0], vec![2.0, 4.0]).unwrap();
    let mut cfg = SimConfig::new(2e4, model.clone());
    cfg.trials = 2000;

    let cov1 = in_pool(1, || coverage_probability(&cfg).unwrap());
    let cov4 = in_pool(4, || coverage_probability(&cfg).unwrap());
    assert_eq!(cov1, cov4);

    let registry = StrategyRegistry::with_builtins();
    let strategies: Vec<Arc<dyn DecodingStrategy>> = ["sic", "ia", "ica"]
        .iter()
        .map(|n| registry.resolve(&StrategySpec::named(n), 1.0).unwrap())
        .collect();
    let dens = [1e3, 1e5];
    let c1 = in_pool(1, || strategy_throughput_curve(&cfg, &strategies, &dens).unwrap());
    let c4 = in_pool(4, || strategy_throughput_curve(&cfg, &strategies, &dens).unwrap());
    assert_eq!(c1, c4);

    let mut heat = HeatmapConfig::new(2.5e5, model);
    heat.resolution = 64;
    let r1 = in_pool(1, || interference_field(&heat).unwrap());
    let r4 = in_pool(4, || interference_field(&heat).unwrap());
    assert_eq!(r1.values_dbm, r4.values_dbm);
}
