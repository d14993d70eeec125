//! One function per subcommand. Each writes its files under the output
//! directory and returns a short human-readable summary for stdout.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use udn_core::critical_density::{fit_scaling_decay, table2, SearchSettings, Table2Setup};
use udn_core::fitting::{compare_families, read_measurements, synth_measurements, Measurement};
use udn_core::geometry::{nearest_distance_cdf, table1 as link_table};
use udn_core::interference_field::{field_stats, interference_field, spearman, HeatmapConfig};
use udn_core::linklevel::{log_space, throughput_curve, SimConfig, ThroughputPoint};
use udn_core::mitigation::{
    ia_decode, ica_decode, sic_decode, strategy_throughput_curve, DecodingStrategy, SignalProfile,
    StrategyRegistry,
};
use udn_core::propagation::{check_band, field_regions, TABLE1_BANDS};
use udn_core::report::{fmt_num, Metadata};
use udn_core::seeding::SeedSchedule;
use udn_core::units::{linear_to_db, per_km2_to_per_m2};

use crate::error::{CliError, CliResult};
use crate::Context;

/// The published value of the one link-distance cell that disagrees with the
/// void-probability formula by far more than rounding.
const ERRATUM_CELL: (f64, f64, f64) = (1e4, 1.0, 0.178);

fn write(ctx: &Context, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = ctx.out.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn metadata(ctx: &Context, command: &str, block: &impl Serialize) -> CliResult<Metadata> {
    let mut m = Metadata::new(command, ctx.seed);
    let text = serde_json::to_string(block).map_err(|e| CliError::Config(e.to_string()))?;
    m.push("config", text);
    Ok(m)
}

fn to_json(value: &impl Serialize) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn regions(ctx: &Context) -> CliResult<String> {
    let cfg = &ctx.config.regions;
    let r = field_regions(cfg.frequency_hz, cfg.antenna_dimension_m, cfg.h_tx_m, cfg.h_rx_m)?;
    let mut meta = metadata(ctx, "regions", cfg)?;
    if r.critical_m < r.fraunhofer_m {
        meta.push(
            "note",
            "critical distance lies inside the Fraunhofer distance; region classification is undefined",
        );
    }
    let mut body = meta.render();
    body.push_str("quantity,value_m\n");
    for (k, v) in [
        ("wavelength", r.wavelength_m),
        ("reactive_boundary", r.reactive_boundary_m),
        ("fraunhofer", r.fraunhofer_m),
        ("critical", r.critical_m),
    ] {
        writeln!(body, "{k},{}", fmt_num(v)).expect("write to String");
    }
    write(ctx, "regions.csv", body.as_bytes())?;
    Ok(body)
}

pub fn table1(ctx: &Context) -> CliResult<String> {
    let cfg = &ctx.config.table1;
    let rows = link_table(&cfg.densities_per_km2, &cfg.thresholds_m)?;
    let mut meta = metadata(ctx, "table1", cfg)?;
    for band in &TABLE1_BANDS {
        let check = check_band(band)?;
        meta.push(
            &format!("band {}", check.name),
            format!(
                "R_F {}..{} m, stated mean {} m",
                fmt_num(check.fraunhofer_low_edge_m),
                fmt_num(check.fraunhofer_high_edge_m),
                check.stated_mean_m
            ),
        );
        if let Some(note) = check.mismatch {
            meta.push("mismatch", note);
        }
    }
    let (ed, et, published) = ERRATUM_CELL;
    let mut summary = String::new();
    if cfg.densities_per_km2.contains(&ed) && cfg.thresholds_m.contains(&et) {
        let computed = nearest_distance_cdf(per_km2_to_per_m2(ed), et)?;
        let note = format!(
            "published cell ({ed} /km^2, {et} m) reads {:.1}%; 1 - exp(-pi mu r^2) gives {:.2}%",
            published * 100.0,
            computed * 100.0
        );
        writeln!(summary, "erratum: {note}").expect("write to String");
        meta.push("erratum", note);
    }

    let mut body = meta.render();
    body.push_str("mean_link_m,density_per_km2");
    for t in &cfg.thresholds_m {
        write!(body, ",p_below_{t}m").expect("write to String");
    }
    body.push('\n');
    for row in &rows {
        write!(body, "{},{}", fmt_num(row.mean_link_m), fmt_num(row.density_per_km2)).expect("write");
        for p in &row.probabilities {
            write!(body, ",{}", fmt_num(*p)).expect("write to String");
        }
        body.push('\n');
    }
    let path = write(ctx, "table1.csv", body.as_bytes())?;
    writeln!(summary, "wrote {}", path.display()).expect("write to String");
    Ok(summary)
}

fn curve_rows(points: &[ThroughputPoint], out: &mut String) {
    out.push_str("density_per_km2,coverage,std_err,spatial_throughput_bits_per_s_hz_m2\n");
    for p in points {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_num(p.density_per_km2),
            fmt_num(p.coverage.p_hat),
            fmt_num(p.coverage.std_err),
            fmt_num(p.st)
        )
        .expect("write to String");
    }
}

pub fn throughput(ctx: &Context) -> CliResult<String> {
    let cfg = &ctx.config.throughput;
    if cfg.models.is_empty() {
        return Err(CliError::Config("throughput.models is empty".into()));
    }
    let densities = cfg.densities.resolve()?;
    let mut summary = String::new();
    for (i, model) in cfg.models.iter().enumerate() {
        let sim = SimConfig {
            density_per_km2: densities[0],
            model: model.clone(),
            sinr_threshold_db: cfg.sinr_threshold_db,
            tx_power_dbm: cfg.tx_power_dbm,
            fading: cfg.fading,
            trials: cfg.trials,
            seed: ctx.seed,
            include_noise: cfg.include_noise,
            noise_dbm: cfg.noise_dbm,
            window_scale: 1.0,
        };
        let points = throughput_curve(&sim, &densities)?;
        let mut meta = metadata(ctx, "throughput", cfg)?;
        meta.push("model", model.to_string());
        let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.density_per_km2, p.st)).collect();
        let fit_note = match fit_scaling_decay(&pairs) {
            Ok(fit) => format!(
                "c={} kappa={} rmse={} peak_per_km2={}",
                fmt_num(fit.c),
                fmt_num(fit.kappa),
                fmt_num(fit.rmse),
                fit.peak_density_per_km2().map_or("none".into(), fmt_num)
            ),
            Err(e) => format!("unavailable ({e})"),
        };
        meta.push("scaling_fit", fit_note.clone());
        let mut body = meta.render();
        curve_rows(&points, &mut body);
        let name = format!("throughput_{i}_{}.csv", model.family());
        let path = write(ctx, &name, body.as_bytes())?;
        writeln!(summary, "{model}: scaling fit {fit_note}; wrote {}", path.display()).expect("write");
    }
    Ok(summary)
}

pub fn critical(ctx: &Context) -> CliResult<String> {
    let cfg = &ctx.config.critical;
    let settings = SearchSettings {
        coarse_points: cfg.coarse_points,
        refine_points: cfg.refine_points,
        golden_trial_factor: cfg.golden_trial_factor,
        bracket_tolerance: cfg.bracket_tolerance,
        ..SearchSettings::default()
    };
    let setup = Table2Setup {
        alpha0: cfg.alpha0,
        breakpoint_m: cfg.breakpoint_m,
        mu_min_per_km2: cfg.mu_min_per_km2,
        mu_max_per_km2: cfg.mu_max_per_km2,
    };
    let placeholder = udn_core::propagation::PathlossModel::bounded(
        vec![cfg.breakpoint_m],
        vec![cfg.alpha0, cfg.alpha0],
    )?;
    let base = SimConfig { trials: cfg.trials, seed: ctx.seed, ..SimConfig::new(cfg.mu_min_per_km2, placeholder) };
    let cells = table2(&cfg.taus_db, &cfg.alpha1, &setup, &base, &settings)?;

    let mut meta = metadata(ctx, "critical", cfg)?;
    meta.push("breakpoint_m", cfg.breakpoint_m.to_string());
    meta.push("trials", cfg.trials.to_string());
    meta.push("bracket_tolerance", cfg.bracket_tolerance.to_string());
    meta.push("noise", "interference only");
    let mut body = meta.render();
    body.push_str("tau_db");
    for a in &cfg.alpha1 {
        write!(body, ",alpha1_{a}").expect("write to String");
    }
    body.push('\n');
    let mut summary = String::new();
    for (row, tau) in cells.chunks(cfg.alpha1.len()).zip(&cfg.taus_db) {
        write!(body, "{tau}").expect("write to String");
        for cell in row {
            match &cell.result {
                Ok(r) => write!(body, ",{}", fmt_num(r.mu_star_per_km2)),
                Err(_) => write!(body, ",boundary"),
            }
            .expect("write to String");
            if let Err(e) = &cell.result {
                writeln!(summary, "tau={} alpha1={}: {e}", cell.tau_db, cell.alpha1).expect("write");
            }
        }
        body.push('\n');
    }
    let csv = write(ctx, "table2.csv", body.as_bytes())?;
    let trace = json!({ "metadata": meta_json(ctx, "critical", cfg), "cells": cells });
    let json_path = write(ctx, "table2_trace.json", to_json(&trace)?.as_bytes())?;
    writeln!(summary, "wrote {} and {}", csv.display(), json_path.display()).expect("write");
    Ok(summary)
}

/// JSON outputs carry their metadata as an object rather than `#` lines.
fn meta_json(ctx: &Context, command: &str, block: &impl Serialize) -> serde_json::Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": ctx.seed,
        "config": block,
    })
}

/// Insert `#` comment lines right after the PGM magic number.
fn pgm_with_comments(pgm: Vec<u8>, comments: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(pgm.len() + comments.len());
    out.extend_from_slice(&pgm[..3]);
    out.extend_from_slice(comments.as_bytes());
    out.extend_from_slice(&pgm[3..]);
    out
}

pub fn heatmap(ctx: &Context) -> CliResult<String> {
    let cfg = &ctx.config.heatmap;
    if cfg.models.is_empty() || cfg.densities_per_km2.is_empty() {
        return Err(CliError::Config("heatmap needs at least one model and one density".into()));
    }
    let meta = metadata(ctx, "heatmap", cfg)?;
    let mut stats_body = meta.render();
    stats_body.push_str(
        "density_per_km2,model,n_tx,min_dbm,max_dbm,p1_dbm,p50_dbm,p99_dbm,dynamic_range_db,bounded_ceiling_dbm\n",
    );
    let mut corr_body = meta.render();
    corr_body.push_str("density_per_km2,model_a,model_b,spearman\n");
    let mut summary = String::new();
    for (j, &density) in cfg.densities_per_km2.iter().enumerate() {
        let mut rasters = Vec::with_capacity(cfg.models.len());
        for (i, model) in cfg.models.iter().enumerate() {
            let hc = HeatmapConfig {
                side_m: cfg.side_m,
                resolution: cfg.resolution,
                tx_density_per_km2: density,
                tx_power_dbm: cfg.tx_power_dbm,
                model: model.clone(),
                fading: cfg.fading,
                seed: ctx.seed,
            };
            let raster = interference_field(&hc)?;
            let stats = field_stats(&raster)?;
            let n_tx = raster.tx_positions.len();
            let ceiling = cfg.tx_power_dbm + linear_to_db(n_tx as f64);
            writeln!(
                stats_body,
                "{},{},{n_tx},{},{},{},{},{},{},{}",
                fmt_num(density),
                model,
                fmt_num(stats.min),
                fmt_num(stats.max),
                fmt_num(stats.p1),
                fmt_num(stats.p50),
                fmt_num(stats.p99),
                fmt_num(stats.dynamic_range_db),
                fmt_num(ceiling)
            )
            .expect("write to String");

            let mut own = meta.clone();
            own.push("density_per_km2", fmt_num(density));
            own.push("model", model.to_string());
            let mut csv = own.render();
            let mut rows = Vec::new();
            raster.write_csv(&mut rows)?;
            csv.push_str(std::str::from_utf8(&rows).expect("CSV is ASCII"));
            write(ctx, &format!("heatmap_d{j}_m{i}.csv"), csv.as_bytes())?;
            let mut pgm = Vec::new();
            raster.write_pgm(&mut pgm)?;
            write(ctx, &format!("heatmap_d{j}_m{i}.pgm"), &pgm_with_comments(pgm, &own.render()))?;
            rasters.push(raster);
        }
        for a in 0..rasters.len() {
            for b in a + 1..rasters.len() {
                let rho = spearman(&rasters[a].values_dbm, &rasters[b].values_dbm)?;
                writeln!(corr_body, "{},{},{},{}", fmt_num(density), cfg.models[a], cfg.models[b], fmt_num(rho))
                    .expect("write to String");
            }
        }
        writeln!(summary, "density {density} /km^2: {} rasters", rasters.len()).expect("write");
    }
    write(ctx, "heatmap_stats.csv", stats_body.as_bytes())?;
    write(ctx, "heatmap_rank_correlation.csv", corr_body.as_bytes())?;
    summary.push_str(&corr_body.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n"));
    summary.push('\n');
    Ok(summary)
}

/// Mean of the per-density relative gains of `a` over `b`, skipping zero baselines.
pub fn mean_relative_gain(a: &[ThroughputPoint], b: &[ThroughputPoint]) -> Option<f64> {
    let gains: Vec<f64> =
        a.iter().zip(b).filter(|(_, y)| y.st > 0.0).map(|(x, y)| x.st / y.st - 1.0).collect();
    (!gains.is_empty()).then(|| gains.iter().sum::<f64>() / gains.len() as f64)
}

fn peak_density(points: &[ThroughputPoint]) -> f64 {
    let mut best = &points[0];
    for p in points {
        if p.st > best.st {
            best = p;
        }
    }
    best.density_per_km2
}

pub fn mitigation(ctx: &Context) -> CliResult<String> {
    let cfg = &ctx.config.mitigation;
    let densities = cfg.densities.resolve()?;
    let sim = SimConfig {
        sinr_threshold_db: cfg.sinr_threshold_db,
        trials: cfg.trials,
        seed: ctx.seed,
        ..SimConfig::new(densities[0], cfg.model.clone())
    };
    let registry = StrategyRegistry::with_builtins();
    let strategies: Vec<Arc<dyn DecodingStrategy>> = cfg
        .strategies
        .iter()
        .map(|s| registry.resolve(s, sim.threshold_linear()))
        .collect::<udn_core::Result<_>>()?;
    let curves = strategy_throughput_curve(&sim, &strategies, &densities)?;

    let mut meta = metadata(ctx, "mitigation", cfg)?;
    let find = |prefix: &str| curves.iter().find(|c| c.strategy.starts_with(prefix));
    let mut summary = String::new();
    if let (Some(ica), Some(ia)) = (find("ica"), find("ia")) {
        let gain = mean_relative_gain(&ica.points, &ia.points);
        let note = format!(
            "measured {} against reference {}",
            gain.map_or("undefined".into(), fmt_num),
            fmt_num(cfg.reference_gain)
        );
        writeln!(summary, "ICA over IA mean throughput gain: {note}").expect("write");
        meta.push("ica_over_ia_gain", note);
    }
    for c in &curves {
        let peak = fmt_num(peak_density(&c.points));
        writeln!(summary, "{} peak density on grid: {peak} /km^2", c.strategy).expect("write");
        meta.push(&format!("peak_density {}", c.strategy), peak);
    }
    let mut body = meta.render();
    body.push_str("density_per_km2,strategy,coverage,std_err,spatial_throughput\n");
    for (k, &density) in densities.iter().enumerate() {
        for c in &curves {
            let p = &c.points[k];
            writeln!(
                body,
                "{},{},{},{},{}",
                fmt_num(density),
                c.strategy,
                fmt_num(p.coverage.p_hat),
                fmt_num(p.coverage.std_err),
                fmt_num(p.st)
            )
            .expect("write to String");
        }
    }
    let csv = write(ctx, "mitigation_curves.csv", body.as_bytes())?;

    let ex = &cfg.example;
    let profile = SignalProfile::new(ex.desired, ex.interferers.clone())?;
    let trace = json!({
        "metadata": meta_json(ctx, "mitigation", cfg),
        "profile": profile,
        "note": "residual_sinr null means no interference survives",
        "sic": sic_decode(&profile, ex.decode_threshold),
        "ia": ia_decode(&profile, ex.budget),
        "ica": ica_decode(&profile, ex.decode_threshold, ex.budget),
    });
    let json_path = write(ctx, "mitigation_trace.json", to_json(&trace)?.as_bytes())?;
    writeln!(summary, "wrote {} and {}", csv.display(), json_path.display()).expect("write");
    Ok(summary)
}

pub fn fit(ctx: &Context) -> CliResult<String> {
    let cfg = &ctx.config.fit;
    let (data, source): (Vec<Measurement>, String) = match &cfg.input {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (read_measurements(file)?, path.display().to_string())
        }
        None => {
            let s = &cfg.synthetic;
            if !(s.min_distance_m > 0.0 && s.min_distance_m < s.max_distance_m) || s.points == 0 {
                return Err(CliError::Config("synthetic distance range is invalid".into()));
            }
            let distances = log_space(s.min_distance_m, s.max_distance_m, s.points);
            let mut rng = SeedSchedule::new(ctx.seed).stream("fitting.synthetic", 0);
            let data = synth_measurements(&s.model, &distances, s.tx_power_dbm, s.noise_sigma_db, &mut rng)?;
            (data, format!("synthetic from {}", s.model))
        }
    };
    let results = compare_families(&data, &cfg.specs)?;
    let out = json!({
        "metadata": meta_json(ctx, "fit", cfg),
        "source": source,
        "measurements": data,
        "ranked": results,
    });
    let path = write(ctx, "fit.json", to_json(&out)?.as_bytes())?;
    let mut summary = String::new();
    for r in &results {
        writeln!(summary, "{}: rmse {} dB", r.model, fmt_num(r.rmse_db)).expect("write to String");
    }
    writeln!(summary, "wrote {}", path.display()).expect("write to String");
    Ok(summary)
}
