//! Aggregate interference power over a square, for transmitters on a grid.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{grid_deployment, Point};
use crate::linklevel::{sample_fading, Fading};
use crate::propagation::PathlossModel;
use crate::report::fmt_num;
use crate::seeding::SeedSchedule;
use crate::units::{dbm_to_mw, mw_to_dbm, per_km2_to_per_m2};

pub const STREAM_TAG: &str = "interference_field";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapConfig {
    #[serde(default = "default_side")]
    pub side_m: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    pub tx_density_per_km2: f64,
    #[serde(default = "default_tx_power")]
    pub tx_power_dbm: f64,
    pub model: PathlossModel,
    #[serde(default = "no_fading")]
    pub fading: Fading,
    #[serde(default)]
    pub seed: u64,
}

fn default_side() -> f64 {
    50.0
}
fn default_resolution() -> usize {
    500
}
fn default_tx_power() -> f64 {
    20.0
}
fn no_fading() -> Fading {
    Fading::None
}

impl HeatmapConfig {
    pub fn new(tx_density_per_km2: f64, model: PathlossModel) -> Self {
        Self {
            side_m: default_side(),
            resolution: default_resolution(),
            tx_density_per_km2,
            tx_power_dbm: default_tx_power(),
            model,
            fading: Fading::None,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(invalid(format!("resolution must be at least 2, got {}", self.resolution)));
        }
        if !(self.tx_density_per_km2 > 0.0) {
            return Err(invalid("transmitter density must be positive"));
        }
        if !(self.side_m > 0.0) {
            return Err(invalid("side must be positive"));
        }
        Ok(())
    }
}

/// Row-major `resolution × resolution` grid of received power in dBm. Row `r`,
/// column `c` is the pixel centred at
/// `((c + ½)·h − side/2, (r + ½)·h − side/2)` with `h = side / resolution`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Raster {
    pub side_m: f64,
    pub resolution: usize,
    pub values_dbm: Vec<f64>,
    pub tx_positions: Vec<Point>,
}

impl Raster {
    pub fn pixel_center(&self, row: usize, col: usize) -> Point {
        pixel_center(self.side_m, self.resolution, row, col)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values_dbm[row * self.resolution + col]
    }

    pub fn min(&self) -> f64 {
        self.values_dbm.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values_dbm.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rows of comma-separated values, 9 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for row in self.values_dbm.chunks(self.resolution) {
            let line: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Binary 16-bit PGM, `[min, max]` dBm mapped linearly onto `[0, 65535]`.
    pub fn write_pgm<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let (lo, hi) = (self.min(), self.max());
        write!(
            out,
            "P5\n# interference power, dBm range [{}, {}]\n{} {}\n65535\n",
            fmt_num(lo),
            fmt_num(hi),
            self.resolution,
            self.resolution
        )?;
        let span = hi - lo;
        let mut bytes = Vec::with_capacity(self.values_dbm.len() * 2);
        for &v in &self.values_dbm {
            let level = if span > 0.0 { ((v - lo) / span * 65535.0).round() as u16 } else { 0 };
            bytes.extend_from_slice(&level.to_be_bytes());
        }
        out.write_all(&bytes)
    }
}

fn pixel_center(side_m: f64, resolution: usize, row: usize, col: usize) -> Point {
    let h = side_m / resolution as f64;
    Point::new((col as f64 + 0.5) * h - side_m / 2.0, (row as f64 + 0.5) * h - side_m / 2.0)
}

/// Sum of received power from every grid transmitter at each pixel centre.
/// With fading on, the factor for `(pixel, tx)` is the `tx`-th draw of the
/// pixel's own stream, so the raster does not depend on evaluation order.
pub fn interference_field(config: &HeatmapConfig) -> Result<Raster> {
    config.validate()?;
    let tx = grid_deployment(per_km2_to_per_m2(config.tx_density_per_km2), config.side_m)?.positions;
    let p_mw = dbm_to_mw(config.tx_power_dbm);
    let family = SeedSchedule::new(config.seed).family(STREAM_TAG);
    let res = config.resolution;

    let values: Vec<Result<f64>> = (0..res * res)
        .into_par_iter()
        .map(|pixel| {
            let at = pixel_center(config.side_m, res, pixel / res, pixel % res);
            let mut rng = (config.fading != Fading::None).then(|| family.stream(pixel as u64));
            let mut total = 0.0;
            for t in &tx {
                let fade = rng.as_mut().map_or(1.0, |r| sample_fading(config.fading, r));
                total += p_mw * config.model.gain(at.distance(t))? * fade;
            }
            Ok(mw_to_dbm(total))
        })
        .collect();
    Ok(Raster {
        side_m: config.side_m,
        resolution: res,
        values_dbm: values.into_iter().collect::<Result<_>>()?,
        tx_positions: tx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    pub p1: f64,
    pub p50: f64,
    pub p99: f64,
    pub dynamic_range_db: f64,
}

/// Nearest-rank percentile of sorted data: element `⌈q·n⌉ − 1`.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn field_stats(raster: &Raster) -> Result<FieldStats> {
    if raster.values_dbm.is_empty() {
        return Err(invalid("empty raster"));
    }
    let mut sorted = raster.values_dbm.clone();
    sorted.sort_by(f64::total_cmp);
    let p1 = nearest_rank(&sorted, 0.01);
    let p99 = nearest_rank(&sorted, 0.99);
    Ok(FieldStats {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        p1,
        p50: nearest_rank(&sorted, 0.5),
        p99,
        dynamic_range_db: p99 - p1,
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation between two equally sized samples.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(invalid("spearman needs two samples of equal length >= 2"));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - mean) * (y - mean);
        saa += (x - mean).powi(2);
        sbb += (y - mean).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(invalid("spearman undefined for a constant sample"));
    }
    Ok(sab / (saa * sbb).sqrt())
}
