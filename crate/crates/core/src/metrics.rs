//! Disparity and depth evaluation metrics and dataset statistics.
//!
//! All reductions go through [`stable_sum`], which sums fixed-size chunks and
//! then adds the partials in order, so reports are bit-identical for any
//! thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GrayImage, Mask};
use crate::stereo::{DepthMap, DisparityMap};

/// Floor on the ground truth used by [`rel_epe`], in pixels.
pub const REL_EPE_EPSILON_PX: f64 = 0.5;

pub const BAD_THRESHOLDS_PX: [f64; 3] = [1.0, 2.0, 3.0];

pub const DELTA_THRESHOLDS: [f64; 3] = [1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25];

pub const ENTROPY_WINDOW: usize = 11;

const CHUNK: usize = 4096;

/// Order-independent sum: chunk partials are combined sequentially.
pub fn stable_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

fn stable_mean(values: &[f64]) -> f64 {
    stable_sum(values) / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub unit: String,
    pub valid_pixel_count: usize,
}

/// What was compared; all fields are optional because plain maps carry no rig.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDomain {
    pub fov_deg: Option<f64>,
    pub baseline_m: Option<f64>,
    pub projection: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: BTreeMap<String, MetricValue>,
    pub domain: ComparisonDomain,
}

impl EvalReport {
    pub fn insert(&mut self, name: &str, value: f64, unit: &str, count: usize) {
        self.metrics.insert(
            name.to_string(),
            MetricValue {
                value,
                unit: unit.to_string(),
                valid_pixel_count: count,
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|m| m.value)
    }

    pub fn with_domain(mut self, domain: ComparisonDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Pairs of (pred, gt) over the intersection of validity masks, in row-major order.
fn paired(
    pred: (&Grid<f64>, &Mask),
    gt: (&Grid<f64>, &Mask),
    keep: impl Fn(f64, f64) -> bool,
) -> Result<Vec<(f64, f64)>> {
    if !pred.0.same_dims(gt.0) {
        return Err(Error::Contract(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.0.width(),
            pred.0.height(),
            gt.0.width(),
            gt.0.height()
        )));
    }
    let pairs: Vec<(f64, f64)> = (0..pred.0.len())
        .filter(|&i| pred.1.as_slice()[i] && gt.1.as_slice()[i])
        .map(|i| (pred.0.as_slice()[i], gt.0.as_slice()[i]))
        .filter(|&(p, g)| keep(p, g))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Empty("no pixel is valid in both maps".into()));
    }
    Ok(pairs)
}

/// Percentile `p` in [0, 100] with linear interpolation between closest ranks.
/// Reorders `values`.
pub fn percentile(values: &mut [f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile of an empty set".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Contract(format!("percentile {p} outside [0, 100]")));
    }
    let rank = p / 100.0 * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    let (_, &mut a, upper) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || upper.is_empty() {
        return Ok(a);
    }
    let b = upper.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(a + (b - a) * frac)
}

fn fraction_pct(flags: impl Iterator<Item = bool>, n: usize) -> f64 {
    100.0 * flags.filter(|&f| f).count() as f64 / n as f64
}

fn disparity_domain(gt: &DisparityMap) -> ComparisonDomain {
    ComparisonDomain {
        fov_deg: None,
        baseline_m: gt.geometry.map(|g| g.baseline_m),
        projection: gt.geometry.map(|_| "equirectangular".to_string()),
    }
}

/// EPE, median and 95th percentile error, bad-1/2/3 and RelEPE.
pub fn disparity_metrics(pred: &DisparityMap, gt: &DisparityMap) -> Result<EvalReport> {
    let pairs = paired((&pred.values, &pred.valid), (&gt.values, &gt.valid), |_, _| true)?;
    let n = pairs.len();
    let mut errors: Vec<f64> = pairs.iter().map(|(p, g)| (p - g).abs()).collect();

    let mut report = EvalReport::default().with_domain(disparity_domain(gt));
    report.insert("epe", stable_mean(&errors), "px", n);
    report.insert("rel_epe", rel_epe_pairs(&pairs), "ratio", n);
    for (tau, name) in BAD_THRESHOLDS_PX.iter().zip(["bad_1", "bad_2", "bad_3"]) {
        report.insert(name, fraction_pct(errors.iter().map(|e| e > tau), n), "%", n);
    }
    report.insert("q50_epe", percentile(&mut errors, 50.0)?, "px", n);
    report.insert("q95_epe", percentile(&mut errors, 95.0)?, "px", n);
    Ok(report)
}

fn rel_epe_pairs(pairs: &[(f64, f64)]) -> f64 {
    let terms: Vec<f64> = pairs
        .iter()
        .map(|(p, g)| (p - g).abs() / g.max(REL_EPE_EPSILON_PX))
        .collect();
    stable_mean(&terms)
}

/// Mean of `|pred - gt| / max(gt, 0.5 px)` over the common valid set.
pub fn rel_epe(pred: &DisparityMap, gt: &DisparityMap) -> Result<f64> {
    let pairs = paired((&pred.values, &pred.valid), (&gt.values, &gt.valid), |_, _| true)?;
    Ok(rel_epe_pairs(&pairs))
}

/// AbsRel, MAE, RMSE and the three δ accuracies. Pixels where either value is
/// not strictly positive are excluded.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap) -> Result<EvalReport> {
    let pairs = paired((&pred.values, &pred.valid), (&gt.values, &gt.valid), |p, g| {
        p > 0.0 && g > 0.0
    })?;
    let n = pairs.len();
    let abs: Vec<f64> = pairs.iter().map(|(p, g)| (p - g).abs()).collect();
    let rel: Vec<f64> = pairs.iter().map(|(p, g)| (p - g).abs() / g).collect();
    let sq: Vec<f64> = pairs.iter().map(|(p, g)| (p - g) * (p - g)).collect();
    let ratio: Vec<f64> = pairs.iter().map(|(p, g)| (p / g).max(g / p)).collect();

    let mut report = EvalReport::default().with_domain(ComparisonDomain {
        fov_deg: None,
        baseline_m: gt.geometry.map(|g| g.baseline_m),
        projection: gt.geometry.map(|_| "equirectangular".to_string()),
    });
    report.insert("abs_rel", stable_mean(&rel), "ratio", n);
    report.insert("mae", stable_mean(&abs), "m", n);
    report.insert("rmse", stable_mean(&sq).sqrt(), "m", n);
    for (t, name) in DELTA_THRESHOLDS.iter().zip(["delta_1", "delta_2", "delta_3"]) {
        report.insert(name, fraction_pct(ratio.iter().map(|r| r < t), n), "%", n);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyStats {
    pub entropy: Grid<f64>,
    pub mean: f64,
}

/// Shannon entropy in bits of the grayscale histogram in an 11x11 window
/// centered on each pixel. Windows are clipped at the image border.
pub fn local_entropy_stats(image: &GrayImage) -> Result<EntropyStats> {
    if image.is_empty() {
        return Err(Error::Empty("image has no pixels".into()));
    }
    let (w, h) = image.dims();
    let r = ENTROPY_WINDOW / 2;
    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
            let mut hist = [0u32; 256];
            let add = |x: usize, hist: &mut [u32; 256], delta: i32| {
                for yy in y0..=y1 {
                    let b = *image.get(x, yy) as usize;
                    hist[b] = (hist[b] as i32 + delta) as u32;
                }
            };
            for x in 0..=r.min(w - 1) {
                add(x, &mut hist, 1);
            }
            let mut row = Vec::with_capacity(w);
            for x in 0..w {
                if x > 0 {
                    if x + r < w {
                        add(x + r, &mut hist, 1);
                    }
                    if x > r {
                        add(x - r - 1, &mut hist, -1);
                    }
                }
                row.push(histogram_entropy(&hist));
            }
            row
        })
        .collect();
    let entropy = Grid::from_vec(w, h, rows.concat())?;
    let mean = stable_mean(entropy.as_slice());
    Ok(EntropyStats { entropy, mean })
}

fn histogram_entropy(hist: &[u32; 256]) -> f64 {
    let total: u32 = hist.iter().sum();
    let n = total as f64;
    let mut e = 0.0;
    for &c in hist.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        e -= p * p.log2();
    }
    e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Share of valid pixels per bin; values outside all bins are in no bin.
    pub fractions: Vec<f64>,
    pub valid_pixel_count: usize,
}

/// Bins are half-open `[e_i, e_{i+1})`; the last edge may be infinite.
pub fn depth_histogram(depth: &DepthMap, bin_edges: &[f64]) -> Result<DepthHistogram> {
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|e| !(e[0] < e[1])) {
        return Err(Error::Config(
            "bin edges need at least two strictly increasing values".into(),
        ));
    }
    let values: Vec<f64> = depth
        .values
        .as_slice()
        .iter()
        .zip(depth.valid.as_slice())
        .filter(|(_, &ok)| ok)
        .map(|(&v, _)| v)
        .collect();
    if values.is_empty() {
        return Err(Error::Empty("depth map has no valid pixel".into()));
    }
    let mut counts = vec![0usize; bin_edges.len() - 1];
    for v in &values {
        let k = bin_edges.partition_point(|e| e <= v);
        if k >= 1 && k < bin_edges.len() {
            counts[k - 1] += 1;
        }
    }
    let n = values.len();
    Ok(DepthHistogram {
        bin_edges: bin_edges.to_vec(),
        fractions: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        counts,
        valid_pixel_count: n,
    })
}
