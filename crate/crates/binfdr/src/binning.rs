//! Bin-count selection rules and the open-ended bin system
//! `B_1 = (-inf, b_1], ..., B_m = (b_{m-1}, inf)` with per-bin counts.
//!
//! The bin-count rules operate on the finite z-scores only; infinite
//! z-scores are swept into the end bins at counting time. Interior edges are
//! equally spaced over `[min, max]` of the finite values. Scott and
//! Freedman-Diaconis counts are clamped to at least 2 so the bin system is
//! always valid; Sturges is the default rule because coarse p-type encodings
//! leave many narrow Scott/FD bins empty, which the EM then overfits.

use crate::error::{Error, Result};
use crate::transforms::ZScoreSample;

/// Histogram bin-count rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinRule {
    #[default]
    Sturges,
    Scott,
    #[serde(rename = "fd")]
    FreedmanDiaconis,
}

impl BinRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sturges" => Ok(Self::Sturges),
            "scott" => Ok(Self::Scott),
            "fd" | "freedman-diaconis" => Ok(Self::FreedmanDiaconis),
            other => Err(Error::domain(format!("unrecognized bin rule '{other}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Sturges => "sturges",
            Self::Scott => "scott",
            Self::FreedmanDiaconis => "fd",
        }
    }
}

/// Interior bin edges `b_1 < ... < b_{m-1}`; bin `j` is `(b_{j-1}, b_j]`
/// with `b_0 = -inf` and `b_m = +inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpec {
    edges: Vec<f64>,
}

impl BinSpec {
    /// Validate that edges are finite and strictly increasing. At least one
    /// edge is required (two bins).
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::domain("BinSpec: need at least one edge"));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::domain("BinSpec: edges must be finite"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("BinSpec: edges must be strictly increasing"));
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Number of bins `m = edges + 1`.
    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    /// Bounds `(b_{j-1}, b_j]` of 0-indexed bin `j`, with infinite ends.
    pub fn bounds(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 { f64::NEG_INFINITY } else { self.edges[j - 1] };
        let hi = if j == self.edges.len() { f64::INFINITY } else { self.edges[j] };
        (lo, hi)
    }

    /// The unique 0-indexed bin containing `z` (right-closed intervals).
    pub fn bin_index(&self, z: f64) -> usize {
        self.edges.partition_point(|&e| e < z)
    }
}

/// Per-bin counts `n_1 ... n_m` with their total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedCounts {
    pub counts: Vec<u64>,
    pub total: u64,
}

/// Sturges' rule: `m = ceil(log2 n) + 1`.
pub fn bin_count_sturges(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::degenerate(format!(
            "bin_count_sturges: need n >= 2, got {n}"
        )));
    }
    // ceil(log2 n) computed exactly in integer arithmetic
    let ceil_log2 = usize::BITS - (n - 1).leading_zeros();
    Ok(ceil_log2 as usize + 1)
}

fn spread(values: &[f64]) -> (f64, f64) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (n - 1.0)).sqrt()
}

/// Linear-interpolation quantile of sorted data (the convention used by R's
/// default `quantile` type).
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 - 1.0) * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn range_over_width(values: &[f64], h: f64, what: &str) -> Result<usize> {
    let (min, max) = spread(values);
    let range = max - min;
    if !(range > 0.0) {
        return Err(Error::degenerate(format!("{what}: zero range")));
    }
    if !(h > 0.0) {
        return Err(Error::degenerate(format!("{what}: zero bin width")));
    }
    Ok(((range / h).ceil() as usize).max(2))
}

/// Scott's rule: `m = ceil(Range / h)` with `h = 3.5 s n^{-1/3}`, clamped
/// to at least 2.
pub fn bin_count_scott(values: &[f64]) -> Result<usize> {
    if values.len() < 2 {
        return Err(Error::degenerate("bin_count_scott: need at least 2 values"));
    }
    let s = sample_sd(values);
    if !(s > 0.0) {
        return Err(Error::degenerate("bin_count_scott: zero variance"));
    }
    let h = 3.5 * s / (values.len() as f64).cbrt();
    range_over_width(values, h, "bin_count_scott")
}

/// Freedman-Diaconis rule: `m = ceil(Range / h)` with `h = 2 IQR n^{-1/3}`,
/// clamped to at least 2.
pub fn bin_count_fd(values: &[f64]) -> Result<usize> {
    if values.len() < 2 {
        return Err(Error::degenerate("bin_count_fd: need at least 2 values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25);
    if !(iqr > 0.0) {
        return Err(Error::degenerate("bin_count_fd: zero IQR"));
    }
    let h = 2.0 * iqr / (values.len() as f64).cbrt();
    range_over_width(values, h, "bin_count_fd")
}

/// Dispatch on the rule.
pub fn bin_count(rule: BinRule, values: &[f64]) -> Result<usize> {
    match rule {
        BinRule::Sturges => bin_count_sturges(values.len()),
        BinRule::Scott => bin_count_scott(values),
        BinRule::FreedmanDiaconis => bin_count_fd(values),
    }
}

/// Equally spaced interior edges over `[min, max]` of the finite values:
/// `b_k = min + k (max - min) / m` for `k = 1 .. m-1`.
pub fn make_bins(finite_values: &[f64], m: usize) -> Result<BinSpec> {
    if m < 2 {
        return Err(Error::domain(format!("make_bins: need m >= 2, got {m}")));
    }
    let (min, max) = spread(finite_values);
    if !(min.is_finite() && max.is_finite() && max > min) {
        return Err(Error::degenerate(
            "make_bins: need at least 2 distinct finite values",
        ));
    }
    let width = (max - min) / m as f64;
    let edges: Vec<f64> = (1..m).map(|k| min + k as f64 * width).collect();
    BinSpec::new(edges)
}

/// Count bin memberships; `+inf` lands in the last bin, `-inf` in the first.
pub fn bin_counts(z: &ZScoreSample, bins: &BinSpec) -> BinnedCounts {
    let m = bins.n_bins();
    let mut counts = vec![0u64; m];
    for &v in &z.finite {
        counts[bins.bin_index(v)] += 1;
    }
    counts[m - 1] += z.n_pos_inf as u64;
    counts[0] += z.n_neg_inf as u64;
    let total = counts.iter().sum();
    BinnedCounts { counts, total }
}
