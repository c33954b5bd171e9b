//! Wilcoxon signed-rank test for paired per-query metric values.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which p is computed exactly.
pub const EXACT_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Normal,
    /// Every difference was zero.
    Degenerate,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Normal => "normal",
            Method::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub p_value: f64,
    pub method: Method,
}

impl WilcoxonResult {
    pub fn degenerate(&self) -> bool {
        self.method == Method::Degenerate
    }
}

/// Average ranks of `values` (1-based), ties sharing the mean of their
/// positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// `P(T <= w)` for the null distribution of the positive-rank sum, by
/// counting sign assignments. Ranks are doubled so ties stay integral.
fn exact_lower_tail(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut ways = vec![0f64; total + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            ways[s] += ways[s - r];
        }
    }
    let limit = (w * 2.0).round() as usize;
    let hits: f64 = ways[..=limit.min(total)].iter().sum();
    hits / 2f64.powi(ranks.len() as i32)
}

fn tie_correction(abs: &[f64]) -> f64 {
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut corr = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        corr += t * t * t - t;
        i = j + 1;
    }
    corr / 48.0
}

/// Two-sided signed-rank test on paired samples `a` and `b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "paired samples need equal non-zero lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            n,
            p_value: 1.0,
            method: Method::Degenerate,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let w = w_plus.min(w_minus);

    let (p, method) = if n <= EXACT_LIMIT {
        ((2.0 * exact_lower_tail(&ranks, w)).min(1.0), Method::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_correction(&abs);
        let z = ((mean - w).abs() - 0.5).max(0.0) / var.sqrt();
        (erfc(z / std::f64::consts::SQRT_2).min(1.0), Method::Normal)
    };
    Ok(WilcoxonResult {
        statistic: w,
        w_plus,
        w_minus,
        n,
        p_value: p,
        method,
    })
}
