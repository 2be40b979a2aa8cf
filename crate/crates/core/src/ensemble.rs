//! Sample-to-sample statistics of fitted D and E values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Mean, standard error of the mean, and a fixed-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std_dev: f64,
    /// `std_dev / sqrt(n)`; this is the quoted "±".
    pub sem: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Bins are `bin_width` wide and anchored at `floor(min / bin_width) * bin_width`.
pub fn summarize(values: &[f64], bin_width: f64) -> Result<EnsembleSummary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParameter(format!("bin width must be positive, got {bin_width}")));
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("values must be finite".into()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let std_dev = var.sqrt();
    let sem = std_dev / nf.sqrt();

    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = (min / bin_width).floor();
    let edge = |k: usize| (first + k as f64) * bin_width;
    let mut bins = 1;
    while edge(bins) <= max {
        bins += 1;
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        let mut k = ((v / bin_width).floor() - first).max(0.0) as usize;
        // Guard against floor() landing one bin off at an edge.
        while k + 1 < bins && v >= edge(k + 1) {
            k += 1;
        }
        while k > 0 && v < edge(k) {
            k -= 1;
        }
        counts[k.min(bins - 1)] += 1;
    }
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin { lower: edge(k), upper: edge(k + 1), count })
        .collect();
    Ok(EnsembleSummary { n, mean, std_dev, sem, histogram })
}
