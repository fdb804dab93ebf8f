//! Histogram entropy of sampled values.

use crate::error::{Error, Result};

use super::config::HistogramSpec;

/// Bin counts; samples outside `[lo, hi]` land in the edge bins.
pub fn histogram(samples: &[f64], spec: &HistogramSpec) -> Result<Vec<u64>> {
    spec.validate()?;
    let mut counts = vec![0u64; spec.bins];
    let width = (spec.hi - spec.lo) / spec.bins as f64;
    for &x in samples {
        if x.is_nan() {
            return Err(Error::Domain("cannot bin a NaN sample".into()));
        }
        let i = ((x - spec.lo) / width).floor();
        let i = if i < 0.0 { 0 } else { (i as usize).min(spec.bins - 1) };
        counts[i] += 1;
    }
    Ok(counts)
}

/// Shannon entropy of the binned samples, in units of `log(spec.base)`.
pub fn shannon_entropy(samples: &[f64], spec: &HistogramSpec) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("entropy of an empty sample set".into()));
    }
    let counts = histogram(samples, spec)?;
    let n = samples.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    Ok((h / spec.base.ln()).max(0.0))
}
