//! Pearson chi-square goodness of fit for binned counts.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins after pooling.
    pub bins: usize,
}

impl GoodnessOfFit {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Tests `counts` against probabilities `probs` (need not be normalised).
///
/// Adjacent bins are pooled left to right until each pooled bin expects at
/// least `min_expected` counts; a short tail is merged into the last bin.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], min_expected: f64) -> Result<GoodnessOfFit> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::validation(
            "counts and probabilities must be non-empty and of equal length",
        ));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::validation("probabilities must be finite and non-negative"));
    }
    let total_p: f64 = probs.iter().sum();
    let n: u64 = counts.iter().sum();
    if total_p <= 0.0 || n == 0 {
        return Err(Error::validation(
            "goodness of fit needs positive total probability and counts",
        ));
    }
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs += c as f64;
        exp += n as f64 * p / total_p;
        if exp >= min_expected {
            pooled.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => pooled.push((obs, exp)),
        }
    }
    if pooled.len() < 2 {
        return Err(Error::validation("too few populated bins for a chi-square test"));
    }
    let statistic = pooled
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e) * (o - e) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum::<f64>();
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::validation(e.to_string()))?;
    let p_value = if statistic.is_finite() {
        1.0 - dist.cdf(statistic)
    } else {
        0.0
    };
    Ok(GoodnessOfFit {
        statistic,
        dof,
        p_value,
        bins: pooled.len(),
    })
}
