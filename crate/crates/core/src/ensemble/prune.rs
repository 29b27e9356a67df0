use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::circular_distance;
use crate::error::{Error, Result};

/// One path's arrival at a cell: `magnitude · exp(i phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub id: u64,
    pub phase: f64,
    pub magnitude: f64,
}

impl Contribution {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub kept: Vec<Contribution>,
    pub removed: Vec<(Contribution, Contribution)>,
    /// `Σ |a + b|` over removed pairs; bounds the change of the total sum.
    pub residual_bound: f64,
}

/// `|a + b|` written so that an exact antipode (`cos Δ = −1`, equal magnitudes)
/// gives exactly zero.
fn pair_residual(a: &Contribution, b: &Contribution) -> f64 {
    let (ma, mb) = (a.magnitude, b.magnitude);
    let d = (ma - mb) * (ma - mb) + 2.0 * ma * mb * (1.0 + (a.phase - b.phase).cos());
    d.max(0.0).sqrt()
}

/// Greedy removal of nearly antipodal, nearly equal-magnitude pairs.
///
/// Contributions are visited in order of wrapped phase (ties by id); each
/// unmatched one is paired with the unmatched partner closest to its
/// antipode, provided the antipodal deviation is within `eps_phase` and the
/// magnitudes differ by at most `eps_mag` relative to the larger.
pub fn prune_cancelling_pairs(contributions: &[Contribution], eps_phase: f64, eps_mag: f64) -> Result<PruneOutcome> {
    if !(eps_phase > 0.0 && eps_phase < PI) {
        return Err(Error::validation(format!(
            "eps_phase must lie in (0, π), got {eps_phase}"
        )));
    }
    if !(eps_mag >= 0.0) {
        return Err(Error::validation(format!(
            "eps_mag must be non-negative, got {eps_mag}"
        )));
    }
    if let Some(c) = contributions
        .iter()
        .find(|c| !(c.phase.is_finite() && c.magnitude.is_finite() && c.magnitude >= 0.0))
    {
        return Err(Error::validation(format!(
            "contribution {} is not a finite non-negative amplitude",
            c.id
        )));
    }

    let mut order: Vec<(f64, u64, usize)> = contributions
        .iter()
        .enumerate()
        .map(|(i, c)| (c.phase.rem_euclid(TAU), c.id, i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let wrapped: Vec<f64> = order.iter().map(|o| o.0).collect();
    let n = order.len();
    let mut matched = vec![false; n];
    let mut removed = Vec::new();

    // Sorted positions whose wrapped phase lies in [lo, hi] (with wrap-around).
    let window = |lo: f64, hi: f64| -> Vec<usize> {
        let span = |a: f64, b: f64| {
            let s = wrapped.partition_point(|&p| p < a);
            let e = wrapped.partition_point(|&p| p <= b);
            s..e
        };
        if lo < 0.0 {
            span(lo + TAU, TAU).chain(span(0.0, hi)).collect()
        } else if hi >= TAU {
            span(lo, TAU).chain(span(0.0, hi - TAU)).collect()
        } else {
            span(lo, hi).collect()
        }
    };

    for s in 0..n {
        if matched[s] {
            continue;
        }
        let a = &contributions[order[s].2];
        let target = (order[s].0 + PI).rem_euclid(TAU);
        let mut best: Option<(f64, u64, usize)> = None;
        for t in window(target - eps_phase, target + eps_phase) {
            if t == s || matched[t] {
                continue;
            }
            let b = &contributions[order[t].2];
            let deviation = circular_distance(b.phase, a.phase + PI);
            let larger = a.magnitude.max(b.magnitude);
            if deviation > eps_phase || (a.magnitude - b.magnitude).abs() > eps_mag * larger {
                continue;
            }
            let better = best.is_none_or(|(d, id, _)| deviation < d || (deviation == d && b.id < id));
            if better {
                best = Some((deviation, b.id, t));
            }
        }
        if let Some((_, _, t)) = best {
            matched[s] = true;
            matched[t] = true;
            removed.push((*a, contributions[order[t].2]));
        }
    }

    let kept = (0..n)
        .filter(|&s| !matched[s])
        .map(|s| order[s].2)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|i| contributions[i])
        .collect();
    let residual_bound = removed.iter().map(|(a, b)| pair_residual(a, b)).sum();
    Ok(PruneOutcome {
        kept,
        removed,
        residual_bound,
    })
}
