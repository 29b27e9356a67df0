//! Gradient descent on per-member phase offsets, minimising the smooth
//! decoherence measure `Σ_events Σ_pairs (1 − cos Δφ)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{detect_intersections, Ensemble};
use crate::error::{Error, Result};

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    pub initial_step: f64,
    pub shrink: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub min_step: f64,
    pub gradient_tolerance: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            min_step: 1e-12,
            gradient_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxOutcome {
    pub ensemble: Ensemble,
    pub offsets: Vec<f64>,
    /// Smooth measure before the first step and after every accepted step.
    pub history: Vec<f64>,
    pub steps: usize,
    /// Gradient tolerance reached before `max_steps` or line-search failure.
    pub converged: bool,
}

/// Intersection events as flat member lists. Per event with resultant
/// `R = Σ e^{iθ}` and `D = Σ (1 − cos(θ − arg R))`, the pair sum
/// `Σ_{a<b} (1 − cos(θ_a − θ_b))` equals `D (2k − D) / 2`, and its derivative
/// in `θ_a` is `Im(e^{iθ_a} R̄)`; both are O(k) instead of O(k²).
struct Events {
    starts: Vec<usize>,
    members: Vec<usize>,
    phases: Vec<f64>,
}

impl Events {
    fn for_each(&self, o: &[f64], mut f: impl FnMut(&[usize], &[f64])) {
        let mut theta = Vec::new();
        for w in self.starts.windows(2) {
            let (m, p) = (&self.members[w[0]..w[1]], &self.phases[w[0]..w[1]]);
            theta.clear();
            theta.extend(m.iter().zip(p).map(|(&i, &phi)| phi + o[i]));
            f(m, &theta);
        }
    }

    fn resultant(theta: &[f64]) -> (f64, f64) {
        theta.iter().fold((0.0, 0.0), |(c, s), t| (c + t.cos(), s + t.sin()))
    }

    fn objective(&self, o: &[f64]) -> f64 {
        let mut total = 0.0;
        self.for_each(o, |_, theta| {
            let (c, s) = Self::resultant(theta);
            let mu = s.atan2(c);
            let d: f64 = theta.iter().map(|t| 1.0 - (t - mu).cos()).sum();
            total += 0.5 * d * (2.0 * theta.len() as f64 - d);
        });
        total
    }

    fn gradient(&self, o: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|x| *x = 0.0);
        self.for_each(o, |m, theta| {
            let (c, s) = Self::resultant(theta);
            for (&i, t) in m.iter().zip(theta) {
                g[i] += t.sin() * c - t.cos() * s;
            }
        });
    }
}

pub fn relax_coherence(ens: &Ensemble, max_steps: usize, rule: &LineSearch) -> Result<RelaxOutcome> {
    let valid = rule.initial_step > 0.0
        && rule.shrink > 0.0
        && rule.shrink < 1.0
        && rule.armijo > 0.0
        && rule.armijo < 1.0
        && rule.min_step > 0.0
        && rule.gradient_tolerance > 0.0;
    if !valid {
        return Err(Error::validation(format!("invalid line-search parameters {rule:?}")));
    }
    let index: HashMap<u64, usize> = ens.members().iter().enumerate().map(|(i, m)| (m.id(), i)).collect();
    let mut pairs = Events {
        starts: vec![0],
        members: Vec::new(),
        phases: Vec::new(),
    };
    for e in detect_intersections(ens) {
        for p in &e.participants {
            pairs.members.push(index[&p.id]);
            pairs.phases.push(p.phase);
        }
        pairs.starts.push(pairs.members.len());
    }

    let n = ens.len();
    let mut offsets = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut f = pairs.objective(&offsets);
    let mut history = vec![f];
    let mut converged = false;
    let mut steps = 0;
    while steps < max_steps {
        pairs.gradient(&offsets, &mut grad);
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < rule.gradient_tolerance {
            converged = true;
            break;
        }
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let mut t = rule.initial_step;
        let accepted = loop {
            for i in 0..n {
                trial[i] = offsets[i] - t * grad[i];
            }
            let ft = pairs.objective(&trial);
            if ft <= f - rule.armijo * t * g2 {
                break Some(ft);
            }
            t *= rule.shrink;
            if t < rule.min_step {
                break None;
            }
        };
        match accepted {
            Some(ft) => {
                std::mem::swap(&mut offsets, &mut trial);
                f = ft;
                history.push(f);
                steps += 1;
            }
            None => break,
        }
    }
    if !converged {
        pairs.gradient(&offsets, &mut grad);
        converged = grad.iter().all(|g| g.abs() < rule.gradient_tolerance);
    }
    let members = ens
        .members()
        .iter()
        .zip(&offsets)
        .map(|(m, &o)| m.with_offset(o))
        .collect();
    let mut provenance = ens.provenance().clone();
    provenance
        .notes
        .push(format!("relaxed: {steps} steps, converged={converged}"));
    Ok(RelaxOutcome {
        ensemble: Ensemble::new(*ens.grid(), members, provenance)?,
        offsets,
        history,
        steps,
        converged,
    })
}
