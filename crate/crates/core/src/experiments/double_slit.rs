//! Sparse double-slit experiment on the 1D lattice.
//!
//! Time plays the role of the longitudinal axis: the packet meets a wall with
//! gaps during the barrier window and then spreads freely until the screen
//! (the final slice). Shots are independent draws from `|ψ_screen|² dx`.

use std::f64::consts::TAU;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PotentialConfig};
use crate::error::{Error, Result};
use crate::lattice::WaveFunctionField;
use crate::propagators::propagate;
use crate::stats::{chi_square_gof, GoodnessOfFit};

const SHOT_BLOCK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalHistogram {
    /// `n_x + 1` cell edges along the screen.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub shots: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl ArrivalHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Draws `shots` arrival cells from `weights`, in seeded blocks of fixed size
/// so the counts do not depend on the number of worker threads.
pub fn sample_arrivals(weights: &[f64], shots: usize, seed: u64) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(weights).map_err(|e| Error::validation(format!("screen distribution: {e}")))?;
    let blocks = shots.div_ceil(SHOT_BLOCK);
    let partial: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut counts = vec![0u64; weights.len()];
            let n = SHOT_BLOCK.min(shots - b * SHOT_BLOCK);
            for _ in 0..n {
                counts[dist.sample(&mut rng)] += 1;
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; weights.len()];
    for p in partial {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    Ok(total)
}

/// `(I_max − I_min) / (I_max + I_min)` over the cells where `mask` holds.
pub fn visibility(intensity: &[f64], mask: &[bool]) -> f64 {
    let vals = intensity.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| *v);
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(hi > 0.0) {
        return 0.0;
    }
    (hi - lo) / (hi + lo)
}

/// Gaussian smoothing with standard deviation `sigma` cells, truncated at 4σ.
pub fn smooth(values: &[f64], sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return values.to_vec();
    }
    let reach = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let (mut acc, mut w) = (0.0, 0.0);
            for (k, kw) in (-reach..=reach).zip(&kernel) {
                let j = i + k;
                if (0..n).contains(&j) {
                    acc += kw * values[j as usize];
                    w += kw;
                }
            }
            acc / w
        })
        .collect()
}

/// Local maxima of `intensity` inside `mask` above `floor · max`, refined by a
/// parabola through the neighbours. Of two maxima closer than `min_separation`
/// only the taller survives.
pub fn find_peaks(xs: &[f64], intensity: &[f64], mask: &[bool], floor: f64, min_separation: f64) -> Vec<f64> {
    let peak = intensity
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold(0.0f64, |a, (v, _)| a.max(*v));
    let dx = if xs.len() > 1 { xs[1] - xs[0] } else { 0.0 };
    let mut candidates: Vec<(f64, f64)> = (1..intensity.len().saturating_sub(1))
        .filter(|&i| mask[i] && intensity[i] >= floor * peak)
        .filter(|&i| intensity[i] > intensity[i - 1] && intensity[i] >= intensity[i + 1])
        .map(|i| {
            let (a, b, c) = (intensity[i - 1], intensity[i], intensity[i + 1]);
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            (xs[i] + shift.clamp(-0.5, 0.5) * dx, b)
        })
        .collect();
    candidates.sort_by(|p, q| q.1.total_cmp(&p.1).then(p.0.total_cmp(&q.0)));
    let mut kept: Vec<f64> = Vec::new();
    for (x, _) in candidates {
        if kept.iter().all(|k| (k - x).abs() >= min_separation) {
            kept.push(x);
        }
    }
    kept.sort_by(f64::total_cmp);
    kept
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeReport {
    pub config_hash: String,
    pub seed: u64,
    pub method: String,
    pub shots: usize,
    /// Propagation time from the end of the barrier window to the screen.
    pub flight_time: f64,
    pub slit_separation: Option<f64>,
    /// `2πħ · flight_time / (m · d)`.
    pub expected_spacing: Option<f64>,
    pub measured_spacing: Option<f64>,
    pub spacing_relative_error: Option<f64>,
    pub peaks: Vec<f64>,
    /// Visibility window `[lo, hi]` around the slit midpoint.
    pub central_region: (f64, f64),
    pub visibility: f64,
    /// `max |ψ_i| − |ψ_mirror(i)|`, relative to `max |ψ|`.
    pub symmetry_error: f64,
    pub screen_norm: f64,
    pub goodness_of_fit: GoodnessOfFit,
    pub gof_passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlitOutcome {
    pub screen: WaveFunctionField,
    pub histogram: ArrivalHistogram,
    pub report: FringeReport,
}

pub fn mirror_asymmetry(field: &WaveFunctionField) -> f64 {
    let a = field.amplitudes();
    let peak = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let n = a.len();
    (0..n)
        .map(|i| (a[i].norm() - a[n - 1 - i].norm()).abs())
        .fold(0.0, f64::max)
        / peak
}

pub fn run_double_slit(cfg: &ExperimentConfig) -> Result<DoubleSlitOutcome> {
    cfg.validate()?;
    let (window_end, centers) = match &cfg.potential {
        PotentialConfig::DoubleSlit {
            window_end,
            slit_centers,
            ..
        } => (*window_end, slit_centers.clone()),
        _ => {
            return Err(Error::validation(
                "double-slit run needs potential.kind = \"double_slit\"",
            ))
        }
    };
    let grid = cfg.space_time_grid()?;
    let lag = cfg.lagrangian()?;
    let psi0 = cfg.initial_field()?;
    let screen = propagate(cfg.run.method, &psi0, &lag, &cfg.propagate_options())?;

    let intensity: Vec<f64> = screen.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    let counts = sample_arrivals(&intensity, cfg.run.shots, cfg.run.seed)?;
    let edges = (0..=grid.n_x()).map(|i| grid.x_min() + i as f64 * grid.dx()).collect();
    let histogram = ArrivalHistogram {
        edges,
        counts,
        shots: cfg.run.shots,
        seed: cfg.run.seed,
        config_hash: cfg.hash(),
    };

    let flight_time = grid.t_end() - window_end;
    let lo_c = centers.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_c = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let midpoint = 0.5 * (lo_c + hi_c);
    let separation = (centers.len() >= 2).then_some(hi_c - lo_c);
    let expected = separation.map(|d| TAU * cfg.constants.hbar * flight_time / (cfg.constants.mass * d));
    let half = expected.unwrap_or((grid.x_max() - grid.x_min()) / 8.0);
    let xs = grid.centers();
    let central: Vec<bool> = xs.iter().map(|x| (x - midpoint).abs() <= half).collect();
    let search: Vec<bool> = xs.iter().map(|x| (x - midpoint).abs() <= 1.5 * half).collect();
    // Lattice dispersion leaves a two-cell ripple on the fringes; peaks are
    // located on a copy smoothed well below the fringe scale.
    let smoothed = smooth(&intensity, 0.1 * half / grid.dx());
    let peaks = find_peaks(&xs, &smoothed, &search, 0.05, 0.5 * half);
    let measured = (peaks.len() >= 2).then(|| (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64);
    let gof = chi_square_gof(&histogram.counts, &intensity, 5.0)?;

    let report = FringeReport {
        config_hash: histogram.config_hash.clone(),
        seed: cfg.run.seed,
        method: cfg.run.method.to_string(),
        shots: cfg.run.shots,
        flight_time,
        slit_separation: separation,
        expected_spacing: expected,
        measured_spacing: measured,
        spacing_relative_error: expected.zip(measured).map(|(e, m)| (m - e).abs() / e),
        peaks,
        central_region: (midpoint - half, midpoint + half),
        visibility: visibility(&intensity, &central),
        symmetry_error: mirror_asymmetry(&screen),
        screen_norm: screen.norm_squared(),
        gof_passes: gof.passes(cfg.run.significance),
        goodness_of_fit: gof,
    };
    Ok(DoubleSlitOutcome {
        screen,
        histogram,
        report,
    })
}
