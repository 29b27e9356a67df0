//! Oracle comparison: path sum vs Crank–Nicolson vs free kernel, then
//! sample → coherent selection → reconstruction against the path sum.

use serde::{Deserialize, Serialize};

use super::config::{EndpointMode, ExperimentConfig};
use crate::ensemble::{
    decoherence_at_slice, reconstruct_wavefunction, sample_paths, select_coherent_ensemble, EndpointSpec, Ensemble,
    PathSource, SampleOptions, SelectOptions,
};
use crate::error::Result;
use crate::lattice::{relative_l2, WaveFunctionField};
use crate::propagators::{free_kernel_propagate, pathsum_propagate_with, schrodinger_propagate_with};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub a: String,
    pub b: String,
    /// `‖ψ_a − ψ_b‖ / ‖ψ_b‖` over the whole grid.
    pub l2: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub n_paths: usize,
    pub n_selected: usize,
    pub epsilon: f64,
    pub min_count: usize,
    pub unmasked_cells: usize,
    /// Selected-ensemble reconstruction vs the path sum, unmasked cells,
    /// global phase aligned.
    pub reconstruction_l2: f64,
    /// Same for the unselected ensemble.
    pub plain_reconstruction_l2: f64,
    pub raw_decoherence_before: f64,
    pub raw_decoherence_after: f64,
    pub smooth_decoherence_before: f64,
    pub smooth_decoherence_after: f64,
    pub decoherence_reduced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config_hash: String,
    pub seed: u64,
    pub grid: (usize, usize),
    pub l2_tolerance: f64,
    pub reconstruction_tolerance: f64,
    pub norms: Vec<(String, f64)>,
    pub pairs: Vec<PairError>,
    pub selection: SelectionSummary,
    pub errors: Vec<String>,
    pub pass: bool,
}

fn masked_l2(rec: &crate::ensemble::Reconstruction, target: &WaveFunctionField) -> f64 {
    if rec.confident.iter().any(|&c| c) {
        relative_l2(rec.field.amplitudes(), target.amplitudes(), Some(&rec.confident), true)
    } else {
        f64::INFINITY
    }
}

/// Sample, select and reconstruct against `target` (the path-sum result).
pub fn selection_pipeline(
    cfg: &ExperimentConfig,
    target: &WaveFunctionField,
) -> Result<(Ensemble, Ensemble, SelectionSummary)> {
    let grid = cfg.space_time_grid()?;
    let lag = cfg.lagrangian()?;
    let psi0 = cfg.initial_field()?;
    let endpoints = match cfg.run.endpoints {
        EndpointMode::Target => EndpointSpec::FromField(target),
        EndpointMode::Free => EndpointSpec::Free,
    };
    let opts = SampleOptions {
        max_hop: cfg.run.max_hop,
        ..SampleOptions::default()
    };
    let paths = sample_paths(
        PathSource::Field(&psi0),
        cfg.run.n_paths,
        cfg.run.seed,
        endpoints,
        &lag,
        &grid,
        &opts,
    )?;
    let selected = select_coherent_ensemble(
        target,
        &paths,
        cfg.run.epsilon,
        &SelectOptions {
            amplitude_floor: cfg.run.amplitude_floor,
        },
    )?;
    let last = grid.n_t();
    let plain = reconstruct_wavefunction(&paths, last, cfg.run.min_count)?;
    let (rec_l2, unmasked) = if selected.is_empty() {
        (f64::INFINITY, 0)
    } else {
        let rec = reconstruct_wavefunction(&selected, last, cfg.run.min_count)?;
        (masked_l2(&rec, target), rec.confident.iter().filter(|&&c| c).count())
    };
    let before = decoherence_at_slice(&paths, last)?;
    let after = decoherence_at_slice(&selected, last)?;
    let kept_all = selected.len() == paths.len();
    let summary = SelectionSummary {
        n_paths: paths.len(),
        n_selected: selected.len(),
        epsilon: cfg.run.epsilon,
        min_count: cfg.run.min_count,
        unmasked_cells: unmasked,
        reconstruction_l2: rec_l2,
        plain_reconstruction_l2: masked_l2(&plain, target),
        raw_decoherence_before: before.raw_measure,
        raw_decoherence_after: after.raw_measure,
        smooth_decoherence_before: before.smooth_measure,
        smooth_decoherence_after: after.smooth_measure,
        decoherence_reduced: after.raw_measure < before.raw_measure
            || (kept_all && after.raw_measure == before.raw_measure),
    };
    Ok((paths, selected, summary))
}

pub fn run_oracle_comparison(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let lag = cfg.lagrangian()?;
    let psi0 = cfg.initial_field()?;
    let grid = *psi0.grid();
    let tol = cfg.run.l2_tolerance;

    let pathsum = pathsum_propagate_with(&psi0, &lag, cfg.run.max_hop, &mut |_, _| {})?;
    let cn = schrodinger_propagate_with(&psi0, &lag, cfg.run.cn_substeps, &mut |_, _| {})?;
    let mut results = vec![("pathsum".to_string(), pathsum.clone()), ("cn".to_string(), cn)];
    if lag.is_free() {
        results.push(("free-kernel".to_string(), free_kernel_propagate(&psi0, &lag)?));
    }

    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            let l2 = relative_l2(results[i].1.amplitudes(), results[j].1.amplitudes(), None, false);
            let ok = l2 <= tol;
            if !ok {
                errors.push(format!(
                    "{} vs {}: relative L2 {l2:.3e} exceeds {tol:.3e}",
                    results[i].0, results[j].0
                ));
            }
            pairs.push(PairError {
                a: results[i].0.clone(),
                b: results[j].0.clone(),
                l2,
                within_tolerance: ok,
            });
        }
    }

    let (_, _, selection) = selection_pipeline(cfg, &pathsum)?;
    if !(selection.reconstruction_l2 <= cfg.run.reconstruction_tolerance) {
        errors.push(format!(
            "selected reconstruction L2 {:.3e} exceeds {:.3e}",
            selection.reconstruction_l2, cfg.run.reconstruction_tolerance
        ));
    }
    if !selection.decoherence_reduced {
        errors.push(format!(
            "final-slice decoherence not reduced by selection ({:.6e} -> {:.6e})",
            selection.raw_decoherence_before, selection.raw_decoherence_after
        ));
    }

    Ok(ComparisonReport {
        config_hash: cfg.hash(),
        seed: cfg.run.seed,
        grid: (grid.n_x(), grid.n_t()),
        l2_tolerance: tol,
        reconstruction_tolerance: cfg.run.reconstruction_tolerance,
        norms: results.iter().map(|(n, f)| (n.clone(), f.norm_squared())).collect(),
        pairs,
        selection,
        pass: errors.is_empty(),
        errors,
    })
}
