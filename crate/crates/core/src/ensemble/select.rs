use super::{circular_distance, Ensemble, Provenance};
use crate::error::{Error, Result};
use crate::lattice::WaveFunctionField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    /// Arrival cells with `|ψ_target| < amplitude_floor · max|ψ_target|` are excluded.
    pub amplitude_floor: f64,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self { amplitude_floor: 1e-3 }
    }
}

/// Keeps the members whose final phase lies within `eps` of `arg ψ_target`
/// at their arrival cell.
pub fn select_coherent_ensemble(
    target: &WaveFunctionField,
    paths: &Ensemble,
    eps: f64,
    opts: &SelectOptions,
) -> Result<Ensemble> {
    if !(eps > 0.0) {
        return Err(Error::validation(format!(
            "selection tolerance must be positive, got {eps}"
        )));
    }
    if !(opts.amplitude_floor >= 0.0 && opts.amplitude_floor.is_finite()) {
        return Err(Error::validation("amplitude floor must be finite and non-negative"));
    }
    let grid = paths.grid();
    if target.grid().n_x() != grid.n_x() || target.time_index() != grid.n_t() {
        return Err(Error::validation(format!(
            "target ({} cells, slice {}) is not aligned with the ensemble's final slice ({} cells, slice {})",
            target.grid().n_x(),
            target.time_index(),
            grid.n_x(),
            grid.n_t()
        )));
    }
    let peak = target.amplitudes().iter().map(|a| a.norm()).fold(0.0, f64::max);
    let floor = opts.amplitude_floor * peak;
    let kept: Vec<_> = paths
        .members()
        .iter()
        .filter(|m| {
            let a = target.amplitudes()[m.final_cell()];
            a.norm() > 0.0 && a.norm() >= floor && circular_distance(m.final_phase(), a.arg()) <= eps
        })
        .cloned()
        .collect();
    let mut provenance = Provenance {
        sampler: format!("coherent-selection({})", paths.provenance().sampler),
        seed: paths.provenance().seed,
        constraints: format!(
            "{}; eps={eps}, amplitude_floor={}",
            paths.provenance().constraints,
            opts.amplitude_floor
        ),
        empty_selection: kept.is_empty(),
        notes: paths.provenance().notes.clone(),
    };
    provenance
        .notes
        .push(format!("kept {} of {} members", kept.len(), paths.len()));
    Ensemble::new(*grid, kept, provenance)
}
