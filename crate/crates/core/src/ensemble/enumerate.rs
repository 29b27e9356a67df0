use num_complex::Complex64;

use super::{Ensemble, Provenance};
use crate::action::{phase_profile, LagrangianSpec};
use crate::error::{Error, Result};
use crate::lattice::{Trajectory, WaveFunctionField};
use crate::propagators::kernel_normalization;

const MAX_ENUMERATED: usize = 1 << 22;

/// Every lattice path on `psi0`'s grid that avoids hard walls, each weighted
/// by `C^n_t · ψ0(start)` and phased from zero, so that [`feynman_sum`]
/// reproduces the path-sum propagator.
pub fn enumerate_paths(psi0: &WaveFunctionField, lag: &LagrangianSpec) -> Result<Ensemble> {
    let grid = *psi0.grid();
    let n = grid.n_x();
    let slices = grid.n_slices();
    let total = (n as u128)
        .checked_pow(slices as u32)
        .filter(|&t| t <= MAX_ENUMERATED as u128)
        .ok_or_else(|| {
            Error::validation(format!(
                "{n}^{slices} paths is too many to enumerate (limit {MAX_ENUMERATED})"
            ))
        })? as usize;
    let weight = kernel_normalization(&grid, &lag.constants)
        .constant()
        .powu(grid.n_t() as u32);

    let mut members = Vec::new();
    let mut positions = vec![0usize; slices];
    for code in 0..total {
        let mut r = code;
        for p in positions.iter_mut().rev() {
            *p = r % n;
            r /= n;
        }
        let forbidden = positions
            .windows(2)
            .enumerate()
            .any(|(k, w)| !lag.segment_action(&grid, w[0], w[1], k).is_finite());
        if forbidden {
            continue;
        }
        let gamma = Trajectory::new(code as u64, positions.clone(), &grid, None)?;
        let phased = phase_profile(&gamma, lag, &grid, 0.0)?;
        members.push(phased.with_weight(weight * psi0.amplitudes()[positions[0]]));
    }
    Ensemble::new(
        grid,
        members,
        Provenance {
            constraints: "complete enumeration".into(),
            ..Provenance::named("enumerate")
        },
    )
}

/// `Σ weight · exp(i φ_final)` accumulated at each member's final cell.
pub fn feynman_sum(ens: &Ensemble) -> WaveFunctionField {
    let grid = *ens.grid();
    let mut amps = vec![Complex64::new(0.0, 0.0); grid.n_x()];
    for m in ens.members() {
        amps[m.final_cell()] += m.contribution();
    }
    WaveFunctionField::new(grid, grid.n_t(), amps).expect("finite contributions sum to a finite field")
}
