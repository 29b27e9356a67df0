use num_complex::Complex64;

use super::Ensemble;
use crate::error::{Error, Result};
use crate::lattice::WaveFunctionField;

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub field: WaveFunctionField,
    /// `true` where the cell holds at least `min_count` members.
    pub confident: Vec<bool>,
    pub occupancy: Vec<usize>,
}

/// Density-and-phase estimate of ψ on slice `time_index`: magnitude
/// `√(occupancy / (N·dx))`, phase the circular mean of member phases there.
pub fn reconstruct_wavefunction(ens: &Ensemble, time_index: usize, min_count: usize) -> Result<Reconstruction> {
    let grid = *ens.grid();
    if ens.is_empty() {
        return Err(Error::validation("cannot reconstruct from an empty ensemble"));
    }
    if time_index > grid.n_t() {
        return Err(Error::validation(format!(
            "slice {time_index} beyond last slice {}",
            grid.n_t()
        )));
    }
    let n = grid.n_x();
    let mut occupancy = vec![0usize; n];
    let mut resultant = vec![Complex64::new(0.0, 0.0); n];
    for m in ens.members() {
        let cell = m.positions()[time_index];
        occupancy[cell] += 1;
        resultant[cell] += Complex64::from_polar(1.0, m.phases()[time_index]);
    }
    let total = ens.len() as f64;
    let amps = occupancy
        .iter()
        .zip(&resultant)
        .map(|(&occ, r)| {
            if occ == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let mag = (occ as f64 / (total * grid.dx())).sqrt();
            let phase = if r.norm() > 0.0 { r.arg() } else { 0.0 };
            Complex64::from_polar(mag, phase)
        })
        .collect();
    Ok(Reconstruction {
        field: WaveFunctionField::new(grid, time_index, amps)?,
        confident: occupancy.iter().map(|&o| o > 0 && o >= min_count).collect(),
        occupancy,
    })
}
