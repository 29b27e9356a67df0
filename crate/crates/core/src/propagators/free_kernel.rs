use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::action::LagrangianSpec;
use crate::error::{Error, Result};
use crate::lattice::WaveFunctionField;

/// Single convolution with the closed-form free kernel
/// `√(m/(2πiħT)) · exp(i m (x_b − x_a)² / (2ħT))` over the whole interval.
/// Only defined for the free Lagrangian.
pub fn free_kernel_propagate(psi0: &WaveFunctionField, lag: &LagrangianSpec) -> Result<WaveFunctionField> {
    if !lag.is_free() {
        return Err(Error::validation("free-kernel propagation requires a free potential"));
    }
    let constants = &lag.constants;
    constants.validate()?;
    let grid = *psi0.grid();
    let t = grid.duration();
    let m = constants.mass;
    let hbar = constants.hbar;
    let dx = grid.dx();
    let pref = (Complex64::new(m, 0.0) / Complex64::new(0.0, 2.0 * PI * hbar * t)).sqrt() * dx;
    let n = grid.n_x();
    let src = psi0.amplitudes();
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s: Complex64 = (0..n)
                .map(|j| {
                    let d = (i as f64 - j as f64) * dx;
                    Complex64::from_polar(1.0, m * d * d / (2.0 * hbar * t)) * src[j]
                })
                .sum();
            pref * s
        })
        .collect();
    if out.iter().any(|a| !a.is_finite()) {
        return Err(Error::numeric(1, "free-kernel convolution overflowed"));
    }
    WaveFunctionField::new(grid, grid.n_t(), out)
}
