//! Finite-difference reference solvers on the same lattice: Crank–Nicolson in
//! real time and backward Euler in imaginary time (t → −iτ).
//!
//! Both use the three-point Laplacian with Dirichlet edges. Cells whose
//! potential is `+∞` are hard walls: their amplitude is zeroed and pinned.

use num_complex::Complex64;

use super::tridiag::Tridiagonal;
use crate::action::LagrangianSpec;
use crate::error::{Error, Result};
use crate::lattice::{SpaceTimeGrid, WaveFunctionField};

struct Stepper {
    lhs: Tridiagonal,
    rhs_sub: Vec<Complex64>,
    rhs_diag: Vec<Complex64>,
    rhs_sup: Vec<Complex64>,
    walls: Vec<bool>,
}

impl Stepper {
    /// `lhs = I + α H`, `rhs = I − α H` where `H` is the lattice Hamiltonian.
    fn new(
        potential: &[f64],
        grid: &SpaceTimeGrid,
        lag: &LagrangianSpec,
        alpha: Complex64,
        with_rhs: bool,
    ) -> Option<Self> {
        let n = grid.n_x();
        let hbar = lag.constants.hbar;
        let hop = -hbar * hbar / (2.0 * lag.constants.mass * grid.dx() * grid.dx());
        let walls: Vec<bool> = potential.iter().map(|v| v.is_infinite()).collect();
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);

        let mut sub = vec![zero; n];
        let mut diag = vec![zero; n];
        let mut sup = vec![zero; n];
        let mut rsub = vec![zero; n];
        let mut rdiag = vec![zero; n];
        let mut rsup = vec![zero; n];
        for i in 0..n {
            if walls[i] {
                diag[i] = one;
                continue;
            }
            let h_ii = -2.0 * hop + potential[i];
            diag[i] = one + alpha * h_ii;
            rdiag[i] = one - alpha * h_ii;
            if i > 0 && !walls[i - 1] {
                sub[i] = alpha * hop;
                rsub[i] = -alpha * hop;
            }
            if i + 1 < n && !walls[i + 1] {
                sup[i] = alpha * hop;
                rsup[i] = -alpha * hop;
            }
        }
        let lhs = Tridiagonal::factor(&sub, &diag, &sup)?;
        if !with_rhs {
            rdiag = walls.iter().map(|&w| if w { zero } else { one }).collect();
            rsub = vec![zero; n];
            rsup = vec![zero; n];
        }
        Some(Self {
            lhs,
            rhs_sub: rsub,
            rhs_diag: rdiag,
            rhs_sup: rsup,
            walls,
        })
    }

    fn step(&self, psi: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let n = psi.len();
        for (p, &w) in psi.iter_mut().zip(&self.walls) {
            if w {
                *p = Complex64::new(0.0, 0.0);
            }
        }
        scratch.clear();
        scratch.extend((0..n).map(|i| {
            let mut v = self.rhs_diag[i] * psi[i];
            if i > 0 {
                v += self.rhs_sub[i] * psi[i - 1];
            }
            if i + 1 < n {
                v += self.rhs_sup[i] * psi[i + 1];
            }
            v
        }));
        self.lhs.solve_in_place(scratch);
        psi.copy_from_slice(scratch);
    }
}

fn steppers_for(
    grid: &SpaceTimeGrid,
    lag: &LagrangianSpec,
    k: usize,
    alpha: Complex64,
    with_rhs: bool,
    cache: &mut Option<(Option<usize>, Stepper)>,
) -> Result<()> {
    let key = lag.active_window(grid, k);
    if cache.as_ref().is_none_or(|(w, _)| *w != key) {
        let stepper = Stepper::new(&lag.profile(grid, k), grid, lag, alpha, with_rhs)
            .ok_or_else(|| Error::numeric(k, "tridiagonal solve hit a zero pivot"))?;
        *cache = Some((key, stepper));
    }
    Ok(())
}

pub(crate) fn propagate(
    psi0: &WaveFunctionField,
    lag: &LagrangianSpec,
    substeps: usize,
    observer: &mut dyn FnMut(usize, &[Complex64]),
) -> Result<WaveFunctionField> {
    let grid = *psi0.grid();
    let substeps = substeps.max(1);
    let h = grid.dt() / substeps as f64;
    let alpha = Complex64::new(0.0, h / (2.0 * lag.constants.hbar));
    let mut psi = psi0.amplitudes().to_vec();
    let mut scratch = Vec::with_capacity(psi.len());
    let mut cache = None;
    for k in 0..grid.n_t() {
        steppers_for(&grid, lag, k, alpha, true, &mut cache)?;
        let (_, stepper) = cache.as_ref().expect("stepper cached above");
        for _ in 0..substeps {
            stepper.step(&mut psi, &mut scratch);
        }
        if psi.iter().any(|a| !a.is_finite()) {
            return Err(Error::numeric(k + 1, "Crank-Nicolson produced non-finite amplitudes"));
        }
        observer(k + 1, &psi);
    }
    WaveFunctionField::new(grid, grid.n_t(), psi)
}

/// Backward-Euler diffusion `(I + dτ H/ħ) ψ' = ψ`, renormalised every step.
pub(crate) fn propagate_imaginary(
    psi0: &WaveFunctionField,
    lag: &LagrangianSpec,
    observer: &mut dyn FnMut(usize, &[Complex64]),
) -> Result<WaveFunctionField> {
    let grid = *psi0.grid();
    let alpha = Complex64::new(grid.dt() / lag.constants.hbar, 0.0);
    let dx = grid.dx();
    let mut psi = psi0.amplitudes().to_vec();
    let mut scratch = Vec::with_capacity(psi.len());
    let mut cache = None;
    for k in 0..grid.n_t() {
        steppers_for(&grid, lag, k, alpha, false, &mut cache)?;
        let (_, stepper) = cache.as_ref().expect("stepper cached above");
        stepper.step(&mut psi, &mut scratch);
        let norm = (psi.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::numeric(k + 1, "imaginary-time state vanished or overflowed"));
        }
        psi.iter_mut().for_each(|a| *a /= norm);
        observer(k + 1, &psi);
    }
    WaveFunctionField::new(grid, grid.n_t(), psi)
}
