//! Exact lattice path sum realised as repeated application of the one-step
//! transfer matrix.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{Method, PropagatorMatrix};
use crate::action::LagrangianSpec;
use crate::error::{Error, Result};
use crate::lattice::{PhysicalConstants, SpaceTimeGrid, WaveFunctionField};

/// Per-step normalisation constant of the path-sum kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNormalization {
    /// Continuum value `√(m / (2πiħ dt)) · dx`.
    pub analytic: Complex64,
    /// Real factor restoring the norm of a mid-grid plane-wave probe.
    pub lattice_correction: f64,
}

impl KernelNormalization {
    pub fn constant(&self) -> Complex64 {
        self.analytic * self.lattice_correction
    }
}

fn free_entry(constants: &PhysicalConstants, dx: f64, dt: f64, hops: isize) -> Complex64 {
    let d = hops as f64 * dx;
    Complex64::from_polar(1.0, constants.mass * d * d / (2.0 * constants.hbar * dt))
}

/// Fixes `C` for one time step of `grid`.
///
/// The probe is a zero-momentum plane wave under a wide Gaussian window
/// centred mid-grid; the correction makes one free step preserve its norm.
pub fn kernel_normalization(grid: &SpaceTimeGrid, constants: &PhysicalConstants) -> KernelNormalization {
    let m = constants.mass;
    let dt = grid.dt();
    let dx = grid.dx();
    let analytic = (Complex64::new(m, 0.0) / (Complex64::new(0.0, 2.0 * PI * constants.hbar * dt))).sqrt() * dx;

    let n = grid.n_x();
    let centre = 0.5 * (grid.x_min() + grid.x_max());
    let width = (grid.x_max() - grid.x_min()) / 16.0;
    let probe: Vec<f64> = grid
        .centers()
        .into_iter()
        .map(|x| (-(x - centre).powi(2) / (4.0 * width * width)).exp())
        .collect();
    let before: f64 = probe.iter().map(|p| p * p).sum();
    // Collected before summing so the result does not depend on the thread count.
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s: Complex64 = (0..n)
                .map(|j| free_entry(constants, dx, dt, i as isize - j as isize) * probe[j])
                .sum();
            (analytic * s).norm_sqr()
        })
        .collect();
    let after: f64 = rows.iter().sum();
    let lattice_correction = if after > 0.0 && after.is_finite() {
        (before / after).sqrt()
    } else {
        1.0
    };
    log::debug!("path-sum kernel: analytic C = {analytic:.6e}, lattice correction = {lattice_correction:.12}");
    KernelNormalization {
        analytic,
        lattice_correction,
    }
}

/// One-step transfer matrix for segment `step`: `K[i][j] = C·exp(i S(j→i)/ħ)`,
/// zero for forbidden segments and for hops beyond `max_hop`.
pub fn transfer_matrix(
    lag: &LagrangianSpec,
    grid: &SpaceTimeGrid,
    step: usize,
    norm: Complex64,
    max_hop: Option<usize>,
) -> PropagatorMatrix {
    let n = grid.n_x();
    let hbar = lag.constants.hbar;
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, e) in row.iter_mut().enumerate() {
            if max_hop.is_some_and(|h| i.abs_diff(j) > h) {
                continue;
            }
            let s = lag.segment_action(grid, j, i, step);
            if s.is_finite() {
                *e = norm * Complex64::from_polar(1.0, s / hbar);
            }
        }
    });
    PropagatorMatrix {
        n,
        entries,
        method: Method::PathSum,
    }
}

pub(crate) fn propagate(
    psi0: &WaveFunctionField,
    lag: &LagrangianSpec,
    max_hop: Option<usize>,
    observer: &mut dyn FnMut(usize, &[Complex64]),
) -> Result<WaveFunctionField> {
    let grid = *psi0.grid();
    let norm = kernel_normalization(&grid, &lag.constants).constant();
    let mut psi = psi0.amplitudes().to_vec();
    let mut cached: Option<(Option<usize>, PropagatorMatrix)> = None;
    for k in 0..grid.n_t() {
        let key = lag.active_window(&grid, k);
        if cached.as_ref().is_none_or(|(w, _)| *w != key) {
            cached = Some((key, transfer_matrix(lag, &grid, k, norm, max_hop)));
        }
        let (_, matrix) = cached.as_ref().expect("matrix cached above");
        psi = matrix.apply(&psi);
        if psi.iter().any(|a| !a.is_finite()) {
            return Err(Error::numeric(k + 1, "path-sum amplitudes overflowed"));
        }
        observer(k + 1, &psi);
    }
    WaveFunctionField::new(grid, grid.n_t(), psi)
}
