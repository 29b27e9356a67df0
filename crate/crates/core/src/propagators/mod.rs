//! Wave-function evolution by three independent routes: the exact lattice path
//! sum, a Crank–Nicolson Schrödinger reference, and the closed-form free
//! kernel. Imaginary-time diffusion reuses the finite-difference machinery.

mod crank_nicolson;
mod free_kernel;
mod pathsum;
mod tridiag;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::LagrangianSpec;
use crate::error::{Error, Result};
use crate::lattice::WaveFunctionField;

pub use free_kernel::free_kernel_propagate;
pub use pathsum::{kernel_normalization, transfer_matrix, KernelNormalization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[serde(rename = "pathsum")]
    PathSum,
    #[serde(rename = "cn")]
    CrankNicolson,
    FreeKernel,
    Imaginary,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::PathSum,
        Method::CrankNicolson,
        Method::FreeKernel,
        Method::Imaginary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::PathSum => "pathsum",
            Method::CrankNicolson => "cn",
            Method::FreeKernel => "free-kernel",
            Method::Imaginary => "imaginary",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::validation(format!(
                "unknown method `{s}` (expected pathsum, cn, free-kernel or imaginary)"
            ))
        })
    }
}

/// Dense one-step operator, row-major: `entries[i * n + j]` maps cell `j` to cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorMatrix {
    pub n: usize,
    pub entries: Vec<Complex64>,
    pub method: Method,
}

impl PropagatorMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        self.entries
            .par_chunks(self.n)
            .map(|row| row.iter().zip(psi).map(|(k, p)| k * p).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropagateOptions {
    /// Crank–Nicolson sub-steps per lattice step; improves the reference on
    /// coarse time grids without changing the lattice.
    pub cn_substeps: usize,
    /// Path-sum hop limit; `None` keeps the full kernel.
    pub max_hop: Option<usize>,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            cn_substeps: 1,
            max_hop: None,
        }
    }
}

fn check_start(psi0: &WaveFunctionField, lag: &LagrangianSpec) -> Result<()> {
    if psi0.time_index() != 0 {
        return Err(Error::validation(format!(
            "initial field must sit at time index 0, got {}",
            psi0.time_index()
        )));
    }
    lag.validate(Some(psi0.grid()))
}

/// Exact lattice path sum: `n_t` applications of the transfer matrix.
pub fn pathsum_propagate(psi0: &WaveFunctionField, lag: &LagrangianSpec) -> Result<WaveFunctionField> {
    pathsum_propagate_with(psi0, lag, None, &mut |_, _| {})
}

/// Path sum with an optional hop limit and a per-step observer `(step, ψ)`.
pub fn pathsum_propagate_with(
    psi0: &WaveFunctionField,
    lag: &LagrangianSpec,
    max_hop: Option<usize>,
    observer: &mut dyn FnMut(usize, &[Complex64]),
) -> Result<WaveFunctionField> {
    check_start(psi0, lag)?;
    pathsum::propagate(psi0, lag, max_hop, observer)
}

/// Crank–Nicolson reference, one sub-step per lattice step.
pub fn schrodinger_propagate(psi0: &WaveFunctionField, lag: &LagrangianSpec) -> Result<WaveFunctionField> {
    schrodinger_propagate_with(psi0, lag, 1, &mut |_, _| {})
}

pub fn schrodinger_propagate_with(
    psi0: &WaveFunctionField,
    lag: &LagrangianSpec,
    substeps: usize,
    observer: &mut dyn FnMut(usize, &[Complex64]),
) -> Result<WaveFunctionField> {
    check_start(psi0, lag)?;
    crank_nicolson::propagate(psi0, lag, substeps, observer)
}

/// Imaginary-time (`t → −iτ`) diffusion with unit renormalisation each step.
pub fn imaginary_time_propagate(psi0: &WaveFunctionField, lag: &LagrangianSpec) -> Result<WaveFunctionField> {
    imaginary_time_propagate_with(psi0, lag, &mut |_, _| {})
}

pub fn imaginary_time_propagate_with(
    psi0: &WaveFunctionField,
    lag: &LagrangianSpec,
    observer: &mut dyn FnMut(usize, &[Complex64]),
) -> Result<WaveFunctionField> {
    check_start(psi0, lag)?;
    if psi0.norm_squared() == 0.0 {
        return Err(Error::numeric(0, "imaginary-time propagation of a zero field"));
    }
    crank_nicolson::propagate_imaginary(psi0, lag, observer)
}

/// Dispatch on `method`.
pub fn propagate(
    method: Method,
    psi0: &WaveFunctionField,
    lag: &LagrangianSpec,
    opts: &PropagateOptions,
) -> Result<WaveFunctionField> {
    match method {
        Method::PathSum => pathsum_propagate_with(psi0, lag, opts.max_hop, &mut |_, _| {}),
        Method::CrankNicolson => schrodinger_propagate_with(psi0, lag, opts.cn_substeps, &mut |_, _| {}),
        Method::FreeKernel => {
            check_start(psi0, lag)?;
            free_kernel_propagate(psi0, lag)
        }
        Method::Imaginary => imaginary_time_propagate(psi0, lag),
    }
}

#[cfg(test)]
mod tests;
