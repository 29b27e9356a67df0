//! The 1D space × time lattice and the objects that live on it.
//!
//! Cells are indexed `0..n_x` with centres `x_min + (i + 0.5) dx`; time slices
//! are indexed `0..=n_t`. Trajectories visit one cell per slice, and wave
//! functions hold one complex amplitude per cell. Amplitudes are pinned to
//! zero outside `[x_min, x_max]` (Dirichlet edges).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant and particle mass, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let c = Self { hbar, mass };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::validation(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::validation(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceTimeGrid {
    x_min: f64,
    x_max: f64,
    n_x: usize,
    t_start: f64,
    t_end: f64,
    n_t: usize,
    dx: f64,
    dt: f64,
}

impl SpaceTimeGrid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, t_start: f64, t_end: f64, n_t: usize) -> Result<Self> {
        let all_finite = [x_min, x_max, t_start, t_end].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::validation("grid extents must be finite"));
        }
        if x_max <= x_min {
            return Err(Error::validation(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if t_end <= t_start {
            return Err(Error::validation(format!(
                "t_end ({t_end}) must exceed t_start ({t_start})"
            )));
        }
        if n_x < 2 {
            return Err(Error::validation(format!("n_x must be at least 2, got {n_x}")));
        }
        if n_t < 1 {
            return Err(Error::validation("n_t must be at least 1"));
        }
        let dx = (x_max - x_min) / n_x as f64;
        let dt = (t_end - t_start) / n_t as f64;
        if !(dx > 0.0 && dt > 0.0) {
            return Err(Error::validation("grid spacing underflows to zero"));
        }
        Ok(Self {
            x_min,
            x_max,
            n_x,
            t_start,
            t_end,
            n_t,
            dx,
            dt,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
    pub fn n_slices(&self) -> usize {
        self.n_t + 1
    }

    /// Centre of cell `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    /// Time of slice `k`.
    pub fn t(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// Midpoint time of the segment from slice `k` to `k + 1`.
    pub fn step_midtime(&self, k: usize) -> f64 {
        self.t_start + (k as f64 + 0.5) * self.dt
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.x(i)).collect()
    }

    /// Cell containing `x`, or `None` outside the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.x_min && x < self.x_max) {
            return None;
        }
        let i = ((x - self.x_min) / self.dx).floor() as usize;
        Some(i.min(self.n_x - 1))
    }

    /// Sub-grid covering slices `k0..=k1`, sharing `dx` and `dt` exactly.
    pub fn time_window(&self, k0: usize, k1: usize) -> Result<Self> {
        if k1 <= k0 || k1 > self.n_t {
            return Err(Error::validation(format!(
                "time window {k0}..={k1} is not inside 0..={}",
                self.n_t
            )));
        }
        Ok(Self {
            t_start: self.t(k0),
            t_end: self.t(k1),
            n_t: k1 - k0,
            ..*self
        })
    }
}

/// A lattice path: one cell index per time slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    id: u64,
    positions: Vec<usize>,
}

impl Trajectory {
    /// `max_hop = None` means unrestricted hops.
    pub fn new(id: u64, positions: Vec<usize>, grid: &SpaceTimeGrid, max_hop: Option<usize>) -> Result<Self> {
        if positions.len() != grid.n_slices() {
            return Err(Error::validation(format!(
                "trajectory {id} has {} positions, grid needs {}",
                positions.len(),
                grid.n_slices()
            )));
        }
        if let Some(&bad) = positions.iter().find(|&&p| p >= grid.n_x()) {
            return Err(Error::validation(format!(
                "trajectory {id} visits cell {bad} outside 0..{}",
                grid.n_x()
            )));
        }
        if let Some(h) = max_hop {
            if let Some(w) = positions.windows(2).find(|w| w[0].abs_diff(w[1]) > h) {
                return Err(Error::validation(format!(
                    "trajectory {id} hops {} -> {} beyond max_hop {h}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { id, positions })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    /// Restriction to slices `k0..=k1`, to be used with `grid.time_window(k0, k1)`.
    pub fn restrict(&self, k0: usize, k1: usize) -> Self {
        Self {
            id: self.id,
            positions: self.positions[k0..=k1].to_vec(),
        }
    }

    /// Mirror image about the grid centre.
    pub fn mirrored(&self, n_x: usize) -> Self {
        Self {
            id: self.id,
            positions: self.positions.iter().map(|&p| n_x - 1 - p).collect(),
        }
    }
}

/// A trajectory carrying its unwrapped cumulative phase at every slice.
///
/// `phases[k + 1] - phases[k]` is the action of segment `k` divided by ħ.
/// Build these with [`crate::action::phase_profile`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedTrajectory {
    trajectory: Trajectory,
    phases: Vec<f64>,
    amplitude_weight: Complex64,
}

impl PhasedTrajectory {
    pub fn from_parts(trajectory: Trajectory, phases: Vec<f64>, amplitude_weight: Complex64) -> Result<Self> {
        if phases.len() != trajectory.len() {
            return Err(Error::validation(format!(
                "trajectory {} has {} phases for {} positions",
                trajectory.id(),
                phases.len(),
                trajectory.len()
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::validation(format!(
                "trajectory {} has non-finite phases",
                trajectory.id()
            )));
        }
        if !(amplitude_weight.re.is_finite() && amplitude_weight.im.is_finite()) {
            return Err(Error::validation(format!(
                "trajectory {} has non-finite weight",
                trajectory.id()
            )));
        }
        Ok(Self {
            trajectory,
            phases,
            amplitude_weight,
        })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }
    pub fn id(&self) -> u64 {
        self.trajectory.id()
    }
    pub fn positions(&self) -> &[usize] {
        self.trajectory.positions()
    }
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
    pub fn amplitude_weight(&self) -> Complex64 {
        self.amplitude_weight
    }
    pub fn final_phase(&self) -> f64 {
        *self.phases.last().expect("phased trajectory is never empty")
    }
    pub fn final_cell(&self) -> usize {
        *self.trajectory.positions().last().expect("trajectory is never empty")
    }

    /// Weighted contribution `weight · exp(i φ_final)` to the path sum.
    pub fn contribution(&self) -> Complex64 {
        self.amplitude_weight * Complex64::from_polar(1.0, self.final_phase())
    }

    pub fn with_weight(mut self, w: Complex64) -> Self {
        self.amplitude_weight = w;
        self
    }

    /// Adds a constant to every phase; segment increments are untouched.
    pub fn with_offset(&self, offset: f64) -> Self {
        Self {
            trajectory: self.trajectory.clone(),
            phases: self.phases.iter().map(|p| p + offset).collect(),
            amplitude_weight: self.amplitude_weight,
        }
    }
}

/// Gaussian packet `exp(-(x-x0)²/(4σ0²) + i p0 x / ħ)`, normalised on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPacket {
    pub x0: f64,
    pub sigma0: f64,
    #[serde(default)]
    pub p0: f64,
}

impl GaussianPacket {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::validation(format!(
                "packet sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if !(self.x0.is_finite() && self.p0.is_finite()) {
            return Err(Error::validation("packet x0 and p0 must be finite"));
        }
        Ok(())
    }
}

/// Complex amplitudes on one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunctionField {
    grid: SpaceTimeGrid,
    time_index: usize,
    amplitudes: Vec<Complex64>,
}

impl WaveFunctionField {
    pub fn new(grid: SpaceTimeGrid, time_index: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_x() {
            return Err(Error::validation(format!(
                "field has {} amplitudes, grid has {} cells",
                amplitudes.len(),
                grid.n_x()
            )));
        }
        if time_index > grid.n_t() {
            return Err(Error::validation(format!(
                "time index {time_index} beyond last slice {}",
                grid.n_t()
            )));
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::validation("field contains non-finite amplitudes"));
        }
        Ok(Self {
            grid,
            time_index,
            amplitudes,
        })
    }

    pub fn zeros(grid: SpaceTimeGrid, time_index: usize) -> Self {
        Self {
            grid,
            time_index,
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.n_x()],
        }
    }

    /// Normalised Gaussian packet at slice 0.
    pub fn gaussian(grid: SpaceTimeGrid, packet: &GaussianPacket, constants: &PhysicalConstants) -> Result<Self> {
        packet.validate()?;
        let amps = grid
            .centers()
            .into_iter()
            .map(|x| {
                let u = x - packet.x0;
                let env = (-u * u / (4.0 * packet.sigma0 * packet.sigma0)).exp();
                Complex64::from_polar(env, packet.p0 * x / constants.hbar)
            })
            .collect();
        let field = Self::new(grid, 0, amps)?;
        if field.norm_squared() == 0.0 {
            return Err(Error::validation("packet has no weight on the grid"));
        }
        Ok(field.normalized())
    }

    /// Analytic free evolution of a Gaussian packet over time `t` (continuum result).
    pub fn gaussian_free_evolved(
        grid: SpaceTimeGrid,
        time_index: usize,
        packet: &GaussianPacket,
        constants: &PhysicalConstants,
        t: f64,
    ) -> Self {
        let s2 = packet.sigma0 * packet.sigma0;
        let st = Complex64::new(s2, constants.hbar * t / (2.0 * constants.mass));
        let k0 = packet.p0 / constants.hbar;
        let v = packet.p0 / constants.mass;
        let prefactor = (2.0 * PI * s2).powf(-0.25) * (Complex64::new(s2, 0.0) / st).sqrt();
        let amps = grid
            .centers()
            .into_iter()
            .map(|x| {
                let u = x - packet.x0 - v * t;
                let phase = Complex64::i() * (k0 * x - 0.5 * k0 * v * t);
                prefactor * (-(u * u) / (4.0 * st) + phase).exp()
            })
            .collect();
        Self {
            grid,
            time_index,
            amplitudes: amps,
        }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }
    pub fn time_index(&self) -> usize {
        self.time_index
    }
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn with_time_index(mut self, time_index: usize) -> Self {
        self.time_index = time_index;
        self
    }

    /// `Σ |ψ_i|² dx`.
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_squared().sqrt();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            time_index: self.time_index,
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// Returns `a·self + b·other`; grids must match.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Self {
        Self {
            grid: self.grid,
            time_index: self.time_index,
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// Cell-wise shift by `k` cells (positive = towards larger x), zero-filled.
    pub fn shifted(&self, k: isize) -> Self {
        let n = self.amplitudes.len() as isize;
        let amps = (0..n)
            .map(|i| {
                let src = i - k;
                if (0..n).contains(&src) {
                    self.amplitudes[src as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self {
            amplitudes: amps,
            ..self.clone()
        }
    }

    /// Mean and standard deviation of position under `|ψ|²`.
    pub fn position_moments(&self) -> (f64, f64) {
        let w: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = w.iter().sum();
        let xs = self.grid.centers();
        let mean = w.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / total;
        let var = w.iter().zip(&xs).map(|(w, x)| w * (x - mean).powi(2)).sum::<f64>() / total;
        (mean, var.sqrt())
    }
}

/// Relative L2 distance `‖a − b‖ / ‖b‖` over the cells where `mask` is true
/// (all cells when `mask` is `None`). When `align_phase` is set, `a` is first
/// rotated by the global phase that best matches `b`.
pub fn relative_l2(a: &[Complex64], b: &[Complex64], mask: Option<&[bool]>, align_phase: bool) -> f64 {
    let keep = |i: usize| mask.is_none_or(|m| m[i]);
    let rot = if align_phase {
        let overlap: Complex64 = (0..a.len()).filter(|&i| keep(i)).map(|i| a[i].conj() * b[i]).sum();
        if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for i in (0..a.len()).filter(|&i| keep(i)) {
        num += (a[i] * rot - b[i]).norm_sqr();
        den += b[i].norm_sqr();
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}
