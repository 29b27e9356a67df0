//! Discrete classical action and phase profiles of lattice trajectories.
//!
//! A segment from cell `j` at slice `k` to cell `i` at slice `k + 1` is a
//! straight line between cell centres and is priced as
//!
//! ```text
//! S_k = (m/2) · ((x_i − x_j)/dt)² · dt − V((x_i + x_j)/2) · dt
//! ```
//!
//! with `V` linearly interpolated between cell-centre values. A segment that
//! touches a cell with `V = +∞` (a hard wall) is forbidden: its action is
//! `−∞` and it carries zero weight in every path sum.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{PhasedTrajectory, PhysicalConstants, SpaceTimeGrid, Trajectory};

/// Cell-centre potential values active over `[t_from, t_to)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierWindow {
    pub t_from: f64,
    pub t_to: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Free,
    /// `V(x) = ½ m ω² x²`.
    Harmonic {
        omega: f64,
    },
    /// Time-windowed profiles; zero outside every window. `+∞` marks hard-wall cells.
    Barrier {
        windows: Vec<BarrierWindow>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSpec {
    pub constants: PhysicalConstants,
    pub potential: Potential,
}

impl LagrangianSpec {
    pub fn free(constants: PhysicalConstants) -> Self {
        Self {
            constants,
            potential: Potential::Free,
        }
    }

    pub fn harmonic(constants: PhysicalConstants, omega: f64) -> Result<Self> {
        let spec = Self {
            constants,
            potential: Potential::Harmonic { omega },
        };
        spec.validate(None)?;
        Ok(spec)
    }

    pub fn barrier(constants: PhysicalConstants, windows: Vec<BarrierWindow>, grid: &SpaceTimeGrid) -> Result<Self> {
        let spec = Self {
            constants,
            potential: Potential::Barrier { windows },
        };
        spec.validate(Some(grid))?;
        Ok(spec)
    }

    pub fn is_free(&self) -> bool {
        matches!(self.potential, Potential::Free)
    }

    pub fn validate(&self, grid: Option<&SpaceTimeGrid>) -> Result<()> {
        self.constants.validate()?;
        match &self.potential {
            Potential::Free => Ok(()),
            Potential::Harmonic { omega } => {
                if omega.is_finite() && *omega > 0.0 {
                    Ok(())
                } else {
                    Err(Error::validation(format!(
                        "harmonic omega must be positive, got {omega}"
                    )))
                }
            }
            Potential::Barrier { windows } => {
                for (w_idx, w) in windows.iter().enumerate() {
                    if !(w.t_from.is_finite() && w.t_to.is_finite() && w.t_to > w.t_from) {
                        return Err(Error::validation(format!(
                            "barrier window {w_idx} has an empty time range"
                        )));
                    }
                    if let Some(g) = grid {
                        if w.values.len() != g.n_x() {
                            return Err(Error::validation(format!(
                                "barrier window {w_idx} has {} values, grid has {} cells",
                                w.values.len(),
                                g.n_x()
                            )));
                        }
                    }
                    if w.values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                        return Err(Error::validation(format!(
                            "barrier window {w_idx} has NaN or -inf values"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Index of the barrier window active during segment `step`, if any.
    pub fn active_window(&self, grid: &SpaceTimeGrid, step: usize) -> Option<usize> {
        match &self.potential {
            Potential::Barrier { windows } => {
                let t = grid.step_midtime(step);
                windows.iter().position(|w| t >= w.t_from && t < w.t_to)
            }
            _ => None,
        }
    }

    /// Potential at the centre of `cell` during segment `step`.
    pub fn cell_potential(&self, grid: &SpaceTimeGrid, cell: usize, step: usize) -> f64 {
        match &self.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => {
                let x = grid.x(cell);
                0.5 * self.constants.mass * omega * omega * x * x
            }
            Potential::Barrier { windows } => match self.active_window(grid, step) {
                Some(w) => windows[w].values[cell],
                None => 0.0,
            },
        }
    }

    /// Whole-grid potential profile during segment `step`.
    pub fn profile(&self, grid: &SpaceTimeGrid, step: usize) -> Vec<f64> {
        (0..grid.n_x()).map(|i| self.cell_potential(grid, i, step)).collect()
    }

    /// Linearly interpolated potential at the midpoint of the segment `from → to`.
    /// `+∞` if either endpoint or the midpoint sits on a hard wall.
    pub fn segment_potential(&self, grid: &SpaceTimeGrid, from: usize, to: usize, step: usize) -> f64 {
        if self.is_free() {
            return 0.0;
        }
        let v_from = self.cell_potential(grid, from, step);
        let v_to = self.cell_potential(grid, to, step);
        if v_from.is_infinite() || v_to.is_infinite() {
            return f64::INFINITY;
        }
        let s = from + to;
        if s.is_multiple_of(2) {
            self.cell_potential(grid, s / 2, step)
        } else {
            0.5 * (self.cell_potential(grid, s / 2, step) + self.cell_potential(grid, s / 2 + 1, step))
        }
    }

    /// Action of one segment; `−∞` for a forbidden (hard-wall) segment.
    pub fn segment_action(&self, grid: &SpaceTimeGrid, from: usize, to: usize, step: usize) -> f64 {
        let dt = grid.dt();
        let dx = (to as f64 - from as f64) * grid.dx();
        let kinetic = 0.5 * self.constants.mass * dx * dx / dt;
        let v = self.segment_potential(grid, from, to, step);
        if v.is_infinite() {
            return f64::NEG_INFINITY;
        }
        kinetic - v * dt
    }

    /// `dV/dx` at a continuous position, used only by the stationary-path
    /// relaxation (piecewise linear between cell centres for barriers).
    fn force_gradient(&self, grid: &SpaceTimeGrid, y: f64, step: usize) -> f64 {
        match &self.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => self.constants.mass * omega * omega * y,
            Potential::Barrier { .. } => {
                let n = grid.n_x();
                let r = ((y - grid.x_min()) / grid.dx() - 0.5).clamp(0.0, (n - 1) as f64);
                let lo = (r.floor() as usize).min(n - 2);
                let v0 = self.cell_potential(grid, lo, step);
                let v1 = self.cell_potential(grid, lo + 1, step);
                (v1 - v0) / grid.dx()
            }
        }
    }
}

/// Total action plus its per-segment decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValue {
    pub total: f64,
    pub per_step: Vec<f64>,
}

fn check_length(gamma: &Trajectory, grid: &SpaceTimeGrid) -> Result<()> {
    if gamma.len() != grid.n_slices() {
        return Err(Error::validation(format!(
            "trajectory {} has {} slices but grid has n_t = {}",
            gamma.id(),
            gamma.len(),
            grid.n_t()
        )));
    }
    if let Some(&bad) = gamma.positions().iter().find(|&&p| p >= grid.n_x()) {
        return Err(Error::validation(format!(
            "trajectory {} visits cell {bad} outside the grid",
            gamma.id()
        )));
    }
    Ok(())
}

pub fn discrete_action(gamma: &Trajectory, lag: &LagrangianSpec, grid: &SpaceTimeGrid) -> Result<ActionValue> {
    check_length(gamma, grid)?;
    let per_step: Vec<f64> = gamma
        .positions()
        .windows(2)
        .enumerate()
        .map(|(k, w)| lag.segment_action(grid, w[0], w[1], k))
        .collect();
    if let Some(k) = per_step.iter().position(|s| !s.is_finite()) {
        return Err(Error::validation(format!(
            "trajectory {} segment {k} crosses a hard wall",
            gamma.id()
        )));
    }
    Ok(ActionValue {
        total: per_step.iter().sum(),
        per_step,
    })
}

/// Attaches the cumulative phase `initial_phase + S_k/ħ` to every slice.
pub fn phase_profile(
    gamma: &Trajectory,
    lag: &LagrangianSpec,
    grid: &SpaceTimeGrid,
    initial_phase: f64,
) -> Result<PhasedTrajectory> {
    let action = discrete_action(gamma, lag, grid)?;
    let hbar = lag.constants.hbar;
    let mut phases = Vec::with_capacity(gamma.len());
    let mut acc = 0.0;
    phases.push(initial_phase);
    for s in &action.per_step {
        acc += s;
        phases.push(initial_phase + acc / hbar);
    }
    PhasedTrajectory::from_parts(gamma.clone(), phases, Complex64::new(1.0, 0.0))
}

/// Largest relative deviation between the stored phases and a recomputation.
pub fn phase_consistency_error(p: &PhasedTrajectory, lag: &LagrangianSpec, grid: &SpaceTimeGrid) -> Result<f64> {
    let fresh = phase_profile(p.trajectory(), lag, grid, p.phases()[0])?;
    Ok(p.phases()
        .iter()
        .zip(fresh.phases())
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy)]
pub struct StationaryOptions {
    pub max_sweeps: usize,
    /// Convergence threshold on the largest position update, in cells.
    pub tolerance_cells: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200_000,
            tolerance_cells: 1e-11,
        }
    }
}

/// Rounding bound `m dx² / (2 dt)` quoted for the stationarity check.
pub fn rounding_bound(lag: &LagrangianSpec, grid: &SpaceTimeGrid) -> f64 {
    lag.constants.mass * grid.dx() * grid.dx() / (2.0 * grid.dt())
}

/// Classical path between cells `x_a` (slice 0) and `x_b` (slice n_t).
///
/// Interior positions are relaxed as reals by Gauss–Seidel sweeps of the
/// per-slice stationarity condition, rounded to the nearest cell (exact ties
/// go towards `x_a`), then polished with single-slice one-cell moves until no
/// move strictly lowers the lattice action.
pub fn stationary_path(
    x_a: usize,
    x_b: usize,
    lag: &LagrangianSpec,
    grid: &SpaceTimeGrid,
    opts: StationaryOptions,
) -> Result<Trajectory> {
    let n = grid.n_x();
    if x_a >= n || x_b >= n {
        return Err(Error::validation(format!("endpoints {x_a}, {x_b} outside 0..{n}")));
    }
    lag.validate(Some(grid))?;
    if let Potential::Barrier { windows } = &lag.potential {
        if windows.iter().any(|w| w.values.iter().any(|v| !v.is_finite())) {
            return Err(Error::validation("stationary_path needs a finite potential"));
        }
    }

    let steps = grid.n_t();
    let m = lag.constants.mass;
    let dt = grid.dt();
    let ya = grid.x(x_a);
    let yb = grid.x(x_b);
    let mut y: Vec<f64> = (0..=steps).map(|k| ya + (yb - ya) * k as f64 / steps as f64).collect();

    let lo = grid.x(0);
    let hi = grid.x(n - 1);
    let mut converged = steps < 2;
    let mut sweeps = 0;
    let mut residual = 0.0;
    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        residual = 0.0;
        for k in 1..steps {
            let (a, b) = (y[k - 1], y[k + 1]);
            let s1 = lag.force_gradient(grid, 0.5 * (a + y[k]), k - 1);
            let s2 = lag.force_gradient(grid, 0.5 * (y[k] + b), k);
            let next = (0.5 * (a + b) + dt * dt / (4.0 * m) * (s1 + s2)).clamp(lo, hi);
            residual = f64::max(residual, (next - y[k]).abs() / grid.dx());
            y[k] = next;
        }
        converged = residual < opts.tolerance_cells;
    }

    let positions: Vec<usize> = y.iter().map(|&v| round_to_cell(grid, v, x_a)).collect();
    let rounded = Trajectory::new(0, positions, grid, None)?;
    if !converged {
        return Err(Error::NotConverged {
            iterations: sweeps,
            residual,
            best: Box::new(rounded),
        });
    }
    polish(rounded, lag, grid)
}

fn round_to_cell(grid: &SpaceTimeGrid, y: f64, toward: usize) -> usize {
    let r = (y - grid.x_min()) / grid.dx() - 0.5;
    let fl = r.floor();
    let frac = r - fl;
    let idx = if (frac - 0.5).abs() < 1e-9 {
        if (toward as f64) <= fl {
            fl
        } else {
            fl + 1.0
        }
    } else {
        r.round()
    };
    (idx.max(0.0) as usize).min(grid.n_x() - 1)
}

fn local_action(lag: &LagrangianSpec, grid: &SpaceTimeGrid, p: &[usize], k: usize, at: usize) -> f64 {
    lag.segment_action(grid, p[k - 1], at, k - 1) + lag.segment_action(grid, at, p[k + 1], k)
}

fn polish(gamma: Trajectory, lag: &LagrangianSpec, grid: &SpaceTimeGrid) -> Result<Trajectory> {
    let mut p = gamma.positions().to_vec();
    let n = grid.n_x();
    let scale = rounding_bound(lag, grid);
    loop {
        let mut moved = false;
        for k in 1..p.len().saturating_sub(1) {
            let here = local_action(lag, grid, &p, k, p[k]);
            for cand in [p[k].checked_sub(1), Some(p[k] + 1).filter(|&c| c < n)]
                .into_iter()
                .flatten()
            {
                let there = local_action(lag, grid, &p, k, cand);
                if there < here - 1e-12 * scale.max(here.abs()) {
                    p[k] = cand;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            break;
        }
    }
    Trajectory::new(gamma.id(), p, grid, None)
}

/// Largest action decrease achievable by moving one interior slice by one cell.
pub fn best_single_move_gain(gamma: &Trajectory, lag: &LagrangianSpec, grid: &SpaceTimeGrid) -> f64 {
    let p = gamma.positions();
    let n = grid.n_x();
    let mut best: f64 = 0.0;
    for k in 1..p.len().saturating_sub(1) {
        let here = local_action(lag, grid, p, k, p[k]);
        for cand in [p[k].checked_sub(1), Some(p[k] + 1).filter(|&c| c < n)]
            .into_iter()
            .flatten()
        {
            best = best.max(here - local_action(lag, grid, p, k, cand));
        }
    }
    best
}
