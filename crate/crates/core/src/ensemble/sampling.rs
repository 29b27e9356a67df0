//! Seeded random-walk path sampler.
//!
//! Members are generated in fixed-size blocks; block `b` draws from a ChaCha8
//! stream seeded with `seed` and stream number `b`, so the output does not
//! depend on how many worker threads process the blocks.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Ensemble, Provenance};
use crate::action::{phase_profile, LagrangianSpec};
use crate::error::{Error, Result};
use crate::lattice::{PhasedTrajectory, SpaceTimeGrid, Trajectory, WaveFunctionField};

const BLOCK: usize = 1024;

/// Where paths start.
#[derive(Debug, Clone, Copy)]
pub enum PathSource<'a> {
    /// Start cells drawn from `|ψ|²` of a slice-0 field.
    Field(&'a WaveFunctionField),
    Point(usize),
}

/// Where paths end.
#[derive(Debug, Clone, Copy)]
pub enum EndpointSpec<'a> {
    /// The walk ends wherever it lands.
    Free,
    Fixed(usize),
    /// End cells drawn from `|ψ|²` of a final-slice field.
    FromField(&'a WaveFunctionField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPhase {
    Zero,
    /// `arg ψ_source` at the start cell (zero for point sources).
    FromSource,
}

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    /// Largest hop between consecutive slices; `None` is unrestricted.
    pub max_hop: Option<usize>,
    pub initial_phase: InitialPhase,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            max_hop: None,
            initial_phase: InitialPhase::FromSource,
        }
    }
}

fn weights(field: &WaveFunctionField) -> Vec<f64> {
    field.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

/// Cells within `reach` of `from`, clipped to the grid.
fn span(from: usize, reach: usize, n: usize) -> (usize, usize) {
    (from.saturating_sub(reach), (from + reach).min(n - 1))
}

struct Plan {
    grid: SpaceTimeGrid,
    hop: usize,
    start: Vec<f64>,
    end: Option<Vec<f64>>,
    source_phase: Vec<f64>,
}

impl Plan {
    fn reachable(&self, a: usize, b: usize) -> bool {
        a.abs_diff(b) <= self.hop.saturating_mul(self.grid.n_t())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        let n = self.grid.n_x();
        let steps = self.grid.n_t();
        let start = WeightedIndex::new(&self.start)
            .map_err(|e| Error::validation(format!("start distribution: {e}")))?
            .sample(rng);
        let end = match &self.end {
            None => None,
            Some(w) => {
                let (lo, hi) = span(start, self.hop.saturating_mul(steps), n);
                let local = WeightedIndex::new(&w[lo..=hi])
                    .map_err(|_| Error::validation(format!("no admissible endpoint reachable from cell {start}")))?;
                Some(lo + local.sample(rng))
            }
        };
        let mut path = Vec::with_capacity(steps + 1);
        path.push(start);
        let mut at = start;
        for k in 0..steps {
            let (mut lo, mut hi) = span(at, self.hop, n);
            if let Some(e) = end {
                let left = (steps - k - 1).saturating_mul(self.hop);
                let (elo, ehi) = span(e, left, n);
                lo = lo.max(elo);
                hi = hi.min(ehi);
            }
            at = rng.random_range(lo..=hi);
            path.push(at);
        }
        Ok(path)
    }
}

/// Draws `n` phased random-walk paths.
pub fn sample_paths(
    source: PathSource<'_>,
    n: usize,
    seed: u64,
    endpoints: EndpointSpec<'_>,
    lag: &LagrangianSpec,
    grid: &SpaceTimeGrid,
    opts: &SampleOptions,
) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::validation("number of sampled paths must be at least 1"));
    }
    lag.validate(Some(grid))?;
    if (0..grid.n_t()).any(|k| lag.profile(grid, k).iter().any(|v| v.is_infinite())) {
        return Err(Error::validation(
            "path sampling through hard-wall potentials is not supported",
        ));
    }
    let nx = grid.n_x();
    let hop = opts.max_hop.unwrap_or(nx).max(1);
    let same_cells = |f: &WaveFunctionField, what: &str| {
        if f.grid().n_x() != nx {
            Err(Error::validation(format!(
                "{what} field has {} cells, grid has {nx}",
                f.grid().n_x()
            )))
        } else {
            Ok(())
        }
    };

    let (mut start, source_phase) = match source {
        PathSource::Field(f) => {
            same_cells(f, "source")?;
            (weights(f), f.amplitudes().iter().map(|a| a.arg()).collect())
        }
        PathSource::Point(c) => {
            if c >= nx {
                return Err(Error::validation(format!("source cell {c} outside 0..{nx}")));
            }
            let mut w = vec![0.0; nx];
            w[c] = 1.0;
            (w, vec![0.0; nx])
        }
    };
    let end = match endpoints {
        EndpointSpec::Free => None,
        EndpointSpec::Fixed(c) => {
            if c >= nx {
                return Err(Error::validation(format!("endpoint cell {c} outside 0..{nx}")));
            }
            let mut w = vec![0.0; nx];
            w[c] = 1.0;
            Some(w)
        }
        EndpointSpec::FromField(f) => {
            same_cells(f, "endpoint")?;
            Some(weights(f))
        }
    };

    let mut plan = Plan {
        grid: *grid,
        hop,
        start: Vec::new(),
        end,
        source_phase,
    };
    // Condition the start on being able to reach some admissible endpoint.
    if let Some(end) = &plan.end {
        let support: Vec<usize> = (0..nx).filter(|&i| end[i] > 0.0).collect();
        for (i, w) in start.iter_mut().enumerate() {
            if !support.iter().any(|&e| plan.reachable(i, e)) {
                *w = 0.0;
            }
        }
    }
    if !start.iter().any(|&w| w > 0.0) {
        return Err(Error::validation(format!(
            "endpoint constraints are unreachable within {} steps of at most {hop} cells",
            grid.n_t()
        )));
    }
    plan.start = start;

    let blocks = n.div_ceil(BLOCK);
    let members: Vec<PhasedTrajectory> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<Vec<PhasedTrajectory>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n);
            (lo..hi)
                .map(|id| {
                    let positions = plan.draw(&mut rng)?;
                    let phase0 = match opts.initial_phase {
                        InitialPhase::Zero => 0.0,
                        InitialPhase::FromSource => plan.source_phase[positions[0]],
                    };
                    let gamma = Trajectory::new(id as u64, positions, grid, opts.max_hop)?;
                    Ok(phase_profile(&gamma, lag, grid, phase0)?.with_weight(Complex64::new(1.0, 0.0)))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let constraints = format!(
        "source={}, endpoints={}, max_hop={}, initial_phase={:?}",
        match source {
            PathSource::Field(_) => "field".to_string(),
            PathSource::Point(c) => format!("cell {c}"),
        },
        match endpoints {
            EndpointSpec::Free => "free".to_string(),
            EndpointSpec::Fixed(c) => format!("cell {c}"),
            EndpointSpec::FromField(_) => "field".to_string(),
        },
        opts.max_hop.map_or("unrestricted".to_string(), |h| h.to_string()),
        opts.initial_phase,
    );
    Ensemble::new(
        *grid,
        members,
        Provenance {
            seed: Some(seed),
            constraints,
            ..Provenance::named("random-walk")
        },
    )
}
