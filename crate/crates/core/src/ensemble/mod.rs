//! Ensembles of phased trajectories: intersection events, decoherence
//! measures, sampling, reconstruction, cancelling-pair pruning, coherent
//! selection and relaxation towards coherence.

mod enumerate;
mod measure;
mod prune;
mod reconstruct;
mod relax;
mod sampling;
mod select;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{PhasedTrajectory, SpaceTimeGrid};

pub use enumerate::{enumerate_paths, feynman_sum};
pub use measure::{
    circular_distance, decoherence_at_slice, decoherence_measure, detect_intersections, is_coherent, DecoherenceReport,
    EventMeasure, IntersectionEvent, Participant,
};
pub use prune::{prune_cancelling_pairs, Contribution, PruneOutcome};
pub use reconstruct::{reconstruct_wavefunction, Reconstruction};
pub use relax::{relax_coherence, LineSearch, RelaxOutcome};
pub use sampling::{sample_paths, EndpointSpec, InitialPhase, PathSource, SampleOptions};
pub use select::{select_coherent_ensemble, SelectOptions};

/// How an ensemble came to be; carried into every output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub constraints: String,
    /// Set when a selection kept no members.
    #[serde(default)]
    pub empty_selection: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn named(sampler: impl Into<String>) -> Self {
        Self {
            sampler: sampler.into(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    grid: SpaceTimeGrid,
    members: Vec<PhasedTrajectory>,
    provenance: Provenance,
}

impl Ensemble {
    /// Checks that every member lives on `grid` and that ids are unique.
    pub fn new(grid: SpaceTimeGrid, members: Vec<PhasedTrajectory>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::with_capacity(members.len());
        for m in &members {
            if m.positions().len() != grid.n_slices() {
                return Err(Error::validation(format!(
                    "member {} has {} slices, grid has {}",
                    m.id(),
                    m.positions().len(),
                    grid.n_slices()
                )));
            }
            if m.positions().iter().any(|&p| p >= grid.n_x()) {
                return Err(Error::validation(format!("member {} leaves the grid", m.id())));
            }
            if !seen.insert(m.id()) {
                return Err(Error::validation(format!("duplicate member id {}", m.id())));
            }
        }
        Ok(Self {
            grid,
            members,
            provenance,
        })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }
    pub fn members(&self) -> &[PhasedTrajectory] {
        &self.members
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn into_members(self) -> Vec<PhasedTrajectory> {
        self.members
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Same ensemble with `offset` added to every member's phases.
    pub fn with_global_offset(&self, offset: f64) -> Self {
        Self {
            grid: self.grid,
            members: self.members.iter().map(|m| m.with_offset(offset)).collect(),
            provenance: self.provenance.clone(),
        }
    }
}
