use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Ensemble;
use crate::error::{Error, Result};

/// Distance between two phases on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: u64,
    pub phase: f64,
}

/// Two or more members in the same cell at the same slice.
/// Participants are ordered by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionEvent {
    pub time_index: usize,
    pub cell: usize,
    pub participants: Vec<Participant>,
}

impl IntersectionEvent {
    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let p = &self.participants;
        (0..p.len()).flat_map(move |a| (a + 1..p.len()).map(move |b| (p[a].phase, p[b].phase)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMeasure {
    pub time_index: usize,
    pub cell: usize,
    pub n_participants: usize,
    pub raw: f64,
    pub smooth: f64,
    /// `1 − |mean resultant|`, reported alongside the pairwise sums.
    pub circular_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceReport {
    pub events: Vec<IntersectionEvent>,
    pub raw_measure: f64,
    pub smooth_measure: f64,
    pub per_event: Vec<EventMeasure>,
}

impl DecoherenceReport {
    pub fn n_events(&self) -> usize {
        self.events.len()
    }
}

fn events_at(ens: &Ensemble, k: usize) -> Vec<IntersectionEvent> {
    let mut occ: Vec<(usize, u64, f64)> = ens
        .members()
        .iter()
        .map(|m| (m.positions()[k], m.id(), m.phases()[k]))
        .collect();
    occ.sort_unstable_by_key(|a| (a.0, a.1));
    occ.chunk_by(|a, b| a.0 == b.0)
        .filter(|run| run.len() >= 2)
        .map(|run| IntersectionEvent {
            time_index: k,
            cell: run[0].0,
            participants: run.iter().map(|&(_, id, phase)| Participant { id, phase }).collect(),
        })
        .collect()
}

/// Every co-occupied (slice, cell), ordered by `(time_index, cell)`.
pub fn detect_intersections(ens: &Ensemble) -> Vec<IntersectionEvent> {
    (0..ens.grid().n_slices())
        .into_par_iter()
        .flat_map_iter(|k| events_at(ens, k))
        .collect()
}

fn measure_event(e: &IntersectionEvent) -> EventMeasure {
    let (raw, smooth) = e.pairs().fold((0.0, 0.0), |(r, s), (a, b)| {
        (r + circular_distance(a, b), s + (1.0 - (a - b).cos()))
    });
    let n = e.participants.len() as f64;
    let (sx, sy) = e
        .participants
        .iter()
        .fold((0.0, 0.0), |(x, y), p| (x + p.phase.cos(), y + p.phase.sin()));
    EventMeasure {
        time_index: e.time_index,
        cell: e.cell,
        n_participants: e.participants.len(),
        raw,
        smooth,
        circular_variance: 1.0 - (sx * sx + sy * sy).sqrt() / n,
    }
}

fn report(events: Vec<IntersectionEvent>) -> DecoherenceReport {
    let per_event: Vec<EventMeasure> = events.par_iter().map(measure_event).collect();
    DecoherenceReport {
        raw_measure: per_event.iter().map(|m| m.raw).sum(),
        smooth_measure: per_event.iter().map(|m| m.smooth).sum(),
        events,
        per_event,
    }
}

/// Sum of pairwise phase mismatches over all intersection events.
pub fn decoherence_measure(ens: &Ensemble) -> DecoherenceReport {
    report(detect_intersections(ens))
}

/// The same measure restricted to events on slice `k`.
pub fn decoherence_at_slice(ens: &Ensemble, k: usize) -> Result<DecoherenceReport> {
    if k > ens.grid().n_t() {
        return Err(Error::validation(format!(
            "slice {k} beyond last slice {}",
            ens.grid().n_t()
        )));
    }
    Ok(report(events_at(ens, k)))
}

/// True when every co-located pair is within `eps` on the circle.
pub fn is_coherent(ens: &Ensemble, eps: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::validation(format!(
            "coherence tolerance must be positive, got {eps}"
        )));
    }
    let eps = eps.min(PI);
    Ok(detect_intersections(ens)
        .par_iter()
        .all(|e| e.pairs().all(|(a, b)| circular_distance(a, b) <= eps)))
}
