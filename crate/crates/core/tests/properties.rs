//! Invariants checked over randomly generated grids, paths and ensembles.

use std::f64::consts::PI;

use coherent_ensembles::action::{
    best_single_move_gain, discrete_action, phase_consistency_error, phase_profile, rounding_bound, stationary_path,
    LagrangianSpec, StationaryOptions,
};
use coherent_ensembles::ensemble::{
    decoherence_measure, is_coherent, prune_cancelling_pairs, reconstruct_wavefunction, relax_coherence, Contribution,
    Ensemble, LineSearch, Provenance,
};
use coherent_ensembles::experiments::double_slit::{sample_arrivals, visibility};
use coherent_ensembles::lattice::{
    relative_l2, PhasedTrajectory, PhysicalConstants, SpaceTimeGrid, Trajectory, WaveFunctionField,
};
use coherent_ensembles::propagators::{propagate, Method, PropagateOptions};
use num_complex::Complex64;
use proptest::prelude::*;

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

/// Random walk with hops in `-max_hop..=max_hop`, clamped to the grid.
fn walk(start: usize, hops: &[i64], n_x: usize) -> Vec<usize> {
    let mut at = start.min(n_x - 1) as i64;
    let mut out = vec![at as usize];
    for h in hops {
        at = (at + h).clamp(0, n_x as i64 - 1);
        out.push(at as usize);
    }
    out
}

fn ensemble_from(n_x: usize, paths: &[(usize, Vec<i64>, Vec<f64>)]) -> Ensemble {
    let n_t = paths[0].1.len();
    let grid = SpaceTimeGrid::new(0.0, 1.0, n_x, 0.0, 1.0, n_t).unwrap();
    let members = paths
        .iter()
        .enumerate()
        .map(|(id, (start, hops, phases))| {
            let t = Trajectory::new(id as u64, walk(*start, hops, n_x), &grid, None).unwrap();
            PhasedTrajectory::from_parts(t, phases.clone(), Complex64::new(1.0, 0.0)).unwrap()
        })
        .collect();
    Ensemble::new(grid, members, Provenance::named("proptest")).unwrap()
}

fn ensemble_strategy() -> impl Strategy<Value = Ensemble> {
    (2usize..6, 1usize..4).prop_flat_map(|(n_x, n_t)| {
        prop::collection::vec(
            (
                0..n_x,
                prop::collection::vec(-1i64..=1, n_t),
                prop::collection::vec(-10.0f64..10.0, n_t + 1),
            ),
            2..30,
        )
        .prop_map(move |paths| ensemble_from(n_x, &paths))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_centers_round_trip(x_min in -50.0f64..50.0, width in 0.1f64..100.0, n_x in 2usize..2000) {
        let g = SpaceTimeGrid::new(x_min, x_min + width, n_x, 0.0, 1.0, 1).unwrap();
        for i in 0..n_x {
            prop_assert_eq!(g.index_of(g.x(i)), Some(i));
        }
    }

    #[test]
    fn stored_phases_are_self_consistent(
        start in 0usize..40,
        hops in prop::collection::vec(-3i64..=3, 1..30),
        omega in 0.0f64..3.0,
        phi0 in -100.0f64..100.0,
    ) {
        let grid = SpaceTimeGrid::new(-5.0, 5.0, 40, 0.0, 0.1 * hops.len() as f64, hops.len()).unwrap();
        let lag = LagrangianSpec::harmonic(unit(), omega).unwrap();
        let t = Trajectory::new(1, walk(start, &hops, 40), &grid, None).unwrap();
        let p = phase_profile(&t, &lag, &grid, phi0).unwrap();
        prop_assert!(phase_consistency_error(&p, &lag, &grid).unwrap() <= 1e-12);
    }

    #[test]
    fn action_is_additive_over_time_windows(
        start in 0usize..30,
        hops in prop::collection::vec(-4i64..=4, 2..24),
        omega in 0.0f64..2.0,
        split_frac in 0.0f64..1.0,
    ) {
        let n_t = hops.len();
        let grid = SpaceTimeGrid::new(-3.0, 3.0, 30, 0.0, 0.05 * n_t as f64, n_t).unwrap();
        let lag = LagrangianSpec::harmonic(unit(), omega).unwrap();
        let t = Trajectory::new(0, walk(start, &hops, 30), &grid, None).unwrap();
        let k = 1 + ((n_t - 1) as f64 * split_frac) as usize;
        let whole = discrete_action(&t, &lag, &grid).unwrap();
        let a = discrete_action(&t.restrict(0, k), &lag, &grid.time_window(0, k).unwrap()).unwrap();
        let b = discrete_action(&t.restrict(k, n_t), &lag, &grid.time_window(k, n_t).unwrap()).unwrap();
        // Segment terms agree bit for bit; totals differ only by summation order.
        let joined: Vec<f64> = a.per_step.iter().chain(&b.per_step).copied().collect();
        prop_assert_eq!(&joined, &whole.per_step);
        prop_assert!((a.total + b.total - whole.total).abs() <= 1e-12 * whole.per_step.iter().map(|s| s.abs()).sum::<f64>().max(1.0));
    }

    #[test]
    fn mirrored_paths_have_equal_action_in_symmetric_potentials(
        start in 0usize..32,
        hops in prop::collection::vec(-4i64..=4, 1..20),
        omega in 0.0f64..2.0,
    ) {
        let grid = SpaceTimeGrid::new(-4.0, 4.0, 32, 0.0, 0.05 * hops.len() as f64, hops.len()).unwrap();
        let lag = LagrangianSpec::harmonic(unit(), omega).unwrap();
        let t = Trajectory::new(0, walk(start, &hops, 32), &grid, None).unwrap();
        let s = discrete_action(&t, &lag, &grid).unwrap().total;
        let m = discrete_action(&t.mirrored(32), &lag, &grid).unwrap().total;
        prop_assert!((s - m).abs() <= 1e-12 * s.abs().max(1.0), "{} vs {}", s, m);
    }

    #[test]
    fn free_linear_path_action_is_resolution_independent(
        start in 0usize..20,
        v in -3i64..=3,
        n_t in 1usize..20,
        dt in 0.01f64..0.5,
    ) {
        let v = 2 * v;
        let n_x = 20 + (v.unsigned_abs() as usize) * n_t + 1;
        let make = |steps: usize, per_step: i64| {
            let grid = SpaceTimeGrid::new(0.0, n_x as f64 * 0.1, n_x, 0.0, dt * n_t as f64, steps).unwrap();
            let offset = if per_step < 0 { (-per_step) as usize * steps } else { 0 };
            let pos: Vec<usize> = (0..=steps).map(|k| (start + offset) as i64 + per_step * k as i64).map(|p| p as usize).collect();
            let t = Trajectory::new(0, pos, &grid, None).unwrap();
            discrete_action(&t, &LagrangianSpec::free(unit()), &grid).unwrap().total
        };
        let coarse = make(n_t, v);
        let fine = make(2 * n_t, v / 2);
        prop_assert!((coarse - fine).abs() <= 1e-12 * coarse.abs().max(1.0), "{} vs {}", coarse, fine);
    }

    #[test]
    fn stationary_paths_admit_no_large_single_moves(
        a in 0usize..40,
        b in 0usize..40,
        omega in 0.0f64..1.5,
        n_t in 2usize..12,
    ) {
        let grid = SpaceTimeGrid::new(-5.0, 5.0, 40, 0.0, 0.1 * n_t as f64, n_t).unwrap();
        let lag = LagrangianSpec::harmonic(unit(), omega).unwrap();
        let path = stationary_path(a, b, &lag, &grid, StationaryOptions::default()).unwrap();
        prop_assert!(best_single_move_gain(&path, &lag, &grid) <= rounding_bound(&lag, &grid));
    }

    #[test]
    fn every_method_is_linear(
        re in prop::collection::vec(-1.0f64..1.0, 24),
        im in prop::collection::vec(-1.0f64..1.0, 24),
        shift in 1usize..23,
        a in (-2.0f64..2.0, -2.0f64..2.0),
        b in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let grid = SpaceTimeGrid::new(-3.0, 3.0, 24, 0.0, 0.6, 3).unwrap();
        let amps: Vec<Complex64> = re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        let mut other = amps.clone();
        other.rotate_left(shift);
        let p1 = WaveFunctionField::new(grid, 0, amps).unwrap();
        let p2 = WaveFunctionField::new(grid, 0, other).unwrap();
        let (a, b) = (Complex64::new(a.0, a.1), Complex64::new(b.0, b.1));
        let opts = PropagateOptions::default();
        for method in [Method::PathSum, Method::CrankNicolson, Method::FreeKernel] {
            let lag = LagrangianSpec::free(unit());
            let lhs = propagate(method, &p1.combine(a, &p2, b), &lag, &opts).unwrap();
            let rhs = propagate(method, &p1, &lag, &opts).unwrap().combine(a, &propagate(method, &p2, &lag, &opts).unwrap(), b);
            let scale = rhs.norm_squared().sqrt().max(1.0);
            let diff = relative_l2(lhs.amplitudes(), rhs.amplitudes(), None, false) * rhs.norm_squared().sqrt() / scale;
            prop_assert!(diff <= 1e-12, "{}: {}", method, diff);
        }
    }

    #[test]
    fn measures_ignore_global_phase_and_member_order(ens in ensemble_strategy(), offset in -20.0f64..20.0, rot in 0usize..30) {
        let base = decoherence_measure(&ens);
        let shifted = decoherence_measure(&ens.with_global_offset(offset));
        let mut members = ens.members().to_vec();
        let r = rot % members.len();
        members.rotate_left(r);
        members.reverse();
        let permuted_ens = Ensemble::new(*ens.grid(), members, ens.provenance().clone()).unwrap();
        let permuted = decoherence_measure(&permuted_ens);
        let tol = |v: f64| 1e-12 * v.abs().max(1.0);
        prop_assert!((base.raw_measure - shifted.raw_measure).abs() <= tol(base.raw_measure));
        prop_assert!((base.smooth_measure - shifted.smooth_measure).abs() <= tol(base.smooth_measure));
        prop_assert_eq!(base.n_events(), permuted.n_events());
        prop_assert!((base.raw_measure - permuted.raw_measure).abs() <= tol(base.raw_measure));
        prop_assert!((base.smooth_measure - permuted.smooth_measure).abs() <= tol(base.smooth_measure));
        for eps in [0.3, 1.0, PI] {
            let c = is_coherent(&ens, eps).unwrap();
            prop_assert_eq!(c, is_coherent(&ens.with_global_offset(offset), eps).unwrap());
            prop_assert_eq!(c, is_coherent(&permuted_ens, eps).unwrap());
        }
        let n_t = ens.grid().n_t();
        let rec = reconstruct_wavefunction(&ens, n_t, 1).unwrap();
        let rec_shift = reconstruct_wavefunction(&ens.with_global_offset(offset), n_t, 1).unwrap();
        let rec_perm = reconstruct_wavefunction(&permuted_ens, n_t, 1).unwrap();
        prop_assert_eq!(&rec.confident, &rec_shift.confident);
        prop_assert!(relative_l2(rec_shift.field.amplitudes(), rec.field.amplitudes(), None, true) <= 1e-12);
        prop_assert!(relative_l2(rec_perm.field.amplitudes(), rec.field.amplitudes(), None, false) <= 1e-12);
    }

    #[test]
    fn pruning_bound_covers_the_removed_sum(
        raw in prop::collection::vec((-PI..PI, 0.01f64..3.0, any::<bool>(), -0.1f64..0.1, 0.9f64..1.1), 1..500),
        eps_phase in 0.0f64..0.5,
        eps_mag in 0.0f64..0.5,
    ) {
        let mut cs = Vec::new();
        for (phase, magnitude, twin, dp, dm) in raw {
            cs.push(Contribution { id: cs.len() as u64, phase, magnitude });
            if twin {
                cs.push(Contribution { id: cs.len() as u64, phase: phase + PI + dp, magnitude: magnitude * dm });
            }
        }
        let out = prune_cancelling_pairs(&cs, eps_phase, eps_mag).unwrap();
        let removed: Complex64 = out.removed.iter().map(|(a, b)| a.value() + b.value()).sum();
        let slack = 1e-12 * cs.iter().map(|c| c.magnitude).sum::<f64>();
        prop_assert!(removed.norm() <= out.residual_bound + slack);
        prop_assert_eq!(out.kept.len() + 2 * out.removed.len(), cs.len());
    }

    #[test]
    fn relaxation_never_increases_the_smooth_measure(ens in ensemble_strategy()) {
        let out = relax_coherence(&ens, 100, &LineSearch::default()).unwrap();
        prop_assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        let smooth_after = decoherence_measure(&out.ensemble).smooth_measure;
        prop_assert!(smooth_after <= decoherence_measure(&ens).smooth_measure + 1e-9);
    }

    #[test]
    fn histogram_totals_and_visibility_scaling(
        weights in prop::collection::vec(0.0f64..1.0, 2..60),
        shots in 1usize..20_000,
        seed in any::<u64>(),
        scale in 0.001f64..1000.0,
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let counts = sample_arrivals(&weights, shots, seed).unwrap();
        prop_assert_eq!(counts.iter().sum::<u64>(), shots as u64);
        let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let scaled: Vec<f64> = as_f.iter().map(|c| c * scale).collect();
        let mask = vec![true; as_f.len()];
        prop_assert!((visibility(&as_f, &mask) - visibility(&scaled, &mask)).abs() <= 1e-12);
    }
}
