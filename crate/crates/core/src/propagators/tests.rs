use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;
use crate::action::{BarrierWindow, LagrangianSpec};
use crate::lattice::{relative_l2, GaussianPacket, PhysicalConstants, SpaceTimeGrid, WaveFunctionField};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn packet(grid: SpaceTimeGrid, x0: f64, sigma0: f64, p0: f64) -> WaveFunctionField {
    WaveFunctionField::gaussian(grid, &GaussianPacket { x0, sigma0, p0 }, &unit()).unwrap()
}

fn mid_mask(grid: &SpaceTimeGrid, half_width: f64) -> Vec<bool> {
    let centre = 0.5 * (grid.x_min() + grid.x_max());
    grid.centers()
        .into_iter()
        .map(|x| (x - centre).abs() <= half_width)
        .collect()
}

/// Sum over every lattice path explicitly, weighting each by `C^n_t e^{iS/ħ}`.
fn brute_force(psi0: &WaveFunctionField, lag: &LagrangianSpec) -> Vec<Complex64> {
    let grid = *psi0.grid();
    let n = grid.n_x();
    let steps = grid.n_t();
    let cnorm = kernel_normalization(&grid, &lag.constants).constant();
    let mut out = vec![c(0.0, 0.0); n];
    let total = n.pow(steps as u32 + 1);
    for code in 0..total {
        let mut path = Vec::with_capacity(steps + 1);
        let mut r = code;
        for _ in 0..=steps {
            path.push(r % n);
            r /= n;
        }
        let mut action = 0.0;
        let mut allowed = true;
        for k in 0..steps {
            let s = lag.segment_action(&grid, path[k], path[k + 1], k);
            if !s.is_finite() {
                allowed = false;
                break;
            }
            action += s;
        }
        if !allowed {
            continue;
        }
        let w = cnorm.powu(steps as u32) * Complex64::from_polar(1.0, action / lag.constants.hbar);
        out[path[steps]] += w * psi0.amplitudes()[path[0]];
    }
    out
}

#[test]
fn transfer_matrix_equals_explicit_path_enumeration() {
    let psi = |grid: SpaceTimeGrid| {
        let amps = (0..grid.n_x())
            .map(|i| c(1.0 + 0.3 * i as f64, -0.2 * i as f64))
            .collect();
        WaveFunctionField::new(grid, 0, amps).unwrap()
    };
    for n_x in 2..=5 {
        for n_t in 1..=4 {
            let grid = SpaceTimeGrid::new(-1.0, 1.5, n_x, 0.0, 0.7, n_t).unwrap();
            for lag in [
                LagrangianSpec::free(unit()),
                LagrangianSpec::harmonic(unit(), 1.3).unwrap(),
            ] {
                let psi0 = psi(grid);
                let fast = pathsum_propagate(&psi0, &lag).unwrap();
                let slow = brute_force(&psi0, &lag);
                let err = relative_l2(fast.amplitudes(), &slow, None, false);
                assert!(err <= 1e-12, "n_x={n_x} n_t={n_t}: {err:e}");
            }
        }
    }
}

#[test]
fn normalization_keeps_probe_norm() {
    let grid = SpaceTimeGrid::new(-10.0, 10.0, 256, 0.0, 0.25, 1).unwrap();
    let lag = LagrangianSpec::free(unit());
    let norm = kernel_normalization(&grid, &unit());
    assert!((norm.lattice_correction - 1.0).abs() < 1e-3);
    let probe = packet(grid, 0.0, 20.0 / 16.0, 0.0);
    let out = pathsum_propagate(&probe, &lag).unwrap();
    assert!((out.norm_squared() - 1.0).abs() < 1e-12);
}

#[test]
fn pathsum_spreads_gaussian_like_analytic() {
    let grid = SpaceTimeGrid::new(-10.0, 10.0, 256, 0.0, 1.0, 4).unwrap();
    let lag = LagrangianSpec::free(unit());
    let out = pathsum_propagate(&packet(grid, 0.0, 1.0, 0.0), &lag).unwrap();
    let sigma = out.position_moments().1;
    assert!((sigma - 1.25f64.sqrt()).abs() < 1e-4, "σ = {sigma}");
    let exact = WaveFunctionField::gaussian_free_evolved(
        grid,
        4,
        &GaussianPacket {
            x0: 0.0,
            sigma0: 1.0,
            p0: 0.0,
        },
        &unit(),
        1.0,
    );
    assert!(relative_l2(out.amplitudes(), exact.amplitudes(), None, false) < 1e-6);
}

#[test]
fn crank_nicolson_spreads_gaussian_within_one_percent() {
    let grid = SpaceTimeGrid::new(-10.0, 10.0, 256, 0.0, 1.0, 200).unwrap();
    let out = schrodinger_propagate(&packet(grid, 0.0, 1.0, 0.0), &LagrangianSpec::free(unit())).unwrap();
    let sigma = out.position_moments().1;
    assert!((sigma / 1.25f64.sqrt() - 1.0).abs() < 0.01, "σ = {sigma}");
}

#[test]
fn oracle_triangle_on_few_step_grid() {
    let grid = SpaceTimeGrid::new(-10.0, 10.0, 256, 0.0, 1.0, 4).unwrap();
    let lag = LagrangianSpec::free(unit());
    let psi0 = packet(grid, 0.0, 1.0, 0.0);
    let ps = pathsum_propagate(&psi0, &lag).unwrap();
    let fk = free_kernel_propagate(&psi0, &lag).unwrap();
    let cn = schrodinger_propagate_with(&psi0, &lag, 100, &mut |_, _| {}).unwrap();
    let mask = mid_mask(&grid, 5.0);
    assert!(relative_l2(fk.amplitudes(), ps.amplitudes(), Some(&mask), false) < 0.02);
    assert!(relative_l2(ps.amplitudes(), fk.amplitudes(), None, false) < 1e-2);
    assert!(relative_l2(cn.amplitudes(), ps.amplitudes(), None, false) < 1e-2);
    assert!(relative_l2(cn.amplitudes(), fk.amplitudes(), None, false) < 1e-2);
}

#[test]
fn linearity_for_every_method() {
    let grid = SpaceTimeGrid::new(-6.0, 6.0, 64, 0.0, 0.5, 5).unwrap();
    let lag = LagrangianSpec::free(unit());
    let p1 = packet(grid, -1.0, 0.8, 0.5);
    let p2 = packet(grid, 1.5, 1.1, -1.0);
    let (a, b) = (c(0.3, -1.2), c(-0.7, 0.4));
    let mix = p1.combine(a, &p2, b);
    for method in [Method::PathSum, Method::CrankNicolson, Method::FreeKernel] {
        let opts = PropagateOptions::default();
        let lhs = propagate(method, &mix, &lag, &opts).unwrap();
        let rhs =
            propagate(method, &p1, &lag, &opts)
                .unwrap()
                .combine(a, &propagate(method, &p2, &lag, &opts).unwrap(), b);
        let err = relative_l2(lhs.amplitudes(), rhs.amplitudes(), None, false);
        assert!(err < 1e-12, "{method}: {err:e}");
    }
}

#[test]
fn crank_nicolson_norm_drift_is_round_off() {
    let grid = SpaceTimeGrid::new(-10.0, 10.0, 256, 0.0, 10.0, 1000).unwrap();
    let lag = LagrangianSpec::harmonic(unit(), 1.0).unwrap();
    let psi0 = packet(grid, 1.0, 0.7, 0.5);
    let out = schrodinger_propagate(&psi0, &lag).unwrap();
    assert!((out.norm_squared() - 1.0).abs() < 1e-10);
}

#[test]
fn harmonic_ground_state_holds_over_a_period() {
    let grid = SpaceTimeGrid::new(-10.0, 10.0, 512, 0.0, 2.0 * PI, 2000).unwrap();
    let lag = LagrangianSpec::harmonic(unit(), 1.0).unwrap();
    let ground = packet(grid, 0.0, 0.5f64.sqrt(), 0.0);
    let out = schrodinger_propagate(&ground, &lag).unwrap();
    let mag = |f: &WaveFunctionField| f.amplitudes().iter().map(|a| c(a.norm(), 0.0)).collect::<Vec<_>>();
    assert!(relative_l2(&mag(&out), &mag(&ground), None, false) <= 1e-3);
}

#[test]
fn imaginary_time_finds_harmonic_ground_state() {
    let grid = SpaceTimeGrid::new(-8.0, 8.0, 256, 0.0, 12.0, 1200).unwrap();
    let lag = LagrangianSpec::harmonic(unit(), 1.0).unwrap();
    let start = packet(grid, 1.5, 2.0, 0.0);
    let mut norms = Vec::new();
    let out = imaginary_time_propagate_with(&start, &lag, &mut |_, psi| {
        norms.push(psi.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dx());
    })
    .unwrap();
    assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-12));
    let exact = packet(grid, 0.0, 0.5f64.sqrt(), 0.0);
    assert!(relative_l2(out.amplitudes(), exact.amplitudes(), None, true) <= 1e-2);
}

/// Dirichlet edges pin the outermost cells towards zero, so flattening is
/// measured over the central half of the grid.
#[test]
fn imaginary_time_flattens_a_positive_packet() {
    let grid = SpaceTimeGrid::new(-5.0, 5.0, 100, 0.0, 4.0, 400).unwrap();
    let start = packet(grid, 0.0, 1.0, 0.0);
    let central = mid_mask(&grid, 2.5);
    let ratio = |psi: &[Complex64]| {
        let m: Vec<f64> = psi
            .iter()
            .zip(&central)
            .filter(|(_, &k)| k)
            .map(|(a, _)| a.norm())
            .collect();
        m.iter().cloned().fold(f64::MIN, f64::max) / m.iter().cloned().fold(f64::MAX, f64::min)
    };
    let mut last = ratio(start.amplitudes());
    imaginary_time_propagate_with(&start, &LagrangianSpec::free(unit()), &mut |_, psi| {
        assert!(psi.iter().all(|a| a.re > 0.0 && a.im.abs() < 1e-15));
        let r = ratio(psi);
        assert!(r <= last * (1.0 + 1e-12), "{r} > {last}");
        last = r;
    })
    .unwrap();
    assert!(last < 2.0);
}

#[test]
fn free_kernel_of_a_point_has_flat_magnitude() {
    let grid = SpaceTimeGrid::new(-10.0, 10.0, 256, 0.0, 1.0, 1).unwrap();
    let mut amps = vec![c(0.0, 0.0); 256];
    amps[128] = c(1.0, 0.0);
    let out = free_kernel_propagate(
        &WaveFunctionField::new(grid, 0, amps).unwrap(),
        &LagrangianSpec::free(unit()),
    )
    .unwrap();
    let mask = mid_mask(&grid, 5.0);
    let mags: Vec<f64> = out
        .amplitudes()
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(a, _)| a.norm())
        .collect();
    let hi = mags.iter().cloned().fold(f64::MIN, f64::max);
    let lo = mags.iter().cloned().fold(f64::MAX, f64::min);
    assert!((hi - lo) / hi < 0.05);
}

#[test]
fn free_kernel_is_translation_covariant() {
    let grid = SpaceTimeGrid::new(-10.0, 10.0, 200, 0.0, 0.5, 1).unwrap();
    let lag = LagrangianSpec::free(unit());
    let psi0 = packet(grid, -2.0, 0.6, 1.0);
    let base = free_kernel_propagate(&psi0, &lag).unwrap();
    let moved = free_kernel_propagate(&psi0.shifted(17), &lag).unwrap();
    let expected = base.shifted(17);
    let mask = mid_mask(&grid, 6.0);
    assert!(relative_l2(moved.amplitudes(), expected.amplitudes(), Some(&mask), false) < 1e-10);
}

#[test]
fn free_kernel_rejects_potentials() {
    let grid = SpaceTimeGrid::new(-5.0, 5.0, 32, 0.0, 1.0, 1).unwrap();
    let lag = LagrangianSpec::harmonic(unit(), 1.0).unwrap();
    assert!(free_kernel_propagate(&packet(grid, 0.0, 1.0, 0.0), &lag).is_err());
}

#[test]
fn hard_walls_confine_to_a_single_cell() {
    let grid = SpaceTimeGrid::new(0.0, 8.0, 8, 0.0, 1.0, 5).unwrap();
    let mut values = vec![f64::INFINITY; 8];
    values[3] = 0.0;
    let lag = LagrangianSpec::barrier(
        unit(),
        vec![BarrierWindow {
            t_from: 0.0,
            t_to: 1.0,
            values,
        }],
        &grid,
    )
    .unwrap();
    let psi0 = WaveFunctionField::new(grid, 0, vec![c(1.0, 0.0); 8]).unwrap();
    for method in [Method::PathSum, Method::CrankNicolson] {
        let out = propagate(method, &psi0, &lag, &PropagateOptions::default()).unwrap();
        for (i, a) in out.amplitudes().iter().enumerate() {
            if i == 3 {
                assert!(a.norm() > 0.0);
            } else {
                assert_eq!(a.norm(), 0.0, "{method} leaked into cell {i}");
            }
        }
    }
}

#[test]
fn zero_field_stays_zero() {
    let grid = SpaceTimeGrid::new(-5.0, 5.0, 40, 0.0, 1.0, 10).unwrap();
    let zero = WaveFunctionField::zeros(grid, 0);
    let lag = LagrangianSpec::harmonic(unit(), 1.0).unwrap();
    for method in [Method::PathSum, Method::CrankNicolson] {
        let out = propagate(method, &zero, &lag, &PropagateOptions::default()).unwrap();
        assert_eq!(out.norm_squared(), 0.0);
    }
    assert!(imaginary_time_propagate(&zero, &lag).is_err());
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
    }
    assert!("split-operator".parse::<Method>().is_err());
}

#[test]
fn start_must_be_slice_zero() {
    let grid = SpaceTimeGrid::new(-5.0, 5.0, 40, 0.0, 1.0, 10).unwrap();
    let late = packet(grid, 0.0, 1.0, 0.0).with_time_index(3);
    assert!(pathsum_propagate(&late, &LagrangianSpec::free(unit())).is_err());
}
