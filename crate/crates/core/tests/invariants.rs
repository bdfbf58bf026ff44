//! Cross-module invariants exercised end to end: the discrete Ito energy
//! balance over a large ensemble, norm-equivalence windows between the
//! graded coefficient norms and grid Sobolev norms, and Galerkin
//! consistency under mode doubling.

use std::sync::Arc;

use saltns_core::field::{as_norm, SobolevIndex, SpectralField, StokesBasis};
use saltns_core::noise::make_torus_xi;
use saltns_core::ops::{GalerkinSystem, TorusWorkspace};
use saltns_core::rng::{split_seed, CounterRng};
use saltns_core::sde::{
    run as sde_run, Form, InitialCondition, Integrator, NoiseMode, SdeConfig,
};
use saltns_core::torus::build_torus_basis;

#[test]
fn ito_l2_balance_holds_over_64_paths() {
    let master = 99;
    let basis = Arc::new(build_torus_basis(2, 4, 12).unwrap());
    let fam = make_torus_xi(&basis, 3, 3.0, 0.15, master, 2, 2).unwrap();
    let ws = TorusWorkspace::new(basis, &fam.members, &fam.stamp.to_string()).unwrap();
    let mut xs = Vec::new();
    for p in 0..64 {
        let seed = split_seed(master, "balance", p);
        let cfg = SdeConfig {
            truncation: ws.n_modes(),
            nu: 0.2,
            beta: 1,
            form: Form::Ito,
            integrator: Integrator::EulerMaruyama,
            noise: NoiseMode::Salt,
            enable_nonlinear: true,
            dt: 1e-3,
            horizon: 0.5,
            record_stride: 100,
            record_s_halves: vec![1],
            seed,
            blowup_factor: 1e6,
            track_balance: true,
        };
        let u0 = InitialCondition::RandomBand {
            amplitude: 1.0,
            decay: 1.0,
        }
        .build(ws.eigenvalues(), cfg.truncation, seed);
        let traj = sde_run(&ws, &cfg, &u0).unwrap();
        assert!(!traj.blew_up);
        let b = traj.balance.as_ref().unwrap();
        xs.push(traj.l2.last().unwrap().powi(2) - traj.l2[0].powi(2) + b.viscous - b.noise);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let sem = (var / n).sqrt();
    assert!(
        mean.abs() <= 3.0 * sem,
        "balance mean {mean:.3e} outside 3 sem {:.3e}",
        3.0 * sem
    );
}

#[test]
fn graded_norms_are_equivalent_to_grid_sobolev_norms_with_stable_window() {
    // torus: ratio of the graded norm to the spectral W^{m,2} norm stays in
    // a fixed window as the grid doubles
    for m in [1usize, 2] {
        let mut ratios = Vec::new();
        for grid in [24usize, 48] {
            let basis = build_torus_basis(2, 8, grid).unwrap();
            let ws = TorusWorkspace::new(Arc::new(build_torus_basis(2, 8, grid).unwrap()), &[], "none").unwrap();
            let rng = CounterRng::new(5, "norm-eq");
            for s in 0..10u64 {
                let coeffs: Vec<f64> = (0..basis.len()).map(|k| rng.gaussian(s, k as u64)).collect();
                let f = SpectralField::new(basis.id().clone(), coeffs).unwrap();
                let a = as_norm(&basis, &f, SobolevIndex::new(m as f64 / 2.0).unwrap()).unwrap();
                let spec = ws.to_spec(&SpectralField::new(
                    ws.basis().id().clone(),
                    f.coeffs().to_vec(),
                ).unwrap()).unwrap();
                let w = spec.sobolev_norm(m);
                ratios.push(a / w);
            }
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0_f64, f64::max);
        assert!(lo > 0.1 && hi < 10.0, "m={m}: window [{lo}, {hi}] not bounded");
        // window must not blow up between the two resolutions
        assert!(hi / lo < 5.0, "m={m}: window [{lo}, {hi}] too wide");
    }
    // disk: same check against the quadrature Sobolev norms, doubling the
    // quadrature
    for m in [1usize, 2] {
        let mut ratios = Vec::new();
        for mult in [1usize, 2] {
            let (dr, dt) = saltns_core::disk::default_quadrature(4, 4);
            let basis =
                saltns_core::disk::build_disk_basis(4, 4, Some(mult * dr), Some(mult * dt))
                    .unwrap();
            let rng = CounterRng::new(6, "norm-eq-disk");
            for s in 0..6u64 {
                let coeffs: Vec<f64> =
                    (0..basis.len()).map(|k| rng.gaussian(s, k as u64)).collect();
                let f = SpectralField::new(basis.id().clone(), coeffs).unwrap();
                let a = as_norm(&basis, &f, SobolevIndex::new(m as f64 / 2.0).unwrap()).unwrap();
                let w = basis.sobolev_norm(&f, m).unwrap();
                ratios.push(a / w);
            }
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0_f64, f64::max);
        assert!(lo > 0.05 && hi < 20.0, "disk m={m}: window [{lo}, {hi}]");
        assert!(hi / lo < 10.0, "disk m={m}: window [{lo}, {hi}] too wide");
    }
}

#[test]
fn galerkin_consistency_under_mode_doubling_is_cauchy() {
    // fixed smooth deterministic run; recorded A^{1/2} terminal norm forms
    // a Cauchy sequence as the truncation doubles
    let basis = Arc::new(build_torus_basis(2, 12, 32).unwrap());
    let ws = TorusWorkspace::new(basis.clone(), &[], "none").unwrap();
    let mut terminal = Vec::new();
    for n in [56usize, 112, 224] {
        let cfg = SdeConfig {
            truncation: n,
            nu: 0.02,
            beta: 1,
            form: Form::Ito,
            integrator: Integrator::ExponentialImex,
            noise: NoiseMode::Off,
            enable_nonlinear: true,
            dt: 2e-3,
            horizon: 0.5,
            record_stride: 50,
            record_s_halves: vec![1],
            seed: 3,
            blowup_factor: 1e6,
            track_balance: false,
        };
        let u0 = InitialCondition::Mixture(vec![(0, 0.9), (2, 0.5), (5, 0.3), (9, 0.2)])
            .build(ws.eigenvalues(), cfg.truncation, 3);
        let traj = sde_run(&ws, &cfg, &u0).unwrap();
        terminal.push(*traj.norms[0].last().unwrap());
    }
    let d1 = (terminal[1] - terminal[0]).abs();
    let d2 = (terminal[2] - terminal[1]).abs();
    println!("galerkin consistency: |n56-n112| = {d1:.3e}, |n112-n224| = {d2:.3e}");
    assert!(
        d2 < d1,
        "differences must decrease: {d1:.3e} then {d2:.3e} (terminal {terminal:?})"
    );
}

#[test]
fn deterministic_energy_law_matches_integrator_order() {
    // noise off: d||u||^2/dt = -2 nu ||u||^2_{A^{1/2}} within scheme order
    let basis = Arc::new(build_torus_basis(2, 6, 20).unwrap());
    let ws = TorusWorkspace::new(basis.clone(), &[], "none").unwrap();
    let dt = 1e-3;
    let cfg = SdeConfig {
        truncation: ws.n_modes(),
        nu: 0.3,
        beta: 1,
        form: Form::Ito,
        integrator: Integrator::EulerMaruyama,
        noise: NoiseMode::Off,
        enable_nonlinear: true,
        dt,
        horizon: 0.2,
        record_stride: 1,
        record_s_halves: vec![1],
        seed: 1,
        blowup_factor: 1e6,
        track_balance: true,
    };
    let u0 = InitialCondition::RandomBand {
        amplitude: 1.0,
        decay: 1.0,
    }
    .build(ws.eigenvalues(), cfg.truncation, 17);
    let traj = sde_run(&ws, &cfg, &u0).unwrap();
    let b = traj.balance.as_ref().unwrap();
    let lhs = traj.l2.last().unwrap().powi(2) - traj.l2[0].powi(2);
    let resid = (lhs + b.viscous).abs();
    // first-order scheme: O(dt) relative error budget
    assert!(
        resid <= 20.0 * dt * traj.l2[0].powi(2),
        "energy law residual {resid:.3e}"
    );
}
