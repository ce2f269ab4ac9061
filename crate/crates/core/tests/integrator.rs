use std::sync::Arc;

use hydrowind::fields::{surface_gradient, helmholtz_project, mean_divergence, SurfaceField};
use hydrowind::integrator::{
    imex_step, reconstruct_pressure, run_ensemble, InitialData, RunStatus, Scheme, Simulation, SimulationConfig, Stepper,
};
use hydrowind::noise::{Eigenbasis, NoiseSpec};
use hydrowind::{BcCase, GridSpec, SpectralField, StokesOperator, C64};

fn grid(bc: BcCase) -> GridSpec {
    GridSpec::new(8, 8, 4, 1.0, bc).unwrap()
}

fn mode(op: &StokesOperator, n: usize) -> (SpectralField, f64) {
    let b = Eigenbasis::new(op);
    let mut f = SpectralField::zeros(op.grid);
    b.add_mode(&mut f, n, 1.0);
    (f, b.lambda(n))
}

#[test]
fn single_steps() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let op = StokesOperator::build(&grid(bc)).unwrap();
        let zero = SpectralField::zeros(op.grid);
        assert_eq!(imex_step(&op, &zero, &zero, 0.1, Scheme::ImexCn).unwrap().max_abs(), 0.0);
        let (e, l) = mode(&op, 5);
        let mut st = Stepper::new(&op, Scheme::ImexEuler, false);
        let next = st.step(&e, &zero, 0.01, None).unwrap();
        assert!((&next - &(&e * (1.0 / (1.0 + 0.01 * l)))).l2_norm() < 1e-13);
        assert!(st.step(&e, &zero, -1.0, None).is_err());
    }
}

/// Error at `T = 1` of the manufactured solution `(1 + sin 2t) e_n`.
fn manufactured_error(op: &StokesOperator, scheme: Scheme, steps: usize) -> f64 {
    let (e, l) = mode(op, 7);
    let phi = |t: f64| 1.0 + (2.0 * t).sin();
    let src = |t: f64| &e * (2.0 * (2.0 * t).cos() + l * phi(t));
    let dt = 1.0 / steps as f64;
    let zero = SpectralField::zeros(op.grid);
    let mut st = Stepper::new(op, scheme, false);
    let mut v = &e * phi(0.0);
    for k in 0..steps {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        v = st.step(&v, &zero, dt, Some((&src(t0), &src(t1)))).unwrap();
    }
    (&v - &(&e * phi(1.0))).l2_norm()
}

#[test]
fn manufactured_orders() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let op = StokesOperator::build(&grid(bc)).unwrap();
        for (scheme, want) in [(Scheme::ImexEuler, 0.95), (Scheme::ImexCn, 1.9)] {
            let errs: Vec<f64> = [20, 40, 80, 160].iter().map(|&n| manufactured_error(&op, scheme, n)).collect();
            let order = (errs[2] / errs[3]).log2();
            println!("{bc:?} {scheme:?} {errs:?} order {order:.3}");
            assert!(order >= want, "{bc:?} {scheme:?} {errs:?}");
        }
    }
}

#[test]
fn noise_off_runs() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let mut cfg = SimulationConfig::new(grid(bc), 0.5, 0.005);
        cfg.v0 = InitialData::Eigenmode { index: 3, amplitude: 0.2 };
        cfg.nonlinear = false;
        let sim = Simulation::new(cfg.clone()).unwrap();
        let l = sim.noise.basis.lambda(3);
        let rec = sim.run_path(0);
        assert_eq!(rec.status, RunStatus::Completed);
        let last = rec.energy.len() - 1;
        let exact = 0.5 * 0.04 * (-2.0 * l * 0.5).exp();
        assert!(((rec.energy[last] - exact) / exact).abs() < 2e-2, "{bc:?} {} {exact}", rec.energy[last]);
        assert!(rec.energy.windows(2).all(|w| w[1] < w[0]));

        // nonlinear, energy still decays
        cfg.nonlinear = true;
        cfg.v0 = InitialData::Random { seed: 3, kmax: 2, h1: 1.0 };
        let rec = Simulation::new(cfg.clone()).unwrap().run_path(0);
        assert_eq!(rec.status, RunStatus::Completed);
        assert!(rec.energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{bc:?}");
        assert!(rec.divres.iter().all(|d| *d < 1e-11));

        cfg.v0 = InitialData::Zero;
        let rec = Simulation::new(cfg).unwrap().run_path(0);
        assert!(rec.l2.iter().all(|x| *x == 0.0));
    }
}

#[test]
fn noisy_paths_are_deterministic_and_constrained() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let mut cfg = SimulationConfig::new(grid(bc), 0.2, 0.01);
        cfg.noise = NoiseSpec { n_f: 6, n_b: 4, c_f: 0.5, c_b: 0.5, seed: 99, ..NoiseSpec::default() };
        cfg.v0 = InitialData::Random { seed: 1, kmax: 2, h1: 0.5 };
        cfg.keep_pressure = true;
        let sim = Simulation::new(cfg).unwrap();
        let a = sim.run_path(2);
        let b = sim.run_path(2);
        assert_eq!(a, b);
        assert_ne!(a.l2, sim.run_path(3).l2);
        assert!(a.divres.iter().all(|d| *d < 1e-11), "{bc:?} {:?}", a.divres);
        assert!(a.pressure.iter().all(|(_, p)| p.comps[0][0] == C64::new(0.0, 0.0)));
    }
}

#[test]
fn pressure_matches_stokes_solve() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let op = StokesOperator::build(&grid(bc)).unwrap();
        let alpha = 3.0;
        for n in [4, 11, 30] {
            let (e, l) = mode(&op, n);
            // (alpha + lambda) e plus a surface-pressure gradient
            let mut q = SurfaceField::zeros(op.grid, 1);
            q.comps[0][op.grid.hidx(1, 2)] = C64::new(0.3, -0.1);
            q.comps[0][op.grid.hidx(7, 6)] = C64::new(0.3, 0.1);
            let mut b = &e * (alpha + l);
            let gq = surface_gradient(&q, b.basis);
            b += &gq;
            let (v, p) = op.stokes_solve(&b, alpha).unwrap();
            let f = &b - &(&v * alpha);
            let rec = reconstruct_pressure(&op, &v, &SpectralField::zeros(op.grid), Some(&f), false).unwrap();
            let scale = p.max_abs().max(1e-300);
            let err = (0..op.grid.n_horizontal()).map(|i| (rec.comps[0][i] - p.comps[0][i]).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10 * scale.max(1.0), "{bc:?} {n} {err}");
            assert_eq!(rec.comps[0][0], C64::new(0.0, 0.0));
            let g = surface_gradient(&rec, b.basis);
            assert!(helmholtz_project(&g).max_abs() < 1e-12 * g.max_abs().max(1.0));
            assert!(mean_divergence(&v) < 1e-12 * v.max_abs() * 100.0);
        }
    }
}

#[test]
fn ensembles() {
    let mut cfg = SimulationConfig::new(grid(BcCase::NeumannNeumann), 0.1, 0.01);
    cfg.noise = NoiseSpec { n_f: 4, n_b: 2, seed: 4, ..NoiseSpec::default() };
    cfg.output_every = 5;
    cfg.nonlinear = false;
    let rec = run_ensemble(&cfg).unwrap();
    assert_eq!(rec.norms.count, 1);
    assert!((0..rec.times.len()).all(|i| rec.zf.variance(i, 0) == 0.0));
    let sim = Simulation::new(cfg.clone()).unwrap();
    let single = sim.run_path(0);
    assert_eq!(rec.norms.mean(2, 0), single.l2[2]);

    cfg.paths = 6;
    cfg.nonlinear = true;
    cfg.guard = 1e-9;
    cfg.v0 = InitialData::Random { seed: 2, kmax: 1, h1: 1.0 };
    let rec = run_ensemble(&cfg).unwrap();
    assert_eq!(rec.failures.len(), 6);
    assert_eq!(rec.norms.count, 0);
    let _ = Arc::new(0);
}
