//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and asserts it.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use hydrowind::diagnostics::{ito_report, time_regularity_probe, EigenSeries};
use hydrowind::fields::{
    forward_transform, helmholtz_project, mean_divergence, surface_gradient, vertical_velocity, Samples, SurfaceField,
};
use hydrowind::integrator::{
    convergence_study, ensemble_of, h1_refinement, reconstruct_pressure, InitialData, Scheme, Simulation, SimulationConfig,
};
use hydrowind::neumann::{kernel_identities, neumann_map, neumann_map_constructive, verify_against_oracle, CutoffPair};
use hydrowind::noise::{Eigenbasis, NoiseSpec};
use hydrowind::nonlinear::{bilinear_expand_check, energy_residual};
use hydrowind::vertical::VerticalBasis;
use hydrowind::{BcCase, BoundaryField, GridSpec, SpectralField, StokesOperator, C64};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REGIMES: [BcCase; 2] = [BcCase::NeumannNeumann, BcCase::DirichletNeumann];

fn verdict(n: u32, name: &str, pass: bool, detail: &str) {
    // written to the raw handle so the line survives output capture
    let line = format!("ACCEPTANCE {n:>2} {} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn raw_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> SpectralField {
    let s = Samples::from_fn(&grid, 2, |_, _, _, _| rng.random::<f64>() - 0.5);
    let mut f = forward_transform(&s, &grid).unwrap();
    f.truncate_nyquist();
    f
}

fn random_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> SpectralField {
    helmholtz_project(&raw_field(grid, rng))
}

fn random_boundary(grid: GridSpec, seed: u64, kmax: i64) -> BoundaryField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = BoundaryField::zeros(grid, 2);
    for kx in -kmax..=kmax {
        for ky in -kmax..=kmax {
            if kx == 0 && ky == 0 && grid.bc == BcCase::NeumannNeumann {
                continue;
            }
            for c in 0..2 {
                let amp = rng.random::<f64>() - 0.5;
                let dir = if c == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
                let m = BoundaryField::single_mode(grid, kx, ky, dir, amp, rng.random::<bool>());
                for (a, b) in g.comps.iter_mut().zip(&m.comps) {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += *y;
                    }
                }
            }
        }
    }
    g
}

/// Smooth field vanishing at the bottom: `phi(z) curl psi + chi(z) grad chi` with random low modes.
fn smooth_field(grid: GridSpec, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, [f64; 4])> = (-2i32..=2)
        .flat_map(|p| (0i32..=2).map(move |q| (p as f64, q as f64)))
        .filter(|&(p, q)| p != 0.0 || q != 0.0)
        .map(|(p, q)| (p, q, [0; 4].map(|_| rng.random::<f64>() - 0.5)))
        .collect();
    let h = grid.h;
    let tp = 2.0 * PI;
    let s = Samples::from_fn(&grid, 2, |c, x, y, z| {
        let zeta = (z + h) / h;
        let phi = (0.5 * PI * zeta).sin();
        let psi = (1.5 * PI * zeta).sin() - (0.5 * PI * zeta).sin() / 3.0;
        let mut out = 0.0;
        for (p, q, a) in &modes {
            let arg = tp * (p * x + q * y);
            let ds = tp * (-a[0] * arg.sin() + a[1] * arg.cos());
            let dc = tp * (-a[2] * arg.sin() + a[3] * arg.cos());
            out += if c == 0 { phi * q * ds + psi * p * dc } else { -phi * p * ds + psi * q * dc };
        }
        out
    });
    helmholtz_project(&forward_transform(&s, &grid).unwrap())
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[test]
fn c01_neumann_oracle_order() {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut finest = 0.0f64;
    for bc in REGIMES {
        let rows = verify_against_oracle(bc, 1.0, &[8, 16, 32]).unwrap();
        assert_eq!(rows.len(), 18);
        for r in rows.iter().filter(|r| r.nz == 32) {
            worst = worst.min(r.order.unwrap());
            finest = finest.max(r.rel_error);
        }
        // errors decrease at every refinement
        assert!(rows.chunks(3).all(|c| c[0].rel_error > c[1].rel_error && c[1].rel_error > c[2].rel_error));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "Neumann map vs FD oracle",
        worst >= 1.9 && secs < 180.0,
        &format!("lowest order {worst:.3} over 12 single modes (nz 16 -> 32), largest error at nz 32 {finest:.2e}, {secs:.1}s"),
    );
}

#[test]
fn c02_kernel_identities() {
    let mut worst = 0.0f64;
    for h in [0.5, 1.0, 2.0] {
        for r in kernel_identities(h, &[2.0 * PI, 4.0 * PI, 8.0 * PI]).unwrap() {
            worst = worst.max(r.nn_relative_error()).max(r.dn_relative_error());
        }
    }
    verdict(2, "kernel identities", worst <= 1e-10, &format!("largest relative error {worst:.2e} (tol 1e-10)"));
}

#[test]
fn c03_constructive_vs_direct() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for bc in REGIMES {
        let grid = GridSpec::new(8, 8, 64, 1.0, bc).unwrap();
        let op = StokesOperator::build(&grid).unwrap();
        let cut = CutoffPair::new(1.0).unwrap();
        for seed in [21, 22] {
            let g = random_boundary(grid, seed, 2);
            let direct = neumann_map(&g, &op).unwrap();
            let cons = neumann_map_constructive(&g, &op, &cut).unwrap();
            worst = worst.max((&direct - &cons.lambda).l2_norm() / direct.l2_norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        3,
        "constructive vs direct Lambda",
        worst <= 1e-8 && secs < 120.0,
        &format!("largest relative difference {worst:.2e} at nz = 64 (tol 1e-8), {secs:.1}s"),
    );
}

#[test]
fn c04_projection_suite() {
    let mut worst = [0.0f64; 4];
    for bc in REGIMES {
        let grid = GridSpec::new(12, 10, 8, 0.7, bc).unwrap();
        let op = StokesOperator::build(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for _ in 0..50 {
            let f = raw_field(grid, &mut rng);
            let p = helmholtz_project(&f);
            let pp = helmholtz_project(&p);
            worst[0] = worst[0].max((&pp - &p).l2_norm() / p.l2_norm());
            worst[1] = worst[1].max(mean_divergence(&p) / op.constraint_scale(&f));
            let w = vertical_velocity(&p).unwrap();
            let top = (0..grid.n_horizontal())
                .map(|hm| match w.basis {
                    // sine modes vanish at the surface; slot 0 is the ramp, equal to 1 there
                    VerticalBasis::Sine => w.data[hm * grid.nz].norm(),
                    _ => w.data[hm * grid.nz + grid.nz - 1].norm(),
                })
                .fold(0.0, f64::max);
            worst[2] = worst[2].max(top / (grid.h * op.constraint_scale(&p)));
            worst[3] = worst[3].max(p.hermitian_defect() / p.max_abs());
        }
    }
    let pass = worst.iter().all(|w| *w <= 1e-12);
    verdict(
        4,
        "projection and constraint suite",
        pass,
        &format!(
            "100 fields: P^2-P {:.1e}, div mean {:.1e}, w(0) {:.1e}, Hermitian {:.1e} (tol 1e-12)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}

#[test]
fn c05_bilinearity_and_energy() {
    let start = Instant::now();
    let mut bil = 0.0f64;
    for bc in REGIMES {
        let grid = GridSpec::new(12, 12, 6, 1.0, bc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        for _ in 0..25 {
            let v = random_field(grid, &mut rng);
            let z = random_field(grid, &mut rng);
            bil = bil.max(bilinear_expand_check(&v, &z).unwrap());
        }
    }
    let grid = GridSpec::new(16, 16, 8, 1.0, BcCase::NeumannNeumann).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(506);
    let nn = (0..5).map(|_| energy_residual(&random_field(grid, &mut rng)).unwrap()).fold(0.0, f64::max);
    let nzs = [32, 64, 128, 256];
    let dn: Vec<f64> = nzs
        .iter()
        .map(|&nz| energy_residual(&smooth_field(GridSpec::new(8, 8, nz, 1.0, BcCase::DirichletNeumann).unwrap(), 7)).unwrap())
        .collect();
    let orders: Vec<f64> = dn.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        5,
        "bilinearity and energy neutrality",
        bil <= 1e-12 && nn <= 1e-10 && min_order >= 1.9 && secs < 60.0,
        &format!(
            "expansion residual {bil:.1e} on 50 pairs, NN energy {nn:.1e}, DN energy orders {orders:.2?} (nz {nzs:?}), {secs:.1}s"
        ),
    );
}

#[test]
fn c06_ito_statistics() {
    let start = Instant::now();
    let grid = GridSpec::new(8, 8, 4, 1.0, BcCase::NeumannNeumann).unwrap();
    let mut cfg = SimulationConfig::new(grid, 0.5, 0.005);
    cfg.noise = NoiseSpec { n_f: 30, n_b: 4, c_f: 1.0, c_b: 1.0, seed: 2024, ..NoiseSpec::default() };
    cfg.nonlinear = false;
    cfg.output_every = 5;
    cfg.paths = 10_000;
    cfg.track_limit = 24;
    let sim = Simulation::new(cfg).unwrap();
    let rec = ensemble_of(&sim).unwrap();
    assert!(rec.failures.is_empty());
    let table = sim.noise.covariance_table(&sim.tracked_f, &rec.times);
    let btable = sim.noise.covariance_table(&sim.tracked_b, &rec.times);
    let f = ito_report(&rec.zf, &table.interior).unwrap();
    let b = ito_report(&rec.zb, &btable.boundary).unwrap();
    let entries = f.entries.len() + b.entries.len();
    let frac = |x: f64, y: f64| (x * f.entries.len() as f64 + y * b.entries.len() as f64) / entries as f64;
    let var = frac(f.variance_pass_fraction, b.variance_pass_fraction);
    let mean = frac(f.mean_pass_fraction, b.mean_pass_fraction);
    let zs: Vec<f64> = f.entries.iter().chain(&b.entries).filter(|e| e.predicted > 0.0).map(|e| e.z_variance).collect();
    let zbar = zs.iter().sum::<f64>() / zs.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        6,
        "stochastic convolution statistics",
        var >= 0.99 && mean >= 0.99 && secs < 600.0,
        &format!(
            "M = {}, {} modes x {} times: |z_var| <= 3 for {:.2}%, |z_mean| <= 3 for {:.2}%, mean z_var {zbar:+.3}, {secs:.0}s",
            rec.norms.count,
            sim.tracked_f.len() + sim.tracked_b.len(),
            rec.times.len(),
            100.0 * var,
            100.0 * mean
        ),
    );
}

#[test]
fn c07_time_regularity_trend() {
    let start = Instant::now();
    let grid = GridSpec::new(8, 8, 4, 1.0, BcCase::NeumannNeumann).unwrap();
    let mut cfg = SimulationConfig::new(grid, 0.25, 0.25 / 1024.0);
    cfg.noise = NoiseSpec { n_f: 12, n_b: 2, c_f: 1.0, c_b: 1.0, seed: 77, ..NoiseSpec::default() };
    cfg.nonlinear = false;
    let sim = Simulation::new(cfg).unwrap();
    let mut modes: Vec<usize> = sim.tracked_f.iter().chain(&sim.tracked_b).copied().collect();
    modes.sort_unstable();
    modes.dedup();
    let lambdas: Vec<f64> = modes.iter().map(|&n| sim.noise.basis.lambda(n)).collect();
    let strides = [8, 4, 2, 1];
    let paths = 8;
    let mut sq = [[0.0; 4]; 2];
    for p in 0..paths {
        let rec = sim.run_path(p);
        let coeffs = (0..rec.times.len())
            .map(|i| {
                modes
                    .iter()
                    .map(|n| {
                        let f = sim.tracked_f.iter().position(|m| m == n).map_or(0.0, |j| rec.zf_coeffs[i][j]);
                        let b = sim.tracked_b.iter().position(|m| m == n).map_or(0.0, |j| rec.zb_coeffs[i][j]);
                        f + b
                    })
                    .collect()
            })
            .collect();
        let series = EigenSeries { times: rec.times.clone(), lambdas: lambdas.clone(), coeffs };
        for (t, theta) in [0.25, 0.75].iter().enumerate() {
            for (l, &s) in strides.iter().enumerate() {
                sq[t][l] += time_regularity_probe(&series.subsample(s), *theta, None).unwrap().powi(2) / paths as f64;
            }
        }
    }
    let q = sq.map(|r| r.map(f64::sqrt));
    let ratios = q.map(|r| [r[1] / r[0], r[2] / r[1], r[3] / r[2]]);
    // bounded: successive growth shrinks and the total stays within a fixed factor;
    // unbounded: strictly increasing with non-decaying growth
    let bounded = ratios[0].windows(2).all(|w| w[1] - 1.0 < w[0] - 1.0) && q[0][3] / q[0][0] < 1.5;
    let increasing = ratios[1].iter().all(|r| *r > 1.0) && ratios[1][2] - 1.0 >= 0.5 * (ratios[1][0] - 1.0);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        7,
        "pathwise time-regularity trend",
        bounded && increasing && secs < 600.0,
        &format!(
            "theta 0.25: {:.4?} (ratios {:.3?}); theta 0.75: {:.4?} (ratios {:.3?}), {secs:.0}s",
            q[0], ratios[0], q[1], ratios[1]
        ),
    );
}

#[test]
fn c08_deterministic_convergence() {
    let start = Instant::now();
    let mut orders = Vec::new();
    let mut changes = Vec::new();
    for bc in REGIMES {
        let grid = GridSpec::new(8, 8, 4, 1.0, bc).unwrap();
        let op = StokesOperator::build(&grid).unwrap();
        for scheme in [Scheme::ImexEuler, Scheme::ImexCn] {
            let rows = convergence_study(&op, scheme, 7, &[20, 40, 80, 160]).unwrap();
            orders.push((scheme, rows.last().unwrap().order.unwrap()));
        }
        let mut cfg = SimulationConfig::new(grid, 0.5, 0.01);
        cfg.v0 = InitialData::Random { seed: 8, kmax: 2, h1: 2.0 };
        cfg.output_every = 5;
        let (_, ch) = h1_refinement(&cfg, 4).unwrap();
        changes.push(*ch.last().unwrap());
    }
    let ok_orders = orders.iter().all(|(s, o)| match s {
        Scheme::ImexEuler => *o >= 0.95,
        Scheme::ImexCn => *o >= 1.9,
    });
    let ok_h1 = changes.iter().all(|c| *c <= 0.05);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        8,
        "deterministic convergence",
        ok_orders && ok_h1 && secs < 900.0,
        &format!(
            "orders NN euler/cn {:.3}/{:.3}, DN euler/cn {:.3}/{:.3}; H1 history change between finest levels NN {:.2e}, DN {:.2e}, {secs:.0}s",
            orders[0].1, orders[1].1, orders[2].1, orders[3].1, changes[0], changes[1]
        ),
    );
}

#[test]
fn c09_continuous_dependence() {
    let start = Instant::now();
    let mut slopes = Vec::new();
    for bc in REGIMES {
        let grid = GridSpec::new(8, 8, 4, 1.0, bc).unwrap();
        let mut cfg = SimulationConfig::new(grid, 0.2, 0.005);
        cfg.noise = NoiseSpec { n_f: 6, n_b: 3, c_f: 0.5, c_b: 0.5, seed: 9, ..NoiseSpec::default() };
        cfg.v0 = InitialData::Random { seed: 4, kmax: 2, h1: 2.0 };
        let sim = Simulation::new(cfg).unwrap();
        let base = sim.run_path(3).final_v.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dir = random_field(grid, &mut rng);
        let dir = dir.scaled(1.0 / dir.l2_norm());
        let eps = [1e-3, 1e-4, 1e-5];
        let diffs: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let v0 = &sim.v0 + &dir.scaled(e);
                let out = sim.run_path_from(3, &v0).final_v.unwrap();
                (&out - &base).l2_norm()
            })
            .collect();
        slopes.push(slope(&eps, &diffs));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        9,
        "continuous dependence",
        slopes.iter().all(|s| (s - 1.0).abs() <= 0.1) && secs < 600.0,
        &format!("log-log slopes NN {:.4}, DN {:.4} over |delta| in 1e-3..1e-5 with a frozen path, {secs:.1}s", slopes[0], slopes[1]),
    );
}

#[test]
fn c10_pressure_reconstruction() {
    let mut worst = 0.0f64;
    let mut mean_free = true;
    for bc in REGIMES {
        let grid = GridSpec::new(8, 8, 6, 1.0, bc).unwrap();
        let op = StokesOperator::build(&grid).unwrap();
        let basis = Eigenbasis::new(&op);
        let alpha = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1010);
        for n in (0..basis.len()).step_by(basis.len() / 12) {
            let mut e = SpectralField::zeros(grid);
            basis.add_mode(&mut e, n, 1.0);
            let mut q = SurfaceField::zeros(grid, 1);
            for (ix, iy) in [(1, 2), (3, 1), (0, 1)] {
                let c = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                let (jx, jy) = grid.mirror(ix, iy);
                q.comps[0][grid.hidx(ix, iy)] = c;
                q.comps[0][grid.hidx(jx, jy)] = c.conj();
            }
            let mut b = &e * (alpha + basis.lambda(n));
            b += &surface_gradient(&q, b.basis);
            let (v, p) = op.stokes_solve(&b, alpha).unwrap();
            let forcing = &b - &(&v * alpha);
            let rec = reconstruct_pressure(&op, &v, &v.zeros_like(), Some(&forcing), false).unwrap();
            let err = (0..grid.n_horizontal()).map(|i| (rec.comps[0][i] - p.comps[0][i]).norm()).fold(0.0, f64::max);
            worst = worst.max(err / p.max_abs());
            mean_free &= rec.comps[0][0] == C64::new(0.0, 0.0);
        }
    }
    verdict(
        10,
        "pressure reconstruction",
        worst <= 1e-10 && mean_free,
        &format!("largest relative pressure difference {worst:.1e} (tol 1e-10), mean exactly zero: {mean_free}"),
    );
}
