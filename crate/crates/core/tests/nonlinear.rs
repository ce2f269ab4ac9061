use hydrowind::fields::{forward_transform, helmholtz_project, mean_divergence, Samples};
use hydrowind::nonlinear::{advect, anisotropic_estimate_monitor, bilinear_expand_check, energy_residual};
use hydrowind::oracle::dense_nonlinearity;
use hydrowind::{BcCase, GridSpec, SpectralField, StokesOperator};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(grid: GridSpec, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = Samples::from_fn(&grid, 2, |_, _, _, _| rng.random::<f64>() - 0.5);
    let mut f = forward_transform(&s, &grid).unwrap();
    f.truncate_nyquist();
    helmholtz_project(&f)
}

/// Smooth field vanishing at the bottom with zero-mean divergent part:
/// `phi(z) curl psi + chi_profile(z) grad chi` for random low-mode `psi`, `chi`.
fn smooth_field(grid: GridSpec, seed: u64) -> SpectralField {
    use std::f64::consts::PI;
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
            // d/dx and d/dy of a0 cos + a1 sin (stream) and a2 cos + a3 sin (potential)
            let ds = tp * (-a[0] * arg.sin() + a[1] * arg.cos());
            let dc = tp * (-a[2] * arg.sin() + a[3] * arg.cos());
            out += if c == 0 { phi * q * ds + psi * p * dc } else { -phi * p * ds + psi * q * dc };
        }
        out
    });
    helmholtz_project(&forward_transform(&s, &grid).unwrap())
}

#[test]
fn matches_dense_oracle() {
    let grid = GridSpec::new(16, 16, 8, 1.0, BcCase::NeumannNeumann).unwrap();
    let v = random_field(grid, 1);
    let v2 = random_field(grid, 2);
    let fast = advect(&v, &v2).unwrap();
    let mut dense = dense_nonlinearity(&v, &v2).unwrap();
    dense.truncate_nyquist();
    let rel = (&fast - &dense).l2_norm() / dense.l2_norm();
    println!("fast vs dense: {rel:.3e}");
    assert!(rel < 1e-11, "{rel}");
}

#[test]
fn algebraic_properties() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let grid = GridSpec::new(12, 10, 6, 0.8, bc).unwrap();
        let v = random_field(grid, 3);
        let v2 = random_field(grid, 4);
        let f = advect(&v, &v2).unwrap();
        let g = advect(&(&v * 2.0), &(&v2 * -3.0)).unwrap();
        assert!((&g - &(&f * -6.0)).l2_norm() < 1e-13 * g.l2_norm());
        assert!(mean_divergence(&f) < 1e-12 * f.max_abs() * 100.0);
        assert!(f.hermitian_defect() < 1e-13 * f.max_abs());
        assert_eq!(bilinear_expand_check(&v, &v.zeros_like()).unwrap(), 0.0);
        assert!(bilinear_expand_check(&v, &v2).unwrap() < 1e-12);
        assert!(bilinear_expand_check(&v, &(-&v)).unwrap() < 1e-12);
        // constant second argument
        let mut c = v.zeros_like();
        c.comps[0][0] = 1.0.into();
        if bc == BcCase::NeumannNeumann {
            assert!(advect(&v, &c).unwrap().max_abs() < 1e-13);
        }
    }
}

#[test]
fn energy_neutrality() {
    let grid = GridSpec::new(16, 16, 8, 1.0, BcCase::NeumannNeumann).unwrap();
    for seed in 0..5 {
        let r = energy_residual(&random_field(grid, 10 + seed)).unwrap();
        assert!(r < 1e-10, "NN {r}");
    }
    let mut res = Vec::new();
    for nz in [32, 64, 128, 256, 512] {
        let grid = GridSpec::new(8, 8, nz, 1.0, BcCase::DirichletNeumann).unwrap();
        res.push(energy_residual(&smooth_field(grid, 7)).unwrap());
    }
    println!("DN energy residuals {res:?}");
    for w in res.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.9, "{res:?}");
    }
    assert!(*res.last().unwrap() < 1e-6, "{res:?}");
}

#[test]
fn anisotropic_monitor() {
    let grid = GridSpec::new(12, 12, 6, 1.0, BcCase::NeumannNeumann).unwrap();
    let op = StokesOperator::build(&grid).unwrap();
    let v = random_field(grid, 5);
    let mut c = v.zeros_like();
    c.comps[1][0] = 2.0.into();
    let r = anisotropic_estimate_monitor(&v, &c, &op).unwrap().unwrap();
    assert_eq!(r.primary, 0.0);
    let r = anisotropic_estimate_monitor(&v, &random_field(grid, 6), &op).unwrap().unwrap();
    assert!(r.primary.is_finite() && r.primary > 0.0 && r.symmetric > 0.0);
    assert!(anisotropic_estimate_monitor(&v, &v.zeros_like(), &op).unwrap().is_none());
}
