use std::f64::consts::PI;

use hydrowind::fields::fft::forward2;
use hydrowind::fields::Samples;
use hydrowind::oracle::{direct_dft, fd_mode_solve, fd_stationary_solve, DenseGrid};
use hydrowind::{BcCase, Error, C64};

#[test]
fn direct_dft_matches_fft() {
    let (nx, ny) = (12, 10);
    let data: Vec<f64> = (0..nx * ny).map(|i| ((i * 37 % 17) as f64 - 8.0) / 3.0 + (i as f64 * 0.3).sin()).collect();
    let d = direct_dft(&data, nx, ny).unwrap();
    let mut f: Vec<C64> = data.iter().map(|x| C64::new(*x, 0.0)).collect();
    forward2(&mut f, nx, ny);
    let scale = d.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let err = d.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-12 * scale, "{err}");
    assert!(matches!(direct_dft(&data, 200, 1), Err(Error::SizeGuard(_)) | Err(Error::Shape(_))));
}

#[test]
fn zero_stress_gives_zero() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let dense = DenseGrid::new(8, 8, 8, 1.0, bc).unwrap();
        let g = Samples::zeros(8, 8, 1, 2);
        let sol = fd_stationary_solve(&g, &dense).unwrap();
        assert!(sol.v.iter().flatten().all(|c| c.norm() == 0.0));
    }
}

#[test]
fn nn_rejects_mean_stress() {
    let dense = DenseGrid::new(8, 8, 8, 1.0, BcCase::NeumannNeumann).unwrap();
    let mut g = Samples::zeros(8, 8, 1, 2);
    g.data[..64].iter_mut().for_each(|x| *x = 0.3);
    assert!(matches!(fd_stationary_solve(&g, &dense), Err(Error::MeanCompatibility(_))));
    // DN accepts it: linear profile
    let dense = DenseGrid::new(8, 8, 8, 1.0, BcCase::DirichletNeumann).unwrap();
    let sol = fd_stationary_solve(&g, &dense).unwrap();
    let v = sol.mode(0, 0, 0);
    for (z, val) in sol.z.iter().zip(v) {
        assert!((val.re - 0.3 * (z + 1.0)).abs() < 1e-12);
    }
    assert!(DenseGrid::new(64, 8, 8, 1.0, BcCase::DirichletNeumann).is_err());
}

/// Manufactured profiles with surface stress, pressure and forcing; second-order convergence.
#[test]
fn manufactured_second_order() {
    let h = 0.8;
    let k = (2.0 * PI, 0.0);
    let k2 = k.0 * k.0;
    let p0 = C64::new(0.4, -0.2);
    type Profile = fn(f64, f64) -> (f64, f64);
    // (value, second derivative) of the x and y profiles per regime
    let nn: [Profile; 2] = [
        |z, h| {
            let m = PI / h;
            ((m * (z + h)).cos(), -m * m * (m * (z + h)).cos())
        },
        |z, h| {
            let m = PI / (2.0 * h);
            ((m * (z + h)).cos(), -m * m * (m * (z + h)).cos())
        },
    ];
    let dn: [Profile; 2] = [
        |z, h| {
            let m = 2.0 * PI / h;
            ((m * (z + h)).sin(), -m * m * (m * (z + h)).sin())
        },
        |z, h| {
            let m = PI / (2.0 * h);
            ((m * (z + h)).sin(), -m * m * (m * (z + h)).sin())
        },
    ];
    for (bc, prof, g) in [
        (BcCase::NeumannNeumann, nn, [0.0, -PI / (2.0 * h)]),
        (BcCase::DirichletNeumann, dn, [2.0 * PI / h, 0.0]),
    ] {
        let mut errs = Vec::new();
        for nz in [12, 24, 48] {
            let dense = DenseGrid::new(8, 8, nz, h, bc).unwrap();
            let z = dense.z_nodes();
            let f: Vec<[C64; 2]> = z
                .iter()
                .map(|&z| {
                    let (vx, dxx) = prof[0](z, h);
                    let (vy, dyy) = prof[1](z, h);
                    [C64::new(-dxx + k2 * vx, 0.0) + C64::new(0.0, k.0) * p0, C64::new(-dyy + k2 * vy, 0.0)]
                })
                .collect();
            let sol = fd_mode_solve(k, [C64::new(g[0], 0.0), C64::new(g[1], 0.0)], Some(&f), &dense).unwrap();
            let mut e: f64 = 0.0;
            for (j, &zj) in z.iter().enumerate() {
                e = e.max((sol.v[0][j] - prof[0](zj, h).0).norm()).max((sol.v[1][j] - prof[1](zj, h).0).norm());
            }
            errs.push(e);
        }
        let order = (errs[1] / errs[2]).log2();
        assert!(order >= 1.9, "{bc:?} {errs:?}");
    }
}
