use hydrowind::diagnostics::max_cross_correlation;
use hydrowind::fields::mean_divergence;
use hydrowind::linalg::integrate;
use hydrowind::noise::{init_noise, noise_covariance_report, step_noise, Eigenbasis, HbProfile, NoiseModel, NoiseSpec, Z0Spec};
use hydrowind::{BcCase, GridSpec, StokesOperator};

fn op(bc: BcCase, h: f64) -> StokesOperator {
    StokesOperator::build(&GridSpec::new(8, 8, 5, h, bc).unwrap()).unwrap()
}

#[test]
fn eigenbasis_is_orthonormal_and_diagonalizes() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let op = op(bc, 0.7);
        let basis = Eigenbasis::new(&op);
        let g = op.grid;
        // 49 active horizontal modes, 2 nz - 1 constrained dimensions each except k = 0
        assert_eq!(basis.len(), 48 * (2 * g.nz - 1) + 2 * g.nz, "{bc:?}");
        assert!(basis.modes().windows(2).all(|w| w[0].lambda <= w[1].lambda));
        for n in (0..basis.len()).step_by(7) {
            let e = basis.synthesize(&{
                let mut c = vec![0.0; basis.len()];
                c[n] = 1.0;
                c
            });
            assert!((e.l2_norm() - 1.0).abs() < 1e-12);
            assert!(e.hermitian_defect() < 1e-15);
            assert!(mean_divergence(&e) < 1e-12);
            let ae = op.apply_unchecked(&e);
            assert!((&ae - &(&e * basis.lambda(n))).l2_norm() < 1e-10 * basis.lambda(n).max(1.0), "{bc:?} {n}");
            let c = basis.project(&e);
            for (m, v) in c.iter().enumerate() {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "{bc:?} <e_{n}, e_{m}> = {v}");
            }
        }
    }
}

#[test]
fn trivial_cases() {
    let op = op(BcCase::NeumannNeumann, 1.0);
    let spec = NoiseSpec { n_f: 4, seed: 11, ..NoiseSpec::default() };
    let (model, mut s) = init_noise(&spec, &op).unwrap();
    assert!(s.zf.iter().all(|z| *z == 0.0));
    let mut s2 = model.start(0);
    for _ in 0..5 {
        let (zf, zb) = step_noise(&model, &mut s, 0.1).unwrap();
        step_noise(&model, &mut s2, 0.1).unwrap();
        assert_eq!(zb.max_abs(), 0.0);
        assert!(mean_divergence(&zf) < 1e-12 * zf.max_abs().max(1e-300) * 100.0);
    }
    assert_eq!(s, s2);
    assert!(model.step(&mut s, 0.0).is_err());
    let other = model.start(1);
    let mut o = other.clone();
    model.step(&mut o, 0.1).unwrap();
    let mut s3 = model.start(0);
    model.step(&mut s3, 0.1).unwrap();
    assert_ne!(o.zf, s3.zf);

    // zero amplitudes: pure semigroup decay of Z0
    let spec = NoiseSpec { n_f: 3, c_f: 0.0, n_b: 2, c_b: 0.0, z0: Z0Spec::Eigenmode { index: 9, amplitude: 0.4 }, ..NoiseSpec::default() };
    let (model, mut s) = init_noise(&spec, &op).unwrap();
    let z0 = model.fields(&s).0;
    for _ in 0..4 {
        model.step(&mut s, 0.05).unwrap();
    }
    let exact = op.semigroup(&z0, 0.2).unwrap();
    let (zf, zb) = model.fields(&s);
    assert!((&zf - &exact).l2_norm() < 1e-14);
    assert_eq!(zb.max_abs(), 0.0);

    // h_b = 0
    let spec = NoiseSpec { n_b: 3, hb: HbProfile { segments: vec![(0.0, 0.0)], spatial: vec![] }, ..NoiseSpec::default() };
    let (model, mut s) = init_noise(&spec, &op).unwrap();
    model.step(&mut s, 0.1).unwrap();
    assert!(s.zb.iter().all(|z| *z == 0.0));
}

#[test]
fn single_mode_stationary_variance() {
    // h = pi puts the first vertical mode at lambda = 1
    let op = op(BcCase::NeumannNeumann, std::f64::consts::PI);
    let spec = NoiseSpec { n_f: 1, c_f: 1.0, seed: 5, ..NoiseSpec::default() };
    let model = NoiseModel::new(&spec, &op).unwrap();
    let (n, sigma) = model.interior[0];
    assert!((model.basis.lambda(n) - 1.0).abs() < 1e-14 && sigma == 1.0);
    let m = 10_000;
    let samples: Vec<f64> = (0..m)
        .map(|p| {
            let mut s = model.start(p);
            for _ in 0..8 {
                model.step(&mut s, 1.0).unwrap();
            }
            s.zf[n]
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / m as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    let want = 0.5 * (1.0 - (-16.0f64).exp());
    let se = want * (2.0 / (m as f64 - 1.0)).sqrt();
    println!("variance {var:.5} vs {want:.5} (se {se:.2e}), mean {mean:.2e}");
    assert!((var - want).abs() < 3.0 * se);
    assert!(mean.abs() < 3.0 * (want / m as f64).sqrt());
}

#[test]
fn covariance_table_closed_forms() {
    let op = op(BcCase::NeumannNeumann, 1.0);
    let spec = NoiseSpec { n_f: 2, c_f: 0.3, n_b: 2, ..NoiseSpec::default() };
    let model = NoiseModel::new(&spec, &op).unwrap();
    let t = 0.37;
    let table = noise_covariance_report(&model, &[0.0, t, 1e3]);
    assert!(table.interior[0].iter().chain(&table.boundary[0]).all(|v| *v == 0.0));
    let quad: f64 = model
        .interior
        .iter()
        .map(|&(n, s)| {
            let l = model.basis.lambda(n);
            integrate(0.0, t, 4, 20, |u| s * s * (-2.0 * l * (t - u)).exp())
        })
        .sum();
    let rel = (table.interior_energy(1) - quad).abs() / quad;
    assert!(rel < 1e-12, "{rel}");
    for (i, &(n, s)) in model.interior.iter().enumerate() {
        let col = table.modes.iter().position(|&m| m == n).unwrap();
        let l = model.basis.lambda(n);
        assert!((table.interior[2][col] - s * s / (2.0 * l)).abs() < 1e-15, "{i}");
    }
}

#[test]
fn boundary_noise_statistics_and_independence() {
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        let op = op(bc, 1.0);
        let spec = NoiseSpec {
            n_f: 3,
            n_b: 3,
            c_b: 1.0,
            hb: HbProfile { segments: vec![(0.0, 1.0), (0.2, 0.5)], spatial: vec![] },
            seed: 17,
            ..NoiseSpec::default()
        };
        let model = NoiseModel::new(&spec, &op).unwrap();
        let bmodes = model.boundary_modes();
        assert!(!bmodes.is_empty());
        let m = 4000;
        let mut samples = Vec::with_capacity(m);
        for p in 0..m as u64 {
            let mut s = model.start(p);
            for _ in 0..8 {
                model.step(&mut s, 0.05).unwrap();
            }
            let mut row: Vec<f64> = model.interior_modes().iter().map(|&n| s.zf[n]).collect();
            row.extend(bmodes.iter().map(|&n| s.zb[n]));
            samples.push(row);
        }
        let (_, zb) = model.fields(&{
            let mut s = model.start(0);
            model.step(&mut s, 0.05).unwrap();
            s
        });
        assert!(mean_divergence(&zb) < 1e-12 * zb.max_abs() * 100.0);
        let table = model.covariance_table(&bmodes, &[0.4]);
        let nf = model.interior_modes().len();
        for (j, _) in bmodes.iter().enumerate() {
            let want = table.boundary[0][j];
            let col: Vec<f64> = samples.iter().map(|r| r[nf + j]).collect();
            let var = col.iter().map(|x| x * x).sum::<f64>() / m as f64;
            let z = (var - want) / (want * (2.0 / m as f64).sqrt());
            assert!(z.abs() < 4.0, "{bc:?} mode {j}: {var} vs {want}");
        }
        // interior noise and distinct boundary channels are uncorrelated; same-k boundary
        // loads are not, so only the interior block is checked against the bound
        let interior: Vec<Vec<f64>> = samples.iter().map(|r| r[..nf].to_vec()).collect();
        assert!(max_cross_correlation(&interior) < 4.0 / (m as f64).sqrt());
    }
}
