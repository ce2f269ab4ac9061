use std::path::Path;
use std::process::Command;

use hydrowind::io::CsvTable;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hydrowind"))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("hydrowind-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_eigenmode_energy_decays_exponentially() {
    let dir = scratch("sim");
    let cfg = write(
        &dir,
        "[grid]\nnx = 8\nny = 8\nnz = 4\n[time]\nT = 0.2\ndt = 0.0025\nnonlinear = false\nv0 = \"eigenmode\"\nv0_index = 3\nv0_amplitude = 0.5\n[output]\nevery = 8\nsnapshots = true\n",
    );
    let out = dir.join("out");
    let st = bin().args(["simulate", "--quiet", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let t = CsvTable::read(&out.join("trajectory_p0000.csv")).unwrap();
    assert_eq!(t.meta("command"), Some("simulate"));
    assert_eq!(t.meta("path"), Some("0"));
    let times = t.floats("t").unwrap();
    let energy = t.floats("energy").unwrap();
    let op = hydrowind::StokesOperator::build(&hydrowind::GridSpec::new(8, 8, 4, 1.0, hydrowind::BcCase::NeumannNeumann).unwrap()).unwrap();
    let basis = hydrowind::noise::Eigenbasis::new(&op);
    let l = basis.lambda(3);
    for (ti, e) in times.iter().zip(&energy) {
        let exact = 0.125 * (-2.0 * l * ti).exp();
        assert!(((e - exact) / exact).abs() < 2e-3, "t = {ti}: {e} vs {exact}");
    }

    // norms from the snapshots equal the in-process H1 column
    let st = bin()
        .args(["norms", "--quiet", "--s", "1", "--config"])
        .arg(out.join("config.toml"))
        .arg("--out")
        .arg(dir.join("norms"))
        .arg("--input")
        .arg(out.join("snapshots/p0000"))
        .status()
        .unwrap();
    assert!(st.success());
    let n = CsvTable::read(&dir.join("norms/norms.csv")).unwrap();
    let h1 = t.floats("H1").unwrap();
    for (a, b) in n.floats("H1").unwrap().iter().zip(&h1) {
        assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn errors_are_machine_readable() {
    let dir = scratch("err");
    let cfg = write(&dir, "[time]\nmu = 0.1\nq = 2\n");
    let o = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.join("o")).output().unwrap();
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "config");
    assert!(v["message"].as_str().unwrap().contains("mu must exceed 1/q"));

    let o = bin().args(["spectrum", "--config"]).arg(dir.join("missing.toml")).output().unwrap();
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "io");
}

#[test]
fn report_commands() {
    let dir = scratch("rep");
    let cfg = write(&dir, "[grid]\nnx = 8\nny = 8\nnz = 4\nbc = \"DN\"\n");
    let out = dir.join("out");
    for cmd in [vec!["spectrum"], vec!["neumann-verify"], vec!["convergence", "--steps", "20,40,80"]] {
        let st = bin().args(&cmd).arg("--quiet").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(st.success(), "{cmd:?}");
    }
    let s = CsvTable::read(&out.join("spectrum.csv")).unwrap();
    assert!(s.floats("lambda").unwrap().iter().all(|l| *l > 0.0));
    let v = CsvTable::read(&out.join("neumann_verify.csv")).unwrap();
    assert_eq!(v.rows.len(), 36);
    let c = CsvTable::read(&out.join("convergence.csv")).unwrap();
    let orders: Vec<f64> = c.rows.iter().filter(|r| !r[3].is_empty()).map(|r| r[3].parse().unwrap()).collect();
    assert!(orders[1] > 0.95 && orders[3] > 1.9, "{orders:?}");
}

#[test]
fn ensemble_writes_statistics() {
    let dir = scratch("ens");
    let cfg = write(
        &dir,
        "[grid]\nnx = 8\nny = 8\nnz = 4\n[time]\nT = 0.1\ndt = 0.01\nnonlinear = false\n[noise]\nn_f = 3\nn_b = 2\nc_f = 0.5\nc_b = 0.5\nseed = 7\n[output]\nevery = 5\n",
    );
    let out = dir.join("out");
    let st = bin().args(["ensemble", "--quiet", "--paths", "64", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let s = CsvTable::read(&out.join("ensemble_summary.csv")).unwrap();
    assert_eq!(s.rows.len(), 3);
    let m = CsvTable::read(&out.join("ensemble_modes.csv")).unwrap();
    assert!(!m.rows.is_empty());
    assert_eq!(m.meta("seed"), Some("7"));
}
