use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use hydrowind::diagnostics::{sobolev_norm, time_regularity_probe, weighted_time_norm, EigenSeries, ModeMoments};
use hydrowind::fields::{forward_transform, inverse_transform, surface_samples};
use hydrowind::integrator::{convergence_study, ensemble_of, Scheme, Simulation, TrajectoryRecord};
use hydrowind::io::{load_config, num, write_snapshot, CsvTable, Provenance, RunConfig};
use hydrowind::noise::Eigenbasis;
use hydrowind::{BcCase, Error, Result, StokesOperator};

#[derive(Parser)]
#[command(name = "hydrowind", version, about = "Stochastic hydrostatic primitive equations on a periodic layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the number of paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate each path and write trajectory tables (and snapshots if enabled).
    Simulate,
    /// Run an ensemble and compare mode statistics with the closed-form OU variances.
    Ensemble,
    /// Compare the analytic Neumann lift with the dense finite-difference oracle.
    NeumannVerify {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        nz: Vec<usize>,
    },
    /// Manufactured-solution time convergence of both schemes.
    Convergence {
        #[arg(long, value_delimiter = ',', default_value = "20,40,80,160")]
        steps: Vec<usize>,
        /// Sorted eigenmode carrying the manufactured solution.
        #[arg(long, default_value_t = 7)]
        mode: usize,
    },
    /// Sobolev and time-weighted norms of a saved snapshot series.
    Norms {
        /// Directory holding `index.csv` and the snapshots it lists.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        s: Vec<f64>,
        /// Also report the time-regularity quotient at this exponent.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Eigenvalue table of the Stokes operator.
    Spectrum,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::NeumannVerify { .. } => "neumann-verify",
            Command::Convergence { .. } => "convergence",
            Command::Norms { .. } => "norms",
            Command::Spectrum => "spectrum",
        }
    }
}

/// Resolved run context shared by all subcommands.
struct Ctx {
    run: RunConfig,
    base: PathBuf,
    prov: Provenance,
    quiet: bool,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let (mut run, base) = match &cli.config {
            Some(p) => (load_config(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
            None => (RunConfig::with_defaults(), PathBuf::from(".")),
        };
        if let Some(s) = cli.seed {
            run.sim.noise.seed = s;
        }
        if let Some(m) = cli.paths {
            run.sim.paths = m;
        }
        if let Some(o) = &cli.out {
            run.out_dir = o.clone();
        }
        run.sim.validate()?;
        let text = run.to_toml()?;
        std::fs::create_dir_all(&run.out_dir)?;
        std::fs::write(run.out_dir.join("config.toml"), &text)?;
        let prov = Provenance::new(cli.command.name(), &text, run.sim.noise.seed);
        Ok(Ctx { run, base, prov, quiet: cli.quiet })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.run.out_dir.join(name)
    }

    fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return report(&e);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> ExitCode {
    let msg = serde_json::json!({ "error": e.category(), "message": e.to_string() });
    eprintln!("{msg}");
    ExitCode::from(2)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HYDROWIND_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("HYDROWIND_THREADS must be a positive integer (got {v})")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx::new(cli)?;
    match &cli.command {
        Command::Simulate => simulate(&ctx),
        Command::Ensemble => ensemble(&ctx),
        Command::NeumannVerify { nz } => neumann_verify(&ctx, nz),
        Command::Convergence { steps, mode } => convergence(&ctx, steps, *mode),
        Command::Norms { input, s, theta } => norms(&ctx, input, s, *theta),
        Command::Spectrum => spectrum(&ctx),
    }
}

fn simulate(ctx: &Ctx) -> Result<()> {
    let sim = Simulation::new(ctx.run.simulation(&ctx.base)?)?;
    for w in &sim.noise.warnings {
        eprintln!("warning: {w}");
    }
    let results: Vec<Result<String>> =
        (0..sim.config.paths as u64).into_par_iter().map(|p| write_path(ctx, &sim, &sim.run_path(p))).collect();
    for r in results {
        ctx.say(&r?);
    }
    Ok(())
}

fn write_path(ctx: &Ctx, sim: &Simulation, rec: &TrajectoryRecord) -> Result<String> {
    let prov = ctx.prov.for_path(rec.path);
    let mut t = CsvTable::new(&TrajectoryRecord::COLUMNS);
    for i in 0..rec.times.len() {
        let mut row: Vec<String> = rec.row(i).iter().map(|x| num(*x)).collect();
        row.push(rec.status.label().into());
        t.push(row);
    }
    t.write(&ctx.out(&format!("trajectory_p{:04}.csv", rec.path)), &prov)?;

    let mut cols = vec!["t".to_string()];
    cols.extend(sim.tracked_f.iter().map(|n| format!("zf_{n}")));
    cols.extend(sim.tracked_b.iter().map(|n| format!("zb_{n}")));
    let mut modes = CsvTable { columns: cols, ..Default::default() };
    for (i, &ti) in rec.times.iter().enumerate() {
        let mut row = vec![num(ti)];
        row.extend(rec.zf_coeffs[i].iter().chain(&rec.zb_coeffs[i]).map(|x| num(*x)));
        modes.push(row);
    }
    modes.write(&ctx.out(&format!("modes_p{:04}.csv", rec.path)), &prov)?;

    if !rec.snapshots.is_empty() || !rec.pressure.is_empty() {
        let dir = ctx.out(&format!("snapshots/p{:04}", rec.path));
        std::fs::create_dir_all(&dir)?;
        let mut index = CsvTable::new(&["i", "t", "file"]);
        for (i, (ti, f)) in rec.snapshots.iter().enumerate() {
            let name = format!("v_{i:06}.bin");
            write_snapshot(&dir.join(&name), &f.grid, &inverse_transform(f))?;
            index.push(vec![i.to_string(), num(*ti), name]);
        }
        let mut pindex = CsvTable::new(&["i", "t", "file"]);
        for (i, (ti, p)) in rec.pressure.iter().enumerate() {
            let name = format!("p_{i:06}.bin");
            write_snapshot(&dir.join(&name), &p.grid, &surface_samples(p))?;
            pindex.push(vec![i.to_string(), num(*ti), name]);
        }
        if !index.rows.is_empty() {
            index.write(&dir.join("index.csv"), &prov)?;
        }
        if !pindex.rows.is_empty() {
            pindex.write(&dir.join("pressure_index.csv"), &prov)?;
        }
    }
    let last = rec.times.len().saturating_sub(1);
    Ok(format!(
        "path {}: {} at t = {}, energy {:.6e}",
        rec.path,
        rec.status.label(),
        rec.times.get(last).copied().unwrap_or(0.0),
        rec.energy.get(last).copied().unwrap_or(0.0)
    ))
}

fn ensemble(ctx: &Ctx) -> Result<()> {
    let sim = Simulation::new(ctx.run.simulation(&ctx.base)?)?;
    let rec = ensemble_of(&sim)?;
    let n = rec.norms.count;

    let mut cols = vec!["t".to_string()];
    for c in hydrowind::integrator::EnsembleRecord::NORM_COLUMNS {
        cols.push(format!("{c}_mean"));
        cols.push(format!("{c}_var"));
    }
    let mut summary = CsvTable { columns: cols, ..Default::default() };
    for (i, &t) in rec.times.iter().enumerate() {
        let mut row = vec![num(t)];
        for k in 0..3 {
            row.push(num(rec.norms.mean(i, k)));
            row.push(num(rec.norms.variance(i, k)));
        }
        summary.push(row);
    }
    summary.write(&ctx.out("ensemble_summary.csv"), &ctx.prov)?;

    let table = sim.noise.covariance_table(&all_modes(&rec.zf, &rec.zb), &rec.times);
    let mut modes = CsvTable::new(&["kind", "mode", "lambda", "t", "mc_mean", "mc_var", "predicted_var", "z_var", "z_mean"]);
    let mut pass = (0usize, 0usize);
    for (kind, m) in [("zf", &rec.zf), ("zb", &rec.zb)] {
        let predicted: Vec<Vec<f64>> = (0..rec.times.len())
            .map(|i| {
                m.modes
                    .iter()
                    .map(|mode| {
                        let j = table.modes.iter().position(|x| x == mode).expect("tabulated");
                        if kind == "zf" {
                            table.interior[i][j]
                        } else {
                            table.boundary[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        if m.modes.is_empty() || n == 0 {
            continue;
        }
        let report = hydrowind::diagnostics::ito_report(m, &predicted)?;
        if let Some(w) = &report.warning {
            eprintln!("warning: {w}");
        }
        for e in &report.entries {
            pass.0 += usize::from(e.z_variance.abs() <= 3.0);
            pass.1 += 1;
            modes.push(vec![
                kind.into(),
                e.mode.to_string(),
                num(sim.noise.basis.lambda(e.mode)),
                num(e.t),
                num(e.mc_mean),
                num(e.mc_variance),
                num(e.predicted),
                num(e.z_variance),
                num(e.z_mean),
            ]);
        }
    }
    modes.write(&ctx.out("ensemble_modes.csv"), &ctx.prov)?;
    if !rec.failures.is_empty() {
        let mut f = CsvTable::new(&["path", "reason"]);
        for (p, why) in &rec.failures {
            f.push(vec![p.to_string(), why.replace(',', ";")]);
        }
        f.write(&ctx.out("ensemble_failures.csv"), &ctx.prov)?;
    }
    ctx.say(&format!(
        "{n} of {} paths completed; {} of {} variance entries within 3 standard errors",
        rec.paths, pass.0, pass.1
    ));
    Ok(())
}

fn all_modes(a: &ModeMoments, b: &ModeMoments) -> Vec<usize> {
    let mut m: Vec<usize> = a.modes.iter().chain(&b.modes).copied().collect();
    m.sort_unstable();
    m.dedup();
    m
}

fn neumann_verify(ctx: &Ctx, nzs: &[usize]) -> Result<()> {
    let h = ctx.run.sim.grid.h;
    let mut t = CsvTable::new(&["regime", "mode", "nz", "rel_error", "order", "fd_residual"]);
    let mut worst = f64::INFINITY;
    for bc in [BcCase::NeumannNeumann, BcCase::DirichletNeumann] {
        for r in hydrowind::neumann::verify_against_oracle(bc, h, nzs)? {
            if let Some(o) = r.order {
                if r.nz == *nzs.last().unwrap_or(&0) {
                    worst = worst.min(o);
                }
            }
            t.push(vec![
                bc.name().into(),
                r.mode.replace(',', ";"),
                r.nz.to_string(),
                num(r.rel_error),
                r.order.map(num).unwrap_or_default(),
                num(r.fd_residual),
            ]);
        }
    }
    t.write(&ctx.out("neumann_verify.csv"), &ctx.prov)?;
    ctx.say(&format!("lowest observed order at the finest pair: {worst:.3}"));
    Ok(())
}

fn convergence(ctx: &Ctx, steps: &[usize], mode: usize) -> Result<()> {
    let op = StokesOperator::build(&ctx.run.sim.grid)?;
    let mut t = CsvTable::new(&["scheme", "dt", "error", "order"]);
    for scheme in [Scheme::ImexEuler, Scheme::ImexCn] {
        let rows = convergence_study(&op, scheme, mode, steps)?;
        if let Some(last) = rows.last().and_then(|r| r.order) {
            ctx.say(&format!("{}: observed order {last:.3}", scheme.name()));
        }
        for r in rows {
            t.push(vec![scheme.name().into(), num(r.dt), num(r.error), r.order.map(num).unwrap_or_default()]);
        }
    }
    t.write(&ctx.out("convergence.csv"), &ctx.prov)
}

fn norms(ctx: &Ctx, input: &Path, ss: &[f64], theta: Option<f64>) -> Result<()> {
    let index = CsvTable::read(&input.join("index.csv"))?;
    let times = index.floats("t")?;
    let files = index.column("file")?;
    let mut fields = Vec::with_capacity(times.len());
    for row in &index.rows {
        let (grid, samples) = hydrowind::io::read_snapshot(&input.join(&row[files]))?;
        fields.push(forward_transform(&samples, &grid)?);
    }
    let Some(first) = fields.first() else {
        return Err(Error::Format(format!("{} lists no snapshots", input.display())));
    };
    let op = StokesOperator::build(&first.grid)?;
    let (mu, q) = (ctx.run.sim.mu, ctx.run.sim.q);

    let mut cols = vec!["t".to_string()];
    cols.extend(ss.iter().map(|s| format!("H{s}")));
    let mut series = CsvTable { columns: cols, ..Default::default() };
    let mut values = vec![Vec::with_capacity(times.len()); ss.len()];
    for (f, &t) in fields.iter().zip(&times) {
        let mut row = vec![num(t)];
        for (k, &s) in ss.iter().enumerate() {
            let v = sobolev_norm(f, s, &op)?;
            values[k].push(v);
            row.push(num(v));
        }
        series.push(row);
    }
    series.write(&ctx.out("norms.csv"), &ctx.prov)?;

    let mut summary = CsvTable::new(&["quantity", "s", "mu", "q", "theta", "value"]);
    for (k, &s) in ss.iter().enumerate() {
        let w = weighted_time_norm(&times, &values[k], mu, q)?;
        summary.push(vec!["weighted_time_norm".into(), num(s), num(mu), num(q), String::new(), num(w)]);
        ctx.say(&format!("||t^(1-mu) ||V||_H{s}||_L{q} = {w:.6e}"));
    }
    if let Some(theta) = theta {
        let basis = Eigenbasis::new(&op);
        let lambdas = (0..basis.len()).map(|n| basis.lambda(n)).collect();
        let coeffs = fields.iter().map(|f| basis.project(f)).collect();
        let probe = time_regularity_probe(&EigenSeries { times: times.clone(), lambdas, coeffs }, theta, None)?;
        summary.push(vec!["time_regularity".into(), num(2.0 * (1.0 - theta)), String::new(), String::new(), num(theta), num(probe)]);
        ctx.say(&format!("time-regularity quotient at theta = {theta}: {probe:.6e}"));
    }
    summary.write(&ctx.out("norms_summary.csv"), &ctx.prov)
}

fn spectrum(ctx: &Ctx) -> Result<()> {
    let op = StokesOperator::build(&ctx.run.sim.grid)?;
    let mut t = CsvTable::new(&["kx", "ky", "m", "polarization", "lambda"]);
    for r in op.spectrum() {
        t.push(vec![r.kx.to_string(), r.ky.to_string(), r.m.to_string(), r.polarization.into(), num(r.lambda)]);
    }
    ctx.say(&format!("{} eigenvalues", t.rows.len()));
    t.write(&ctx.out("spectrum.csv"), &ctx.prov)
}
