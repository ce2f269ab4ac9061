//! Pathwise IMEX integration of the remainder equation and ensemble orchestration.
//!
//! The remainder `v = V - Z_f - Z_b` solves `d_t v + A v + F(v+Z, v+Z) = f`; the convection
//! term is explicit, `A` implicit through the resolvent.

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diagnostics::{sobolev_norm, ModeMoments};
use crate::error::{Error, Result};
use crate::fields::{dz_coeffs, helmholtz_project, mean_divergence, vertical_average, SpectralField, SurfaceField, C64};
use crate::grid::GridSpec;
use crate::noise::{NoiseModel, NoiseSpec, WienerState};
use crate::nonlinear::{advect, convection};
use crate::stokes::StokesOperator;
use crate::vertical::{sine_mode, VerticalBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Backward Euler in `A`, forward Euler in `F`.
    ImexEuler,
    /// Crank-Nicolson in `A`, Adams-Bashforth 2 in `F`; the first step is IMEX-Euler.
    ImexCn,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ImexEuler => "imex-euler",
            Scheme::ImexCn => "imex-cn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "imex-euler" | "euler" => Some(Scheme::ImexEuler),
            "imex-cn" | "cn" => Some(Scheme::ImexCn),
            _ => None,
        }
    }
}

/// Initial remainder `v0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    /// `amplitude e_index` in the sorted eigenbasis.
    Eigenmode { index: usize, amplitude: f64 },
    /// Random combination of eigenmodes with `|kx|, |ky|, vertical index <= kmax`, scaled to the
    /// given `H^1` norm.
    Random { seed: u64, kmax: usize, h1: f64 },
    /// Native-basis field (e.g. a loaded snapshot).
    Field(SpectralField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub grid: GridSpec,
    pub t_final: f64,
    pub dt: f64,
    pub noise: NoiseSpec,
    pub v0: InitialData,
    pub scheme: Scheme,
    /// Record every `output_every` steps (the initial state is always recorded).
    pub output_every: usize,
    pub paths: usize,
    pub mu: f64,
    pub q: f64,
    pub nonlinear: bool,
    /// Abort a path once `||v||_{H^1}` exceeds this.
    pub guard: f64,
    pub keep_snapshots: bool,
    pub keep_pressure: bool,
    /// Cap on the number of `Z_b` modes tracked in ensemble statistics.
    pub track_limit: usize,
}

impl SimulationConfig {
    pub fn new(grid: GridSpec, t_final: f64, dt: f64) -> Self {
        SimulationConfig {
            grid,
            t_final,
            dt,
            noise: NoiseSpec::off(),
            v0: InitialData::Zero,
            scheme: Scheme::ImexCn,
            output_every: 1,
            paths: 1,
            mu: 1.0,
            q: 2.0,
            nonlinear: true,
            guard: 1e6,
            keep_snapshots: false,
            keep_pressure: false,
            track_limit: 64,
        }
    }

    /// Number of steps; `T / dt` must be an integer up to rounding.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Every violated invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if let Err(e) = self.grid.validate() {
            errs.push(e.to_string());
        }
        if !(self.dt > 0.0 && self.dt < self.t_final) || !self.t_final.is_finite() {
            errs.push(format!("need 0 < dt < T (got dt = {}, T = {})", self.dt, self.t_final));
        } else {
            let n = self.steps() as f64;
            if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
                errs.push(format!("T = {} is not an integer multiple of dt = {}", self.t_final, self.dt));
            }
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            errs.push(format!("q must be in [1, inf) (got {})", self.q));
        } else if !(self.mu > 1.0 / self.q && self.mu <= 1.0) {
            errs.push(format!("mu must exceed 1/q and be <= 1 (got mu = {}, q = {})", self.mu, self.q));
        }
        if self.paths < 1 {
            errs.push("paths must be >= 1".into());
        }
        if self.output_every < 1 {
            errs.push("output_every must be >= 1".into());
        }
        if !(self.guard > 0.0) {
            errs.push(format!("guard must be positive (got {})", self.guard));
        }
        if let InitialData::Random { h1, .. } = self.v0 {
            if !(h1 >= 0.0 && h1.is_finite()) {
                errs.push(format!("random v0 needs a finite H1 norm >= 0 (got {h1})"));
            }
        }
        if let Err(Error::Config(e)) = self.noise.validate() {
            errs.push(e);
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}

/// IMEX stepper carrying the Adams-Bashforth history.
pub struct Stepper<'a> {
    op: &'a StokesOperator,
    scheme: Scheme,
    nonlinear: bool,
    prev: Option<SpectralField>,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a StokesOperator, scheme: Scheme, nonlinear: bool) -> Self {
        Stepper { op, scheme, nonlinear, prev: None }
    }

    pub fn reset(&mut self) {
        self.prev = None;
    }

    /// One step from `v` with noise `z` at the current time; `source` is `(f(t_n), f(t_{n+1}))`.
    pub fn step(
        &mut self,
        v: &SpectralField,
        z: &SpectralField,
        dt: f64,
        source: Option<(&SpectralField, &SpectralField)>,
    ) -> Result<SpectralField> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!("time step must be positive (got {dt})")));
        }
        let nl = if self.nonlinear {
            let full = v + z;
            Some(advect(&full, &full)?)
        } else {
            None
        };
        let first = self.prev.is_none() || self.scheme == Scheme::ImexEuler;
        let mut rhs;
        let alpha;
        if first {
            // (1/dt + A) v' = v/dt - F + f(t_{n+1})
            alpha = 1.0 / dt;
            rhs = v * alpha;
            if let Some(f) = &nl {
                rhs -= f;
            }
            if let Some((_, f1)) = source {
                rhs += f1;
            }
        } else {
            // (2/dt + A) v' = (2/dt - A) v - 3F + F_prev + f(t_n) + f(t_{n+1})
            alpha = 2.0 / dt;
            rhs = &(v * alpha) - &self.op.apply_unchecked(v);
            if let (Some(f), Some(p)) = (&nl, &self.prev) {
                rhs.axpy(-3.0, f);
                rhs += p;
            }
            if let Some((f0, f1)) = source {
                rhs += f0;
                rhs += f1;
            }
        }
        let (mut next, _) = self.op.stokes_solve(&rhs, alpha)?;
        next.symmetrize();
        if !next.is_finite() {
            return Err(Error::Solver(format!("non-finite state after a step of size {dt}")));
        }
        if self.scheme == Scheme::ImexCn {
            self.prev = Some(nl.unwrap_or_else(|| v.zeros_like()));
        }
        Ok(next)
    }
}

/// One step without history (the CN scheme starts with IMEX-Euler).
pub fn imex_step(op: &StokesOperator, v: &SpectralField, z: &SpectralField, dt: f64, scheme: Scheme) -> Result<SpectralField> {
    Stepper::new(op, scheme, true).step(v, z, dt, None)
}

/// Surface pressure from `grad_H P_s = (1 - P)[Delta V - N(V) + f]`, `V = v + Z`; mean-free.
pub fn reconstruct_pressure(
    op: &StokesOperator,
    v: &SpectralField,
    z: &SpectralField,
    forcing: Option<&SpectralField>,
    nonlinear: bool,
) -> Result<SurfaceField> {
    let full = v + z;
    let mut x = -&op.neg_laplacian(&full);
    if nonlinear {
        x -= &convection(&full, &full)?;
    }
    if let Some(f) = forcing {
        x += f;
    }
    let g = op.grid;
    let s = op.vertical().unit_mean();
    let bar = vertical_average(&x);
    let mut p = SurfaceField::zeros(g, 1);
    for (ix, iy) in g.active_modes() {
        if ix == 0 && iy == 0 {
            continue;
        }
        let (kx, ky) = g.wavevector(ix, iy);
        let i = g.hidx(ix, iy);
        let kdot = bar.comps[0][i] * kx + bar.comps[1][i] * ky;
        // i k P = k (k . xbar) / (|k|^2 s)
        p.comps[0][i] = kdot * C64::new(0.0, -1.0) / ((kx * kx + ky * ky) * s);
    }
    Ok(p)
}

/// Largest surface slope `|d_z V(0)|` over all modes.
fn surface_slope(f: &SpectralField) -> f64 {
    let g = f.grid;
    let nz = g.nz;
    let mut worst: f64 = 0.0;
    for c in 0..2 {
        let (d, basis) = dz_coeffs(&f.comps[c], &g, f.basis);
        for col in d.chunks_exact(nz) {
            let top: C64 = match basis {
                VerticalBasis::Sine => col.iter().enumerate().map(|(m, a)| *a * sine_mode(m, 0.0, g.h)).sum(),
                VerticalBasis::Nodal => col[nz - 1],
                VerticalBasis::Cosine => col.iter().copied().sum(),
            };
            worst = worst.max(top.norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The `H^1` guard tripped at the given time.
    Diverged { t: f64, h1: f64 },
    /// A step failed (non-finite state or solver error).
    Failed { t: f64, message: String },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Diverged { .. } => "diverged",
            RunStatus::Failed { .. } => "failed",
        }
    }
}

/// Recorded series of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub path: u64,
    pub seed: u64,
    pub times: Vec<f64>,
    /// `||V||`, `V = v + Z_f + Z_b`.
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    /// `max |k . Vbar|` relative to the constraint scale.
    pub divres: Vec<f64>,
    /// Largest surface slope of `V` in its homogeneous representation.
    pub bndres: Vec<f64>,
    /// `||V||^2 / 2`.
    pub energy: Vec<f64>,
    /// `|<F(V,V), V>| / (||F(V,V)|| ||V||)`.
    pub fv_residual: Vec<f64>,
    /// `||v||_{H^1}` and `||v||_{H^2}` of the remainder.
    pub v_h1: Vec<f64>,
    pub v_h2: Vec<f64>,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub pressure: Vec<(f64, SurfaceField)>,
    /// Tracked `Z_f` / `Z_b` eigen-coefficients at each recorded time.
    pub zf_coeffs: Vec<Vec<f64>>,
    pub zb_coeffs: Vec<Vec<f64>>,
    /// Remainder at the last completed step.
    pub final_v: Option<SpectralField>,
    pub status: RunStatus,
}

impl TrajectoryRecord {
    fn new(path: u64, seed: u64) -> Self {
        TrajectoryRecord {
            path,
            seed,
            times: Vec::new(),
            l2: Vec::new(),
            h1: Vec::new(),
            divres: Vec::new(),
            bndres: Vec::new(),
            energy: Vec::new(),
            fv_residual: Vec::new(),
            v_h1: Vec::new(),
            v_h2: Vec::new(),
            snapshots: Vec::new(),
            pressure: Vec::new(),
            zf_coeffs: Vec::new(),
            zb_coeffs: Vec::new(),
            final_v: None,
            status: RunStatus::Completed,
        }
    }

    /// Column names of the scalar series, in `row` order.
    pub const COLUMNS: [&'static str; 10] = ["t", "L2", "H1", "divres", "bndres", "energy", "Fv_residual", "v_H1", "v_H2", "status"];

    pub fn row(&self, i: usize) -> [f64; 9] {
        [
            self.times[i],
            self.l2[i],
            self.h1[i],
            self.divres[i],
            self.bndres[i],
            self.energy[i],
            self.fv_residual[i],
            self.v_h1[i],
            self.v_h2[i],
        ]
    }
}

/// Operator, noise model and initial data prepared once for many paths.
pub struct Simulation {
    pub config: SimulationConfig,
    pub op: Arc<StokesOperator>,
    pub noise: Arc<NoiseModel>,
    pub v0: SpectralField,
    pub tracked_f: Vec<usize>,
    pub tracked_b: Vec<usize>,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let op = Arc::new(StokesOperator::build(&config.grid)?);
        Self::with_operator(config, op)
    }

    /// Reuses an already built operator for the same grid.
    pub fn with_operator(config: SimulationConfig, op: Arc<StokesOperator>) -> Result<Self> {
        config.validate()?;
        if !op.grid.same_shape(&config.grid) {
            return Err(Error::Shape("operator grid differs from the configured grid".into()));
        }
        let noise = Arc::new(NoiseModel::new(&config.noise, &op)?);
        let v0 = initial_field(&config.v0, &op, &noise)?;
        let tracked_f = noise.interior_modes();
        let mut tracked_b = noise.boundary_modes();
        tracked_b.truncate(config.track_limit);
        Ok(Simulation { config, op, noise, v0, tracked_f, tracked_b })
    }

    /// Times at which a full run records.
    pub fn output_times(&self) -> Vec<f64> {
        let n = self.config.steps();
        (0..=n).filter(|k| k % self.config.output_every == 0 || *k == n).map(|k| k as f64 * self.config.dt).collect()
    }

    pub fn run_path(&self, path: u64) -> TrajectoryRecord {
        self.run_path_from(path, &self.v0)
    }

    /// Runs one path from a given remainder `v0`; the noise path depends only on `(seed, path)`.
    pub fn run_path_from(&self, path: u64, v0: &SpectralField) -> TrajectoryRecord {
        let cfg = &self.config;
        let op = &*self.op;
        let mut rec = TrajectoryRecord::new(path, cfg.noise.seed);
        let mut state = self.noise.start(path);
        let mut stepper = Stepper::new(op, cfg.scheme, cfg.nonlinear);
        let mut v = v0.clone();
        let n = cfg.steps();
        let linear_zero = !cfg.nonlinear && v.max_abs() == 0.0;
        for k in 0..=n {
            if k % cfg.output_every == 0 || k == n {
                if let Err(e) = self.record(&mut rec, &v, &state) {
                    rec.status = RunStatus::Failed { t: state.t, message: e.to_string() };
                    break;
                }
                let h1 = *rec.v_h1.last().expect("just recorded");
                if !(h1 <= cfg.guard) {
                    rec.status = if h1.is_finite() {
                        RunStatus::Diverged { t: state.t, h1 }
                    } else {
                        RunStatus::Failed { t: state.t, message: "non-finite H1 norm".into() }
                    };
                    break;
                }
            }
            if k == n {
                break;
            }
            let z = if cfg.nonlinear {
                let (zf, zb) = self.noise.fields(&state);
                &zf + &zb
            } else {
                v.zeros_like()
            };
            if !linear_zero {
                match stepper.step(&v, &z, cfg.dt, None) {
                    Ok(next) => v = next,
                    Err(e) => {
                        rec.status = RunStatus::Failed { t: state.t, message: e.to_string() };
                        break;
                    }
                }
            }
            if let Err(e) = self.noise.step(&mut state, cfg.dt) {
                rec.status = RunStatus::Failed { t: state.t, message: e.to_string() };
                break;
            }
        }
        rec.final_v = Some(v);
        rec
    }

    fn record(&self, rec: &mut TrajectoryRecord, v: &SpectralField, state: &WienerState) -> Result<()> {
        let op = &*self.op;
        let (zf, zb) = self.noise.fields(state);
        let z = &zf + &zb;
        let full = v + &z;
        let l2 = full.l2_norm();
        rec.times.push(state.t);
        rec.l2.push(l2);
        rec.h1.push(sobolev_norm(&full, 1.0, op)?);
        let scale = op.constraint_scale(&full);
        rec.divres.push(if scale > 0.0 { mean_divergence(&full) / scale } else { 0.0 });
        rec.bndres.push(surface_slope(&full));
        rec.energy.push(0.5 * l2 * l2);
        let fv = advect(&full, &full)?;
        let denom = fv.l2_norm() * l2;
        rec.fv_residual.push(if denom > 0.0 { fv.inner(&full).abs() / denom } else { 0.0 });
        rec.v_h1.push(sobolev_norm(v, 1.0, op)?);
        rec.v_h2.push(sobolev_norm(v, 2.0, op)?);
        rec.zf_coeffs.push(self.tracked_f.iter().map(|&n| state.zf[n]).collect());
        rec.zb_coeffs.push(self.tracked_b.iter().map(|&n| state.zb[n]).collect());
        if self.config.keep_snapshots {
            rec.snapshots.push((state.t, full.clone()));
        }
        if self.config.keep_pressure {
            rec.pressure.push((state.t, reconstruct_pressure(op, v, &z, None, self.config.nonlinear)?));
        }
        if !l2.is_finite() {
            return Err(Error::Solver("non-finite state".into()));
        }
        Ok(())
    }
}

fn initial_field(v0: &InitialData, op: &StokesOperator, noise: &NoiseModel) -> Result<SpectralField> {
    let basis = &noise.basis;
    match v0 {
        InitialData::Zero => Ok(SpectralField::zeros(op.grid)),
        InitialData::Eigenmode { index, amplitude } => {
            if *index >= basis.len() {
                return Err(Error::Config(format!("v0 eigenmode {index} exceeds the {} eigenmodes", basis.len())));
            }
            let mut f = SpectralField::zeros(op.grid);
            basis.add_mode(&mut f, *index, *amplitude);
            Ok(f)
        }
        InitialData::Random { seed, kmax, h1 } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut f = SpectralField::zeros(op.grid);
            for (n, mode) in basis.modes().iter().enumerate() {
                if mode.kx.unsigned_abs() as usize <= *kmax && mode.ky.unsigned_abs() as usize <= *kmax && mode.index <= *kmax {
                    let a: f64 = rng.random::<f64>() - 0.5;
                    basis.add_mode(&mut f, n, a / (1.0 + mode.lambda));
                }
            }
            let norm = sobolev_norm(&f, 1.0, op)?;
            Ok(if norm > 0.0 { f.scaled(h1 / norm) } else { f })
        }
        InitialData::Field(f) => {
            if !f.grid.same_shape(&op.grid) || f.basis != VerticalBasis::native(op.grid.bc) {
                return Err(Error::Shape("initial field does not match the run grid".into()));
            }
            op.check_constraint(f, 1e-10)?;
            Ok(helmholtz_project(f))
        }
    }
}

/// Runs one path of a configuration.
pub fn run_path(config: &SimulationConfig, path: u64) -> Result<TrajectoryRecord> {
    Ok(Simulation::new(config.clone())?.run_path(path))
}

/// Ensemble statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRecord {
    pub times: Vec<f64>,
    pub paths: usize,
    pub failures: Vec<(u64, String)>,
    /// Columns `L2`, `H1`, `energy` of the completed paths.
    pub norms: ModeMoments,
    pub zf: ModeMoments,
    pub zb: ModeMoments,
}

impl EnsembleRecord {
    pub const NORM_COLUMNS: [&'static str; 3] = ["L2", "H1", "energy"];
}

const CHUNK: usize = 256;

/// Runs `config.paths` independent paths in parallel and reduces their statistics in path order.
pub fn run_ensemble(config: &SimulationConfig) -> Result<EnsembleRecord> {
    let sim = Simulation::new(config.clone())?;
    ensemble_of(&sim)
}

/// Ensemble statistics of a prepared simulation.
pub fn ensemble_of(sim: &Simulation) -> Result<EnsembleRecord> {
    let times = sim.output_times();
    let mut rec = EnsembleRecord {
        times: times.clone(),
        paths: sim.config.paths,
        failures: Vec::new(),
        norms: ModeMoments::new(times.clone(), vec![0, 1, 2]),
        zf: ModeMoments::new(times.clone(), sim.tracked_f.clone()),
        zb: ModeMoments::new(times.clone(), sim.tracked_b.clone()),
    };
    let ids: Vec<u64> = (0..sim.config.paths as u64).collect();
    for chunk in ids.chunks(CHUNK) {
        let runs: Vec<TrajectoryRecord> = chunk.par_iter().map(|&p| sim.run_path(p)).collect();
        for r in runs {
            match &r.status {
                RunStatus::Completed if r.times.len() == times.len() => {
                    let norms: Vec<Vec<f64>> = (0..r.times.len()).map(|i| vec![r.l2[i], r.h1[i], r.energy[i]]).collect();
                    rec.norms.push(&norms);
                    rec.zf.push(&r.zf_coeffs);
                    rec.zb.push(&r.zb_coeffs);
                }
                RunStatus::Completed => rec.failures.push((r.path, "incomplete record".into())),
                RunStatus::Diverged { t, h1 } => rec.failures.push((r.path, format!("diverged at t = {t} (H1 = {h1:.3e})"))),
                RunStatus::Failed { t, message } => rec.failures.push((r.path, format!("failed at t = {t}: {message}"))),
            }
        }
    }
    Ok(rec)
}

/// Error at `T = 1` of the manufactured linear solution `(1 + sin 2t) e_n` with `steps` steps.
pub fn manufactured_error(op: &StokesOperator, scheme: Scheme, mode: usize, steps: usize) -> Result<f64> {
    let basis = crate::noise::Eigenbasis::new(op);
    if mode >= basis.len() {
        return Err(Error::Domain(format!("eigenmode {mode} out of range ({} modes)", basis.len())));
    }
    if steps == 0 {
        return Err(Error::Domain("need at least one step".into()));
    }
    let mut e = SpectralField::zeros(op.grid);
    basis.add_mode(&mut e, mode, 1.0);
    let l = basis.lambda(mode);
    let phi = |t: f64| 1.0 + (2.0 * t).sin();
    let src = |t: f64| &e * (2.0 * (2.0 * t).cos() + l * phi(t));
    let dt = 1.0 / steps as f64;
    let zero = SpectralField::zeros(op.grid);
    let mut st = Stepper::new(op, scheme, false);
    let mut v = &e * phi(0.0);
    for k in 0..steps {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        v = st.step(&v, &zero, dt, Some((&src(t0), &src(t1))))?;
    }
    Ok((&v - &(&e * phi(1.0))).l2_norm())
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub scheme: Scheme,
    pub dt: f64,
    pub error: f64,
    /// `log2` error ratio against the previous (coarser) level.
    pub order: Option<f64>,
}

/// Manufactured-solution errors for each step count, coarse to fine.
pub fn convergence_study(op: &StokesOperator, scheme: Scheme, mode: usize, steps: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in steps {
        let error = manufactured_error(op, scheme, mode, n)?;
        let order = rows.last().map(|r| (r.error / error).ln() / (r.dt * n as f64).ln());
        rows.push(ConvergenceRow { scheme, dt: 1.0 / n as f64, error, order });
    }
    Ok(rows)
}

/// `H^1` histories of path 0 under successive `dt` halvings, recorded at the coarse output times.
///
/// Returns `(dt, times, h1)` per level together with the sup-normalised change between
/// consecutive levels.
pub fn h1_refinement(config: &SimulationConfig, levels: usize) -> Result<(Vec<(f64, Vec<f64>, Vec<f64>)>, Vec<f64>)> {
    let op = Arc::new(StokesOperator::build(&config.grid)?);
    let mut out: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for l in 0..levels {
        let mut cfg = config.clone();
        cfg.dt = config.dt / (1u64 << l) as f64;
        cfg.output_every = config.output_every << l;
        let rec = Simulation::with_operator(cfg.clone(), op.clone())?.run_path(0);
        if let RunStatus::Diverged { .. } | RunStatus::Failed { .. } = rec.status {
            return Err(Error::Solver(format!("refinement level dt = {} ended with {}", cfg.dt, rec.status.label())));
        }
        out.push((cfg.dt, rec.times, rec.h1));
    }
    let changes = out
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0].2, &w[1].2);
            let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            if scale > 0.0 {
                diff / scale
            } else {
                diff
            }
        })
        .collect();
    Ok((out, changes))
}
