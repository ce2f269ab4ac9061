//! Run configuration: a TOML document with `[grid]`, `[time]`, `[noise]` and `[output]`.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::grid::{BcCase, GridSpec};
use crate::integrator::{InitialData, Scheme, SimulationConfig};
use crate::noise::{BoundaryShape, HbProfile, HbTerm, NoiseSpec, Z0Spec};

pub const SCHEMA: &str = "hydrowind-config/1";

const ROOT_KEYS: &[&str] = &["schema", "grid", "time", "noise", "output"];
const GRID_KEYS: &[&str] = &["nx", "ny", "nz", "h", "bc"];
const TIME_KEYS: &[&str] = &[
    "T", "dt", "scheme", "paths", "mu", "q", "nonlinear", "guard", "v0", "v0_index", "v0_amplitude", "v0_seed",
    "v0_kmax", "v0_h1", "v0_file",
];
const NOISE_KEYS: &[&str] = &[
    "n_f", "alpha_f", "c_f", "interior_modes", "include_kernel", "n_b", "alpha_b", "c_b", "seed", "strict_mean",
    "hb_segments", "hb_spatial", "boundary_shapes", "z0", "z0_index", "z0_amplitude", "z0_file",
];
const OUTPUT_KEYS: &[&str] = &["every", "snapshots", "pressure", "track_limit", "dir"];

/// Parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schema: String,
    /// Everything except file-backed fields, which stay as paths until [`RunConfig::simulation`].
    pub sim: SimulationConfig,
    pub v0_file: Option<PathBuf>,
    pub z0_file: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Defaults for everything: a 16 x 16 x 8 NN grid, `T = 1`, `dt = 0.01`, noise off.
    pub fn with_defaults() -> Self {
        let grid = GridSpec { nx: 16, ny: 16, nz: 8, h: 1.0, bc: BcCase::NeumannNeumann };
        RunConfig {
            schema: SCHEMA.into(),
            sim: SimulationConfig::new(grid, 1.0, 0.01),
            v0_file: None,
            z0_file: None,
            out_dir: PathBuf::from("out"),
        }
    }

    /// Resolves file-backed fields (relative paths against `base`) into a runnable configuration.
    pub fn simulation(&self, base: &Path) -> Result<SimulationConfig> {
        let mut sim = self.sim.clone();
        let load = |p: &Path| -> Result<crate::fields::SpectralField> {
            let path = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
            let (grid, samples) = super::snapshot::read_snapshot(&path)?;
            if grid != sim.grid {
                return Err(Error::Shape(format!("{} holds a {:?} grid, config has {:?}", path.display(), grid, sim.grid)));
            }
            crate::fields::forward_transform(&samples, &grid)
        };
        if let Some(p) = &self.v0_file {
            sim.v0 = InitialData::Field(load(p)?);
        }
        if let Some(p) = &self.z0_file {
            sim.noise.z0 = Z0Spec::Field(load(p)?);
        }
        Ok(sim)
    }

    /// Canonical TOML text; parsing it gives back an equal config.
    pub fn to_toml(&self) -> Result<String> {
        let s = &self.sim;
        let n = &s.noise;
        let mut root = Table::new();
        root.insert("schema".into(), self.schema.clone().into());

        let mut grid = Table::new();
        grid.insert("nx".into(), int(s.grid.nx));
        grid.insert("ny".into(), int(s.grid.ny));
        grid.insert("nz".into(), int(s.grid.nz));
        grid.insert("h".into(), s.grid.h.into());
        grid.insert("bc".into(), s.grid.bc.name().into());
        root.insert("grid".into(), grid.into());

        let mut time = Table::new();
        time.insert("T".into(), s.t_final.into());
        time.insert("dt".into(), s.dt.into());
        time.insert("scheme".into(), s.scheme.name().into());
        time.insert("paths".into(), int(s.paths));
        time.insert("mu".into(), s.mu.into());
        time.insert("q".into(), s.q.into());
        time.insert("nonlinear".into(), s.nonlinear.into());
        time.insert("guard".into(), s.guard.into());
        match (&self.v0_file, &s.v0) {
            (Some(p), _) => {
                time.insert("v0".into(), "file".into());
                time.insert("v0_file".into(), path_str(p)?.into());
            }
            (None, InitialData::Zero) => {
                time.insert("v0".into(), "zero".into());
            }
            (None, InitialData::Eigenmode { index, amplitude }) => {
                time.insert("v0".into(), "eigenmode".into());
                time.insert("v0_index".into(), int(*index));
                time.insert("v0_amplitude".into(), (*amplitude).into());
            }
            (None, InitialData::Random { seed, kmax, h1 }) => {
                time.insert("v0".into(), "random".into());
                time.insert("v0_seed".into(), seed_value(*seed)?);
                time.insert("v0_kmax".into(), int(*kmax));
                time.insert("v0_h1".into(), (*h1).into());
            }
            (None, InitialData::Field(_)) => {
                return Err(Error::Config("an in-memory v0 field cannot be serialised; save it as a snapshot".into()))
            }
        }
        root.insert("time".into(), time.into());

        let mut noise = Table::new();
        noise.insert("n_f".into(), int(n.n_f));
        noise.insert("alpha_f".into(), n.alpha_f.into());
        noise.insert("c_f".into(), n.c_f.into());
        if let Some(m) = &n.interior_modes {
            noise.insert("interior_modes".into(), Value::Array(m.iter().map(|&i| int(i)).collect()));
        }
        noise.insert("include_kernel".into(), n.include_kernel.into());
        noise.insert("n_b".into(), int(n.n_b));
        noise.insert("alpha_b".into(), n.alpha_b.into());
        noise.insert("c_b".into(), n.c_b.into());
        noise.insert("seed".into(), seed_value(n.seed)?);
        noise.insert("strict_mean".into(), n.strict_mean.into());
        noise.insert(
            "hb_segments".into(),
            Value::Array(n.hb.segments.iter().map(|&(t, a)| Value::Array(vec![t.into(), a.into()])).collect()),
        );
        if !n.hb.spatial.is_empty() {
            let terms = n.hb.spatial.iter().map(|t| {
                let mut e = Table::new();
                e.insert("kx".into(), t.kx.into());
                e.insert("ky".into(), t.ky.into());
                e.insert("amplitude".into(), t.amplitude.into());
                e.insert("sine".into(), t.sine.into());
                Value::Table(e)
            });
            noise.insert("hb_spatial".into(), Value::Array(terms.collect()));
        }
        if let Some(shapes) = &n.boundary_shapes {
            let shapes = shapes.iter().map(|b| {
                let mut e = Table::new();
                e.insert("kx".into(), b.kx.into());
                e.insert("ky".into(), b.ky.into());
                e.insert("dir".into(), Value::Array(vec![b.dir[0].into(), b.dir[1].into()]));
                e.insert("sine".into(), b.sine.into());
                Value::Table(e)
            });
            noise.insert("boundary_shapes".into(), Value::Array(shapes.collect()));
        }
        match (&self.z0_file, &n.z0) {
            (Some(p), _) => {
                noise.insert("z0".into(), "file".into());
                noise.insert("z0_file".into(), path_str(p)?.into());
            }
            (None, Z0Spec::Zero) => {
                noise.insert("z0".into(), "zero".into());
            }
            (None, Z0Spec::Eigenmode { index, amplitude }) => {
                noise.insert("z0".into(), "eigenmode".into());
                noise.insert("z0_index".into(), int(*index));
                noise.insert("z0_amplitude".into(), (*amplitude).into());
            }
            (None, Z0Spec::Field(_)) => {
                return Err(Error::Config("an in-memory Z0 field cannot be serialised; save it as a snapshot".into()))
            }
        }
        root.insert("noise".into(), noise.into());

        let mut output = Table::new();
        output.insert("every".into(), int(s.output_every));
        output.insert("snapshots".into(), s.keep_snapshots.into());
        output.insert("pressure".into(), s.keep_pressure.into());
        output.insert("track_limit".into(), int(s.track_limit));
        output.insert("dir".into(), path_str(&self.out_dir)?.into());
        root.insert("output".into(), output.into());

        toml::to_string(&root).map_err(|e| Error::Format(format!("cannot serialise config: {e}")))
    }
}

fn int(n: usize) -> Value {
    Value::Integer(n as i64)
}

fn seed_value(seed: u64) -> Result<Value> {
    i64::try_from(seed)
        .map(Value::Integer)
        .map_err(|_| Error::Config(format!("seed {seed} does not fit in a signed 64-bit integer")))
}

fn path_str(p: &Path) -> Result<&str> {
    p.to_str().ok_or_else(|| Error::Config(format!("path {} is not valid UTF-8", p.display())))
}

/// Collects every problem found while reading a document.
struct Reader {
    errs: Vec<String>,
}

impl Reader {
    fn section<'a>(&mut self, root: &'a Table, name: &str, known: &[&str]) -> Option<&'a Table> {
        match root.get(name) {
            None => None,
            Some(Value::Table(t)) => {
                for k in t.keys() {
                    if !known.contains(&k.as_str()) {
                        self.errs.push(format!("unknown key [{name}].{k}"));
                    }
                }
                Some(t)
            }
            Some(_) => {
                self.errs.push(format!("[{name}] must be a section"));
                None
            }
        }
    }

    fn mismatch(&mut self, sec: &str, key: &str, want: &str, got: &Value) {
        self.errs.push(format!("[{sec}].{key} must be {want} (got {} {got})", got.type_str()));
    }

    fn f64(&mut self, t: Option<&Table>, sec: &str, key: &str, default: f64) -> f64 {
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(Value::Float(x)) => *x,
            Some(Value::Integer(i)) => *i as f64,
            Some(v) => {
                self.mismatch(sec, key, "a number", v);
                default
            }
        }
    }

    fn i64(&mut self, t: Option<&Table>, sec: &str, key: &str, default: i64) -> i64 {
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(Value::Integer(i)) => *i,
            Some(v) => {
                self.mismatch(sec, key, "an integer", v);
                default
            }
        }
    }

    fn usize(&mut self, t: Option<&Table>, sec: &str, key: &str, default: usize) -> usize {
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(v) => {
                self.mismatch(sec, key, "a non-negative integer", v);
                default
            }
        }
    }

    fn bool(&mut self, t: Option<&Table>, sec: &str, key: &str, default: bool) -> bool {
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => {
                self.mismatch(sec, key, "a boolean", v);
                default
            }
        }
    }

    fn str<'a>(&mut self, t: Option<&'a Table>, sec: &str, key: &str) -> Option<&'a str> {
        match t.and_then(|t| t.get(key)) {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(v) => {
                self.mismatch(sec, key, "a string", v);
                None
            }
        }
    }

    fn array<'a>(&mut self, t: Option<&'a Table>, sec: &str, key: &str) -> Option<&'a [Value]> {
        match t.and_then(|t| t.get(key)) {
            None => None,
            Some(Value::Array(a)) => Some(a),
            Some(v) => {
                self.mismatch(sec, key, "an array", v);
                None
            }
        }
    }

    fn number(&mut self, v: &Value, what: &str) -> f64 {
        match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            v => {
                self.errs.push(format!("{what} must be a number (got {v})"));
                f64::NAN
            }
        }
    }

    fn entry(&mut self, v: &Value, what: &str, known: &[&str]) -> Option<Table> {
        match v {
            Value::Table(t) => {
                for k in t.keys() {
                    if !known.contains(&k.as_str()) {
                        self.errs.push(format!("unknown key {k} in {what}"));
                    }
                }
                Some(t.clone())
            }
            v => {
                self.errs.push(format!("{what} must be a table (got {v})"));
                None
            }
        }
    }

    fn seed(&mut self, t: Option<&Table>, sec: &str, key: &str) -> u64 {
        let s = self.i64(t, sec, key, 0);
        if s < 0 {
            self.errs.push(format!("[{sec}].{key} must be >= 0 (got {s})"));
        }
        s.max(0) as u64
    }
}

/// Parses and validates a configuration document, reporting every violation at once.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let root: Table = toml::from_str(text).map_err(|e| Error::Config(format!("syntax: {}", e.message())))?;
    let mut r = Reader { errs: Vec::new() };
    for k in root.keys() {
        if !ROOT_KEYS.contains(&k.as_str()) {
            r.errs.push(format!("unknown key {k}"));
        }
    }
    let mut cfg = RunConfig::with_defaults();
    match root.get("schema") {
        None => {}
        Some(Value::String(s)) if s == SCHEMA => {}
        Some(v) => r.errs.push(format!("schema must be \"{SCHEMA}\" (got {v})")),
    }

    let g = r.section(&root, "grid", GRID_KEYS);
    let d = cfg.sim.grid;
    let bc = match r.str(g, "grid", "bc") {
        None => d.bc,
        Some(s) => BcCase::parse(s).unwrap_or_else(|| {
            r.errs.push(format!("[grid].bc must be NN or DN (got \"{s}\")"));
            d.bc
        }),
    };
    let grid = GridSpec {
        nx: r.usize(g, "grid", "nx", d.nx),
        ny: r.usize(g, "grid", "ny", d.ny),
        nz: r.usize(g, "grid", "nz", d.nz),
        h: r.f64(g, "grid", "h", d.h),
        bc,
    };
    let mut sim = SimulationConfig::new(grid, 1.0, 0.01);

    let t = r.section(&root, "time", TIME_KEYS);
    sim.t_final = r.f64(t, "time", "T", sim.t_final);
    sim.dt = r.f64(t, "time", "dt", sim.dt);
    if let Some(s) = r.str(t, "time", "scheme") {
        match Scheme::parse(s) {
            Some(s) => sim.scheme = s,
            None => r.errs.push(format!("[time].scheme must be imex-euler or imex-cn (got \"{s}\")")),
        }
    }
    sim.paths = r.usize(t, "time", "paths", sim.paths);
    sim.mu = r.f64(t, "time", "mu", sim.mu);
    sim.q = r.f64(t, "time", "q", sim.q);
    sim.nonlinear = r.bool(t, "time", "nonlinear", sim.nonlinear);
    sim.guard = r.f64(t, "time", "guard", sim.guard);
    let v0_kind = r.str(t, "time", "v0").unwrap_or("zero");
    let v0_file = r.str(t, "time", "v0_file").map(PathBuf::from);
    match v0_kind {
        "zero" => {}
        "eigenmode" => {
            if t.and_then(|t| t.get("v0_index")).is_none() {
                r.errs.push("v0 = \"eigenmode\" needs [time].v0_index".into());
            }
            sim.v0 = InitialData::Eigenmode {
                index: r.usize(t, "time", "v0_index", 0),
                amplitude: r.f64(t, "time", "v0_amplitude", 1.0),
            };
        }
        "random" => {
            sim.v0 = InitialData::Random {
                seed: r.seed(t, "time", "v0_seed"),
                kmax: r.usize(t, "time", "v0_kmax", 2),
                h1: r.f64(t, "time", "v0_h1", 1.0),
            };
        }
        "file" => {
            if v0_file.is_none() {
                r.errs.push("v0 = \"file\" needs [time].v0_file".into());
            }
        }
        other => r.errs.push(format!("[time].v0 must be zero, eigenmode, random or file (got \"{other}\")")),
    }
    cfg.v0_file = if v0_kind == "file" { v0_file } else { None };

    let n = r.section(&root, "noise", NOISE_KEYS);
    let mut noise = NoiseSpec::default();
    noise.n_f = r.usize(n, "noise", "n_f", noise.n_f);
    noise.alpha_f = r.f64(n, "noise", "alpha_f", noise.alpha_f);
    noise.c_f = r.f64(n, "noise", "c_f", noise.c_f);
    if let Some(a) = r.array(n, "noise", "interior_modes") {
        let mut modes = Vec::new();
        for v in a {
            match v {
                Value::Integer(i) if *i >= 0 => modes.push(*i as usize),
                v => r.errs.push(format!("[noise].interior_modes entries must be non-negative integers (got {v})")),
            }
        }
        noise.interior_modes = Some(modes);
    }
    noise.include_kernel = r.bool(n, "noise", "include_kernel", noise.include_kernel);
    noise.n_b = r.usize(n, "noise", "n_b", noise.n_b);
    noise.alpha_b = r.f64(n, "noise", "alpha_b", noise.alpha_b);
    noise.c_b = r.f64(n, "noise", "c_b", noise.c_b);
    noise.seed = r.seed(n, "noise", "seed");
    noise.strict_mean = r.bool(n, "noise", "strict_mean", noise.strict_mean);
    if let Some(a) = r.array(n, "noise", "hb_segments") {
        let mut segs = Vec::new();
        for v in a {
            match v.as_array() {
                Some(p) if p.len() == 2 => {
                    let ts = r.number(&p[0], "[noise].hb_segments start");
                    let amp = r.number(&p[1], "[noise].hb_segments value");
                    segs.push((ts, amp));
                }
                _ => r.errs.push(format!("[noise].hb_segments entries must be [start, value] (got {v})")),
            }
        }
        noise.hb.segments = segs;
    }
    if let Some(a) = r.array(n, "noise", "hb_spatial") {
        let mut terms = Vec::new();
        for v in a {
            if let Some(e) = r.entry(v, "[noise].hb_spatial", &["kx", "ky", "amplitude", "sine"]) {
                let e = Some(&e);
                terms.push(HbTerm {
                    kx: r.i64(e, "noise.hb_spatial", "kx", 0),
                    ky: r.i64(e, "noise.hb_spatial", "ky", 0),
                    amplitude: r.f64(e, "noise.hb_spatial", "amplitude", 1.0),
                    sine: r.bool(e, "noise.hb_spatial", "sine", false),
                });
            }
        }
        noise.hb = HbProfile { spatial: terms, ..noise.hb };
    }
    if let Some(a) = r.array(n, "noise", "boundary_shapes") {
        let mut shapes = Vec::new();
        for v in a {
            if let Some(e) = r.entry(v, "[noise].boundary_shapes", &["kx", "ky", "dir", "sine"]) {
                let dir = match e.get("dir").and_then(Value::as_array) {
                    Some(d) if d.len() == 2 => [r.number(&d[0], "boundary shape dir"), r.number(&d[1], "boundary shape dir")],
                    _ => {
                        r.errs.push("[noise].boundary_shapes entries need dir = [dx, dy]".into());
                        [1.0, 0.0]
                    }
                };
                let e = Some(&e);
                shapes.push(BoundaryShape {
                    kx: r.i64(e, "noise.boundary_shapes", "kx", 0),
                    ky: r.i64(e, "noise.boundary_shapes", "ky", 0),
                    dir,
                    sine: r.bool(e, "noise.boundary_shapes", "sine", false),
                });
            }
        }
        noise.boundary_shapes = Some(shapes);
    }
    let z0_kind = r.str(n, "noise", "z0").unwrap_or("zero");
    let z0_file = r.str(n, "noise", "z0_file").map(PathBuf::from);
    match z0_kind {
        "zero" => {}
        "eigenmode" => {
            if n.and_then(|t| t.get("z0_index")).is_none() {
                r.errs.push("z0 = \"eigenmode\" needs [noise].z0_index".into());
            }
            noise.z0 = Z0Spec::Eigenmode {
                index: r.usize(n, "noise", "z0_index", 0),
                amplitude: r.f64(n, "noise", "z0_amplitude", 1.0),
            };
        }
        "file" => {
            if z0_file.is_none() {
                r.errs.push("z0 = \"file\" needs [noise].z0_file".into());
            }
        }
        other => r.errs.push(format!("[noise].z0 must be zero, eigenmode or file (got \"{other}\")")),
    }
    cfg.z0_file = if z0_kind == "file" { z0_file } else { None };
    sim.noise = noise;

    let o = r.section(&root, "output", OUTPUT_KEYS);
    sim.output_every = r.usize(o, "output", "every", sim.output_every);
    sim.keep_snapshots = r.bool(o, "output", "snapshots", sim.keep_snapshots);
    sim.keep_pressure = r.bool(o, "output", "pressure", sim.keep_pressure);
    sim.track_limit = r.usize(o, "output", "track_limit", sim.track_limit);
    if let Some(dir) = r.str(o, "output", "dir") {
        cfg.out_dir = PathBuf::from(dir);
    }

    r.errs.extend(sim.violations());
    if !r.errs.is_empty() {
        return Err(Error::Config(r.errs.join("; ")));
    }
    cfg.sim = sim;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
