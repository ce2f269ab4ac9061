//! Truncated Wiener processes and the stochastic convolutions `Z_f`, `Z_b`.
//!
//! Both convolutions are carried as coefficients in a real orthonormal eigenbasis of `A`, so
//! every update is an exact Ornstein-Uhlenbeck step.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fields::{BoundaryField, SpectralField, C64};
use crate::grid::{BcCase, GridSpec};
use crate::neumann::{admissible, neumann_map};
use crate::stokes::StokesOperator;
use crate::vertical::cos_norm2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trig {
    Cos,
    Sin,
}

/// Direction of the horizontal velocity of an eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    /// Along `k`.
    Parallel,
    /// Along `k` rotated by a quarter turn.
    Perpendicular,
    /// `e_x` at `k = 0`.
    X,
    /// `e_y` at `k = 0`.
    Y,
}

impl Polarization {
    pub fn name(self) -> &'static str {
        match self {
            Polarization::Parallel => "par",
            Polarization::Perpendicular => "perp",
            Polarization::X => "x",
            Polarization::Y => "y",
        }
    }
}

/// One real eigenfunction `c trig(k.x) phi(z) d` of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMode {
    pub ix: usize,
    pub iy: usize,
    pub kx: i64,
    pub ky: i64,
    pub trig: Trig,
    pub pol: Polarization,
    /// Vertical index: cosine order (NN) or position in the block spectrum (DN).
    pub index: usize,
    pub lambda: f64,
}

/// Orthonormal eigenbasis of `A` sorted by eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigenbasis {
    pub grid: GridSpec,
    modes: Vec<EigenMode>,
    /// Native vertical coefficients of each profile.
    profiles: Vec<Vec<f64>>,
    /// Diagonal vertical Gram weights.
    gram: Vec<f64>,
}

impl Eigenbasis {
    pub fn new(op: &StokesOperator) -> Self {
        let g = op.grid;
        let nz = g.nz;
        let gram: Vec<f64> = match g.bc {
            BcCase::NeumannNeumann => (0..nz).map(|m| cos_norm2(m, g.h)).collect(),
            BcCase::DirichletNeumann => op.vertical().weights.clone(),
        };
        let mut entries: Vec<(EigenMode, Vec<f64>)> = Vec::new();
        for (ix, iy) in g.canonical_modes() {
            let kx = GridSpec::signed(ix, g.nx);
            let ky = GridSpec::signed(iy, g.ny);
            let zero = kx == 0 && ky == 0;
            let trigs: &[Trig] = if zero { &[Trig::Cos] } else { &[Trig::Cos, Trig::Sin] };
            let pols: &[Polarization] =
                if zero { &[Polarization::X, Polarization::Y] } else { &[Polarization::Parallel, Polarization::Perpendicular] };
            let mut push = |pol, index, lambda, profile: Vec<f64>| {
                for &trig in trigs {
                    entries.push((EigenMode { ix, iy, kx, ky, trig, pol, index, lambda }, profile.clone()));
                }
            };
            for &pol in pols {
                match g.bc {
                    BcCase::NeumannNeumann => {
                        let start = usize::from(pol == Polarization::Parallel);
                        for m in start..nz {
                            let mut p = vec![0.0; nz];
                            p[m] = 1.0 / gram[m].sqrt();
                            push(pol, m, op.nn_lambda(ix, iy, m), p);
                        }
                    }
                    BcCase::DirichletNeumann => {
                        let block = op.dn_block_for(ix, iy).expect("DN block for every active mode");
                        let (vals, vecs) = if pol == Polarization::Parallel {
                            (&block.par_vals, &block.par_vecs)
                        } else {
                            (&block.perp_vals, &block.perp_vecs)
                        };
                        for (i, &l) in vals.iter().enumerate() {
                            push(pol, i, l, vecs.column(i).iter().copied().collect());
                        }
                    }
                }
            }
        }
        entries.sort_by(|(a, _), (b, _)| {
            a.lambda
                .total_cmp(&b.lambda)
                .then((a.ky, a.kx, a.trig, a.pol, a.index).cmp(&(b.ky, b.kx, b.trig, b.pol, b.index)))
        });
        let (modes, profiles) = entries.into_iter().unzip();
        Eigenbasis { grid: g, modes, profiles, gram }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[EigenMode] {
        &self.modes
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.modes[n].lambda
    }

    fn direction(mode: &EigenMode, g: &GridSpec) -> [f64; 2] {
        match mode.pol {
            Polarization::X => [1.0, 0.0],
            Polarization::Y => [0.0, 1.0],
            _ => {
                let (kx, ky) = g.wavevector(mode.ix, mode.iy);
                let n = kx.hypot(ky);
                let (ux, uy) = (kx / n, ky / n);
                if mode.pol == Polarization::Parallel {
                    [ux, uy]
                } else {
                    [-uy, ux]
                }
            }
        }
    }

    /// Coefficient of the `+k` Fourier slot: `(c/2) tau` with `tau = 1` or `-i`.
    fn slot_factor(mode: &EigenMode) -> C64 {
        if mode.kx == 0 && mode.ky == 0 {
            return C64::new(1.0, 0.0);
        }
        match mode.trig {
            Trig::Cos => C64::new(FRAC_1_SQRT_2, 0.0),
            Trig::Sin => C64::new(0.0, -FRAC_1_SQRT_2),
        }
    }

    /// `<v, e_n>` for a real field in the native basis.
    pub fn coefficient(&self, v: &SpectralField, n: usize) -> f64 {
        let mode = &self.modes[n];
        let g = &self.grid;
        let d = Self::direction(mode, g);
        let b = g.idx(mode.ix, mode.iy, 0);
        let mut acc = C64::new(0.0, 0.0);
        for (c, dc) in d.iter().enumerate() {
            if *dc == 0.0 {
                continue;
            }
            let s: C64 = self.profiles[n]
                .iter()
                .zip(&self.gram)
                .zip(&v.comps[c][b..b + g.nz])
                .map(|((p, w), x)| *x * (p * w))
                .sum();
            acc += s * *dc;
        }
        let scale = if mode.kx == 0 && mode.ky == 0 { 1.0 } else { 2.0 };
        scale * (acc * Self::slot_factor(mode).conj()).re
    }

    /// All coefficients of `v`.
    pub fn project(&self, v: &SpectralField) -> Vec<f64> {
        (0..self.len()).map(|n| self.coefficient(v, n)).collect()
    }

    /// `f += amp e_n`.
    pub fn add_mode(&self, f: &mut SpectralField, n: usize, amp: f64) {
        let mode = &self.modes[n];
        let g = self.grid;
        let d = Self::direction(mode, &g);
        let s = Self::slot_factor(mode) * amp;
        let b = g.idx(mode.ix, mode.iy, 0);
        let (jx, jy) = g.mirror(mode.ix, mode.iy);
        let bm = g.idx(jx, jy, 0);
        let self_conj = b == bm;
        for (c, dc) in d.iter().enumerate() {
            for (m, p) in self.profiles[n].iter().enumerate() {
                let val = s * (p * dc);
                f.comps[c][b + m] += val;
                if !self_conj {
                    f.comps[c][bm + m] += val.conj();
                }
            }
        }
    }

    /// `sum_n coeffs[n] e_n`.
    pub fn synthesize(&self, coeffs: &[f64]) -> SpectralField {
        let mut f = SpectralField::zeros(self.grid);
        for (n, &a) in coeffs.iter().enumerate() {
            if a != 0.0 {
                self.add_mode(&mut f, n, a);
            }
        }
        f
    }
}

/// Fourier term of a boundary shape: `trig(2 pi (kx x + ky y)) dir`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryShape {
    pub kx: i64,
    pub ky: i64,
    pub dir: [f64; 2],
    pub sine: bool,
}

/// One term `amplitude trig(2 pi (kx x + ky y))` of the spatial factor of `h_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbTerm {
    pub kx: i64,
    pub ky: i64,
    pub amplitude: f64,
    pub sine: bool,
}

/// Separable boundary multiplier `h_b(t, x, y) = a(t) b(x, y)` with `a` piecewise constant.
#[derive(Debug, Clone, PartialEq)]
pub struct HbProfile {
    /// `(start time, a)`; the first segment starts at 0.
    pub segments: Vec<(f64, f64)>,
    /// Spatial factor; empty means `b = 1`.
    pub spatial: Vec<HbTerm>,
}

impl Default for HbProfile {
    fn default() -> Self {
        HbProfile { segments: vec![(0.0, 1.0)], spatial: Vec::new() }
    }
}

impl HbProfile {
    /// `a(t)`.
    pub fn amplitude(&self, t: f64) -> f64 {
        self.segments.iter().take_while(|(s, _)| *s <= t).last().map_or(0.0, |(_, a)| *a)
    }

    /// `int_0^t a(s)^2 exp(-2 lambda (t - s)) ds`.
    pub fn weighted_square_integral(&self, lambda: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &(s0, a)) in self.segments.iter().enumerate() {
            if s0 >= t {
                break;
            }
            let s1 = self.segments.get(i + 1).map_or(t, |s| s.0.min(t));
            acc += a * a * decay_integral(2.0 * lambda, t - s1, t - s0);
        }
        acc
    }

    /// `b g` with the product truncated to the resolved wavenumbers.
    pub fn multiply(&self, g: &BoundaryField) -> BoundaryField {
        if self.spatial.is_empty() {
            return g.clone();
        }
        let grid = g.grid;
        let mut out = BoundaryField::zeros(grid, g.comps.len());
        let (hx, hy) = ((grid.nx / 2) as i64, (grid.ny / 2) as i64);
        for term in &self.spatial {
            let parts: Vec<(i64, i64, C64)> = if term.kx == 0 && term.ky == 0 {
                if term.sine { vec![] } else { vec![(0, 0, C64::new(term.amplitude, 0.0))] }
            } else if term.sine {
                vec![
                    (term.kx, term.ky, C64::new(0.0, -0.5 * term.amplitude)),
                    (-term.kx, -term.ky, C64::new(0.0, 0.5 * term.amplitude)),
                ]
            } else {
                vec![
                    (term.kx, term.ky, C64::new(0.5 * term.amplitude, 0.0)),
                    (-term.kx, -term.ky, C64::new(0.5 * term.amplitude, 0.0)),
                ]
            };
            for (ix, iy) in grid.active_modes() {
                let (kx, ky) = (GridSpec::signed(ix, grid.nx), GridSpec::signed(iy, grid.ny));
                for &(px, py, w) in &parts {
                    let (qx, qy) = (kx + px, ky + py);
                    if qx.abs() >= hx || qy.abs() >= hy {
                        continue;
                    }
                    let j = grid.hidx(GridSpec::unsigned(qx, grid.nx), GridSpec::unsigned(qy, grid.ny));
                    for c in 0..g.comps.len() {
                        out.comps[c][j] += g.comps[c][grid.hidx(ix, iy)] * w;
                    }
                }
            }
        }
        out
    }
}

/// `int_{u0}^{u1} exp(-r u) du`, stable as `r -> 0`.
fn decay_integral(r: f64, u0: f64, u1: f64) -> f64 {
    if r * (u1 - u0).abs() < 1e-8 && r * u1.abs() < 1e-8 {
        return (u1 - u0) * (1.0 - 0.5 * r * (u0 + u1));
    }
    (-r * u0).exp() * -(-r * (u1 - u0)).exp_m1() / r
}

/// `(1 - exp(-r dt)) / r` with the `r = 0` limit `dt`.
fn ou_integral(r: f64, dt: f64) -> f64 {
    if r == 0.0 {
        dt
    } else {
        -(-r * dt).exp_m1() / r
    }
}

/// Initial value of `Z_f`.
#[derive(Debug, Clone, PartialEq)]
pub enum Z0Spec {
    Zero,
    /// `amplitude e_index` in the sorted eigenbasis.
    Eigenmode { index: usize, amplitude: f64 },
    /// Eigen-expansion of a native-basis field.
    Field(SpectralField),
}

/// Noise configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub n_f: usize,
    pub alpha_f: f64,
    pub c_f: f64,
    /// Explicit sorted-eigenbasis indices for the interior shapes; `None` takes the lowest modes.
    pub interior_modes: Option<Vec<usize>>,
    /// Whether kernel modes (`lambda = 0`, NN constants) may carry interior noise.
    pub include_kernel: bool,
    pub n_b: usize,
    pub alpha_b: f64,
    pub c_b: f64,
    /// Explicit boundary shapes; `None` enumerates low wavenumbers.
    pub boundary_shapes: Option<Vec<BoundaryShape>>,
    pub hb: HbProfile,
    pub seed: u64,
    pub z0: Z0Spec,
    /// Reject (rather than correct) NN boundary shapes with nonzero mean.
    pub strict_mean: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            n_f: 0,
            alpha_f: 1.5,
            c_f: 0.1,
            interior_modes: None,
            include_kernel: false,
            n_b: 0,
            alpha_b: 1.5,
            c_b: 0.1,
            boundary_shapes: None,
            hb: HbProfile::default(),
            seed: 0,
            z0: Z0Spec::Zero,
            strict_mean: true,
        }
    }
}

impl NoiseSpec {
    /// All noise switched off.
    pub fn off() -> Self {
        NoiseSpec::default()
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, v) in [("alpha_f", self.alpha_f), ("alpha_b", self.alpha_b)] {
            if !v.is_finite() {
                errs.push(format!("{name} must be finite"));
            }
        }
        for (name, v) in [("c_f", self.c_f), ("c_b", self.c_b)] {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be finite and >= 0 (got {v})"));
            }
        }
        if let Some(m) = &self.interior_modes {
            if m.len() != self.n_f {
                errs.push(format!("{} interior modes listed for n_f = {}", m.len(), self.n_f));
            }
        }
        if let Some(s) = &self.boundary_shapes {
            if s.len() != self.n_b {
                errs.push(format!("{} boundary shapes listed for n_b = {}", s.len(), self.n_b));
            }
        }
        if self.hb.segments.is_empty() || self.hb.segments[0].0 != 0.0 {
            errs.push("h_b segments must start at t = 0".into());
        }
        if self.hb.segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            errs.push("h_b segment start times must increase".into());
        }
        if self.hb.segments.iter().any(|s| !s.1.is_finite()) || self.hb.spatial.iter().any(|t| !t.amplitude.is_finite()) {
            errs.push("h_b amplitudes must be finite".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    /// `sigma_n = c n^{-alpha}`, `n >= 1`.
    pub fn sigma(c: f64, alpha: f64, n: usize) -> f64 {
        c * (n as f64).powf(-alpha)
    }
}

/// Default boundary shapes: `k = 0` first (DN only), then nonzero wavevectors by `|k|`,
/// each as `cos e_x, cos e_y, sin e_x, sin e_y`.
pub fn default_boundary_shapes(grid: &GridSpec, count: usize) -> Vec<BoundaryShape> {
    let mut ks: Vec<(i64, i64)> = grid
        .canonical_modes()
        .into_iter()
        .map(|(ix, iy)| (GridSpec::signed(ix, grid.nx), GridSpec::signed(iy, grid.ny)))
        .filter(|&(kx, ky)| grid.bc == BcCase::DirichletNeumann || kx != 0 || ky != 0)
        .collect();
    ks.sort_by_key(|&(kx, ky)| (kx * kx + ky * ky, ky, kx));
    let mut out = Vec::new();
    for (kx, ky) in ks {
        let trigs: &[bool] = if kx == 0 && ky == 0 { &[false] } else { &[false, true] };
        for &sine in trigs {
            for dir in [[1.0, 0.0], [0.0, 1.0]] {
                out.push(BoundaryShape { kx, ky, dir, sine });
            }
        }
    }
    out.truncate(count);
    out
}

/// Eigen-loads of one boundary channel and its grouping by distinct eigenvalue.
#[derive(Debug, Clone)]
struct Channel {
    /// `(mode, <Lambda(b g_j), e_mode>)`.
    loads: Vec<(usize, f64)>,
    /// Group of each load.
    group: Vec<usize>,
    lambdas: Vec<f64>,
}

impl Channel {
    fn covariance(&self, dt: f64) -> DMatrix<f64> {
        let n = self.lambdas.len();
        DMatrix::from_fn(n, n, |a, b| ou_integral(self.lambdas[a] + self.lambdas[b], dt))
    }

    /// `F` with `F F^T` the covariance of the step integrals.
    fn factor(&self, dt: f64) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.covariance(dt));
        let mut f = eig.eigenvectors;
        for (j, mut col) in f.column_iter_mut().enumerate() {
            col *= eig.eigenvalues[j].max(0.0).sqrt();
        }
        f
    }
}

/// Immutable noise data shared by all paths.
#[derive(Debug)]
pub struct NoiseModel {
    pub spec: NoiseSpec,
    pub basis: Arc<Eigenbasis>,
    /// `(mode, sigma)`.
    pub interior: Vec<(usize, f64)>,
    channels: Vec<Channel>,
    z0: Vec<f64>,
    factors: Mutex<HashMap<(usize, u64), Arc<DMatrix<f64>>>>,
    pub warnings: Vec<String>,
}

/// Per-path noise state.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerState {
    pub t: f64,
    pub step: u64,
    pub path: u64,
    pub zf: Vec<f64>,
    pub zb: Vec<f64>,
}

const STREAM_INTERIOR: u64 = 0;
const STREAM_BOUNDARY: u64 = 1;

impl NoiseModel {
    pub fn new(spec: &NoiseSpec, op: &StokesOperator) -> Result<Self> {
        spec.validate()?;
        let basis = Arc::new(Eigenbasis::new(op));
        let g = op.grid;
        let mut warnings = Vec::new();

        let interior_idx: Vec<usize> = match &spec.interior_modes {
            Some(list) => {
                if let Some(bad) = list.iter().find(|&&n| n >= basis.len()) {
                    return Err(Error::Config(format!("interior mode {bad} exceeds the {} eigenmodes", basis.len())));
                }
                list.clone()
            }
            None => {
                let list: Vec<usize> =
                    (0..basis.len()).filter(|&n| spec.include_kernel || basis.lambda(n) > 0.0).take(spec.n_f).collect();
                if list.len() < spec.n_f {
                    return Err(Error::Config(format!("n_f = {} exceeds the {} available eigenmodes", spec.n_f, list.len())));
                }
                list
            }
        };
        let interior =
            interior_idx.iter().enumerate().map(|(i, &n)| (n, NoiseSpec::sigma(spec.c_f, spec.alpha_f, i + 1))).collect();

        let shapes = match &spec.boundary_shapes {
            Some(s) => s.clone(),
            None => {
                let s = default_boundary_shapes(&g, spec.n_b);
                if s.len() < spec.n_b {
                    return Err(Error::Config(format!("n_b = {} exceeds the {} resolvable boundary shapes", spec.n_b, s.len())));
                }
                s
            }
        };
        let mut channels = Vec::with_capacity(shapes.len());
        for (j, shape) in shapes.iter().enumerate() {
            let (hx, hy) = ((g.nx / 2) as i64, (g.ny / 2) as i64);
            if shape.kx.abs() >= hx || shape.ky.abs() >= hy {
                return Err(Error::Config(format!("boundary shape {j} wavevector ({}, {}) is not resolved", shape.kx, shape.ky)));
            }
            let amp = NoiseSpec::sigma(spec.c_b, spec.alpha_b, j + 1);
            let raw = spec.hb.multiply(&BoundaryField::single_mode(g, shape.kx, shape.ky, shape.dir, amp, shape.sine));
            let (gj, warn) =
                admissible(&raw, spec.strict_mean).map_err(|e| Error::Config(format!("boundary shape {j}: {e}")))?;
            if let Some(w) = warn {
                warnings.push(format!("boundary shape {j}: {w}"));
            }
            let proj = basis.project(&neumann_map(&gj, op)?);
            let scale = proj.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            let loads: Vec<(usize, f64)> =
                proj.into_iter().enumerate().filter(|(_, v)| scale > 0.0 && v.abs() > 1e-13 * scale).collect();
            let mut lambdas: Vec<f64> = Vec::new();
            let mut group = Vec::with_capacity(loads.len());
            for &(n, _) in &loads {
                let l = basis.lambda(n);
                let pos = lambdas.iter().position(|&m| (m - l).abs() <= 1e-12 * l.abs().max(1.0));
                group.push(pos.unwrap_or_else(|| {
                    lambdas.push(l);
                    lambdas.len() - 1
                }));
            }
            channels.push(Channel { loads, group, lambdas });
        }

        let z0 = match &spec.z0 {
            Z0Spec::Zero => vec![0.0; basis.len()],
            Z0Spec::Eigenmode { index, amplitude } => {
                if *index >= basis.len() {
                    return Err(Error::Config(format!("Z0 eigenmode {index} exceeds the {} eigenmodes", basis.len())));
                }
                let mut z = vec![0.0; basis.len()];
                z[*index] = *amplitude;
                z
            }
            Z0Spec::Field(f) => {
                if !f.grid.same_shape(&g) {
                    return Err(Error::Shape("Z0 field grid differs from the run grid".into()));
                }
                basis.project(f)
            }
        };
        Ok(NoiseModel { spec: spec.clone(), basis, interior, channels, z0, factors: Mutex::new(HashMap::new()), warnings })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Modes with nonzero boundary load.
    pub fn boundary_modes(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.channels.iter().flat_map(|c| c.loads.iter().map(|l| l.0)).collect();
        m.sort_unstable();
        m.dedup();
        m
    }

    /// Modes with nonzero interior amplitude.
    pub fn interior_modes(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.interior.iter().filter(|(_, s)| *s != 0.0).map(|(n, _)| *n).collect();
        m.sort_unstable();
        m
    }

    /// State at `t = 0` for one path.
    pub fn start(&self, path: u64) -> WienerState {
        WienerState { t: 0.0, step: 0, path, zf: self.z0.clone(), zb: vec![0.0; self.basis.len()] }
    }

    fn rng(&self, path: u64, step: u64, stream: u64) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.spec.seed.to_le_bytes());
        key[8..16].copy_from_slice(&step.to_le_bytes());
        key[16..24].copy_from_slice(&stream.to_le_bytes());
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(path);
        rng
    }

    fn factor(&self, j: usize, dt: f64) -> Arc<DMatrix<f64>> {
        let mut cache = self.factors.lock().expect("factor cache poisoned");
        cache.entry((j, dt.to_bits())).or_insert_with(|| Arc::new(self.channels[j].factor(dt))).clone()
    }

    /// Advances one path by `dt`.
    pub fn step(&self, state: &mut WienerState, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!("noise step must be positive (got {dt})")));
        }
        let basis = &self.basis;
        for (n, (zf, zb)) in state.zf.iter_mut().zip(state.zb.iter_mut()).enumerate() {
            let decay = (-basis.lambda(n) * dt).exp();
            *zf *= decay;
            *zb *= decay;
        }
        let mut rng = self.rng(state.path, state.step, STREAM_INTERIOR);
        for &(n, sigma) in &self.interior {
            let xi: f64 = rng.sample(StandardNormal);
            let l = basis.lambda(n);
            state.zf[n] += sigma * ou_integral(2.0 * l, dt).sqrt() * xi;
        }
        let a = self.spec.hb.amplitude(state.t);
        if a != 0.0 {
            let mut rng = self.rng(state.path, state.step, STREAM_BOUNDARY);
            for (j, ch) in self.channels.iter().enumerate() {
                let ng = ch.lambdas.len();
                if ng == 0 {
                    continue;
                }
                let xi: Vec<f64> = (0..ng).map(|_| rng.sample(StandardNormal)).collect();
                let f = self.factor(j, dt);
                let inc: Vec<f64> = (0..ng).map(|r| (0..ng).map(|c| f[(r, c)] * xi[c]).sum()).collect();
                for (&(n, load), &grp) in ch.loads.iter().zip(&ch.group) {
                    state.zb[n] += a * load * inc[grp];
                }
            }
        }
        state.step += 1;
        state.t = state.step as f64 * dt;
        Ok(())
    }

    /// `Z_f` and `Z_b` as native-basis fields.
    pub fn fields(&self, state: &WienerState) -> (SpectralField, SpectralField) {
        (self.basis.synthesize(&state.zf), self.basis.synthesize(&state.zb))
    }

    /// Predicted variances of the `Z_f` and `Z_b` coefficients of `modes` at `times`.
    pub fn covariance_table(&self, modes: &[usize], times: &[f64]) -> CovarianceTable {
        let sig: HashMap<usize, f64> = self.interior.iter().copied().collect();
        let mut interior = Vec::with_capacity(times.len());
        let mut boundary = Vec::with_capacity(times.len());
        for &t in times {
            let mut fi = Vec::with_capacity(modes.len());
            let mut bi = Vec::with_capacity(modes.len());
            for &n in modes {
                let l = self.basis.lambda(n);
                let s = sig.get(&n).copied().unwrap_or(0.0);
                fi.push(s * s * ou_integral(2.0 * l, t));
                let load2: f64 =
                    self.channels.iter().flat_map(|c| c.loads.iter().filter(|(m, _)| *m == n).map(|(_, v)| v * v)).sum();
                bi.push(load2 * self.spec.hb.weighted_square_integral(l, t));
            }
            interior.push(fi);
            boundary.push(bi);
        }
        CovarianceTable {
            times: times.to_vec(),
            modes: modes.to_vec(),
            lambdas: modes.iter().map(|&n| self.basis.lambda(n)).collect(),
            interior,
            boundary,
        }
    }
}

/// Closed-form coefficient variances per `(t, mode)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTable {
    pub times: Vec<f64>,
    pub modes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub interior: Vec<Vec<f64>>,
    pub boundary: Vec<Vec<f64>>,
}

impl CovarianceTable {
    /// `E ||Z_f(t_i) - E Z_f(t_i)||^2` restricted to the tabulated modes.
    pub fn interior_energy(&self, i: usize) -> f64 {
        self.interior[i].iter().sum()
    }
}

/// Builds the shared model and the `t = 0` state of path 0.
pub fn init_noise(spec: &NoiseSpec, op: &StokesOperator) -> Result<(Arc<NoiseModel>, WienerState)> {
    let model = Arc::new(NoiseModel::new(spec, op)?);
    let state = model.start(0);
    Ok((model, state))
}

/// Advances `state` and returns `(Z_f, Z_b)` at the new time.
pub fn step_noise(model: &NoiseModel, state: &mut WienerState, dt: f64) -> Result<(SpectralField, SpectralField)> {
    model.step(state, dt)?;
    Ok(model.fields(state))
}

/// Closed-form variance table over all noise-carrying modes.
pub fn noise_covariance_report(model: &NoiseModel, times: &[f64]) -> CovarianceTable {
    let mut modes = model.interior_modes();
    modes.extend(model.boundary_modes());
    modes.sort_unstable();
    modes.dedup();
    model.covariance_table(&modes, times)
}
