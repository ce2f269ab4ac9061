//! Slow, independent reference computations.
//!
//! Nothing here calls the fast transforms, the projection or the operator code.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::{Samples, SpectralField, C64};
use crate::grid::{BcCase, GridSpec};
use crate::linalg::composite_gauss;
use crate::vertical::VerticalBasis;

/// Largest resolution per axis accepted by the dense references.
pub const DENSE_LIMIT: usize = 48;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Resolution of the dense references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
    pub bc: BcCase,
}

impl DenseGrid {
    pub fn new(nx: usize, ny: usize, nz: usize, h: f64, bc: BcCase) -> Result<Self> {
        let big: Vec<String> = [("nx", nx), ("ny", ny), ("nz", nz)]
            .iter()
            .filter(|(_, n)| *n > DENSE_LIMIT)
            .map(|(name, n)| format!("{name} = {n} exceeds {DENSE_LIMIT}"))
            .collect();
        if !big.is_empty() {
            return Err(Error::SizeGuard(big.join("; ")));
        }
        if nz < 2 || nx == 0 || ny == 0 || !(h > 0.0) {
            return Err(Error::Config(format!("invalid dense grid {nx}x{ny}x{nz}, h = {h}")));
        }
        Ok(DenseGrid { nx, ny, nz, h, bc })
    }

    /// Vertex nodes `z_j = -h + j h / nz`, `j = 0..=nz`.
    pub fn z_nodes(&self) -> Vec<f64> {
        let dz = self.h / self.nz as f64;
        (0..=self.nz).map(|j| -self.h + j as f64 * dz).collect()
    }

    /// Trapezoid weights on the vertex nodes.
    pub fn trapezoid(&self) -> Vec<f64> {
        let dz = self.h / self.nz as f64;
        (0..=self.nz).map(|j| if j == 0 || j == self.nz { 0.5 * dz } else { dz }).collect()
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Definition-level DFT of real samples on an `(ny, nx)` grid: `c_k = (1/N) sum f(x) e^{-2 pi i k.x}`.
pub fn direct_dft(samples: &[f64], nx: usize, ny: usize) -> Result<Vec<C64>> {
    if nx > DENSE_LIMIT || ny > DENSE_LIMIT {
        return Err(Error::SizeGuard(format!("direct DFT limited to {DENSE_LIMIT} points per axis")));
    }
    if samples.len() != nx * ny {
        return Err(Error::Shape(format!("expected {} samples, got {}", nx * ny, samples.len())));
    }
    let norm = 1.0 / (nx * ny) as f64;
    let mut out = vec![ZERO; nx * ny];
    for ky in 0..ny {
        for kx in 0..nx {
            let mut acc = ZERO;
            for y in 0..ny {
                for x in 0..nx {
                    let ph = -2.0 * PI * ((kx * x) as f64 / nx as f64 + (ky * y) as f64 / ny as f64);
                    acc += C64::from_polar(samples[y * nx + x], ph);
                }
            }
            out[ky * nx + kx] = acc * norm;
        }
    }
    Ok(out)
}

/// FD solution for one horizontal mode on the vertex nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub v: [Vec<C64>; 2],
    pub p: C64,
    /// `||M x - b||_inf / (||M||_inf ||x||_inf + ||b||_inf)`.
    pub residual: f64,
}

/// Second-order FD solve of `-V'' + |k|^2 V + i k P = f`, `V'(0) = g`, bottom condition of `bc`,
/// `k . int V = 0`, for one horizontal wavevector `k`.
pub fn fd_mode_solve(
    k: (f64, f64),
    g: [C64; 2],
    forcing: Option<&[[C64; 2]]>,
    dense: &DenseGrid,
) -> Result<ModeSolution> {
    let n = dense.nz;
    let dz = dense.h / n as f64;
    let inv2 = 1.0 / (dz * dz);
    let k2 = k.0 * k.0 + k.1 * k.1;
    let kc = [k.0, k.1];
    let nn_mean = dense.bc == BcCase::NeumannNeumann && k2 == 0.0;
    let has_p = k2 > 0.0;
    let nv = 2 * (n + 1);
    let size = nv + if has_p { 1 } else { 0 } + if nn_mean { 2 } else { 0 };
    let mut m = DMatrix::<C64>::zeros(size, size);
    let mut rhs = DVector::<C64>::zeros(size);
    let w = dense.trapezoid();
    let id = |c: usize, j: usize| c * (n + 1) + j;
    for c in 0..2 {
        for j in 0..=n {
            let r = id(c, j);
            if j == 0 && dense.bc == BcCase::DirichletNeumann {
                m[(r, r)] = C64::new(1.0, 0.0);
                continue;
            }
            if let Some(f) = forcing {
                rhs[r] = f[j][c];
            }
            m[(r, r)] = C64::new(2.0 * inv2 + k2, 0.0);
            if j == 0 {
                // ghost V_{-1} = V_1
                m[(r, id(c, 1))] -= C64::new(2.0 * inv2, 0.0);
            } else if j == n {
                // ghost V_{n+1} = V_{n-1} + 2 dz g
                m[(r, id(c, n - 1))] -= C64::new(2.0 * inv2, 0.0);
                rhs[r] += g[c] * (2.0 / dz);
            } else {
                m[(r, id(c, j - 1))] -= C64::new(inv2, 0.0);
                m[(r, id(c, j + 1))] -= C64::new(inv2, 0.0);
            }
            if has_p {
                m[(r, nv)] = C64::new(0.0, kc[c]);
            }
            if nn_mean {
                m[(r, nv + c)] = C64::new(1.0, 0.0);
            }
        }
    }
    if has_p {
        for c in 0..2 {
            for j in 0..=n {
                m[(nv, id(c, j))] = C64::new(kc[c] * w[j], 0.0);
            }
        }
    }
    if nn_mean {
        for c in 0..2 {
            for j in 0..=n {
                m[(nv + c, id(c, j))] = C64::new(w[j], 0.0);
            }
        }
    }
    let lu = m.clone().lu();
    let x = lu.solve(&rhs).ok_or_else(|| {
        Error::Solver(format!("singular FD system for k = ({}, {})", k.0, k.1))
    })?;
    let mnorm = (0..size).map(|r| m.row(r).iter().map(|c| c.norm()).sum::<f64>()).fold(0.0, f64::max);
    let xn = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let bn = rhs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let res = (&m * &x - &rhs).iter().map(|c| c.norm()).fold(0.0, f64::max);
    let residual = if mnorm * xn + bn > 0.0 { res / (mnorm * xn + bn) } else { 0.0 };
    if nn_mean {
        let mult = x[nv].norm().max(x[nv + 1].norm());
        if mult > 1e-9 * (1.0 + bn) {
            return Err(Error::MeanCompatibility(format!(
                "NN problem needs zero horizontal mean of g and of the forcing (multiplier {mult:.3e})"
            )));
        }
    }
    let v = [0, 1].map(|c| (0..=n).map(|j| x[id(c, j)]).collect::<Vec<_>>());
    Ok(ModeSolution { v, p: if has_p { x[nv] } else { ZERO }, residual })
}

/// FD solution for all horizontal modes.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub grid: DenseGrid,
    /// Vertex nodes, bottom to top.
    pub z: Vec<f64>,
    /// `v[c][(iy * nx + ix) * (nz + 1) + j]`.
    pub v: [Vec<C64>; 2],
    /// Surface pressure per horizontal mode.
    pub p: Vec<C64>,
    /// Largest per-mode relative residual.
    pub max_residual: f64,
}

impl OracleSolution {
    pub fn mode(&self, ix: usize, iy: usize, c: usize) -> &[C64] {
        let n1 = self.grid.nz + 1;
        let b = (iy * self.grid.nx + ix) * n1;
        &self.v[c][b..b + n1]
    }

    /// Discrete `-P Delta V` with homogeneous closure (the surface flux becomes a boundary
    /// layer in the top node), projected with the trapezoid mean.
    pub fn lambda(&self, ix: usize, iy: usize) -> [Vec<C64>; 2] {
        let d = &self.grid;
        let n = d.nz;
        let dz = d.h / n as f64;
        let (kx, ky) = (2.0 * PI * signed(ix, d.nx) as f64, 2.0 * PI * signed(iy, d.ny) as f64);
        let k2 = kx * kx + ky * ky;
        let mut out = [vec![ZERO; n + 1], vec![ZERO; n + 1]];
        for c in 0..2 {
            let v = self.mode(ix, iy, c);
            for j in 0..=n {
                if j == 0 && d.bc == BcCase::DirichletNeumann {
                    continue;
                }
                let lo = if j == 0 { v[1] } else { v[j - 1] };
                let hi = if j == n { v[n - 1] } else { v[j + 1] };
                out[c][j] = -(lo - v[j] * 2.0 + hi) / (dz * dz) + v[j] * k2;
            }
        }
        if k2 > 0.0 {
            let w = d.trapezoid();
            let span: f64 = w.iter().enumerate().filter(|(j, _)| !(*j == 0 && d.bc == BcCase::DirichletNeumann)).map(|(_, w)| w).sum();
            let mean = [0, 1].map(|c| out[c].iter().zip(&w).map(|(a, w)| *a * *w).sum::<C64>() / span);
            let kd = mean[0] * kx + mean[1] * ky;
            for j in 0..=n {
                if j == 0 && d.bc == BcCase::DirichletNeumann {
                    continue;
                }
                out[0][j] -= kd * (kx / k2);
                out[1][j] -= kd * (ky / k2);
            }
        }
        out
    }
}

/// Dense FD stationary solve for surface stress samples `g` (`nz = 1`, two components, on the
/// dense horizontal grid).
pub fn fd_stationary_solve(g: &Samples, dense: &DenseGrid) -> Result<OracleSolution> {
    if g.nx != dense.nx || g.ny != dense.ny || g.nz != 1 || g.ncomp != 2 {
        return Err(Error::Shape("boundary samples must be nx x ny x 1 with 2 components".into()));
    }
    let plane = g.nx * g.ny;
    let gx = direct_dft(&g.data[..plane], g.nx, g.ny)?;
    let gy = direct_dft(&g.data[plane..2 * plane], g.nx, g.ny)?;
    let n1 = dense.nz + 1;
    let mut v = [vec![ZERO; plane * n1], vec![ZERO; plane * n1]];
    let mut p = vec![ZERO; plane];
    let mut worst: f64 = 0.0;
    for iy in 0..dense.ny {
        for ix in 0..dense.nx {
            if ix == dense.nx / 2 || iy == dense.ny / 2 {
                continue;
            }
            let hm = iy * dense.nx + ix;
            let k = (2.0 * PI * signed(ix, dense.nx) as f64, 2.0 * PI * signed(iy, dense.ny) as f64);
            let sol = fd_mode_solve(k, [gx[hm], gy[hm]], None, dense)?;
            worst = worst.max(sol.residual);
            for c in 0..2 {
                v[c][hm * n1..(hm + 1) * n1].copy_from_slice(&sol.v[c]);
            }
            p[hm] = sol.p;
        }
    }
    Ok(OracleSolution { grid: *dense, z: dense.z_nodes(), v, p, max_residual: worst })
}

/// Twiddle table `e^{s 2 pi i k j / m}` for signed wavenumbers of an axis with `n` modes.
fn twiddles(n: usize, m: usize, sign: f64) -> Vec<C64> {
    let mut t = vec![ZERO; n * m];
    for i in 0..n {
        let k = signed(i, n) as f64;
        for j in 0..m {
            t[i * m + j] = C64::from_polar(1.0, sign * 2.0 * PI * k * j as f64 / m as f64);
        }
    }
    t
}

struct DenseEval {
    grid: GridSpec,
    mx: usize,
    my: usize,
    zq: Vec<f64>,
    wq: Vec<f64>,
    ex: Vec<C64>,
    ey: Vec<C64>,
}

impl DenseEval {
    /// Values of `sum c_{k,m} sym(k) phi_m(z) e^{2 pi i k.x}` on the dense points, `(q, b, a)` order.
    fn eval(&self, coeffs: &[C64], vert: &dyn Fn(usize, f64) -> f64, sym: &dyn Fn(f64, f64) -> C64) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny, nz) = (g.nx, g.ny, g.nz);
        let nq = self.zq.len();
        let basis: Vec<f64> = (0..nq).flat_map(|q| (0..nz).map(move |m| (q, m))).map(|(q, m)| vert(m, self.zq[q])).collect();
        // stage 1: vertical
        let mut t = vec![ZERO; nx * ny * nq];
        for iy in 0..ny {
            for ix in 0..nx {
                if ix == nx / 2 || iy == ny / 2 {
                    continue;
                }
                let hm = iy * nx + ix;
                let s = sym(2.0 * PI * signed(ix, nx) as f64, 2.0 * PI * signed(iy, ny) as f64);
                for q in 0..nq {
                    let mut acc = ZERO;
                    for m in 0..nz {
                        acc += coeffs[hm * nz + m] * basis[q * nz + m];
                    }
                    t[hm * nq + q] = acc * s;
                }
            }
        }
        // stage 2: y
        let mut s2 = vec![ZERO; nx * nq * self.my];
        for ix in 0..nx {
            for q in 0..nq {
                for b in 0..self.my {
                    let mut acc = ZERO;
                    for iy in 0..ny {
                        acc += t[(iy * nx + ix) * nq + q] * self.ey[iy * self.my + b];
                    }
                    s2[(ix * nq + q) * self.my + b] = acc;
                }
            }
        }
        // stage 3: x
        let mut out = vec![0.0; nq * self.my * self.mx];
        for q in 0..nq {
            for b in 0..self.my {
                for a in 0..self.mx {
                    let mut acc = ZERO;
                    for ix in 0..nx {
                        acc += s2[(ix * nq + q) * self.my + b] * self.ex[ix * self.mx + a];
                    }
                    out[(q * self.my + b) * self.mx + a] = acc.re;
                }
            }
        }
        out
    }

    /// Galerkin cosine coefficients of dense values.
    fn project(&self, vals: &[f64]) -> Vec<C64> {
        let g = &self.grid;
        let (nx, ny, nz) = (g.nx, g.ny, g.nz);
        let nq = self.zq.len();
        let norm = 1.0 / (self.mx * self.my) as f64;
        // conjugate twiddles: e^{-i...}
        let mut sx = vec![ZERO; nq * self.my * nx];
        for q in 0..nq {
            for b in 0..self.my {
                for ix in 0..nx {
                    let mut acc = ZERO;
                    for a in 0..self.mx {
                        acc += self.ex[ix * self.mx + a].conj() * vals[(q * self.my + b) * self.mx + a];
                    }
                    sx[(q * self.my + b) * nx + ix] = acc;
                }
            }
        }
        let mut out = vec![ZERO; nx * ny * nz];
        for iy in 0..ny {
            for ix in 0..nx {
                if ix == nx / 2 || iy == ny / 2 {
                    continue;
                }
                let mut col = vec![ZERO; nq];
                for (q, c) in col.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for b in 0..self.my {
                        acc += self.ey[iy * self.my + b].conj() * sx[(q * self.my + b) * nx + ix];
                    }
                    *c = acc * norm;
                }
                for m in 0..nz {
                    let nm = if m == 0 { g.h } else { 0.5 * g.h };
                    let mut acc = ZERO;
                    for q in 0..nq {
                        acc += col[q] * (self.wq[q] * (m as f64 * PI * (self.zq[q] + g.h) / g.h).cos());
                    }
                    out[(iy * nx + ix) * nz + m] = acc / nm;
                }
            }
        }
        out
    }
}

/// Dense-quadrature evaluation of `P(v . grad_H v' + w(v) d_z v')` for cosine-basis fields.
///
/// Fields are summed directly as series on a doubled horizontal grid and a Gauss-Legendre
/// vertical rule, multiplied pointwise, and projected back mode by mode.
pub fn dense_nonlinearity(v: &SpectralField, v2: &SpectralField) -> Result<SpectralField> {
    let g = v.grid;
    if g.nx > DENSE_LIMIT || g.ny > DENSE_LIMIT || g.nz > DENSE_LIMIT {
        return Err(Error::SizeGuard(format!("dense nonlinearity limited to {DENSE_LIMIT} per axis")));
    }
    if !g.same_shape(&v2.grid) {
        return Err(Error::Shape("dense nonlinearity needs fields on one grid".into()));
    }
    if v.basis != VerticalBasis::Cosine || v2.basis != VerticalBasis::Cosine {
        return Err(Error::Config("dense nonlinearity is defined for cosine-basis fields".into()));
    }
    let h = g.h;
    let nq = 4 * g.nz + 32;
    let (zq, wq) = composite_gauss(-h, 0.0, 1, nq);
    let (mx, my) = (2 * g.nx, 2 * g.ny);
    let de = DenseEval { grid: g, mx, my, zq, wq, ex: twiddles(g.nx, mx, 1.0), ey: twiddles(g.ny, my, 1.0) };
    let mu = |m: usize| m as f64 * PI / h;
    let cosv = |m: usize, z: f64| (mu(m) * (z + h)).cos();
    let sinv = |m: usize, z: f64| (mu(m) * (z + h)).sin();
    let one = |_: f64, _: f64| C64::new(1.0, 0.0);
    let ikx = |kx: f64, _: f64| C64::new(0.0, kx);
    let iky = |_: f64, ky: f64| C64::new(0.0, ky);
    let vx = de.eval(&v.comps[0], &cosv, &one);
    let vy = de.eval(&v.comps[1], &cosv, &one);
    // w = -int div v = -d_0 (z+h) - sum d_m sin_m / mu_m
    let wvert = |m: usize, z: f64| if m == 0 { -(z + h) } else { -sinv(m, z) / mu(m) };
    let w = {
        let a = de.eval(&v.comps[0], &wvert, &ikx);
        let b = de.eval(&v.comps[1], &wvert, &iky);
        a.iter().zip(&b).map(|(a, b)| a + b).collect::<Vec<_>>()
    };
    let dzvert = |m: usize, z: f64| -mu(m) * sinv(m, z);
    let mut comps = [Vec::new(), Vec::new()];
    for c in 0..2 {
        let dx = de.eval(&v2.comps[c], &cosv, &ikx);
        let dy = de.eval(&v2.comps[c], &cosv, &iky);
        let dzc = de.eval(&v2.comps[c], &dzvert, &one);
        let prod: Vec<f64> = (0..dx.len()).map(|i| vx[i] * dx[i] + vy[i] * dy[i] + w[i] * dzc[i]).collect();
        comps[c] = de.project(&prod);
    }
    // projection of the vertical mean, mode by mode
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let (kx, ky) = (2.0 * PI * signed(ix, g.nx) as f64, 2.0 * PI * signed(iy, g.ny) as f64);
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                continue;
            }
            let b = (iy * g.nx + ix) * g.nz;
            let kd = comps[0][b] * kx + comps[1][b] * ky;
            comps[0][b] -= kd * (kx / k2);
            comps[1][b] -= kd * (ky / k2);
        }
    }
    Ok(SpectralField { grid: g, basis: VerticalBasis::Cosine, comps })
}

/// Single-mode surface stress `amp trig(2 pi (kx x + ky y)) dir`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressMode {
    pub kx: i64,
    pub ky: i64,
    pub dir: [f64; 2],
    pub sine: bool,
}

impl StressMode {
    pub fn label(&self) -> String {
        let t = if self.sine { "sin" } else { "cos" };
        format!("{t}({},{})[{},{}]", self.kx, self.ky, self.dir[0], self.dir[1])
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        let a = 2.0 * PI * (self.kx as f64 * x + self.ky as f64 * y);
        if self.sine {
            a.sin()
        } else {
            a.cos()
        }
    }
}

/// The six stress modes used by the Neumann-map verification.
pub fn verification_modes() -> Vec<StressMode> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        StressMode { kx: 1, ky: 0, dir: [1.0, 0.0], sine: false },
        StressMode { kx: 0, ky: 1, dir: [1.0, 0.0], sine: true },
        StressMode { kx: 1, ky: 1, dir: [0.0, 1.0], sine: false },
        StressMode { kx: 2, ky: -1, dir: [s, s], sine: true },
        StressMode { kx: 1, ky: 2, dir: [0.6, -0.8], sine: false },
        StressMode { kx: 1, ky: -1, dir: [s, -s], sine: true },
    ]
}

/// One row of the Neumann-map verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub bc: BcCase,
    pub mode: String,
    pub nz: usize,
    /// Relative trapezoidal `L2` difference of exact and FD lifts.
    pub rel_error: f64,
    /// `log2` ratio against the previous resolution.
    pub order: Option<f64>,
    pub fd_residual: f64,
}

/// Exact per-mode stationary lift against the dense FD oracle over vertical refinements.
///
/// The exact lift is evaluated with `exact` at the oracle nodes: `exact(g, ix, iy, z)` returns
/// the two velocity components for the surface stress `g` given on the `8 x 8` grid.
pub fn neumann_verification(
    bc: BcCase,
    h: f64,
    nzs: &[usize],
    modes: &[StressMode],
    exact: &dyn Fn(&StressMode, usize, usize, f64) -> Result<[C64; 2]>,
) -> Result<Vec<VerifyRow>> {
    let (nx, ny) = (8, 8);
    let mut rows = Vec::new();
    for mode in modes {
        let mut prev: Option<f64> = None;
        for &nz in nzs {
            let dense = DenseGrid::new(nx, ny, nz, h, bc)?;
            let mut g = Samples { nx, ny, nz: 1, ncomp: 2, data: vec![0.0; 2 * nx * ny] };
            for c in 0..2 {
                for iy in 0..ny {
                    for ix in 0..nx {
                        let v = mode.value(ix as f64 / nx as f64, iy as f64 / ny as f64);
                        g.data[(c * ny + iy) * nx + ix] = mode.dir[c] * v;
                    }
                }
            }
            let sol = fd_stationary_solve(&g, &dense)?;
            let w = dense.trapezoid();
            let (mut num, mut den) = (0.0, 0.0);
            for iy in 0..ny {
                for ix in 0..nx {
                    if ix == nx / 2 || iy == ny / 2 {
                        continue;
                    }
                    for (j, &z) in sol.z.iter().enumerate() {
                        let e = exact(mode, ix, iy, z)?;
                        for (c, ec) in e.iter().enumerate() {
                            let f = sol.mode(ix, iy, c)[j];
                            num += w[j] * (f - ec).norm_sqr();
                            den += w[j] * ec.norm_sqr();
                        }
                    }
                }
            }
            let rel = (num / den).sqrt();
            rows.push(VerifyRow {
                bc,
                mode: mode.label(),
                nz,
                rel_error: rel,
                order: prev.map(|p| (p / rel).log2()),
                fd_residual: sol.max_residual,
            });
            prev = Some(rel);
        }
    }
    Ok(rows)
}
