//! Hydrostatic Neumann map: surface stress `g` to interior forcing.
//!
//! The stationary problem `-Delta V + grad_H P_s = 0`, `div_H Vbar = 0`, `d_z V = g` at the
//! surface has `Delta V = grad_H P_s`, which `P` annihilates. The map is therefore realized in
//! the extrapolated sense `Lambda g = A (P V)`: its eigen-coefficients are
//! `<Lambda g, e_n> = lambda_n <V, e_n> = <g, e_n(0)>`.

use crate::error::{Error, Result};
use crate::fields::{helmholtz_project, mean_divergence, BoundaryField, SpectralField, C64, ZERO};
use crate::grid::{BcCase, GridSpec};
use crate::linalg::{composite_gauss, integrate};
use crate::stokes::{unit, StokesOperator};
use crate::vertical::cos_norm2;

/// Largest `|ghat(0)|` tolerated by the NN regime.
const MEAN_TOL: f64 = 1e-12;

/// `cosh(kappa (z+h)) / sinh(kappa h)` and its derivative divided by `kappa`, without overflow.
fn nn_kernel(kappa: f64, h: f64, z: f64) -> (f64, f64) {
    let d = 1.0 - (-2.0 * kappa * h).exp();
    let a = (kappa * z).exp();
    let b = (-kappa * (z + 2.0 * h)).exp();
    ((a + b) / d, (a - b) / d)
}

/// `sinh(kappa (z+h)) / cosh(kappa h)` and `cosh(kappa (z+h)) / cosh(kappa h)`.
fn dn_kernel(kappa: f64, h: f64, z: f64) -> (f64, f64) {
    let d = 1.0 + (-2.0 * kappa * h).exp();
    let a = (kappa * z).exp();
    let b = (-kappa * (z + 2.0 * h)).exp();
    ((a - b) / d, (a + b) / d)
}

/// `cosh(kappa z) / cosh(kappa h)` and `sinh(kappa z) / cosh(kappa h)`.
fn dn_top(kappa: f64, h: f64, z: f64) -> (f64, f64) {
    let d = 1.0 + (-2.0 * kappa * h).exp();
    let a = (kappa * (z - h)).exp();
    let b = (-kappa * (z + h)).exp();
    ((a + b) / d, (a - b) / d)
}

fn sech(x: f64) -> f64 {
    2.0 * (-x).exp() / (1.0 + (-2.0 * x).exp())
}

/// Checks the regime's admissibility of `g`. With `strict = false` a nonzero NN mean is
/// removed and a warning returned instead of an error.
pub fn admissible(g: &BoundaryField, strict: bool) -> Result<(BoundaryField, Option<String>)> {
    if g.comps.len() != 2 {
        return Err(Error::Shape(format!("boundary data needs 2 components, got {}", g.comps.len())));
    }
    if g.grid.bc == BcCase::DirichletNeumann {
        return Ok((g.clone(), None));
    }
    let mean = g.mean(0).norm().max(g.mean(1).norm());
    if mean <= MEAN_TOL * g.max_abs().max(1.0) {
        return Ok((g.clone(), None));
    }
    if strict {
        return Err(Error::MeanCompatibility(format!(
            "NN boundary data must have zero horizontal mean (|ghat(0)| = {mean:.3e})"
        )));
    }
    let mut out = g.clone();
    out.comps[0][0] = ZERO;
    out.comps[1][0] = ZERO;
    Ok((out, Some(format!("removed horizontal mean {mean:.3e} from NN boundary data"))))
}

fn check_grid(g: &BoundaryField, grid: &GridSpec) -> Result<()> {
    if !g.grid.same_shape(grid) {
        return Err(Error::Shape("boundary data grid differs from the operator grid".into()));
    }
    Ok(())
}

/// Harmonic lift `U` of Lemma-type kernels: `Delta U = 0`, `d_z U = g` on top, regime bottom
/// condition. Returned in the grid's native basis.
pub fn laplace_lift(g: &BoundaryField) -> Result<SpectralField> {
    let (g, _) = admissible(g, true)?;
    let grid = g.grid;
    let nz = grid.nz;
    let h = grid.h;
    let mut out = SpectralField::zeros(grid);
    let zs = grid.z_samples();
    for (ix, iy) in grid.active_modes() {
        let kappa = grid.k2(ix, iy).sqrt();
        let b = grid.idx(ix, iy, 0);
        for c in 0..2 {
            let gh = g.at(c, ix, iy);
            for m in 0..nz {
                out.comps[c][b + m] = match grid.bc {
                    BcCase::NeumannNeumann if kappa == 0.0 => ZERO,
                    BcCase::NeumannNeumann => {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        gh * (sign / ((kappa * kappa + grid.mu(m).powi(2)) * cos_norm2(m, h)))
                    }
                    BcCase::DirichletNeumann if kappa == 0.0 => gh * (zs[m] + h),
                    BcCase::DirichletNeumann => gh * (dn_kernel(kappa, h, zs[m]).0 / kappa),
                };
            }
        }
    }
    Ok(out)
}

/// Exact solution of the stationary problem with surface stress `g`, evaluable at any depth.
#[derive(Debug, Clone)]
pub struct StationaryLift {
    pub grid: GridSpec,
    g: BoundaryField,
}

impl StationaryLift {
    pub fn new(g: &BoundaryField) -> Result<Self> {
        let (g, _) = admissible(g, true)?;
        Ok(StationaryLift { grid: g.grid, g })
    }

    fn split(&self, ix: usize, iy: usize) -> (f64, f64, f64, C64, C64) {
        let (kx, ky) = self.grid.wavevector(ix, iy);
        let (ux, uy) = unit(kx, ky);
        let gx = self.g.at(0, ix, iy);
        let gy = self.g.at(1, ix, iy);
        ((kx * kx + ky * ky).sqrt(), ux, uy, gx * ux + gy * uy, -gx * uy + gy * ux)
    }

    /// Parallel-profile constant `gamma` (with `P_s = i kappa gamma`).
    fn gamma(&self, kappa: f64, gp: C64) -> C64 {
        let h = self.grid.h;
        match self.grid.bc {
            BcCase::NeumannNeumann => -gp / (kappa * kappa * h),
            BcCase::DirichletNeumann => {
                let kh = kappa * h;
                let t = (kh).tanh();
                -gp * ((1.0 - sech(kh)) / (kappa * kappa * h * (1.0 - t / kh)))
            }
        }
    }

    /// `(V(z), d_z V(z))` for the horizontal mode `(ix, iy)`.
    pub fn eval(&self, ix: usize, iy: usize, z: f64) -> ([C64; 2], [C64; 2]) {
        let h = self.grid.h;
        let (kappa, ux, uy, gp, gq) = self.split(ix, iy);
        if self.grid.is_nyquist(ix, iy) {
            return ([ZERO; 2], [ZERO; 2]);
        }
        if kappa == 0.0 {
            return match self.grid.bc {
                BcCase::NeumannNeumann => ([ZERO; 2], [ZERO; 2]),
                BcCase::DirichletNeumann => {
                    let g0 = [self.g.at(0, 0, 0), self.g.at(1, 0, 0)];
                    ([g0[0] * (z + h), g0[1] * (z + h)], g0)
                }
            };
        }
        let gamma = self.gamma(kappa, gp);
        let (vp, vq, dp, dq) = match self.grid.bc {
            BcCase::NeumannNeumann => {
                let (c, s) = nn_kernel(kappa, h, z);
                (gp * (c / kappa) + gamma, gq * (c / kappa), gp * s, gq * s)
            }
            BcCase::DirichletNeumann => {
                let (s, c) = dn_kernel(kappa, h, z);
                let (ct, st) = dn_top(kappa, h, z);
                (
                    gamma * (1.0 - ct) + gp * (s / kappa),
                    gq * (s / kappa),
                    -gamma * (kappa * st) + gp * c,
                    gq * c,
                )
            }
        };
        let rot = |p: C64, q: C64| [p * ux - q * uy, p * uy + q * ux];
        (rot(vp, vq), rot(dp, dq))
    }

    /// Mean-free surface pressure of the stationary solution.
    pub fn pressure(&self) -> BoundaryField {
        let grid = self.grid;
        let mut p = BoundaryField::zeros(grid, 1);
        for (ix, iy) in grid.active_modes() {
            let (kappa, _, _, gp, _) = self.split(ix, iy);
            if kappa > 0.0 {
                p.comps[0][grid.hidx(ix, iy)] = C64::new(0.0, kappa) * self.gamma(kappa, gp);
            }
        }
        p
    }

    /// Projected lift `P V` in the grid's native basis.
    pub fn to_field(&self) -> SpectralField {
        let grid = self.grid;
        let nz = grid.nz;
        let h = grid.h;
        let mut out = SpectralField::zeros(grid);
        match grid.bc {
            BcCase::NeumannNeumann => {
                for (ix, iy) in grid.active_modes() {
                    let kappa = grid.k2(ix, iy).sqrt();
                    if kappa == 0.0 {
                        continue;
                    }
                    let b = grid.idx(ix, iy, 0);
                    for m in 0..nz {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        let f = sign / ((kappa * kappa + grid.mu(m).powi(2)) * cos_norm2(m, h));
                        for c in 0..2 {
                            out.comps[c][b + m] = self.g.at(c, ix, iy) * f;
                        }
                    }
                }
            }
            BcCase::DirichletNeumann => {
                let zs = grid.z_samples();
                for (ix, iy) in grid.active_modes() {
                    let b = grid.idx(ix, iy, 0);
                    for (j, &z) in zs.iter().enumerate() {
                        let (v, _) = self.eval(ix, iy, z);
                        out.comps[0][b + j] = v[0];
                        out.comps[1][b + j] = v[1];
                    }
                }
            }
        }
        helmholtz_project(&out)
    }
}

/// `A^{-1} Lambda g`: the projected stationary lift.
pub fn neumann_lift(g: &BoundaryField, op: &StokesOperator) -> Result<SpectralField> {
    check_grid(g, &op.grid)?;
    Ok(StationaryLift::new(g)?.to_field())
}

/// `Lambda g = A P V` via the direct per-mode solve.
pub fn neumann_map(g: &BoundaryField, op: &StokesOperator) -> Result<SpectralField> {
    Ok(op.apply_unchecked(&neumann_lift(g, op)?))
}

/// Cutoff profiles used by the constructive route.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffPair {
    pub h: f64,
    c_phi: f64,
}

/// Residuals of the cutoff conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffReport {
    pub phi_mean_error: f64,
    pub chi_integral: f64,
    pub chi_bottom_error: f64,
    pub chi_top_slope: f64,
}

const CUT_PANELS: usize = 64;
const CUT_ORDER: usize = 16;

impl CutoffPair {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config(format!("cutoff depth must be positive (got {h})")));
        }
        let unit_bump = integrate(-1.0, 1.0, CUT_PANELS, CUT_ORDER, bump);
        Ok(CutoffPair { h, c_phi: 2.0 / unit_bump })
    }

    fn s(&self, z: f64) -> f64 {
        2.0 * z / self.h + 1.0
    }

    /// Smooth bump supported in `(-h, 0)` with `(1/h) int phi = 1`.
    pub fn phi(&self, z: f64) -> f64 {
        self.c_phi * bump(self.s(z))
    }

    pub fn phi_dd(&self, z: f64) -> f64 {
        let s = self.s(z);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - s * s;
        let g1 = -2.0 * s / (q * q);
        let g2 = -(2.0 + 6.0 * s * s) / (q * q * q);
        self.c_phi * bump(s) * (g1 * g1 + g2) * 4.0 / (self.h * self.h)
    }

    /// Cubic with `int chi = 0`, `chi(-h) = 1`, `chi'(0) = 0`.
    pub fn chi(&self, z: f64) -> f64 {
        let r = (z + self.h) / self.h;
        1.0 - 6.0 * r * r + 4.0 * r * r * r
    }

    pub fn chi_d(&self, z: f64) -> f64 {
        let r = (z + self.h) / self.h;
        (-12.0 * r + 12.0 * r * r) / self.h
    }

    pub fn check(&self) -> Result<CutoffReport> {
        let h = self.h;
        let rep = CutoffReport {
            phi_mean_error: (integrate(-h, 0.0, CUT_PANELS, CUT_ORDER, |z| self.phi(z)) / h - 1.0).abs(),
            chi_integral: integrate(-h, 0.0, CUT_PANELS, CUT_ORDER, |z| self.chi(z)).abs(),
            chi_bottom_error: (self.chi(-h) - 1.0).abs(),
            chi_top_slope: self.chi_d(0.0).abs(),
        };
        let worst = rep.phi_mean_error.max(rep.chi_integral / h).max(rep.chi_bottom_error).max(rep.chi_top_slope * h);
        if worst > 1e-12 {
            return Err(Error::Config(format!("cutoff conditions violated (worst residual {worst:.3e})")));
        }
        Ok(rep)
    }
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Scalar solver for `-y'' + kappa^2 y + p = f`, `y(-h) = 0`, `y'(0) = 0`, `int y = 0`.
struct GreenSolver {
    kappa: f64,
    h: f64,
    /// `mean(omega_1)` with `omega_1` the solution for `f = 1`, no pressure.
    omega_mean: f64,
}

const GREEN_PANELS: usize = 24;
const GREEN_ORDER: usize = 20;

impl GreenSolver {
    fn new(kappa: f64, h: f64) -> Self {
        let kh = kappa * h;
        GreenSolver { kappa, h, omega_mean: (1.0 - kh.tanh() / kh) / (kappa * kappa) }
    }

    fn omega(&self, z: f64) -> f64 {
        (1.0 - dn_top(self.kappa, self.h, z).0) / (self.kappa * self.kappa)
    }

    /// Green's function `y1(min) y2(max) / (kappa cosh(kappa h))`, `y1 = sinh(kappa(.+h))`,
    /// `y2 = cosh(kappa .)`.
    fn kernel(&self, z: f64, zeta: f64) -> f64 {
        let (lo, hi) = if zeta <= z { (zeta, z) } else { (z, zeta) };
        let k = self.kappa;
        let h = self.h;
        let num = (k * (lo + hi)).exp() + (k * (lo - hi)).exp() - (k * (hi - lo - 2.0 * h)).exp()
            - (-k * (lo + hi + 2.0 * h)).exp();
        num / (2.0 * k * (1.0 + (-2.0 * k * h).exp()))
    }

    /// Free solution `int G(z, .) f` at `z`.
    fn free(&self, z: f64, f: &impl Fn(f64) -> f64) -> f64 {
        let h = self.h;
        let mut acc = 0.0;
        for (a, b) in [(-h, z), (z, 0.0)] {
            if b > a {
                let (x, w) = composite_gauss(a, b, GREEN_PANELS, GREEN_ORDER);
                acc += x.iter().zip(&w).map(|(x, w)| w * self.kernel(z, *x) * f(*x)).sum::<f64>();
            }
        }
        acc
    }

    /// Returns the constrained solution as a closure-ready coefficient: `y = free - beta omega`.
    fn beta(&self, f: &impl Fn(f64) -> f64) -> f64 {
        let inner = integrate(-self.h, 0.0, 4 * GREEN_PANELS, GREEN_ORDER, |z| f(z) * self.omega(z));
        inner / (self.h * self.omega_mean)
    }

    fn solve_at(&self, z: f64, f: &impl Fn(f64) -> f64, beta: f64) -> f64 {
        self.free(z, f) - beta * self.omega(z)
    }
}

/// Output of the constructive route.
#[derive(Debug, Clone)]
pub struct ConstructiveReport {
    pub lambda: SpectralField,
    /// Projected stationary solution `P V` assembled from the decomposition.
    pub lift: SpectralField,
    /// DN: largest `|div_H Ubar'|` relative to `||g||`; NN: `|div_H Vbar|`.
    pub mean_div_residual: f64,
    /// Largest `|d_z V(0) - g|` relative to `||g||`.
    pub top_residual: f64,
    /// Largest bottom-condition residual relative to `||g||`.
    pub bottom_residual: f64,
}

/// `Lambda g` through the decomposition used in the existence proof.
///
/// NN: `V = V_delta + U - Ubar` with `A V_delta = P(-Delta_H Ubar)`.
/// DN: `U_1 = phi (1-P) Ubar`, `U_2 = -A^{-1}(chi c)`, `U' = U - U_1 + U_2`,
/// `V_delta = A^{-1}(chi c - P Delta U_1)`, `V = V_delta + U'`.
pub fn neumann_map_constructive(
    g: &BoundaryField,
    op: &StokesOperator,
    cutoffs: &CutoffPair,
) -> Result<ConstructiveReport> {
    check_grid(g, &op.grid)?;
    cutoffs.check()?;
    if (cutoffs.h - op.grid.h).abs() > 1e-14 * op.grid.h {
        return Err(Error::Config("cutoff depth differs from the grid depth".into()));
    }
    let (g, _) = admissible(g, true)?;
    let gnorm = g.l2_norm().max(f64::MIN_POSITIVE);
    match op.grid.bc {
        BcCase::NeumannNeumann => constructive_nn(&g, op, gnorm),
        BcCase::DirichletNeumann => constructive_dn(&g, op, cutoffs, gnorm),
    }
}

fn constructive_nn(g: &BoundaryField, op: &StokesOperator, gnorm: f64) -> Result<ConstructiveReport> {
    let grid = op.grid;
    let h = grid.h;
    let u = laplace_lift(g)?;
    // Ubar sits in the m = 0 slot; the forcing -Delta_H Ubar = |k|^2 Ubar
    let mut ubar = SpectralField::zeros(grid);
    let mut forcing = SpectralField::zeros(grid);
    for (ix, iy) in grid.active_modes() {
        let b = grid.idx(ix, iy, 0);
        for c in 0..2 {
            ubar.comps[c][b] = u.comps[c][b];
            forcing.comps[c][b] = u.comps[c][b] * grid.k2(ix, iy);
        }
    }
    let v_delta = op.inverse(&forcing)?;
    let mut v = &v_delta + &u;
    v -= &ubar;
    let lift = helmholtz_project(&v);
    let mut top: f64 = 0.0;
    let mut bottom: f64 = 0.0;
    for (ix, iy) in grid.active_modes() {
        let kappa = grid.k2(ix, iy).sqrt();
        if kappa == 0.0 {
            continue;
        }
        // the cosine remainder has zero slope at both ends; U carries the data
        let (_, s_top) = nn_kernel(kappa, h, 0.0);
        let (_, s_bot) = nn_kernel(kappa, h, -h);
        for c in 0..2 {
            let gh = g.at(c, ix, iy);
            top = top.max((gh * s_top - gh).norm());
            bottom = bottom.max((gh * s_bot).norm());
        }
    }
    Ok(ConstructiveReport {
        lambda: op.apply_unchecked(&lift),
        mean_div_residual: mean_divergence(&v_delta) / gnorm,
        lift,
        top_residual: top / gnorm,
        bottom_residual: bottom / gnorm,
    })
}

fn constructive_dn(
    g: &BoundaryField,
    op: &StokesOperator,
    cut: &CutoffPair,
    gnorm: f64,
) -> Result<ConstructiveReport> {
    let grid = op.grid;
    let h = grid.h;
    let zs = grid.z_samples();
    let mut v = SpectralField::zeros(grid);
    let mut mean_res: f64 = 0.0;
    let mut top: f64 = 0.0;
    let mut bottom: f64 = 0.0;
    let (qz, qw) = composite_gauss(-h, 0.0, 8, 12);
    for (ix, iy) in grid.active_modes() {
        let b = grid.idx(ix, iy, 0);
        let (kx, ky) = grid.wavevector(ix, iy);
        let kappa = (kx * kx + ky * ky).sqrt();
        let gx = g.at(0, ix, iy);
        let gy = g.at(1, ix, iy);
        if kappa == 0.0 {
            for (j, &z) in zs.iter().enumerate() {
                v.comps[0][b + j] = gx * (z + h);
                v.comps[1][b + j] = gy * (z + h);
            }
            continue;
        }
        let (ux, uy) = unit(kx, ky);
        let gp = gx * ux + gy * uy;
        let gq = -gx * uy + gy * ux;
        let ukern = |z: f64| dn_kernel(kappa, h, z).0 / kappa;
        // (1-P) Ubar is the parallel part of the mean of U
        let a = gp * ((1.0 - sech(kappa * h)) / (kappa * kappa * h));
        let k2 = kappa * kappa;
        let green = GreenSolver::new(kappa, h);
        // profiles per unit `a`
        let f_c = |z: f64| cut.chi(z) * k2;
        let f_delta = |z: f64| cut.chi(z) * k2 - (cut.phi_dd(z) - k2 * (cut.phi(z) - 1.0));
        let beta_c = green.beta(&f_c);
        let beta_d = green.beta(&f_delta);
        let u2 = |z: f64| -green.solve_at(z, &f_c, beta_c);
        // div_H Ubar' through quadrature of U_2's mean
        let u2_mean: f64 = qz.iter().zip(&qw).map(|(z, w)| w * u2(*z)).sum::<f64>() / h;
        mean_res = mean_res.max((a * u2_mean).norm() * kappa);
        for (j, &z) in zs.iter().enumerate() {
            let vd = green.solve_at(z, &f_delta, beta_d);
            let vp = gp * ukern(z) + a * (vd - cut.phi(z) + u2(z));
            let vq = gq * ukern(z);
            v.comps[0][b + j] = vp * ux - vq * uy;
            v.comps[1][b + j] = vp * uy + vq * ux;
        }
        // the Green's function and omega_1 have zero slope at the surface, so U carries the data
        let (_, c_top) = dn_kernel(kappa, h, 0.0);
        top = top.max((gp * c_top - gp).norm()).max((gq * c_top - gq).norm());
        let corr_bottom = green.solve_at(-h, &f_delta, beta_d) + u2(-h);
        bottom = bottom.max((gp * ukern(-h) + a * corr_bottom).norm());
    }
    let lift = helmholtz_project(&v);
    Ok(ConstructiveReport {
        lambda: op.apply_unchecked(&lift),
        lift,
        mean_div_residual: mean_res / gnorm,
        top_residual: top / gnorm,
        bottom_residual: bottom / gnorm,
    })
}

/// One row of the kernel-identity report.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelIdentityRow {
    pub h: f64,
    pub k: f64,
    pub nn_quadrature: f64,
    pub nn_closed_form: f64,
    pub dn_quadrature: f64,
    pub dn_closed_form: f64,
}

impl KernelIdentityRow {
    pub fn nn_relative_error(&self) -> f64 {
        ((self.nn_quadrature - self.nn_closed_form) / self.nn_closed_form).abs()
    }

    pub fn dn_relative_error(&self) -> f64 {
        ((self.dn_quadrature - self.dn_closed_form) / self.dn_closed_form).abs()
    }
}

/// Quadrature vs closed form for `int (cosh(k(z+h))/sinh(hk))^2` and `int (sinh(k(z+h))/cosh(hk))^2`.
pub fn kernel_identities(h: f64, ks: &[f64]) -> Result<Vec<KernelIdentityRow>> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("depth must be positive (got {h})")));
    }
    ks.iter()
        .map(|&k| {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::Domain(format!("|k| must be positive (got {k})")));
            }
            let nn_q = integrate(-h, 0.0, 64, 20, |z| nn_kernel(k, h, z).0.powi(2));
            let dn_q = integrate(-h, 0.0, 64, 20, |z| dn_kernel(k, h, z).0.powi(2));
            let two = 2.0 * h * k;
            Ok(KernelIdentityRow {
                h,
                k,
                nn_quadrature: nn_q,
                nn_closed_form: (two.sinh() + two) / (4.0 * k * (h * k).sinh().powi(2)),
                dn_quadrature: dn_q,
                dn_closed_form: (two.sinh() - two) / (4.0 * k * (h * k).cosh().powi(2)),
            })
        })
        .collect()
}

/// Analytic stationary lift against the dense FD oracle for the six standard stress modes.
pub fn verify_against_oracle(bc: BcCase, h: f64, nzs: &[usize]) -> Result<Vec<crate::oracle::VerifyRow>> {
    let grid = GridSpec::new(8, 8, 8, h, bc)?;
    let exact = |m: &crate::oracle::StressMode, ix: usize, iy: usize, z: f64| -> Result<[C64; 2]> {
        let g = BoundaryField::single_mode(grid, m.kx, m.ky, m.dir, 1.0, m.sine);
        Ok(StationaryLift::new(&g)?.eval(ix, iy, z).0)
    };
    crate::oracle::neumann_verification(bc, h, nzs, &crate::oracle::verification_modes(), &exact)
}
