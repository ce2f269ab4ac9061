//! The hydrostatic Stokes operator `A = -P Delta`, its semigroup and resolvent.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, LU};

use crate::error::{Error, Result};
use crate::fields::{helmholtz_project, mean_divergence, SpectralField, SurfaceField, C64, ZERO};
use crate::grid::{BcCase, GridSpec};
use crate::linalg::weighted_eigen;
use crate::vertical::{vertical, Vertical, VerticalBasis};

/// Per-`|k|^2` vertical blocks of the DN operator.
#[derive(Debug)]
pub struct DnBlock {
    pub k2: f64,
    /// Operator on the component perpendicular to `k` (`kappa^2 - D2`).
    pub l_perp: DMatrix<f64>,
    /// Operator on the component parallel to `k` (`P_par (kappa^2 - D2)`); equals `l_perp` at `k = 0`.
    pub l_par: DMatrix<f64>,
    pub perp_vals: Vec<f64>,
    /// Weight-orthonormal eigenvectors (columns).
    pub perp_vecs: DMatrix<f64>,
    pub par_vals: Vec<f64>,
    pub par_vecs: DMatrix<f64>,
}

struct DnSolver {
    perp: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    saddle: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

type PairCache<T> = Mutex<HashMap<(u64, u64), Arc<T>>>;

/// Immutable operator data for one grid.
pub struct StokesOperator {
    pub grid: GridSpec,
    vert: Arc<Vertical>,
    dn: HashMap<u64, Arc<DnBlock>>,
    solvers: PairCache<DnSolver>,
    exps: PairCache<(DMatrix<f64>, DMatrix<f64>)>,
}

impl std::fmt::Debug for StokesOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesOperator").field("grid", &self.grid).field("dn_blocks", &self.dn.len()).finish()
    }
}

/// One row of the operator spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub kx: i64,
    pub ky: i64,
    pub m: usize,
    pub polarization: &'static str,
    pub lambda: f64,
}

/// `k/|k|` for a nonzero wavevector.
#[inline]
pub(crate) fn unit(kx: f64, ky: f64) -> (f64, f64) {
    let n = (kx * kx + ky * ky).sqrt();
    (kx / n, ky / n)
}

impl StokesOperator {
    pub fn build(grid: &GridSpec) -> Result<Self> {
        grid.validate()?;
        let vert = vertical(grid);
        let mut dn = HashMap::new();
        if grid.bc == BcCase::DirichletNeumann {
            for (ix, iy) in grid.active_modes() {
                let k2 = grid.k2(ix, iy);
                if dn.contains_key(&k2.to_bits()) {
                    continue;
                }
                dn.insert(k2.to_bits(), Arc::new(Self::dn_block(&vert, k2)?));
            }
        }
        Ok(StokesOperator { grid: *grid, vert, dn, solvers: Mutex::new(HashMap::new()), exps: Mutex::new(HashMap::new()) })
    }

    fn dn_block(vert: &Vertical, k2: f64) -> Result<DnBlock> {
        let n = vert.nz;
        let l_perp = DMatrix::identity(n, n) * k2 - &vert.d2;
        let (l_par, constraint) = if k2 == 0.0 {
            (l_perp.clone(), None)
        } else {
            let hs = vert.h * vert.unit_mean();
            let proj = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - vert.weights[j] / hs);
            (proj * &l_perp, Some(vec![1.0; n]))
        };
        let (perp_vals, perp_vecs) = weighted_eigen(&l_perp, &vert.weights, None);
        let (par_vals, par_vecs) = weighted_eigen(&l_par, &vert.weights, constraint.as_deref());
        if perp_vals.iter().chain(&par_vals).any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::NumericalSetup(format!("non-positive vertical eigenvalue for |k|^2 = {k2}")));
        }
        Ok(DnBlock { k2, l_perp, l_par, perp_vals, perp_vecs, par_vals, par_vecs })
    }

    pub fn bc(&self) -> BcCase {
        self.grid.bc
    }

    pub fn vertical(&self) -> &Vertical {
        &self.vert
    }

    /// DN block for the mode `(ix, iy)`.
    pub fn dn_block_for(&self, ix: usize, iy: usize) -> Option<&Arc<DnBlock>> {
        self.dn.get(&self.grid.k2(ix, iy).to_bits())
    }

    /// NN eigenvalue `|k|^2 + (m pi / h)^2`.
    pub fn nn_lambda(&self, ix: usize, iy: usize, m: usize) -> f64 {
        self.grid.k2(ix, iy) + self.grid.mu(m).powi(2)
    }

    fn check_basis(&self, f: &SpectralField) -> Result<()> {
        if !f.grid.same_shape(&self.grid) {
            return Err(Error::Shape("field grid differs from operator grid".into()));
        }
        if f.basis != VerticalBasis::native(self.grid.bc) {
            return Err(Error::Config(format!("operator expects {:?} coefficients, got {:?}", VerticalBasis::native(self.grid.bc), f.basis)));
        }
        Ok(())
    }

    /// Scale used for relative constraint checks.
    pub fn constraint_scale(&self, f: &SpectralField) -> f64 {
        let kmax = 2.0 * std::f64::consts::PI * ((self.grid.nx / 2) as f64).hypot((self.grid.ny / 2) as f64);
        kmax * f.max_abs()
    }

    /// Fails unless `div_H fbar` vanishes to `tol` relative.
    pub fn check_constraint(&self, f: &SpectralField, tol: f64) -> Result<()> {
        let res = mean_divergence(f);
        if res > tol * self.constraint_scale(f) {
            return Err(Error::Precondition(format!("div_H of the vertical mean is {res:.3e}, exceeding tolerance")));
        }
        Ok(())
    }

    /// `A v = -P Delta v` for constrained `v`.
    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        self.check_basis(v)?;
        self.check_constraint(v, 1e-10)?;
        Ok(self.apply_unchecked(v))
    }

    /// `-P Delta v` without the constraint check.
    pub fn apply_unchecked(&self, v: &SpectralField) -> SpectralField {
        helmholtz_project(&self.neg_laplacian(v))
    }

    /// `-Delta v` with the homogeneous boundary conditions of the regime.
    pub fn neg_laplacian(&self, v: &SpectralField) -> SpectralField {
        let g = self.grid;
        let nz = g.nz;
        let mut out = v.zeros_like();
        for (ix, iy) in g.active_modes() {
            let k2 = g.k2(ix, iy);
            let b = g.idx(ix, iy, 0);
            for c in 0..2 {
                let col = &v.comps[c][b..b + nz];
                match v.basis {
                    VerticalBasis::Cosine => {
                        for m in 0..nz {
                            out.comps[c][b + m] = col[m] * (k2 + g.mu(m).powi(2));
                        }
                    }
                    _ => {
                        for r in 0..nz {
                            let mut acc = col[r] * k2;
                            for j in 0..nz {
                                acc -= col[j] * self.vert.d2[(r, j)];
                            }
                            out.comps[c][b + r] = acc;
                        }
                    }
                }
            }
        }
        out
    }

    /// `e^{-tA} v`.
    pub fn semigroup(&self, v: &SpectralField, t: f64) -> Result<SpectralField> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("semigroup time must be finite and >= 0 (got {t})")));
        }
        self.check_basis(v)?;
        let g = self.grid;
        let nz = g.nz;
        let mut out = v.zeros_like();
        for (ix, iy) in g.active_modes() {
            let b = g.idx(ix, iy, 0);
            match g.bc {
                BcCase::NeumannNeumann => {
                    for m in 0..nz {
                        let f = (-self.nn_lambda(ix, iy, m) * t).exp();
                        for c in 0..2 {
                            out.comps[c][b + m] = v.comps[c][b + m] * f;
                        }
                    }
                }
                BcCase::DirichletNeumann => {
                    let k2 = g.k2(ix, iy);
                    let e = self.dn_exp(k2, t);
                    let (kx, ky) = g.wavevector(ix, iy);
                    self.map_mode(v, &mut out, b, kx, ky, |par, perp| (mat_vec(&e.0, par), mat_vec(&e.1, perp)));
                }
            }
        }
        Ok(out)
    }

    fn dn_exp(&self, k2: f64, t: f64) -> Arc<(DMatrix<f64>, DMatrix<f64>)> {
        let key = (k2.to_bits(), t.to_bits());
        if let Some(e) = self.exps.lock().expect("cache poisoned").get(&key) {
            return e.clone();
        }
        let blk = &self.dn[&k2.to_bits()];
        let e = Arc::new(((&blk.l_par * -t).exp(), (&blk.l_perp * -t).exp()));
        self.exps.lock().expect("cache poisoned").insert(key, e.clone());
        e
    }

    /// Splits mode `b` of `v` into parallel/perpendicular profiles (or x/y at `k = 0`), maps
    /// them with `f`, and writes the recombined result into `out`.
    fn map_mode(
        &self,
        v: &SpectralField,
        out: &mut SpectralField,
        b: usize,
        kx: f64,
        ky: f64,
        mut f: impl FnMut(&[C64], &[C64]) -> (Vec<C64>, Vec<C64>),
    ) {
        let nz = self.grid.nz;
        let cx = &v.comps[0][b..b + nz];
        let cy = &v.comps[1][b..b + nz];
        if kx == 0.0 && ky == 0.0 {
            let (a, c) = f(cx, cy);
            out.comps[0][b..b + nz].copy_from_slice(&a);
            out.comps[1][b..b + nz].copy_from_slice(&c);
            return;
        }
        let (ux, uy) = unit(kx, ky);
        let par: Vec<C64> = (0..nz).map(|m| cx[m] * ux + cy[m] * uy).collect();
        let perp: Vec<C64> = (0..nz).map(|m| -cx[m] * uy + cy[m] * ux).collect();
        let (p, q) = f(&par, &perp);
        for m in 0..nz {
            out.comps[0][b + m] = p[m] * ux - q[m] * uy;
            out.comps[1][b + m] = p[m] * uy + q[m] * ux;
        }
    }

    /// Solves `alpha V - Delta V + grad_H P_s = b`, `div_H Vbar = 0`, homogeneous boundary
    /// conditions. Returns `V` and the mean-free surface pressure.
    pub fn stokes_solve(&self, b: &SpectralField, alpha: f64) -> Result<(SpectralField, SurfaceField)> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("resolvent parameter must be positive (got {alpha})")));
        }
        self.solve(b, alpha)
    }

    /// `A^{-1} P b` (pseudo-inverse on the NN constants).
    pub fn inverse(&self, b: &SpectralField) -> Result<SpectralField> {
        Ok(self.solve(b, 0.0)?.0)
    }

    /// Shared resolvent solve; `alpha = 0` is allowed internally.
    pub(crate) fn solve(&self, b: &SpectralField, alpha: f64) -> Result<(SpectralField, SurfaceField)> {
        self.check_basis(b)?;
        let g = self.grid;
        let nz = g.nz;
        let mut v = b.zeros_like();
        let mut p = SurfaceField::zeros(g, 1);
        for (ix, iy) in g.active_modes() {
            let base = g.idx(ix, iy, 0);
            let (kx, ky) = g.wavevector(ix, iy);
            let k2 = kx * kx + ky * ky;
            let kappa = k2.sqrt();
            match g.bc {
                BcCase::NeumannNeumann => {
                    for m in 0..nz {
                        let d = alpha + self.nn_lambda(ix, iy, m);
                        for c in 0..2 {
                            v.comps[c][base + m] = if d > 0.0 { b.comps[c][base + m] / d } else { ZERO };
                        }
                    }
                    if k2 > 0.0 {
                        let (ux, uy) = unit(kx, ky);
                        let bpar = b.comps[0][base] * ux + b.comps[1][base] * uy;
                        let vpar = v.comps[0][base] * ux + v.comps[1][base] * uy;
                        v.comps[0][base] -= vpar * ux;
                        v.comps[1][base] -= vpar * uy;
                        p.comps[0][g.hidx(ix, iy)] = bpar / C64::new(0.0, kappa);
                    }
                }
                BcCase::DirichletNeumann => {
                    let solver = self.dn_solver(k2, alpha)?;
                    let mut pressure = ZERO;
                    self.map_mode(b, &mut v, base, kx, ky, |par, perp| {
                        if k2 == 0.0 {
                            return (lu_solve(&solver.perp, par), lu_solve(&solver.perp, perp));
                        }
                        let mut rhs = par.to_vec();
                        rhs.push(ZERO);
                        let mut sol = lu_solve(&solver.saddle, &rhs);
                        let pp = sol.pop().expect("saddle solution has a pressure entry");
                        // P' = i |k| P_s
                        pressure = pp / C64::new(0.0, kappa);
                        (sol, lu_solve(&solver.perp, perp))
                    });
                    p.comps[0][g.hidx(ix, iy)] = pressure;
                }
            }
        }
        v.truncate_nyquist();
        Ok((v, p))
    }

    fn dn_solver(&self, k2: f64, alpha: f64) -> Result<Arc<DnSolver>> {
        let key = (k2.to_bits(), alpha.to_bits());
        if let Some(s) = self.solvers.lock().expect("cache poisoned").get(&key) {
            return Ok(s.clone());
        }
        let n = self.grid.nz;
        let m = DMatrix::identity(n, n) * (alpha + k2) - &self.vert.d2;
        let mut saddle = DMatrix::zeros(n + 1, n + 1);
        saddle.view_mut((0, 0), (n, n)).copy_from(&m);
        for j in 0..n {
            saddle[(j, n)] = 1.0;
            saddle[(n, j)] = self.vert.weights[j];
        }
        let perp = m.lu();
        let saddle = saddle.lu();
        if !perp.is_invertible() || !saddle.is_invertible() {
            return Err(Error::NumericalSetup(format!("singular vertical system for |k|^2 = {k2}, alpha = {alpha}")));
        }
        let s = Arc::new(DnSolver { perp, saddle });
        self.solvers.lock().expect("cache poisoned").insert(key, s.clone());
        Ok(s)
    }

    /// Eigenvalues for every canonical mode, sorted by wavenumber then value.
    pub fn spectrum(&self) -> Vec<SpectrumRow> {
        let g = self.grid;
        let mut rows = Vec::new();
        for (ix, iy) in g.canonical_modes() {
            let kx = GridSpec::signed(ix, g.nx);
            let ky = GridSpec::signed(iy, g.ny);
            let zero = kx == 0 && ky == 0;
            let (pa, pb) = if zero { ("e1", "e2") } else { ("par", "perp") };
            match g.bc {
                BcCase::NeumannNeumann => {
                    for m in 0..g.nz {
                        let lambda = self.nn_lambda(ix, iy, m);
                        if zero || m > 0 {
                            rows.push(SpectrumRow { kx, ky, m, polarization: pa, lambda });
                        }
                        rows.push(SpectrumRow { kx, ky, m, polarization: pb, lambda });
                    }
                }
                BcCase::DirichletNeumann => {
                    let blk = self.dn_block_for(ix, iy).expect("block for every active mode");
                    for (m, &lambda) in blk.par_vals.iter().enumerate() {
                        rows.push(SpectrumRow { kx, ky, m, polarization: pa, lambda });
                    }
                    for (m, &lambda) in blk.perp_vals.iter().enumerate() {
                        rows.push(SpectrumRow { kx, ky, m, polarization: pb, lambda });
                    }
                }
            }
        }
        rows
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|j| x[j] * m[(r, j)]).sum()).collect()
}

fn lu_solve(lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>, rhs: &[C64]) -> Vec<C64> {
    let n = rhs.len();
    let mut b = DMatrix::zeros(n, 2);
    for (i, c) in rhs.iter().enumerate() {
        b[(i, 0)] = c.re;
        b[(i, 1)] = c.im;
    }
    let x = lu.solve(&b).expect("factorization checked at construction");
    (0..n).map(|i| C64::new(x[(i, 0)], x[(i, 1)])).collect()
}
