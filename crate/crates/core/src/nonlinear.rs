//! Pseudospectral convection term `F(v, v') = P(v . grad_H v' + w(v) d_z v')`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::diagnostics::sobolev_norm;
use crate::error::{Error, Result};
use crate::fields::fft::{forward2, inverse2, pad_spectrum, truncate_spectrum};
use crate::fields::{apply_vertical, dz_coeffs, helmholtz_project, mean_divergence, vertical_velocity, SpectralField, C64, ZERO};
use crate::grid::{BcCase, GridSpec};
use crate::stokes::StokesOperator;
use crate::vertical::{midpoints, vertical, VerticalBasis};

/// Quadrature layout for products: 3/2-padded horizontal grid and a vertical point set.
struct ProductGrid {
    grid: GridSpec,
    mx: usize,
    my: usize,
    nq: usize,
    cos: DMatrix<f64>,
    sin: DMatrix<f64>,
    analysis: DMatrix<f64>,
}

impl ProductGrid {
    fn new(grid: &GridSpec) -> Self {
        let vert = vertical(grid);
        let mx = 3 * grid.nx / 2;
        let my = 3 * grid.ny / 2;
        match grid.bc {
            BcCase::NeumannNeumann => {
                let zq = midpoints(2 * grid.nz, grid.h);
                ProductGrid {
                    grid: *grid,
                    mx,
                    my,
                    nq: zq.len(),
                    cos: vert.synthesis_matrix(VerticalBasis::Cosine, &zq),
                    sin: vert.synthesis_matrix(VerticalBasis::Sine, &zq),
                    analysis: vert.cosine_projection(&zq),
                }
            }
            BcCase::DirichletNeumann => {
                let id = DMatrix::identity(grid.nz, grid.nz);
                ProductGrid { grid: *grid, mx, my, nq: grid.nz, cos: id.clone(), sin: id.clone(), analysis: id }
            }
        }
    }

    fn synth(&self, basis: VerticalBasis) -> &DMatrix<f64> {
        match basis {
            VerticalBasis::Sine => &self.sin,
            _ => &self.cos,
        }
    }

    /// Physical values `(q, y, x)` on the padded grid.
    fn to_physical(&self, data: &[C64], basis: VerticalBasis) -> Vec<f64> {
        let g = &self.grid;
        let cols = apply_vertical(data, g, self.synth(basis));
        let plane = self.mx * self.my;
        let mut out = vec![0.0; self.nq * plane];
        let mut spec = vec![ZERO; g.n_horizontal()];
        for q in 0..self.nq {
            for (hm, s) in spec.iter_mut().enumerate() {
                *s = cols[hm * self.nq + q];
            }
            let mut padded = pad_spectrum(&spec, g.nx, g.ny, self.mx, self.my);
            inverse2(&mut padded, self.mx, self.my);
            for (o, p) in out[q * plane..(q + 1) * plane].iter_mut().zip(&padded) {
                *o = p.re;
            }
        }
        out
    }

    /// Native-basis coefficients of padded physical values.
    fn analyse_physical(&self, vals: &[f64]) -> Vec<C64> {
        let g = &self.grid;
        let plane = self.mx * self.my;
        let mut cols = vec![ZERO; g.n_horizontal() * self.nq];
        let mut buf = vec![ZERO; plane];
        for q in 0..self.nq {
            for (b, v) in buf.iter_mut().zip(&vals[q * plane..(q + 1) * plane]) {
                *b = C64::new(*v, 0.0);
            }
            forward2(&mut buf, self.mx, self.my);
            let t = truncate_spectrum(&buf, self.mx, self.my, g.nx, g.ny);
            for (hm, c) in t.iter().enumerate() {
                cols[hm * self.nq + q] = *c;
            }
        }
        apply_vertical(&cols, g, &self.analysis)
    }
}

fn horizontal_derivative(data: &[C64], grid: &GridSpec, axis: usize) -> Vec<C64> {
    let nz = grid.nz;
    let mut out = vec![ZERO; data.len()];
    for (ix, iy) in grid.active_modes() {
        let (kx, ky) = grid.wavevector(ix, iy);
        let f = C64::new(0.0, if axis == 0 { kx } else { ky });
        let b = grid.idx(ix, iy, 0);
        for m in 0..nz {
            out[b + m] = data[b + m] * f;
        }
    }
    out
}

/// Relative size of `div_H vbar` above which `advect` refuses to evaluate.
///
/// Smaller mismatches only leave `w(v)` slightly open at the surface and are tolerated.
pub const CONSTRAINT_REJECT: f64 = 1e-6;

/// `F(v, v')`, dealiased and projected.
pub fn advect(v: &SpectralField, v2: &SpectralField) -> Result<SpectralField> {
    let mut out = helmholtz_project(&convection(v, v2)?);
    out.symmetrize();
    Ok(out)
}

/// Dealiased `v . grad_H v' + w(v) d_z v'` before projection.
pub fn convection(v: &SpectralField, v2: &SpectralField) -> Result<SpectralField> {
    v.check_compatible(v2)?;
    let g = v.grid;
    if v.basis != VerticalBasis::native(g.bc) {
        return Err(Error::Config(format!("advect expects native-basis fields, got {:?}", v.basis)));
    }
    let scale = 2.0 * PI * ((g.nx / 2) as f64).hypot((g.ny / 2) as f64) * v.max_abs();
    let mismatch = mean_divergence(v);
    if mismatch > CONSTRAINT_REJECT * scale {
        return Err(Error::Precondition(format!("div_H of the vertical mean of v is {mismatch:.3e}")));
    }
    let pg = ProductGrid::new(&g);
    let vx = pg.to_physical(&v.comps[0], v.basis);
    let vy = pg.to_physical(&v.comps[1], v.basis);
    let w = vertical_velocity(v)?;
    let wp = pg.to_physical(&w.data, w.basis);
    let mut out = v.zeros_like();
    for c in 0..2 {
        let dx = pg.to_physical(&horizontal_derivative(&v2.comps[c], &g, 0), v2.basis);
        let dy = pg.to_physical(&horizontal_derivative(&v2.comps[c], &g, 1), v2.basis);
        let (dzc, dzb) = dz_coeffs(&v2.comps[c], &g, v2.basis);
        let dz = pg.to_physical(&dzc, dzb);
        let prod: Vec<f64> = (0..dx.len()).map(|i| vx[i] * dx[i] + vy[i] * dy[i] + wp[i] * dz[i]).collect();
        out.comps[c] = pg.analyse_physical(&prod);
    }
    out.truncate_nyquist();
    Ok(out)
}

/// Relative residual of `F(v+Z, v+Z) = F(v,v) + F(v,Z) + F(Z,v) + F(Z,Z)`.
///
/// Normalized by the larger of `||F(v+Z, v+Z)||` and the largest summand, so that the
/// cancelling case `Z = -v` is measured against the scale of its terms.
pub fn bilinear_expand_check(v: &SpectralField, z: &SpectralField) -> Result<f64> {
    let full = v + z;
    let lhs = advect(&full, &full)?;
    let terms = [advect(v, v)?, advect(v, z)?, advect(z, v)?, advect(z, z)?];
    let mut sum = lhs.zeros_like();
    for t in &terms {
        sum += t;
    }
    let scale = terms.iter().map(|t| t.l2_norm()).fold(lhs.l2_norm(), f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((&lhs - &sum).l2_norm() / scale)
}

/// `|<F(v,v), v>| / (||F(v,v)|| ||v||)`.
pub fn energy_residual(v: &SpectralField) -> Result<f64> {
    let f = advect(v, v)?;
    let denom = f.l2_norm() * v.l2_norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(f.inner(v).abs() / denom)
}

/// Fixed-time ratios from the anisotropic estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropicRatios {
    /// `||F(v,v')|| / (||v||_{H^1} ||v'||_{H^{3/2}})`.
    pub primary: f64,
    /// `||F(v,v')|| / (||v||_{H^{3/2}} ||v'||_{H^1})`.
    pub symmetric: f64,
}

/// Returns `None` when a denominator vanishes or the fractional norm is unavailable (DN).
pub fn anisotropic_estimate_monitor(
    v: &SpectralField,
    v2: &SpectralField,
    op: &StokesOperator,
) -> Result<Option<AnisotropicRatios>> {
    if op.grid.bc == BcCase::DirichletNeumann {
        return Ok(None);
    }
    let f = advect(v, v2)?.l2_norm();
    let d1 = sobolev_norm(v, 1.0, op)? * sobolev_norm(v2, 1.5, op)?;
    let d2 = sobolev_norm(v, 1.5, op)? * sobolev_norm(v2, 1.0, op)?;
    if d1 == 0.0 || d2 == 0.0 {
        return Ok(None);
    }
    Ok(Some(AnisotropicRatios { primary: f / d1, symmetric: f / d2 }))
}
