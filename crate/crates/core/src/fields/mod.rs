//! Spectral fields on the cylinder: horizontal Fourier x vertical basis.

pub mod fft;
mod ops;
mod transform;

pub use ops::{
    diff_op, div_h, grad_h, helmholtz_project, laplacian_h, mean_divergence, surface_gradient, vertical_average,
    vertical_velocity, DiffOp, DiffOutput,
};
pub(crate) use ops::dz_coeffs;
pub use transform::{
    forward_transform, forward_transform_scalar, inverse_transform, inverse_transform_scalar, surface_samples, Samples,
};

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::vertical::{vertical, VerticalBasis};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Two-component horizontal velocity-type field.
///
/// Coefficient `comps[c][grid.idx(ix, iy, m)]` multiplies `e^{2 pi i k.x} phi_m(z)`, where
/// `phi_m` is determined by `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub basis: VerticalBasis,
    pub comps: [Vec<C64>; 2],
}

/// One-component field, e.g. the vertical velocity `w(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub basis: VerticalBasis,
    pub data: Vec<C64>,
}

/// z-independent data on `G`, indexed `comps[c][grid.hidx(ix, iy)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    pub grid: GridSpec,
    pub comps: Vec<Vec<C64>>,
}

/// Surface stress data on the top boundary.
pub type BoundaryField = SurfaceField;

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::zeros_in(grid, VerticalBasis::native(grid.bc))
    }

    pub fn zeros_in(grid: GridSpec, basis: VerticalBasis) -> Self {
        let n = grid.n_coeffs();
        SpectralField { grid, basis, comps: [vec![ZERO; n], vec![ZERO; n]] }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros_in(self.grid, self.basis)
    }

    #[inline]
    pub fn at(&self, c: usize, ix: usize, iy: usize, m: usize) -> C64 {
        self.comps[c][self.grid.idx(ix, iy, m)]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, ix: usize, iy: usize, m: usize) -> &mut C64 {
        let i = self.grid.idx(ix, iy, m);
        &mut self.comps[c][i]
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if !self.grid.same_shape(&other.grid) || self.basis != other.basis {
            return Err(Error::Shape(format!(
                "field grids/bases differ: {:?}/{:?} vs {:?}/{:?}",
                self.grid, self.basis, other.grid, other.basis
            )));
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        self.comps.iter_mut().flatten().for_each(|c| *c *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        debug_assert!(self.grid.same_shape(&x.grid) && self.basis == x.basis);
        for c in 0..2 {
            for (s, v) in self.comps[c].iter_mut().zip(&x.comps[c]) {
                *s += *v * a;
            }
        }
    }

    /// Largest `|c(k) - conj(c(-k))|` over all coefficients.
    pub fn hermitian_defect(&self) -> f64 {
        self.comps.iter().map(|d| hermitian_defect(d, &self.grid)).fold(0.0, f64::max)
    }

    /// Enforces `c(-k) = conj(c(k))` by averaging each pair.
    pub fn symmetrize(&mut self) {
        let g = self.grid;
        self.comps.iter_mut().for_each(|d| symmetrize(d, &g));
    }

    /// Zeroes all Nyquist horizontal modes.
    pub fn truncate_nyquist(&mut self) {
        let g = self.grid;
        self.comps.iter_mut().for_each(|d| zero_nyquist(d, &g));
    }

    /// Vertical Gram-weighted squared L2 norm (unit horizontal area).
    pub fn l2_norm_sq(&self) -> f64 {
        self.comps.iter().map(|d| quad_form(d, &self.grid, self.basis, None)).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().max(0.0).sqrt()
    }

    /// Real L2 inner product.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.basis, other.basis, "inner product needs matching bases");
        (0..2).map(|c| quad_form(&self.comps[c], &self.grid, self.basis, Some(&other.comps[c]))).sum()
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Applies a `nz x nz` vertical matrix to every horizontal mode of every component.
    pub fn map_vertical(&self, mat: &DMatrix<f64>, basis: VerticalBasis) -> Self {
        SpectralField {
            grid: self.grid,
            basis,
            comps: [apply_vertical(&self.comps[0], &self.grid, mat), apply_vertical(&self.comps[1], &self.grid, mat)],
        }
    }

    /// Re-expresses the field in another vertical basis on the same native samples.
    pub fn convert_basis(&self, basis: VerticalBasis) -> Self {
        if basis == self.basis {
            return self.clone();
        }
        let v = vertical(&self.grid);
        let synth = v.synthesis_matrix(self.basis, &v.z);
        let ana = v.analysis_matrix(basis);
        self.map_vertical(&(ana * synth), basis)
    }
}

impl ScalarField {
    pub fn zeros_in(grid: GridSpec, basis: VerticalBasis) -> Self {
        ScalarField { grid, basis, data: vec![ZERO; grid.n_coeffs()] }
    }

    pub fn l2_norm(&self) -> f64 {
        quad_form(&self.data, &self.grid, self.basis, None).max(0.0).sqrt()
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.data, &self.grid)
    }

    /// Profile values at arbitrary depths for the horizontal mode `(ix, iy)`.
    pub fn profile_at(&self, ix: usize, iy: usize, z: &[f64]) -> Vec<C64> {
        let v = vertical(&self.grid);
        let s = v.synthesis_matrix(self.basis, z);
        let base = self.grid.idx(ix, iy, 0);
        (0..z.len())
            .map(|q| (0..self.grid.nz).map(|m| self.data[base + m] * s[(q, m)]).sum())
            .collect()
    }
}

impl SurfaceField {
    pub fn zeros(grid: GridSpec, ncomp: usize) -> Self {
        SurfaceField { grid, comps: vec![vec![ZERO; grid.n_horizontal()]; ncomp] }
    }

    #[inline]
    pub fn at(&self, c: usize, ix: usize, iy: usize) -> C64 {
        self.comps[c][self.grid.hidx(ix, iy)]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, ix: usize, iy: usize) -> &mut C64 {
        let i = self.grid.hidx(ix, iy);
        &mut self.comps[c][i]
    }

    /// L2 norm over the unit square.
    pub fn l2_norm(&self) -> f64 {
        self.comps.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horizontal mean (the `k = 0` coefficient) of component `c`.
    pub fn mean(&self, c: usize) -> C64 {
        self.comps[c][0]
    }

    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for d in &self.comps {
            for iy in 0..g.ny {
                for ix in 0..g.nx {
                    let (jx, jy) = g.mirror(ix, iy);
                    worst = worst.max((d[g.hidx(ix, iy)] - d[g.hidx(jx, jy)].conj()).norm());
                }
            }
        }
        worst
    }

    pub fn scale(&mut self, a: f64) {
        self.comps.iter_mut().flatten().for_each(|c| *c *= a);
    }

    /// Single real Fourier mode `amp * trig(2 pi k.x) * dir`, with `trig = cos` or `sin`.
    pub fn single_mode(grid: GridSpec, kx: i64, ky: i64, dir: [f64; 2], amp: f64, sine: bool) -> Self {
        let mut out = Self::zeros(grid, 2);
        let ix = GridSpec::unsigned(kx, grid.nx);
        let iy = GridSpec::unsigned(ky, grid.ny);
        let (jx, jy) = grid.mirror(ix, iy);
        for c in 0..2 {
            if kx == 0 && ky == 0 {
                if !sine {
                    out.comps[c][0] += C64::new(amp * dir[c], 0.0);
                }
                continue;
            }
            let (a, b) = if sine {
                (C64::new(0.0, -0.5 * amp * dir[c]), C64::new(0.0, 0.5 * amp * dir[c]))
            } else {
                (C64::new(0.5 * amp * dir[c], 0.0), C64::new(0.5 * amp * dir[c], 0.0))
            };
            out.comps[c][grid.hidx(ix, iy)] += a;
            out.comps[c][grid.hidx(jx, jy)] += b;
        }
        out
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scaled(a)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        self.axpy(-1.0, rhs);
    }
}

/// `out[mode][m'] = sum_m mat[m', m] data[mode][m]`; the input column length is `mat.ncols()`.
pub(crate) fn apply_vertical(data: &[C64], grid: &GridSpec, mat: &DMatrix<f64>) -> Vec<C64> {
    let nz = mat.ncols();
    let nout = mat.nrows();
    let mut out = vec![ZERO; grid.n_horizontal() * nout];
    for (hm, chunk) in data.chunks_exact(nz).enumerate() {
        let dst = &mut out[hm * nout..(hm + 1) * nout];
        for (r, d) in dst.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (m, v) in chunk.iter().enumerate() {
                acc += *v * mat[(r, m)];
            }
            *d = acc;
        }
    }
    out
}

fn quad_form(a: &[C64], grid: &GridSpec, basis: VerticalBasis, b: Option<&[C64]>) -> f64 {
    let v = vertical(grid);
    let nz = grid.nz;
    let b = b.unwrap_or(a);
    let mut total = 0.0;
    match basis {
        VerticalBasis::Sine => {
            let gram = v.gram(basis);
            for (ca, cb) in a.chunks_exact(nz).zip(b.chunks_exact(nz)) {
                for i in 0..nz {
                    for j in 0..nz {
                        total += (ca[i].conj() * cb[j]).re * gram[(i, j)];
                    }
                }
            }
        }
        _ => {
            let diag: Vec<f64> = match basis {
                VerticalBasis::Cosine => (0..nz).map(|m| crate::vertical::cos_norm2(m, grid.h)).collect(),
                _ => v.weights.clone(),
            };
            for (ca, cb) in a.chunks_exact(nz).zip(b.chunks_exact(nz)) {
                for m in 0..nz {
                    total += (ca[m].conj() * cb[m]).re * diag[m];
                }
            }
        }
    }
    total
}

pub(crate) fn hermitian_defect(d: &[C64], g: &GridSpec) -> f64 {
    let nz = d.len() / g.n_horizontal();
    let mut worst: f64 = 0.0;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let (jx, jy) = g.mirror(ix, iy);
            let a = g.hidx(ix, iy) * nz;
            let b = g.hidx(jx, jy) * nz;
            for m in 0..nz {
                worst = worst.max((d[a + m] - d[b + m].conj()).norm());
            }
        }
    }
    worst
}

pub(crate) fn symmetrize(d: &mut [C64], g: &GridSpec) {
    let nz = d.len() / g.n_horizontal();
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let (jx, jy) = g.mirror(ix, iy);
            let a = g.hidx(ix, iy);
            let b = g.hidx(jx, jy);
            if b < a {
                continue;
            }
            for m in 0..nz {
                let avg = 0.5 * (d[a * nz + m] + d[b * nz + m].conj());
                d[a * nz + m] = avg;
                d[b * nz + m] = avg.conj();
            }
        }
    }
}

pub(crate) fn zero_nyquist(d: &mut [C64], g: &GridSpec) {
    let nz = d.len() / g.n_horizontal();
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            if g.is_nyquist(ix, iy) {
                let a = g.hidx(ix, iy) * nz;
                d[a..a + nz].iter_mut().for_each(|c| *c = ZERO);
            }
        }
    }
}
