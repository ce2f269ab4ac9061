//! Physical samples <-> spectral coefficients.

use super::fft::{forward2, inverse2};
use super::{apply_vertical, ScalarField, SpectralField, SurfaceField, C64, ZERO};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::vertical::{vertical, VerticalBasis};

/// Real samples in `(comp, z, y, x)` order on the grid's physical points.
///
/// Horizontal points are `x_i = i/nx`, `y_j = j/ny`; vertical points are [`GridSpec::z_samples`].
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn zeros(nx: usize, ny: usize, nz: usize, ncomp: usize) -> Self {
        Samples { nx, ny, nz, ncomp, data: vec![0.0; nx * ny * nz * ncomp] }
    }

    pub fn for_grid(grid: &GridSpec, ncomp: usize) -> Self {
        Self::zeros(grid.nx, grid.ny, grid.nz, ncomp)
    }

    /// Fills samples from a function of `(comp, x, y, z)`.
    pub fn from_fn(grid: &GridSpec, ncomp: usize, mut f: impl FnMut(usize, f64, f64, f64) -> f64) -> Self {
        let mut s = Self::for_grid(grid, ncomp);
        let zs = grid.z_samples();
        for c in 0..ncomp {
            for (iz, &z) in zs.iter().enumerate() {
                for iy in 0..grid.ny {
                    for ix in 0..grid.nx {
                        let i = s.index(c, iz, iy, ix);
                        s.data[i] = f(c, ix as f64 / grid.nx as f64, iy as f64 / grid.ny as f64, z);
                    }
                }
            }
        }
        s
    }

    #[inline]
    pub fn index(&self, c: usize, iz: usize, iy: usize, ix: usize) -> usize {
        ((c * self.nz + iz) * self.ny + iy) * self.nx + ix
    }

    #[inline]
    pub fn get(&self, c: usize, iz: usize, iy: usize, ix: usize) -> f64 {
        self.data[self.index(c, iz, iy, ix)]
    }

    fn check(&self, grid: &GridSpec, ncomp: usize) -> Result<()> {
        if self.nx != grid.nx || self.ny != grid.ny || self.nz != grid.nz || self.ncomp != ncomp {
            return Err(Error::Shape(format!(
                "samples are {}x{}x{} with {} components, grid expects {}x{}x{} with {}",
                self.nx, self.ny, self.nz, self.ncomp, grid.nx, grid.ny, grid.nz, ncomp
            )));
        }
        if self.data.len() != self.nx * self.ny * self.nz * self.ncomp {
            return Err(Error::Shape(format!("sample buffer has length {}", self.data.len())));
        }
        Ok(())
    }
}

/// Horizontal transform of component `c`: returns values ordered `(mode, z)`.
fn horizontal_forward(s: &Samples, c: usize) -> Vec<C64> {
    let (nx, ny, nz) = (s.nx, s.ny, s.nz);
    let mut out = vec![ZERO; nx * ny * nz];
    let mut plane = vec![ZERO; nx * ny];
    for iz in 0..nz {
        let base = s.index(c, iz, 0, 0);
        for (p, &v) in plane.iter_mut().zip(&s.data[base..base + nx * ny]) {
            *p = C64::new(v, 0.0);
        }
        forward2(&mut plane, nx, ny);
        for (hm, p) in plane.iter().enumerate() {
            out[hm * nz + iz] = *p;
        }
    }
    out
}

fn horizontal_inverse(vals: &[C64], grid: &GridSpec, s: &mut Samples, c: usize) {
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let mut plane = vec![ZERO; nx * ny];
    for iz in 0..nz {
        for (hm, p) in plane.iter_mut().enumerate() {
            *p = vals[hm * nz + iz];
        }
        inverse2(&mut plane, nx, ny);
        let base = s.index(c, iz, 0, 0);
        for (d, p) in s.data[base..base + nx * ny].iter_mut().zip(&plane) {
            *d = p.re;
        }
    }
}

/// Samples to coefficients in the grid's native vertical basis.
pub fn forward_transform(s: &Samples, grid: &GridSpec) -> Result<SpectralField> {
    s.check(grid, 2)?;
    let basis = VerticalBasis::native(grid.bc);
    let ana = vertical(grid).analysis_matrix(basis);
    let comps = [0, 1].map(|c| apply_vertical(&horizontal_forward(s, c), grid, &ana));
    Ok(SpectralField { grid: *grid, basis, comps })
}

/// Coefficients to samples on the grid's physical points.
pub fn inverse_transform(f: &SpectralField) -> Samples {
    let v = vertical(&f.grid);
    let synth = v.synthesis_matrix(f.basis, &v.z);
    let mut s = Samples::for_grid(&f.grid, 2);
    for c in 0..2 {
        let vals = apply_vertical(&f.comps[c], &f.grid, &synth);
        horizontal_inverse(&vals, &f.grid, &mut s, c);
    }
    s
}

pub fn forward_transform_scalar(s: &Samples, grid: &GridSpec, basis: VerticalBasis) -> Result<ScalarField> {
    s.check(grid, 1)?;
    if basis == VerticalBasis::Nodal && grid.bc != crate::grid::BcCase::DirichletNeumann {
        return Err(Error::Config("nodal basis is only available on DN grids".into()));
    }
    let ana = vertical(grid).analysis_matrix(basis);
    Ok(ScalarField { grid: *grid, basis, data: apply_vertical(&horizontal_forward(s, 0), grid, &ana) })
}

pub fn inverse_transform_scalar(f: &ScalarField) -> Samples {
    let v = vertical(&f.grid);
    let synth = v.synthesis_matrix(f.basis, &v.z);
    let mut s = Samples::for_grid(&f.grid, 1);
    horizontal_inverse(&apply_vertical(&f.data, &f.grid, &synth), &f.grid, &mut s, 0);
    s
}

/// Surface data on the horizontal grid, `nz = 1`.
pub fn surface_samples(f: &SurfaceField) -> Samples {
    let (nx, ny) = (f.grid.nx, f.grid.ny);
    let mut s = Samples::zeros(nx, ny, 1, f.comps.len());
    for (c, comp) in f.comps.iter().enumerate() {
        let mut plane = comp.clone();
        inverse2(&mut plane, nx, ny);
        for (d, p) in s.data[c * nx * ny..(c + 1) * nx * ny].iter_mut().zip(&plane) {
            *d = p.re;
        }
    }
    s
}
