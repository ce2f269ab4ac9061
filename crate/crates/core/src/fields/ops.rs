//! Vertical averaging, vertical velocity, the hydrostatic Helmholtz projection and
//! spectral differentiation.

use std::f64::consts::PI;

use super::{apply_vertical, ScalarField, SpectralField, SurfaceField, C64, ZERO};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::vertical::{vertical, VerticalBasis};

/// `(1/h) int phi_m dz` for every slot of `basis`.
pub(crate) fn mean_weights(grid: &GridSpec, basis: VerticalBasis) -> Vec<f64> {
    let nz = grid.nz;
    match basis {
        VerticalBasis::Cosine => (0..nz).map(|m| if m == 0 { 1.0 } else { 0.0 }).collect(),
        VerticalBasis::Sine => (0..nz)
            .map(|m| match m {
                0 => 0.5,
                m if m % 2 == 1 => 2.0 / (m as f64 * PI),
                _ => 0.0,
            })
            .collect(),
        VerticalBasis::Nodal => vertical(grid).weights.iter().map(|w| w / grid.h).collect(),
    }
}

/// Vertical mean per horizontal mode of one coefficient array.
pub(crate) fn mean_of(data: &[C64], grid: &GridSpec, basis: VerticalBasis) -> Vec<C64> {
    let w = mean_weights(grid, basis);
    data.chunks_exact(grid.nz)
        .map(|col| col.iter().zip(&w).map(|(c, w)| *c * *w).sum())
        .collect()
}

/// `vbar = (1/h) int_{-h}^0 v dz`.
pub fn vertical_average(v: &SpectralField) -> SurfaceField {
    SurfaceField { grid: v.grid, comps: v.comps.iter().map(|d| mean_of(d, &v.grid, v.basis)).collect() }
}

/// Horizontal divergence as a scalar in the same vertical basis.
pub fn div_h(v: &SpectralField) -> ScalarField {
    let g = v.grid;
    let nz = g.nz;
    let mut data = vec![ZERO; g.n_coeffs()];
    for (ix, iy) in g.active_modes() {
        let (kx, ky) = g.wavevector(ix, iy);
        let b = g.idx(ix, iy, 0);
        for m in 0..nz {
            data[b + m] = C64::new(0.0, kx) * v.comps[0][b + m] + C64::new(0.0, ky) * v.comps[1][b + m];
        }
    }
    ScalarField { grid: g, basis: v.basis, data }
}

/// `w(v)(z) = -int_{-h}^z div_H v`.
///
/// Cosine input gives Sine output (slot 0 carries the ramp); nodal input uses a cumulative
/// trapezoid from the bottom. Sine input is not supported.
pub fn vertical_velocity(v: &SpectralField) -> Result<ScalarField> {
    let g = v.grid;
    let nz = g.nz;
    let d = div_h(v);
    match v.basis {
        VerticalBasis::Cosine => {
            let mut data = vec![ZERO; g.n_coeffs()];
            for (col_out, col) in data.chunks_exact_mut(nz).zip(d.data.chunks_exact(nz)) {
                col_out[0] = -col[0] * g.h;
                for m in 1..nz {
                    col_out[m] = -col[m] / g.mu(m);
                }
            }
            Ok(ScalarField { grid: g, basis: VerticalBasis::Sine, data })
        }
        VerticalBasis::Nodal => {
            let dz = g.dz();
            let mut data = vec![ZERO; g.n_coeffs()];
            for (col_out, col) in data.chunks_exact_mut(nz).zip(d.data.chunks_exact(nz)) {
                let mut acc = ZERO;
                let mut prev = ZERO;
                for j in 0..nz {
                    acc -= (prev + col[j]) * (0.5 * dz);
                    col_out[j] = acc;
                    prev = col[j];
                }
            }
            Ok(ScalarField { grid: g, basis: VerticalBasis::Nodal, data })
        }
        VerticalBasis::Sine => Err(Error::Config("vertical velocity needs a cosine or nodal field".into())),
    }
}

/// Hydrostatic Helmholtz projection.
///
/// For every `k != 0` removes `k (k . fbar) / |k|^2` from the vertical mean. Nyquist modes are
/// zeroed. Sine-basis input is first re-expressed in the cosine basis.
pub fn helmholtz_project(f: &SpectralField) -> SpectralField {
    let mut out = match f.basis {
        VerticalBasis::Sine => f.convert_basis(VerticalBasis::Cosine),
        _ => f.clone(),
    };
    let g = out.grid;
    let nz = g.nz;
    let s = vertical(&g).unit_mean();
    let w = mean_weights(&g, out.basis);
    for (ix, iy) in g.active_modes() {
        if ix == 0 && iy == 0 {
            continue;
        }
        let (kx, ky) = g.wavevector(ix, iy);
        let k2 = kx * kx + ky * ky;
        let b = g.idx(ix, iy, 0);
        let mut mx = ZERO;
        let mut my = ZERO;
        for m in 0..nz {
            mx += out.comps[0][b + m] * w[m];
            my += out.comps[1][b + m] * w[m];
        }
        let kd = mx * kx + my * ky;
        let cx = kd * (kx / k2);
        let cy = kd * (ky / k2);
        match out.basis {
            VerticalBasis::Cosine => {
                out.comps[0][b] -= cx;
                out.comps[1][b] -= cy;
            }
            _ => {
                for m in 0..nz {
                    out.comps[0][b + m] -= cx / s;
                    out.comps[1][b + m] -= cy / s;
                }
            }
        }
    }
    out.truncate_nyquist();
    out
}

/// Largest `|k . fbar(k)|` over all modes, the discrete `div_H fbar`.
pub fn mean_divergence(f: &SpectralField) -> f64 {
    let g = f.grid;
    let bar = vertical_average(f);
    g.active_modes()
        .map(|(ix, iy)| {
            let (kx, ky) = g.wavevector(ix, iy);
            let i = g.hidx(ix, iy);
            (bar.comps[0][i] * kx + bar.comps[1][i] * ky).norm()
        })
        .fold(0.0, f64::max)
}

fn horizontal_multiplier(data: &[C64], grid: &GridSpec, sym: impl Fn(f64, f64) -> C64) -> Vec<C64> {
    let nz = data.len() / grid.n_horizontal();
    let mut out = vec![ZERO; data.len()];
    for (ix, iy) in grid.active_modes() {
        let (kx, ky) = grid.wavevector(ix, iy);
        let s = sym(kx, ky);
        let b = grid.hidx(ix, iy) * nz;
        for m in 0..nz {
            out[b + m] = data[b + m] * s;
        }
    }
    out
}

/// Vertical derivative of one coefficient array; returns the output basis.
pub(crate) fn dz_coeffs(data: &[C64], grid: &GridSpec, basis: VerticalBasis) -> (Vec<C64>, VerticalBasis) {
    let nz = grid.nz;
    match basis {
        VerticalBasis::Cosine => {
            let mut out = vec![ZERO; data.len()];
            for (o, c) in out.chunks_exact_mut(nz).zip(data.chunks_exact(nz)) {
                for m in 1..nz {
                    o[m] = -c[m] * grid.mu(m);
                }
            }
            (out, VerticalBasis::Sine)
        }
        VerticalBasis::Sine => {
            let mut out = vec![ZERO; data.len()];
            for (o, c) in out.chunks_exact_mut(nz).zip(data.chunks_exact(nz)) {
                o[0] = c[0] / grid.h;
                for m in 1..nz {
                    o[m] = c[m] * grid.mu(m);
                }
            }
            (out, VerticalBasis::Cosine)
        }
        VerticalBasis::Nodal => (apply_vertical(data, grid, &vertical(grid).d1), VerticalBasis::Nodal),
    }
}

/// Spectral derivative operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    Dx,
    Dy,
    Dz,
    LapH,
    DivH,
    GradH,
}

/// Result of [`diff_op`]: divergence is scalar-valued, the rest are vector-valued.
#[derive(Debug, Clone, PartialEq)]
pub enum DiffOutput {
    Vector(SpectralField),
    Scalar(ScalarField),
}

/// Applies `op` to a vector field. `GradH` acts on the first component as a scalar potential.
pub fn diff_op(f: &SpectralField, op: DiffOp) -> Result<DiffOutput> {
    let g = f.grid;
    let vec_from = |comps: [Vec<C64>; 2], basis| DiffOutput::Vector(SpectralField { grid: g, basis, comps });
    Ok(match op {
        DiffOp::Dx => vec_from(f.comps.clone().map(|d| horizontal_multiplier(&d, &g, |kx, _| C64::new(0.0, kx))), f.basis),
        DiffOp::Dy => vec_from(f.comps.clone().map(|d| horizontal_multiplier(&d, &g, |_, ky| C64::new(0.0, ky))), f.basis),
        DiffOp::LapH => DiffOutput::Vector(laplacian_h(f)),
        DiffOp::DivH => DiffOutput::Scalar(div_h(f)),
        DiffOp::Dz => {
            let (a, basis) = dz_coeffs(&f.comps[0], &g, f.basis);
            let (b, _) = dz_coeffs(&f.comps[1], &g, f.basis);
            vec_from([a, b], basis)
        }
        DiffOp::GradH => DiffOutput::Vector(grad_h(&ScalarField { grid: g, basis: f.basis, data: f.comps[0].clone() })),
    })
}

/// `Delta_H`, i.e. multiplication by `-|k|^2`.
pub fn laplacian_h(f: &SpectralField) -> SpectralField {
    let g = f.grid;
    SpectralField {
        grid: g,
        basis: f.basis,
        comps: f.comps.clone().map(|d| horizontal_multiplier(&d, &g, |kx, ky| C64::new(-(kx * kx + ky * ky), 0.0))),
    }
}

/// `grad_H p` of a scalar.
pub fn grad_h(p: &ScalarField) -> SpectralField {
    let g = p.grid;
    SpectralField {
        grid: g,
        basis: p.basis,
        comps: [
            horizontal_multiplier(&p.data, &g, |kx, _| C64::new(0.0, kx)),
            horizontal_multiplier(&p.data, &g, |_, ky| C64::new(0.0, ky)),
        ],
    }
}

/// `grad_H p` of a surface scalar, extended constantly in `z` and written in `basis`.
pub fn surface_gradient(p: &SurfaceField, basis: VerticalBasis) -> SpectralField {
    let g = p.grid;
    let nz = g.nz;
    let mut out = SpectralField::zeros_in(g, basis);
    for (ix, iy) in g.active_modes() {
        let (kx, ky) = g.wavevector(ix, iy);
        let v = p.comps[0][g.hidx(ix, iy)];
        let b = g.idx(ix, iy, 0);
        let (gx, gy) = (v * C64::new(0.0, kx), v * C64::new(0.0, ky));
        match basis {
            VerticalBasis::Nodal => {
                for m in 0..nz {
                    out.comps[0][b + m] = gx;
                    out.comps[1][b + m] = gy;
                }
            }
            _ => {
                out.comps[0][b] = gx;
                out.comps[1][b] = gy;
            }
        }
    }
    out
}
