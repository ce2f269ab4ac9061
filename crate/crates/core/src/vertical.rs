//! Vertical discretization: cosine/sine families on midpoints (NN) and
//! second-order collocation on a vertex grid (DN).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::grid::{BcCase, GridSpec};

/// Which vertical functions the `m` index of a coefficient array refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerticalBasis {
    /// `cos(m pi (z+h)/h)`, `m = 0..nz`.
    Cosine,
    /// Slot 0 is the ramp `(z+h)/h`; slot `m >= 1` is `sin(m pi (z+h)/h)`.
    Sine,
    /// Nodal values at `z_j = -h + j h/nz`, `j = 1..=nz` (bottom value 0).
    Nodal,
}

impl VerticalBasis {
    pub fn native(bc: BcCase) -> Self {
        match bc {
            BcCase::NeumannNeumann => VerticalBasis::Cosine,
            BcCase::DirichletNeumann => VerticalBasis::Nodal,
        }
    }
}

/// Precomputed vertical operators for one `(nz, h, bc)` triple.
#[derive(Debug)]
pub struct Vertical {
    pub nz: usize,
    pub h: f64,
    pub bc: BcCase,
    /// Physical sample points.
    pub z: Vec<f64>,
    /// Quadrature weights at the sample points (sum to `h` for NN, `h s` for DN).
    pub weights: Vec<f64>,
    /// DN: homogeneous-BC second derivative (Dirichlet bottom, ghost Neumann top).
    pub d2: DMatrix<f64>,
    /// DN: second-order first derivative.
    pub d1: DMatrix<f64>,
    /// NN: samples -> sine/ramp coefficients.
    sine_analysis: DMatrix<f64>,
}

fn cache() -> &'static Mutex<HashMap<(usize, u64, u8), Arc<Vertical>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64, u8), Arc<Vertical>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared vertical operators for `grid`.
pub fn vertical(grid: &GridSpec) -> Arc<Vertical> {
    let key = (grid.nz, grid.h.to_bits(), grid.bc.tag());
    let mut map = cache().lock().expect("vertical cache poisoned");
    map.entry(key)
        .or_insert_with(|| Arc::new(Vertical::build(grid.nz, grid.h, grid.bc)))
        .clone()
}

#[inline]
pub fn cos_mode(m: usize, z: f64, h: f64) -> f64 {
    (m as f64 * PI * (z + h) / h).cos()
}

/// Sine family with the ramp in slot 0.
#[inline]
pub fn sine_mode(m: usize, z: f64, h: f64) -> f64 {
    if m == 0 {
        (z + h) / h
    } else {
        (m as f64 * PI * (z + h) / h).sin()
    }
}

/// `int_{-h}^0 cos_m^2`.
#[inline]
pub fn cos_norm2(m: usize, h: f64) -> f64 {
    if m == 0 {
        h
    } else {
        0.5 * h
    }
}

/// Midpoints of `n` equal cells of `(-h, 0)`.
pub fn midpoints(n: usize, h: f64) -> Vec<f64> {
    let dz = h / n as f64;
    (0..n).map(|j| -h + (j as f64 + 0.5) * dz).collect()
}

impl Vertical {
    fn build(nz: usize, h: f64, bc: BcCase) -> Self {
        let dz = h / nz as f64;
        match bc {
            BcCase::NeumannNeumann => {
                let z = midpoints(nz, h);
                let weights = vec![dz; nz];
                let b = DMatrix::from_fn(nz, nz, |q, m| sine_mode(m, z[q], h));
                let sine_analysis = b.try_inverse().expect("sine/ramp collocation matrix is invertible");
                Vertical {
                    nz,
                    h,
                    bc,
                    z,
                    weights,
                    d2: DMatrix::zeros(0, 0),
                    d1: DMatrix::zeros(0, 0),
                    sine_analysis,
                }
            }
            BcCase::DirichletNeumann => {
                let z: Vec<f64> = (1..=nz).map(|j| -h + j as f64 * dz).collect();
                let mut weights = vec![dz; nz];
                weights[nz - 1] = 0.5 * dz;
                let inv2 = 1.0 / (dz * dz);
                let mut d2 = DMatrix::zeros(nz, nz);
                for r in 0..nz - 1 {
                    if r > 0 {
                        d2[(r, r - 1)] = inv2;
                    }
                    d2[(r, r)] = -2.0 * inv2;
                    d2[(r, r + 1)] = inv2;
                }
                d2[(nz - 1, nz - 2)] = 2.0 * inv2;
                d2[(nz - 1, nz - 1)] = -2.0 * inv2;
                let inv = 0.5 / dz;
                let mut d1 = DMatrix::zeros(nz, nz);
                for r in 0..nz - 1 {
                    if r > 0 {
                        d1[(r, r - 1)] = -inv;
                    }
                    d1[(r, r + 1)] = inv;
                }
                d1[(nz - 1, nz - 1)] = 3.0 * inv;
                d1[(nz - 1, nz - 2)] = -4.0 * inv;
                d1[(nz - 1, nz - 3)] = inv;
                Vertical {
                    nz,
                    h,
                    bc,
                    z,
                    weights,
                    d2,
                    d1,
                    sine_analysis: DMatrix::zeros(0, 0),
                }
            }
        }
    }

    /// Discrete vertical mean of the constant profile (1 for NN, `1 - 1/(2 nz)` for DN).
    pub fn unit_mean(&self) -> f64 {
        match self.bc {
            BcCase::NeumannNeumann => 1.0,
            BcCase::DirichletNeumann => self.weights.iter().sum::<f64>() / self.h,
        }
    }

    /// Samples of a vertical profile given by coefficients in `basis`, at points `z`.
    pub fn synthesis_matrix(&self, basis: VerticalBasis, z: &[f64]) -> DMatrix<f64> {
        match basis {
            VerticalBasis::Cosine => DMatrix::from_fn(z.len(), self.nz, |q, m| cos_mode(m, z[q], self.h)),
            VerticalBasis::Sine => DMatrix::from_fn(z.len(), self.nz, |q, m| sine_mode(m, z[q], self.h)),
            VerticalBasis::Nodal => {
                assert_eq!(z.len(), self.nz, "nodal synthesis is only defined on the nodes");
                DMatrix::identity(self.nz, self.nz)
            }
        }
    }

    /// Maps samples on the native points to coefficients.
    pub fn analysis_matrix(&self, basis: VerticalBasis) -> DMatrix<f64> {
        match basis {
            VerticalBasis::Cosine => self.cosine_projection(&self.z),
            VerticalBasis::Sine => self.sine_analysis.clone(),
            VerticalBasis::Nodal => DMatrix::identity(self.nz, self.nz),
        }
    }

    /// Midpoint-rule cosine projection from samples on `n` equal-cell midpoints `z`.
    pub fn cosine_projection(&self, z: &[f64]) -> DMatrix<f64> {
        let w = self.h / z.len() as f64;
        DMatrix::from_fn(self.nz, z.len(), |m, q| w * cos_mode(m, z[q], self.h) / cos_norm2(m, self.h))
    }

    /// Gram matrix of the basis functions (L2 on `(-h,0)`, or the nodal quadrature).
    pub fn gram(&self, basis: VerticalBasis) -> DMatrix<f64> {
        let h = self.h;
        match basis {
            VerticalBasis::Cosine => DMatrix::from_fn(self.nz, self.nz, |a, b| if a == b { cos_norm2(a, h) } else { 0.0 }),
            VerticalBasis::Sine => DMatrix::from_fn(self.nz, self.nz, |a, b| match (a, b) {
                (0, 0) => h / 3.0,
                (0, m) | (m, 0) => {
                    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                    sign * h / (m as f64 * PI)
                }
                (a, b) if a == b => 0.5 * h,
                _ => 0.0,
            }),
            VerticalBasis::Nodal => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.weights.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_projection_inverts_synthesis() {
        let v = Vertical::build(7, 1.3, BcCase::NeumannNeumann);
        let s = v.synthesis_matrix(VerticalBasis::Cosine, &v.z);
        let a = v.analysis_matrix(VerticalBasis::Cosine);
        let id = &a * &s;
        assert!((id - DMatrix::identity(7, 7)).amax() < 1e-13);
        let s = v.synthesis_matrix(VerticalBasis::Sine, &v.z);
        let a = v.analysis_matrix(VerticalBasis::Sine);
        assert!((&a * &s - DMatrix::identity(7, 7)).amax() < 1e-11);
    }

    #[test]
    fn sine_gram_matches_quadrature() {
        let h = 2.0;
        let v = Vertical::build(5, h, BcCase::NeumannNeumann);
        let g = v.gram(VerticalBasis::Sine);
        let zq = midpoints(4000, h);
        for a in 0..5 {
            for b in 0..5 {
                let q: f64 = zq.iter().map(|&z| sine_mode(a, z, h) * sine_mode(b, z, h)).sum::<f64>() * h / 4000.0;
                assert!((q - g[(a, b)]).abs() < 1e-6, "{a} {b} {q} {}", g[(a, b)]);
            }
        }
    }

    #[test]
    fn dn_second_derivative_is_weight_symmetric() {
        let v = Vertical::build(9, 1.0, BcCase::DirichletNeumann);
        let w = v.gram(VerticalBasis::Nodal);
        let s = &w * &v.d2;
        assert!((&s - s.transpose()).amax() < 1e-9);
        assert!((v.unit_mean() - (1.0 - 1.0 / 18.0)).abs() < 1e-15);
    }
}
