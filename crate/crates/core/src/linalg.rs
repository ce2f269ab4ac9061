//! Small dense helpers shared by the operator, Neumann and noise code.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` panels of `order` points.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order > 0"));
    let pairs = rule.as_node_weight_pairs();
    let w = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * w;
        for &(x, wt) in pairs {
            nodes.push(lo + 0.5 * w * (x + 1.0));
            weights.push(0.5 * w * wt);
        }
    }
    (nodes, weights)
}

/// Integrates `f` over `[a, b]` with a composite Gauss-Legendre rule.
pub fn integrate(a: f64, b: f64, panels: usize, order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = composite_gauss(a, b, panels, order);
    x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum()
}

/// Eigenpairs of `L` that is self-adjoint in the inner product `<x, y> = x^T diag(w) y`.
///
/// Returns ascending eigenvalues and `w`-orthonormal eigenvectors (columns). When `constraint`
/// is given, the operator is restricted to `{x : <x, constraint>_w = 0}`.
pub fn weighted_eigen(l: &DMatrix<f64>, w: &[f64], constraint: Option<&[f64]>) -> (Vec<f64>, DMatrix<f64>) {
    let n = l.nrows();
    let sq: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let mut s = DMatrix::from_fn(n, n, |i, j| sq[i] * l[(i, j)] / sq[j]);
    s = (&s + s.transpose()) * 0.5;
    let basis = match constraint {
        None => DMatrix::identity(n, n),
        Some(c) => {
            let q = DVector::from_fn(n, |i, _| sq[i] * c[i]);
            orthogonal_complement(&q)
        }
    };
    let reduced = basis.transpose() * &s * &basis;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = &basis * eig.eigenvectors.select_columns(&order);
    let vecs = DMatrix::from_fn(n, vals.len(), |i, j| {
        let sign = if y.column(j).iter().fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { *v } else { acc }) < 0.0 {
            -1.0
        } else {
            1.0
        };
        sign * y[(i, j)] / sq[i]
    });
    (vals, vecs)
}

/// Orthonormal basis (columns) of the complement of the nonzero vector `q`, via a Householder
/// reflection.
pub fn orthogonal_complement(q: &DVector<f64>) -> DMatrix<f64> {
    let n = q.len();
    let qn = q.norm();
    let mut v = q / qn;
    let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += s;
    let vn2 = v.norm_squared();
    let house = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vn2);
    house.columns(1, n - 1).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_gauss_integrates_exponentials() {
        let v = integrate(-1.0, 0.0, 8, 12, |z| (3.0 * z).exp());
        assert!((v - (1.0 - (-3.0f64).exp()) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn complement_is_orthonormal() {
        let q = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let b = orthogonal_complement(&q);
        assert!((b.transpose() * &q).amax() < 1e-14);
        assert!((b.transpose() * &b - DMatrix::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn weighted_eigen_reconstructs() {
        let w = vec![0.5, 1.0, 2.0];
        // L = W^{-1} S with S symmetric is W-self-adjoint
        let s = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let l = DMatrix::from_fn(3, 3, |i, j| s[(i, j)] / w[i]);
        let (vals, vecs) = weighted_eigen(&l, &w, None);
        for j in 0..3 {
            let x = vecs.column(j);
            let r = &l * x - x * vals[j];
            assert!(r.amax() < 1e-12);
            let nrm: f64 = (0..3).map(|i| w[i] * x[i] * x[i]).sum();
            assert!((nrm - 1.0).abs() < 1e-12);
        }
    }
}
