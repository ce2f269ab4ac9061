//! Norms, time-weighted norms, time-regularity quotients and Monte Carlo reports.

use crate::error::{Error, Result};
use crate::fields::SpectralField;
use crate::grid::BcCase;
use crate::stokes::StokesOperator;
use crate::vertical::{cos_norm2, VerticalBasis};

/// Parameters of a norm request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRequest {
    /// Spatial exponent on the `p = 2` scale.
    pub s: f64,
    /// Time weight; `mu = 1` is unweighted.
    pub mu: f64,
    pub q: f64,
    /// Time-regularity exponent.
    pub theta: f64,
}

impl NormRequest {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.s >= 0.0) {
            errs.push(format!("s must be >= 0 (got {})", self.s));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            errs.push(format!("q must be in [1, inf) (got {})", self.q));
        } else if !(self.mu > 1.0 / self.q && self.mu <= 1.0) {
            errs.push(format!("mu must exceed 1/q and be <= 1 (got mu = {}, q = {})", self.mu, self.q));
        }
        if !(0.0..1.0).contains(&self.theta) {
            errs.push(format!("theta must be in [0, 1) (got {})", self.theta));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}

/// `(sum (1 + lambda)^s |c|^2)^{1/2}` on the NN grid; quadratic forms for `s in {0, 1, 2}` on DN.
pub fn sobolev_norm(f: &SpectralField, s: f64, op: &StokesOperator) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Config(format!("Sobolev exponent must be >= 0 (got {s})")));
    }
    let g = f.grid;
    match (g.bc, f.basis) {
        (BcCase::NeumannNeumann, VerticalBasis::Cosine) => {
            let mut acc = 0.0;
            for (ix, iy) in g.active_modes() {
                let b = g.idx(ix, iy, 0);
                for m in 0..g.nz {
                    let w = (1.0 + op.nn_lambda(ix, iy, m)).powf(s) * cos_norm2(m, g.h);
                    acc += w * (f.comps[0][b + m].norm_sqr() + f.comps[1][b + m].norm_sqr());
                }
            }
            Ok(acc.sqrt())
        }
        (BcCase::DirichletNeumann, VerticalBasis::Nodal) => {
            let mut t = f.clone();
            t.truncate_nyquist();
            if s == 0.0 {
                Ok(t.l2_norm())
            } else if s == 1.0 {
                Ok((t.l2_norm_sq() + op.neg_laplacian(&t).inner(&t)).max(0.0).sqrt())
            } else if s == 2.0 {
                Ok((&t + &op.apply_unchecked(&t)).l2_norm())
            } else {
                Err(Error::Config(format!("DN Sobolev norms are available for s in {{0, 1, 2}} (got {s})")))
            }
        }
        (bc, basis) => Err(Error::Config(format!("no Sobolev norm for {basis:?} fields on a {} grid", bc.name()))),
    }
}

/// `||t^{1-mu} u||_{L^q(0,T)}` by the trapezoidal rule on the given samples.
pub fn weighted_time_norm(times: &[f64], values: &[f64], mu: f64, q: f64) -> Result<f64> {
    if times.is_empty() || times.len() != values.len() {
        return Err(Error::Shape(format!("time series of lengths {} and {}", times.len(), values.len())));
    }
    if !(q >= 1.0) || !(mu > 1.0 / q && mu <= 1.0) {
        return Err(Error::Config(format!("need q >= 1 and 1/q < mu <= 1 (got mu = {mu}, q = {q})")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(Error::Domain("time grid must be nonnegative and increasing".into()));
    }
    let f: Vec<f64> = times.iter().zip(values).map(|(t, u)| (t.powf(1.0 - mu) * u.abs()).powf(q)).collect();
    let integral: f64 = times.windows(2).zip(f.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum();
    Ok(integral.powf(1.0 / q))
}

/// Time series of eigen-coefficients with the matching eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSeries {
    pub times: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `coeffs[i][n]`: coefficient of mode `n` at `times[i]`.
    pub coeffs: Vec<Vec<f64>>,
}

impl EigenSeries {
    /// Every `stride`-th sample.
    pub fn subsample(&self, stride: usize) -> EigenSeries {
        let idx: Vec<usize> = (0..self.times.len()).step_by(stride.max(1)).collect();
        EigenSeries {
            times: idx.iter().map(|&i| self.times[i]).collect(),
            lambdas: self.lambdas.clone(),
            coeffs: idx.iter().map(|&i| self.coeffs[i].clone()).collect(),
        }
    }
}

/// Discrete Sobolev-Slobodeckij seminorm in time,
/// `(sum_{i != j} ||u_i - u_j||_s^2 / |t_i - t_j|^{1 + 2 theta} dt^2)^{1/2}`, where
/// `||u||_s^2 = sum (1 + lambda)^s |a|^2`. The graph norm of `A^{1-theta}` is `s = 2(1-theta)`.
pub fn time_regularity_probe(series: &EigenSeries, theta: f64, s: Option<f64>) -> Result<f64> {
    let n = series.times.len();
    if n < 3 {
        return Err(Error::Shape(format!("time-regularity probe needs at least 3 samples (got {n})")));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::Domain(format!("theta must be in [0, 1) (got {theta})")));
    }
    let dt = series.times[1] - series.times[0];
    let uniform = series.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
    if !(dt > 0.0) || !uniform {
        return Err(Error::Domain("time-regularity probe needs a uniform increasing time grid".into()));
    }
    let s = s.unwrap_or(2.0 * (1.0 - theta));
    let w: Vec<f64> = series.lambdas.iter().map(|l| (1.0 + l).powf(s)).collect();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..i {
            let d: f64 = series.coeffs[i].iter().zip(&series.coeffs[j]).zip(&w).map(|((a, b), w)| w * (a - b).powi(2)).sum();
            acc += 2.0 * d / ((i - j) as f64 * dt).powf(1.0 + 2.0 * theta);
        }
    }
    Ok((acc * dt * dt).sqrt())
}

/// Per-(time, mode) sample moments of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMoments {
    pub times: Vec<f64>,
    pub modes: Vec<usize>,
    pub count: usize,
    /// `sum[i][n]` over paths.
    pub sum: Vec<Vec<f64>>,
    pub sum_sq: Vec<Vec<f64>>,
}

impl ModeMoments {
    pub fn new(times: Vec<f64>, modes: Vec<usize>) -> Self {
        let (nt, nm) = (times.len(), modes.len());
        ModeMoments { times, modes, count: 0, sum: vec![vec![0.0; nm]; nt], sum_sq: vec![vec![0.0; nm]; nt] }
    }

    /// Adds one path's samples `x[i][n]`.
    pub fn push(&mut self, x: &[Vec<f64>]) {
        self.count += 1;
        for (i, row) in x.iter().enumerate() {
            for (n, v) in row.iter().enumerate() {
                self.sum[i][n] += v;
                self.sum_sq[i][n] += v * v;
            }
        }
    }

    pub fn merge(&mut self, other: &ModeMoments) {
        self.count += other.count;
        for i in 0..self.sum.len() {
            for n in 0..self.sum[i].len() {
                self.sum[i][n] += other.sum[i][n];
                self.sum_sq[i][n] += other.sum_sq[i][n];
            }
        }
    }

    pub fn mean(&self, i: usize, n: usize) -> f64 {
        self.sum[i][n] / self.count as f64
    }

    /// Unbiased sample variance (0 for a single path).
    pub fn variance(&self, i: usize, n: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let m = self.count as f64;
        ((self.sum_sq[i][n] - self.sum[i][n] * self.sum[i][n] / m) / (m - 1.0)).max(0.0)
    }
}

/// One `(mode, t)` comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoEntry {
    pub mode: usize,
    pub t: f64,
    pub mc_mean: f64,
    pub mc_variance: f64,
    pub predicted: f64,
    pub z_variance: f64,
    pub z_mean: f64,
}

/// Monte Carlo variances against closed-form predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoReport {
    pub entries: Vec<ItoEntry>,
    pub paths: usize,
    pub variance_pass_fraction: f64,
    pub mean_pass_fraction: f64,
    pub warning: Option<String>,
}

impl ItoReport {
    /// `|z| <= 3` for at least 99% of entries, for both variance and mean.
    pub fn passed(&self) -> bool {
        self.variance_pass_fraction >= 0.99 && self.mean_pass_fraction >= 0.99
    }
}

fn z_of(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-300 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Compares ensemble moments with predicted variances `predicted[i][n]` (same layout).
pub fn ito_report(moments: &ModeMoments, predicted: &[Vec<f64>]) -> Result<ItoReport> {
    if predicted.len() != moments.times.len() || predicted.iter().any(|r| r.len() != moments.modes.len()) {
        return Err(Error::Shape("predicted table does not match the ensemble layout".into()));
    }
    let m = moments.count;
    let warning = (m < 1000).then(|| format!("{m} paths are too few for 3-sigma checks at the 99% level"));
    let mut entries = Vec::new();
    for (i, &t) in moments.times.iter().enumerate() {
        for (n, &mode) in moments.modes.iter().enumerate() {
            let p = predicted[i][n];
            let var = moments.variance(i, n);
            let mean = moments.mean(i, n);
            let se_var = if m > 1 { p * (2.0 / (m as f64 - 1.0)).sqrt() } else { 0.0 };
            let se_mean = (p / m as f64).sqrt();
            entries.push(ItoEntry {
                mode,
                t,
                mc_mean: mean,
                mc_variance: var,
                predicted: p,
                z_variance: z_of(var - p, se_var),
                z_mean: z_of(mean, se_mean),
            });
        }
    }
    let n = entries.len().max(1) as f64;
    let variance_pass_fraction = entries.iter().filter(|e| e.z_variance.abs() <= 3.0).count() as f64 / n;
    let mean_pass_fraction = entries.iter().filter(|e| e.z_mean.abs() <= 3.0).count() as f64 / n;
    Ok(ItoReport { entries, paths: m, variance_pass_fraction, mean_pass_fraction, warning })
}

/// Largest absolute empirical correlation between distinct columns of `samples[path][n]`.
pub fn max_cross_correlation(samples: &[Vec<f64>]) -> f64 {
    let m = samples.len();
    if m < 2 {
        return 0.0;
    }
    let k = samples[0].len();
    let mean: Vec<f64> = (0..k).map(|n| samples.iter().map(|s| s[n]).sum::<f64>() / m as f64).collect();
    let sd: Vec<f64> = (0..k)
        .map(|n| (samples.iter().map(|s| (s[n] - mean[n]).powi(2)).sum::<f64>() / m as f64).sqrt())
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in 0..a {
            if sd[a] == 0.0 || sd[b] == 0.0 {
                continue;
            }
            let c = samples.iter().map(|s| (s[a] - mean[a]) * (s[b] - mean[b])).sum::<f64>() / m as f64;
            worst = worst.max((c / (sd[a] * sd[b])).abs());
        }
    }
    worst
}
