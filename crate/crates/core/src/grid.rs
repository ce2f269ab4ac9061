//! Discretization of the cylinder `(0,1)^2 x (-h,0)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Boundary-condition regime on the bottom `z = -h`; the surface is always Neumann.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcCase {
    /// `d_z v = 0` on the bottom.
    NeumannNeumann,
    /// `v = 0` on the bottom.
    DirichletNeumann,
}

impl BcCase {
    pub fn tag(self) -> u8 {
        match self {
            BcCase::NeumannNeumann => 0,
            BcCase::DirichletNeumann => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(BcCase::NeumannNeumann),
            1 => Ok(BcCase::DirichletNeumann),
            t => Err(Error::Format(format!("unknown boundary tag {t}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BcCase::NeumannNeumann => "NN",
            BcCase::DirichletNeumann => "DN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "NN" | "nn" | "NeumannNeumann" | "neumann-neumann" => Some(BcCase::NeumannNeumann),
            "DN" | "dn" | "DirichletNeumann" | "dirichlet-neumann" => Some(BcCase::DirichletNeumann),
            _ => None,
        }
    }
}

/// Resolution and geometry. The horizontal domain is the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Cosine modes (NN) or collocation nodes above the bottom (DN).
    pub nz: usize,
    pub h: f64,
    pub bc: BcCase,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, nz: usize, h: f64, bc: BcCase) -> Result<Self> {
        let g = GridSpec { nx, ny, nz, h, bc };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.nx < 4 || !self.nx.is_multiple_of(2) {
            errs.push(format!("nx must be even and >= 4 (got {})", self.nx));
        }
        if self.ny < 4 || !self.ny.is_multiple_of(2) {
            errs.push(format!("ny must be even and >= 4 (got {})", self.ny));
        }
        if self.nz < 3 {
            errs.push(format!("nz must be >= 3 (got {})", self.nz));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            errs.push(format!("h must be positive and finite (got {})", self.h));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    /// Number of horizontal modes `nx * ny`.
    pub fn n_horizontal(&self) -> usize {
        self.nx * self.ny
    }

    /// Length of one component's coefficient array.
    pub fn n_coeffs(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn hidx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize, m: usize) -> usize {
        (iy * self.nx + ix) * self.nz + m
    }

    /// Signed integer wavenumber for FFT index `i` on an axis of length `n`.
    #[inline]
    pub fn signed(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// FFT index of the integer wavenumber `k` on an axis of length `n`.
    #[inline]
    pub fn unsigned(k: i64, n: usize) -> usize {
        k.rem_euclid(n as i64) as usize
    }

    #[inline]
    pub fn is_nyquist(&self, ix: usize, iy: usize) -> bool {
        ix == self.nx / 2 || iy == self.ny / 2
    }

    /// Index of the mode `-k`.
    #[inline]
    pub fn mirror(&self, ix: usize, iy: usize) -> (usize, usize) {
        ((self.nx - ix) % self.nx, (self.ny - iy) % self.ny)
    }

    /// Physical wavevector `2 pi (kx, ky)`.
    #[inline]
    pub fn wavevector(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            2.0 * PI * Self::signed(ix, self.nx) as f64,
            2.0 * PI * Self::signed(iy, self.ny) as f64,
        )
    }

    #[inline]
    pub fn k2(&self, ix: usize, iy: usize) -> f64 {
        let (a, b) = self.wavevector(ix, iy);
        a * a + b * b
    }

    /// Vertical wavenumber `m pi / h` of cosine mode `m`.
    #[inline]
    pub fn mu(&self, m: usize) -> f64 {
        m as f64 * PI / self.h
    }

    /// DN node spacing.
    pub fn dz(&self) -> f64 {
        self.h / self.nz as f64
    }

    /// Vertical sample points of the physical representation.
    ///
    /// NN: cell midpoints `-h + (j + 1/2) h / nz`. DN: nodes `-h + j h / nz`, `j = 1..=nz`.
    pub fn z_samples(&self) -> Vec<f64> {
        let dz = self.h / self.nz as f64;
        match self.bc {
            BcCase::NeumannNeumann => (0..self.nz).map(|j| -self.h + (j as f64 + 0.5) * dz).collect(),
            BcCase::DirichletNeumann => (1..=self.nz).map(|j| -self.h + j as f64 * dz).collect(),
        }
    }

    /// Iterator over all horizontal index pairs that are not Nyquist modes.
    pub fn active_modes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny)
            .flat_map(move |iy| (0..self.nx).map(move |ix| (ix, iy)))
            .filter(move |&(ix, iy)| !self.is_nyquist(ix, iy))
    }

    /// Canonical half-plane representatives: `k = 0` and one of each `{k, -k}` pair.
    pub fn canonical_modes(&self) -> Vec<(usize, usize)> {
        self.active_modes()
            .filter(|&(ix, iy)| {
                let kx = Self::signed(ix, self.nx);
                let ky = Self::signed(iy, self.ny);
                ky > 0 || (ky == 0 && kx >= 0)
            })
            .collect()
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.nz == other.nz
            && self.bc == other.bc
            && self.h == other.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 4, 4, 1.0, BcCase::NeumannNeumann).is_err());
        assert!(GridSpec::new(4, 4, 2, 1.0, BcCase::NeumannNeumann).is_err());
        assert!(GridSpec::new(4, 4, 4, 0.0, BcCase::DirichletNeumann).is_err());
        let err = GridSpec::new(5, 2, 1, -1.0, BcCase::NeumannNeumann).unwrap_err();
        // every violation is listed
        assert_eq!(err.to_string().matches("must").count(), 4);
    }

    #[test]
    fn wavenumbers_and_mirror() {
        let g = GridSpec::new(8, 6, 4, 1.0, BcCase::NeumannNeumann).unwrap();
        assert_eq!(GridSpec::signed(5, 8), -3);
        assert_eq!(GridSpec::unsigned(-3, 8), 5);
        assert_eq!(g.mirror(1, 2), (7, 4));
        assert!(g.is_nyquist(4, 0));
        let n_canon = g.canonical_modes().len();
        // (nx-1)(ny-1) active modes: one self-conjugate plus pairs
        assert_eq!(n_canon, (7 * 5 - 1) / 2 + 1);
    }
}
