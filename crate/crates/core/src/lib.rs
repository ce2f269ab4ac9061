//! Spectral simulator for the hydrostatic primitive equations on `(0,1)^2 x (-h,0)` driven by
//! interior and wind-type boundary noise.

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod linalg;
pub mod neumann;
pub mod noise;
pub mod nonlinear;
pub mod oracle;
pub mod stokes;
pub mod vertical;

pub use error::{Error, Result};
pub use fields::{BoundaryField, ScalarField, SpectralField, SurfaceField, C64};
pub use grid::{BcCase, GridSpec};
pub use stokes::StokesOperator;
