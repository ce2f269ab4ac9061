//! Cached 2D complex FFTs over the horizontal plane.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use super::C64;

type PlanKey = (usize, bool);

fn plans() -> &'static Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    PLANS.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut map = plans().lock().expect("fft plan cache poisoned");
    map.entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place unnormalized 2D FFT of a row-major `(ny, nx)` array.
pub fn fft2(buf: &mut [C64], nx: usize, ny: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), nx * ny);
    let px = plan(nx, inverse);
    px.process(buf);
    let py = plan(ny, inverse);
    let mut col = vec![C64::new(0.0, 0.0); ny];
    for ix in 0..nx {
        for iy in 0..ny {
            col[iy] = buf[iy * nx + ix];
        }
        py.process(&mut col);
        for iy in 0..ny {
            buf[iy * nx + ix] = col[iy];
        }
    }
}

/// Physical samples `(ny, nx)` to coefficients with `f = sum c_k e^{2 pi i k.x}`.
pub fn forward2(buf: &mut [C64], nx: usize, ny: usize) {
    fft2(buf, nx, ny, false);
    let s = 1.0 / (nx * ny) as f64;
    buf.iter_mut().for_each(|c| *c *= s);
}

/// Coefficients to physical samples.
pub fn inverse2(buf: &mut [C64], nx: usize, ny: usize) {
    fft2(buf, nx, ny, true);
}

/// Copies coefficients of an `(ny, nx)` spectrum into a zero-padded `(my, mx)` spectrum.
/// Nyquist modes of the source are dropped.
pub fn pad_spectrum(src: &[C64], nx: usize, ny: usize, mx: usize, my: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); mx * my];
    for iy in 0..ny {
        if iy == ny / 2 {
            continue;
        }
        let ky = crate::grid::GridSpec::signed(iy, ny);
        let jy = crate::grid::GridSpec::unsigned(ky, my);
        for ix in 0..nx {
            if ix == nx / 2 {
                continue;
            }
            let kx = crate::grid::GridSpec::signed(ix, nx);
            let jx = crate::grid::GridSpec::unsigned(kx, mx);
            out[jy * mx + jx] = src[iy * nx + ix];
        }
    }
    out
}

/// Inverse of [`pad_spectrum`]: keeps the retained modes, zeroes the Nyquist entries.
pub fn truncate_spectrum(src: &[C64], mx: usize, my: usize, nx: usize, ny: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); nx * ny];
    for iy in 0..ny {
        if iy == ny / 2 {
            continue;
        }
        let ky = crate::grid::GridSpec::signed(iy, ny);
        let jy = crate::grid::GridSpec::unsigned(ky, my);
        for ix in 0..nx {
            if ix == nx / 2 {
                continue;
            }
            let kx = crate::grid::GridSpec::signed(ix, nx);
            let jx = crate::grid::GridSpec::unsigned(kx, mx);
            out[iy * nx + ix] = src[jy * mx + jx];
        }
    }
    out
}
