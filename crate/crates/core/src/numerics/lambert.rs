//! Principal branch of the complex Lambert W function.
//!
//! W(z) solves `w * exp(w) = z`. Only the principal branch is provided; its
//! branch cut is the real segment (-inf, -1/e).

use num_complex::Complex64;
use std::f64::consts::E;

use crate::error::{domain, Error, Result};

const MAX_ITERATIONS: usize = 100;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
const INV_E: f64 = 1.0 / E;

/// Principal-branch Lambert W by Halley iteration.
///
/// Returns an error for non-finite input, for points on the branch cut, and
/// when the residual `|w e^w - z|` exceeds `1e-10 * |z|` after the iteration cap.
pub fn lambert_w0(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return domain(format!("lambert_w0 requires a finite argument, got {z}"));
    }
    if z.im == 0.0 && z.re < -INV_E {
        return domain(format!(
            "lambert_w0 argument {} lies on the branch cut (-inf, -1/e)",
            z.re
        ));
    }
    if z.re == 0.0 && z.im == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let mut w = initial_guess(z);
    let one = Complex64::new(1.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + one;
        if wp1.norm() == 0.0 {
            // exactly at the branch point
            break;
        }
        let denom = ew * wp1 - (w + two) * f / (two * wp1);
        if denom.norm() == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + w.norm()) {
            break;
        }
    }

    let residual = (w * w.exp() - z).norm();
    let scale = z.norm().max(f64::MIN_POSITIVE);
    if residual <= RESIDUAL_TOLERANCE * scale && w.is_finite() {
        Ok(w)
    } else {
        Err(Error::NonConvergence {
            what: "lambert_w0",
            iterations: MAX_ITERATIONS,
            residual,
        })
    }
}

fn initial_guess(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    // Series about the branch point, W = -1 + p - p^2/3 with p = sqrt(2(ez + 1)).
    let near_branch = z + Complex64::new(INV_E, 0.0);
    if near_branch.norm() < 0.25 {
        let p = (2.0 * (E * z + one)).sqrt();
        return -one + p - p * p / 3.0;
    }
    let r = z.norm();
    if r <= 0.3 {
        z * (one - z)
    } else if r > 3.0 {
        let lz = z.ln();
        lz - lz.ln()
    } else {
        (one + z).ln()
    }
}
