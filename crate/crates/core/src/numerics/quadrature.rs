//! Trapezoid quadrature and discretisation settings for the inversion integrals.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use crate::error::{domain, Result};

/// Discretisation of a one-dimensional inversion integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    step: f64,
    max_abscissa: f64,
    tail_tolerance: f64,
}

impl QuadratureSpec {
    pub fn new(step: f64, max_abscissa: f64, tail_tolerance: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return domain(format!("quadrature step must be positive, got {step}"));
        }
        if !(max_abscissa >= 10.0 * step) || !max_abscissa.is_finite() {
            return domain(format!(
                "max_abscissa {max_abscissa} must be at least 10 steps ({})",
                10.0 * step
            ));
        }
        if !(tail_tolerance > 0.0) {
            return domain(format!("tail_tolerance must be positive, got {tail_tolerance}"));
        }
        Ok(Self {
            step,
            max_abscissa,
            tail_tolerance,
        })
    }

    /// 2^14 trapezoid intervals over the lattice inversion range [0, pi].
    pub fn lattice_default() -> Self {
        Self {
            step: PI / 16384.0,
            max_abscissa: PI,
            tail_tolerance: 1e-10,
        }
    }

    /// 2^14 trapezoid intervals over [0, 2000] for the damped Fourier inversion.
    pub fn wideband_default() -> Self {
        Self {
            step: 2000.0 / 16384.0,
            max_abscissa: 2000.0,
            tail_tolerance: 1e-10,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn max_abscissa(&self) -> f64 {
        self.max_abscissa
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// Number of whole intervals that fit in [0, max_abscissa].
    pub fn intervals(&self) -> usize {
        ((self.max_abscissa / self.step) * (1.0 + 1e-12)).floor() as usize
    }
}

/// Trapezoid rule over arbitrary strictly increasing abscissas.
pub fn integrate_trapezoid<T>(samples: &[(f64, T)]) -> Result<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    if samples.len() < 2 {
        return domain(format!(
            "trapezoid rule needs at least 2 samples, got {}",
            samples.len()
        ));
    }
    let mut acc: Option<T> = None;
    for pair in samples.windows(2) {
        let (x0, f0) = pair[0];
        let (x1, f1) = pair[1];
        if !(x1 > x0) {
            return domain(format!("abscissas must be strictly increasing ({x0} then {x1})"));
        }
        let piece = (f0 + f1) * (0.5 * (x1 - x0));
        acc = Some(match acc {
            Some(a) => a + piece,
            None => piece,
        });
    }
    Ok(acc.expect("at least one interval"))
}

/// Trapezoid rule on a uniform grid `x_j = x_0 + j * step`.
pub fn trapezoid_uniform<T, I>(step: f64, values: I) -> Result<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    I: IntoIterator<Item = T>,
{
    let mut iter = values.into_iter();
    let first = match iter.next() {
        Some(v) => v,
        None => return domain("trapezoid rule needs at least 2 samples, got 0"),
    };
    let mut interior: Option<T> = None;
    let mut last: Option<T> = None;
    for v in iter {
        if let Some(prev) = last {
            interior = Some(match interior {
                Some(acc) => acc + prev,
                None => prev,
            });
        }
        last = Some(v);
    }
    let last = match last {
        Some(v) => v,
        None => return domain("trapezoid rule needs at least 2 samples, got 1"),
    };
    let ends = (first + last) * 0.5;
    let total = match interior {
        Some(acc) => ends + acc,
        None => ends,
    };
    Ok(total * step)
}
