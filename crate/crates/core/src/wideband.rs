//! Wide-band system with lognormal power-control error.
//!
//! A packet on attempt k sees the normalised interference
//! `Y_k = sum_m sum_{j <= N_m} e^theta`, `theta ~ N((m - k) ln v, 2 beta^2 sigma^2)`,
//! `N_m ~ Poisson(alpha P_m)`. The lognormal Laplace transform is replaced by
//! its Lambert-W saddle-point approximation and the CDF is recovered by a
//! damped Fourier inversion along `Im(w) = eta`:
//!
//! ```text
//! F(x) = e^{eta x} / pi * Re int_0^inf e^{-i w x} phi(w + i eta) / (eta - i w) dw
//! ```
//!
//! `Y_k` has an atom `e^{-G}`, `G = alpha sum_m P_m`, at zero (no interferer).
//! Its contribution `e^{-G} / (eta - i w)` only decays like `1/w`, so it is
//! added back in closed form and only `phi - e^{-G}` is integrated.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::diagnostics::{CdfValue, InversionDiagnostics};
use crate::error::{domain, Error, Result};
use crate::numerics::{compound_poisson_log_transform, lambert_w0, QuadratureSpec};
use crate::steady_state::{CaptureRatio, ProbabilityVector, QVector};

/// `ln(10) / 10`: converts a dB deviation into a natural-log exponent.
pub const BETA: f64 = std::f64::consts::LN_10 / 10.0;

/// Variance below which the lognormal collapses to the constant `e^mu`.
const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Settings for the wide-band failure probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidebandParams {
    sigma_db: f64,
    eta: f64,
    quad: QuadratureSpec,
}

impl WidebandParams {
    pub const DEFAULT_ETA: f64 = 1.0;

    pub fn new(sigma_db: f64, eta: f64, quad: QuadratureSpec) -> Result<Self> {
        if sigma_db == 0.0 {
            return Err(Error::UseIdealModel);
        }
        if !(sigma_db > 0.0) || !sigma_db.is_finite() {
            return domain(format!("sigma_db must be positive, got {sigma_db}"));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return domain(format!("damping eta must be positive, got {eta}"));
        }
        Ok(Self {
            sigma_db,
            eta,
            quad,
        })
    }

    /// Default damping and quadrature for the given error level.
    pub fn with_sigma(sigma_db: f64) -> Result<Self> {
        Self::new(sigma_db, Self::DEFAULT_ETA, QuadratureSpec::wideband_default())
    }

    pub fn sigma_db(&self) -> f64 {
        self.sigma_db
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    /// Variance of `theta`, `2 beta^2 sigma^2`.
    pub fn sigma_theta_sq(&self) -> f64 {
        2.0 * BETA * BETA * self.sigma_db * self.sigma_db
    }

    /// `E[e^{beta eps}] = e^{(beta sigma)^2 / 2}`, the mean energy factor of one attempt.
    pub fn mean_power_factor(&self) -> f64 {
        lognormal_mean_factor(self.sigma_db)
    }
}

pub(crate) fn lognormal_mean_factor(sigma_db: f64) -> f64 {
    let bs = BETA * sigma_db;
    (0.5 * bs * bs).exp()
}

/// Lambert-W approximation of `E[exp(-s e^theta)]` for `theta ~ N(mu, var)`:
///
/// `exp(-(W^2 + 2W) / (2 var)) / sqrt(1 + W)` with `W = W0(s var e^mu)`.
pub fn lognormal_laplace(s: Complex64, mu_theta: f64, sigma_theta_sq: f64) -> Result<Complex64> {
    if !(s.re >= 0.0) {
        return domain(format!("lognormal Laplace transform needs Re(s) >= 0, got {s}"));
    }
    if !(sigma_theta_sq >= 0.0) {
        return domain(format!("variance must be >= 0, got {sigma_theta_sq}"));
    }
    if s.re == 0.0 && s.im == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let scale = mu_theta.exp();
    if sigma_theta_sq < DEGENERATE_VARIANCE {
        return Ok((-s * scale).exp());
    }
    let w = lambert_w0(s * (sigma_theta_sq * scale))?;
    let exponent = -(w * w + 2.0 * w) / (2.0 * sigma_theta_sq);
    Ok(exponent.exp() / (1.0 + w).sqrt())
}

/// `phi_{Y_k}(u)` at a complex argument `u = w + i eta` with `eta >= 0`.
pub fn cf_interference_wideband(
    omega_shifted: Complex64,
    k: usize,
    alpha: f64,
    p: &ProbabilityVector,
    v: f64,
    params: &WidebandParams,
) -> Result<Complex64> {
    let classes = p.transmitting();
    if k >= classes.len() {
        return domain(format!("attempt index {k} exceeds K = {}", classes.len() - 1));
    }
    check_v(v)?;
    // phi(u) = E[e^{i u Y}] = L_Y(-i u)
    let s = Complex64::new(omega_shifted.im, -omega_shifted.re);
    let var = params.sigma_theta_sq();
    let ln_v = v.ln();
    let mut exponent = Complex64::new(0.0, 0.0);
    for (m, &pm) in classes.iter().enumerate() {
        let mu = (m as f64 - k as f64) * ln_v;
        exponent += compound_poisson_log_transform(alpha * pm, lognormal_laplace(s, mu, var)?)?;
    }
    Ok(exponent.exp())
}

/// `P(Y_k <= x)` by damped Fourier inversion.
pub fn cdf_interference_wideband(
    x: f64,
    k: usize,
    alpha: f64,
    p: &ProbabilityVector,
    v: f64,
    params: &WidebandParams,
) -> Result<(CdfValue, InversionDiagnostics)> {
    let kernel = WidebandKernel::new(p.max_retx(), v, params, x)?;
    let mut diag = InversionDiagnostics::default();
    let value = kernel.cdf(k, alpha, p.transmitting(), &mut diag)?;
    Ok((value, diag))
}

/// `Q_k = 1 - F_{Y_k}(1 / T)` for every attempt.
pub fn failure_probs_wideband(
    alpha: f64,
    p: &ProbabilityVector,
    v: f64,
    capture: CaptureRatio,
    params: &WidebandParams,
) -> Result<(QVector, InversionDiagnostics)> {
    WidebandKernel::for_capture(p.max_retx(), v, params, capture)?.failure_probs(alpha, p)
}

fn check_v(v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return domain(format!("power factor v must be positive, got {v}"));
    }
    Ok(())
}

/// Inversion tables for one `(K, v, sigma, eta, x)`: the lognormal transform
/// of every power offset `m - k` on the frequency grid, plus the Fourier
/// weights. Independent of `alpha` and of the probability vector.
#[derive(Debug, Clone)]
pub struct WidebandKernel {
    max_retx: usize,
    x: f64,
    eta: f64,
    step: f64,
    tail_tolerance: f64,
    unit_factor: bool,
    /// `transforms[d][j]` for offset `d - K`.
    transforms: Vec<Vec<Complex64>>,
    /// `e^{-i w_j x} / (eta - i w_j)`.
    weights: Vec<Complex64>,
    /// `max_d |transforms[d][j]| / |eta - i w_j|`.
    envelope: Vec<f64>,
    /// The table stops at `max_abscissa` rather than because the envelope decayed.
    capped: bool,
}

impl WidebandKernel {
    pub fn new(max_retx: usize, v: f64, params: &WidebandParams, x: f64) -> Result<Self> {
        check_v(v)?;
        if !(x > 0.0) || !x.is_finite() {
            return domain(format!("CDF abscissa must be positive, got {x}"));
        }
        let quad = params.quad();
        let step = quad.step();
        let intervals = quad.intervals();
        let eta = params.eta();
        let var = params.sigma_theta_sq();
        let tol = quad.tail_tolerance();
        let ln_v = v.ln();
        let offsets: Vec<f64> = (0..=2 * max_retx)
            .map(|d| (d as f64 - max_retx as f64) * ln_v)
            .collect();

        let mut transforms = vec![Vec::new(); offsets.len()];
        let mut weights = Vec::new();
        let mut envelope = Vec::new();
        let mut capped = true;
        for j in 0..=intervals {
            let omega = j as f64 * step;
            let s = Complex64::new(eta, -omega);
            let inv = s.inv();
            let mut env: f64 = 0.0;
            for (row, &mu) in transforms.iter_mut().zip(&offsets) {
                let l = lognormal_laplace(s, mu, var)?;
                env = env.max(l.norm());
                row.push(l);
            }
            let env = env * inv.norm();
            weights.push(Complex64::from_polar(1.0, -omega * x) * inv);
            envelope.push(env);
            // keep a margin below the evaluation cutoff so it is always reached inside the table
            if j >= 8 && env < 1e-3 * tol {
                capped = false;
                break;
            }
        }
        Ok(Self {
            max_retx,
            x,
            eta,
            step,
            tail_tolerance: tol,
            unit_factor: v == 1.0,
            transforms,
            weights,
            envelope,
            capped,
        })
    }

    pub fn for_capture(
        max_retx: usize,
        v: f64,
        params: &WidebandParams,
        capture: CaptureRatio,
    ) -> Result<Self> {
        Self::new(max_retx, v, params, 1.0 / capture.linear())
    }

    pub fn abscissa(&self) -> f64 {
        self.x
    }

    /// Number of frequency samples held in the table.
    pub fn table_len(&self) -> usize {
        self.weights.len()
    }

    /// `P(Y_k <= x)` given the per-class probabilities `P_0 .. P_K`.
    pub fn cdf(
        &self,
        k: usize,
        alpha: f64,
        classes: &[f64],
        diag: &mut InversionDiagnostics,
    ) -> Result<CdfValue> {
        if classes.len() != self.max_retx + 1 {
            return domain(format!(
                "expected {} class probabilities, got {}",
                self.max_retx + 1,
                classes.len()
            ));
        }
        if k > self.max_retx {
            return domain(format!("attempt index {k} exceeds K = {}", self.max_retx));
        }
        if !(alpha >= 0.0) {
            return domain(format!("alpha must be >= 0, got {alpha}"));
        }
        let load: f64 = alpha * classes.iter().sum::<f64>();
        if load == 0.0 {
            let raw = 1.0;
            return Ok(CdfValue {
                probability: diag.clamp(raw),
                raw,
            });
        }
        let atom = (-load).exp();
        let rates: Vec<f64> = classes.iter().map(|pm| alpha * pm).collect();
        let rows: Vec<&[Complex64]> = (0..classes.len())
            .map(|m| self.transforms[m + self.max_retx - k].as_slice())
            .collect();

        let integrand = |j: usize| -> Complex64 {
            let mut s = Complex64::new(0.0, 0.0);
            for (rate, row) in rates.iter().zip(&rows) {
                s += *rate * row[j];
            }
            // phi - atom = atom * (e^S - 1), S = alpha sum_m P_m L_m
            atom * expm1(s) * self.weights[j]
        };

        let last = self.weights.len() - 1;
        let mut sum = 0.5 * integrand(0).re;
        let mut stopped = false;
        let mut tail = 0.0;
        for j in 1..=last {
            let g = integrand(j);
            tail = g.norm();
            if tail < self.tail_tolerance && self.envelope[j] < self.tail_tolerance {
                sum += 0.5 * g.re;
                stopped = true;
                break;
            }
            if j == last {
                sum += 0.5 * g.re;
            } else {
                sum += g.re;
            }
        }
        if !stopped && self.capped {
            diag.record_truncation(tail);
        }
        let raw = atom + (self.eta * self.x).exp() / PI * self.step * sum;
        Ok(CdfValue {
            probability: diag.clamp(raw),
            raw,
        })
    }

    pub fn failure_probs(
        &self,
        alpha: f64,
        p: &ProbabilityVector,
    ) -> Result<(QVector, InversionDiagnostics)> {
        let classes = p.transmitting();
        let mut diag = InversionDiagnostics::default();
        let mut q = Vec::with_capacity(classes.len());
        for k in 0..classes.len() {
            if self.unit_factor && k > 0 {
                // every offset has mu = 0, so Y_k does not depend on k
                q.push(q[0]);
                continue;
            }
            let f = self.cdf(k, alpha, classes, &mut diag)?;
            q.push(1.0 - f.probability);
        }
        Ok((QVector::new(q)?, diag))
    }
}

/// `e^z - 1` without cancellation for small `|z|`.
fn expm1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half * half,
        z.re.exp() * z.im.sin(),
    )
}
