//! Perfect power control: integer-lattice interference.
//!
//! With `v = l / m` and powers normalised by `c_ref / m^K`, the received
//! power of attempt k is the integer `l^k m^(K-k)`, so the total interference
//! `Y` is integer valued. Its CDF is recovered from the characteristic
//! function with the finite lattice inversion
//!
//! ```text
//! F_Y(x) = 1/pi * int_0^pi sin((x+1) w / 2) / sin(w / 2) * Re{phi_Y(w) e^{-i x w / 2}} dw
//! ```
//!
//! evaluated by the trapezoid rule. On `2N` points per period the rule is
//! exact up to aliasing of the mass of `Y` above `2N`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::diagnostics::{CdfValue, InversionDiagnostics};
use crate::error::{domain, Error, Result};
use crate::numerics::{compound_poisson_log_transform, QuadratureSpec};
use crate::steady_state::{CaptureRatio, ProbabilityVector, QVector};

/// Power factor `v = l / m` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalPowerFactor {
    l: u64,
    m: u64,
}

impl RationalPowerFactor {
    /// Rejects zero and non-coprime pairs; the lattice must have unit span.
    pub fn new(l: u64, m: u64) -> Result<Self> {
        if l == 0 || m == 0 {
            return domain(format!("power factor {l}/{m} must have positive terms"));
        }
        let g = gcd(l, m);
        if g != 1 {
            return domain(format!(
                "power factor {l}/{m} is not in lowest terms (gcd {g}); use {}/{}",
                l / g,
                m / g
            ));
        }
        Ok(Self { l, m })
    }

    /// Recovers an exact small rational (denominator at most 10^6) from `v`.
    pub fn from_f64(v: f64) -> Result<Self> {
        if !(v > 0.0) || !v.is_finite() {
            return domain(format!("power factor must be positive, got {v}"));
        }
        // continued-fraction convergents
        let (mut h0, mut h1) = (0u64, 1u64);
        let (mut k0, mut k1) = (1u64, 0u64);
        let mut x = v;
        for _ in 0..64 {
            let a = x.floor();
            if a > 1e12 {
                break;
            }
            let a = a as u64;
            let h2 = a.checked_mul(h1).and_then(|t| t.checked_add(h0));
            let k2 = a.checked_mul(k1).and_then(|t| t.checked_add(k0));
            let (Some(h2), Some(k2)) = (h2, k2) else { break };
            if k2 > 1_000_000 {
                break;
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            if ((h1 as f64 / k1 as f64) - v).abs() <= 1e-12 * v {
                return Self::new(h1, k1);
            }
            let frac = x - x.floor();
            if frac == 0.0 {
                break;
            }
            x = 1.0 / frac;
        }
        domain(format!(
            "power factor {v} is not a small rational l/m; the ideal model needs an exact ratio"
        ))
    }

    pub fn numerator(&self) -> u64 {
        self.l
    }

    pub fn denominator(&self) -> u64 {
        self.m
    }

    pub fn value(&self) -> f64 {
        self.l as f64 / self.m as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer received-power levels `l^k m^(K-k)` for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeLadder(Vec<u64>);

impl LatticeLadder {
    pub fn levels(&self) -> &[u64] {
        &self.0
    }

    pub fn max_retx(&self) -> usize {
        self.0.len() - 1
    }
}

/// Builds the lattice ladder, rejecting `K` when `l^K m^K` overflows `u64`.
pub fn lattice_levels(factor: RationalPowerFactor, max_retx: usize) -> Result<LatticeLadder> {
    let (l, m) = (factor.l, factor.m);
    let product = l.checked_mul(m).ok_or_else(|| capacity(factor, 0))?;
    if let Ok(k) = u32::try_from(max_retx) {
        if product.checked_pow(k).is_none() {
            return Err(capacity(factor, max_supported_k(product)));
        }
    } else if product > 1 {
        return Err(capacity(factor, max_supported_k(product)));
    }
    let levels = (0..=max_retx)
        .map(|k| l.pow(k as u32) * m.pow((max_retx - k) as u32))
        .collect();
    Ok(LatticeLadder(levels))
}

fn max_supported_k(product: u64) -> usize {
    let mut k = 0usize;
    let mut acc = 1u64;
    while let Some(next) = acc.checked_mul(product) {
        acc = next;
        k += 1;
    }
    k
}

fn capacity(factor: RationalPowerFactor, max_k: usize) -> Error {
    Error::Capacity {
        what: format!(
            "lattice levels for v = {}/{} overflow 64-bit integers",
            factor.l, factor.m
        ),
        max_k,
    }
}

fn check_lengths(p: &ProbabilityVector, ladder: &LatticeLadder) -> Result<()> {
    if p.transmitting().len() != ladder.0.len() {
        return domain(format!(
            "probability vector has {} classes but the ladder has {}",
            p.transmitting().len(),
            ladder.0.len()
        ));
    }
    Ok(())
}

/// Characteristic function of the lattice interference,
/// `exp{alpha * sum_k P_k (e^{i w p_k} - 1)}`.
pub fn cf_interference_lattice(
    omega: f64,
    alpha: f64,
    p: &ProbabilityVector,
    ladder: &LatticeLadder,
) -> Result<Complex64> {
    check_lengths(p, ladder)?;
    let mut exponent = Complex64::new(0.0, 0.0);
    for (&pk, &level) in p.transmitting().iter().zip(&ladder.0) {
        let jump = Complex64::from_polar(1.0, omega * level as f64);
        exponent += compound_poisson_log_transform(alpha * pk, jump)?;
    }
    Ok(exponent.exp())
}

/// `P(Y <= x)` for the lattice interference.
pub fn cdf_interference_lattice(
    x: u64,
    alpha: f64,
    p: &ProbabilityVector,
    ladder: &LatticeLadder,
    quad: &QuadratureSpec,
) -> Result<CdfValue> {
    check_lengths(p, ladder)?;
    let grid = LatticeGrid::new(ladder, quad)?;
    grid.check_resolves(x)?;
    let kernel = grid.dirichlet_kernel(x);
    let phi = grid.characteristic(alpha, p.transmitting());
    let raw = match &phi {
        None => 1.0,
        Some(phi) => grid.integrate(phi, &kernel),
    };
    let mut diag = InversionDiagnostics::default();
    Ok(CdfValue {
        probability: diag.clamp(raw),
        raw,
    })
}

/// Failure probabilities `Q_k = 1 - F_Y(floor(p_k / T))`.
pub fn failure_probs_lattice(
    alpha: f64,
    p: &ProbabilityVector,
    ladder: &LatticeLadder,
    capture: CaptureRatio,
    quad: &QuadratureSpec,
) -> Result<(QVector, InversionDiagnostics)> {
    LatticeKernel::new(ladder, capture, quad)?.failure_probs(alpha, p)
}

/// Precomputed inversion tables for one ladder and capture ratio, reused
/// across fixed-point iterations.
#[derive(Debug, Clone)]
pub struct LatticeKernel {
    grid: LatticeGrid,
    /// `floor(p_k / T)` per class.
    thresholds: Vec<u64>,
    /// Dirichlet kernels for each distinct threshold, keyed by threshold.
    kernels: Vec<(u64, Vec<Complex64>)>,
}

impl LatticeKernel {
    pub fn new(ladder: &LatticeLadder, capture: CaptureRatio, quad: &QuadratureSpec) -> Result<Self> {
        let grid = LatticeGrid::new(ladder, quad)?;
        let thresholds: Vec<u64> = ladder.0.iter().map(|&lv| capture.floor_quotient(lv)).collect();
        let mut kernels: Vec<(u64, Vec<Complex64>)> = Vec::new();
        for &x in &thresholds {
            grid.check_resolves(x)?;
            if !kernels.iter().any(|(t, _)| *t == x) {
                kernels.push((x, grid.dirichlet_kernel(x)));
            }
        }
        Ok(Self {
            grid,
            thresholds,
            kernels,
        })
    }

    pub fn thresholds(&self) -> &[u64] {
        &self.thresholds
    }

    pub fn failure_probs(
        &self,
        alpha: f64,
        p: &ProbabilityVector,
    ) -> Result<(QVector, InversionDiagnostics)> {
        if p.transmitting().len() != self.thresholds.len() {
            return domain(format!(
                "probability vector has {} classes but the ladder has {}",
                p.transmitting().len(),
                self.thresholds.len()
            ));
        }
        let mut diag = InversionDiagnostics::default();
        let phi = self.grid.characteristic(alpha, p.transmitting());
        let cdf: Vec<(u64, f64)> = self
            .kernels
            .iter()
            .map(|(x, kernel)| {
                let raw = match &phi {
                    None => 1.0,
                    Some(phi) => self.grid.integrate(phi, kernel),
                };
                (*x, diag.clamp(raw))
            })
            .collect();
        let q = self
            .thresholds
            .iter()
            .map(|x| {
                let f = cdf.iter().find(|(t, _)| t == x).map(|c| c.1).unwrap_or(1.0);
                1.0 - f
            })
            .collect();
        Ok((QVector::new(q)?, diag))
    }
}

/// Uniform grid `w_j = j pi / N` on [0, pi] with the per-class phases `e^{i w_j p_k}`.
#[derive(Debug, Clone)]
struct LatticeGrid {
    intervals: usize,
    phases: Vec<Vec<Complex64>>,
}

impl LatticeGrid {
    fn new(ladder: &LatticeLadder, quad: &QuadratureSpec) -> Result<Self> {
        let intervals = ((PI / quad.step()).round() as usize).max(2);
        let phases = ladder
            .0
            .iter()
            .map(|&level| (0..=intervals).map(|j| half_turns(j as u64 * level, intervals)).collect())
            .collect();
        Ok(Self { intervals, phases })
    }

    fn check_resolves(&self, x: u64) -> Result<()> {
        if x as u128 >= 2 * self.intervals as u128 {
            return domain(format!(
                "threshold {x} exceeds the lattice grid period {}; use a finer quadrature step",
                2 * self.intervals
            ));
        }
        Ok(())
    }

    /// `sin((x+1) w / 2) / sin(w / 2) * e^{-i x w / 2}` on the grid.
    fn dirichlet_kernel(&self, x: u64) -> Vec<Complex64> {
        let n = self.intervals as u64;
        (0..=n)
            .map(|j| {
                if j == 0 {
                    return Complex64::new((x + 1) as f64, 0.0);
                }
                // angles in units of pi / 2N, reduced exactly before conversion
                let numerator = angle(j * (x + 1), 2 * n).sin();
                let denominator = angle(j, 2 * n).sin();
                let shift = angle(j * x, 2 * n);
                Complex64::from_polar(numerator / denominator, -shift)
            })
            .collect()
    }

    /// `phi_Y(w_j)` on the grid, or `None` when there is no interference at all.
    fn characteristic(&self, alpha: f64, classes: &[f64]) -> Option<Vec<Complex64>> {
        let load: f64 = alpha * classes.iter().sum::<f64>();
        if load == 0.0 {
            return None;
        }
        let phi = (0..=self.intervals)
            .map(|j| {
                let mut exponent = Complex64::new(0.0, 0.0);
                for (pk, phases) in classes.iter().zip(&self.phases) {
                    exponent += alpha * pk * (phases[j] - 1.0);
                }
                exponent.exp()
            })
            .collect();
        Some(phi)
    }

    fn integrate(&self, phi: &[Complex64], kernel: &[Complex64]) -> f64 {
        let n = self.intervals;
        let mut sum = 0.0;
        for j in 1..n {
            sum += (phi[j] * kernel[j]).re;
        }
        sum += 0.5 * ((phi[0] * kernel[0]).re + (phi[n] * kernel[n]).re);
        // (1/pi) * (pi / N) * sum
        sum / n as f64
    }
}

/// `e^{i pi t / N}` with `t` reduced modulo `2N` in integer arithmetic.
fn half_turns(t: u64, n: usize) -> Complex64 {
    let n = n as u64;
    Complex64::from_polar(1.0, angle(t, n))
}

/// `pi * (t mod 2 modulus) / modulus`.
fn angle(t: u64, modulus: u64) -> f64 {
    let r = t % (2 * modulus);
    PI * r as f64 / modulus as f64
}
