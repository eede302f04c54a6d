//! Newton correction for the fixed point `P = T(P)`.
//!
//! The unknowns are `P_1 .. P_{K+1}`. Only `P_0 .. P_K` enter the failure
//! map, so the Jacobian column of `P_{K+1}` vanishes and the remaining columns
//! are taken by forward differences.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use super::types::ProbabilityVector;

/// Relative forward-difference step.
const FD_STEP: f64 = 1e-6;

/// Perturbed copies of `p`, one per transmitting retransmission class.
pub(super) fn probes(p: &ProbabilityVector) -> Vec<(f64, ProbabilityVector)> {
    let values = p.values();
    (1..values.len() - 1)
        .map(|j| {
            let h = FD_STEP * values[j].max(1e-2);
            let mut shifted = values.to_vec();
            shifted[j] += h;
            (h, ProbabilityVector::unchecked(shifted))
        })
        .collect()
}

/// Solves `(I - J) delta = T(p) - p` and returns `p + delta` projected onto
/// non-increasing vectors in `[0, 1]`.
///
/// `None` when the system is singular or `J` has spectral radius at least one,
/// where the linearisation no longer points towards a nearby fixed point.
pub(super) fn step(
    p: &ProbabilityVector,
    image: &ProbabilityVector,
    probe_images: &[(f64, ProbabilityVector)],
) -> Option<ProbabilityVector> {
    let x = &p.values()[1..];
    let tx = &image.values()[1..];
    let n = x.len();
    let jacobian = DMatrix::from_fn(n, n, |row, col| match probe_images.get(col) {
        Some((h, probe)) => (probe.values()[row + 1] - tx[row]) / h,
        None => 0.0,
    });
    let radius = jacobian
        .complex_eigenvalues()
        .iter()
        .fold(0.0, |m: f64, e| m.max(e.norm()));
    if !(radius < 1.0 - 1e-6) {
        return None;
    }
    let rhs = DVector::from_iterator(n, tx.iter().zip(x).map(|(t, xi)| t - xi));
    let mut delta = (DMatrix::identity(n, n) - jacobian).lu().solve(&rhs)?;
    if delta.iter().any(|d| !d.is_finite()) {
        return None;
    }
    // Cover at most half of the remaining distance to 0 or 1 in any component.
    let scale = x
        .iter()
        .zip(delta.iter())
        .map(|(xi, d)| match d.partial_cmp(&0.0) {
            Some(Ordering::Greater) => 0.5 * (1.0 - xi) / d,
            Some(Ordering::Less) => 0.5 * xi / -d,
            _ => f64::INFINITY,
        })
        .fold(1.0, f64::min);
    delta *= scale;
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    out.extend(x.iter().zip(delta.iter()).map(|(xi, di)| xi + di));
    Some(project(out))
}

/// `p + factor (image - p)`, projected like a Newton step.
pub(super) fn extrapolate(p: &ProbabilityVector, image: &ProbabilityVector, factor: f64) -> ProbabilityVector {
    project(
        p.values()
            .iter()
            .zip(image.values())
            .map(|(a, b)| a + factor * (b - a))
            .collect(),
    )
}

fn project(mut values: Vec<f64>) -> ProbabilityVector {
    let mut prev = 1.0;
    for v in values.iter_mut().skip(1) {
        *v = v.clamp(0.0, prev);
        prev = *v;
    }
    ProbabilityVector::unchecked(values)
}
