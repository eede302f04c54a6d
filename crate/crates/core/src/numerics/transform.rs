//! Compound-Poisson transform composition in the log domain.

use num_complex::Complex64;

use crate::error::{domain, Result};

/// Exponent of the Laplace transform of a compound-Poisson sum.
///
/// For `S = X_1 + ... + X_N` with `N ~ Poisson(rate)` independent of the
/// i.i.d. jumps, `L_S(s) = exp(rate * (L_X(s) - 1))`. This returns the
/// exponent `rate * (L_X(s) - 1)` so independent classes can be summed before
/// a single exponentiation.
pub fn compound_poisson_log_transform(rate: f64, per_event_transform: Complex64) -> Result<Complex64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return domain(format!("compound Poisson rate must be finite and >= 0, got {rate}"));
    }
    Ok(rate * (per_event_transform - 1.0))
}
