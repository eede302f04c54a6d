/// Bookkeeping collected while numerically inverting characteristic functions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InversionDiagnostics {
    /// CDF evaluations performed.
    pub evaluations: usize,
    /// Evaluations whose raw value left `[-1e-6, 1 + 1e-6]` before clamping.
    pub clamp_warnings: usize,
    /// Largest distance of a raw value outside `[0, 1]`.
    pub max_drift: f64,
    /// Integrals that hit `max_abscissa` before the tail fell below tolerance.
    pub truncated: usize,
    /// Largest integrand magnitude left at a truncation point.
    pub max_tail: f64,
}

/// Drift outside [0, 1] beyond which a clamped CDF value is counted as a warning.
pub const CLAMP_WARNING_DRIFT: f64 = 1e-6;

impl InversionDiagnostics {
    pub fn merge(&mut self, other: &InversionDiagnostics) {
        self.evaluations += other.evaluations;
        self.clamp_warnings += other.clamp_warnings;
        self.max_drift = self.max_drift.max(other.max_drift);
        self.truncated += other.truncated;
        self.max_tail = self.max_tail.max(other.max_tail);
    }

    /// Clamps a raw CDF value to [0, 1] and records any drift.
    pub(crate) fn clamp(&mut self, raw: f64) -> f64 {
        self.evaluations += 1;
        let drift = if raw < 0.0 {
            -raw
        } else if raw > 1.0 {
            raw - 1.0
        } else {
            0.0
        };
        self.max_drift = self.max_drift.max(drift);
        if drift > CLAMP_WARNING_DRIFT {
            self.clamp_warnings += 1;
        }
        raw.clamp(0.0, 1.0)
    }

    pub(crate) fn record_truncation(&mut self, tail: f64) {
        self.truncated += 1;
        self.max_tail = self.max_tail.max(tail);
    }
}

/// A clamped CDF value together with the unclamped quadrature result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    pub probability: f64,
    pub raw: f64,
}
