//! Steady-state analysis of slotted ALOHA with capture effect, transmit power
//! diversity and lognormal power-control error.
//!
//! The per-attempt failure probabilities come from numerically inverting the
//! characteristic function of the aggregate interference, either on an integer
//! lattice ([`ideal`], perfect power control) or by damped Fourier inversion
//! ([`wideband`], lognormal error). [`steady_state`] closes the retransmission
//! loop by fixed-point iteration and [`simulator`] provides an independent
//! Monte-Carlo check.

pub mod diagnostics;
pub mod error;
pub mod ideal;
pub mod numerics;
pub mod simulator;
pub mod steady_state;
pub mod wideband;

pub use diagnostics::{CdfValue, InversionDiagnostics};
pub use error::{Error, Result};
pub use steady_state::{
    analyze, compute_metrics, normalized_ladder, solve_fixed_point, solve_fixed_point_with,
    AnalysisOptions, CaptureRatio, Metrics, Model, PowerLadder, ProbabilityVector, QVector,
    Scenario,
};
