//! Fixed-point solution of the retransmission recursion and the derived
//! steady-state metrics.
//!
//! Fresh and retransmitted packets are split into K+1 independent Poisson
//! classes of rate `alpha P_k`. The failure probabilities `Q_k` depend on the
//! whole vector `P`, and `P_0 = 1, P_{k+1} = P_k Q_k` closes the loop.

mod metrics;
mod newton;
mod types;

pub use metrics::{compute_metrics, normalized_ladder, Metrics, PowerLadder};
pub use types::{CaptureRatio, Model, ProbabilityVector, QVector, Scenario};

use crate::diagnostics::InversionDiagnostics;
use crate::error::{domain, Error, Result};
use crate::ideal::{lattice_levels, LatticeKernel};
use crate::numerics::QuadratureSpec;
use crate::wideband::{WidebandKernel, WidebandParams};

/// Solver and discretisation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Sup-norm tolerance on `P`.
    pub tol: f64,
    pub max_iter: usize,
    /// Plain iterations before switching to under-relaxation.
    pub relax_after: usize,
    /// Under-relaxation weight applied after `relax_after` iterations.
    pub relaxation: f64,
    /// Take safeguarded Newton steps once plain iteration contracts slowly.
    pub accelerate: bool,
    /// Damping of the wide-band inversion.
    pub eta: f64,
    pub lattice_quad: QuadratureSpec,
    pub wideband_quad: QuadratureSpec,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            relax_after: 200,
            relaxation: 0.5,
            accelerate: true,
            eta: WidebandParams::DEFAULT_ETA,
            lattice_quad: QuadratureSpec::lattice_default(),
            wideband_quad: QuadratureSpec::wideband_default(),
        }
    }
}

/// The failure-probability map `P -> Q` of either model, with its tables built.
#[derive(Debug, Clone)]
pub enum FailureModel {
    Ideal(LatticeKernel),
    Wideband(WidebandKernel),
}

impl FailureModel {
    pub fn for_scenario(scenario: &Scenario, opts: &AnalysisOptions) -> Result<Self> {
        match scenario.model() {
            Model::Ideal => {
                let factor = scenario
                    .rational_factor()
                    .expect("ideal scenarios carry a rational factor");
                let ladder = lattice_levels(factor, scenario.max_retx())?;
                Ok(Self::Ideal(LatticeKernel::new(
                    &ladder,
                    scenario.capture(),
                    &opts.lattice_quad,
                )?))
            }
            Model::Wideband => {
                let params = WidebandParams::new(scenario.sigma_db(), opts.eta, opts.wideband_quad)?;
                Ok(Self::Wideband(WidebandKernel::for_capture(
                    scenario.max_retx(),
                    scenario.v(),
                    &params,
                    scenario.capture(),
                )?))
            }
        }
    }

    pub fn failure_probs(
        &self,
        alpha: f64,
        p: &ProbabilityVector,
    ) -> Result<(QVector, InversionDiagnostics)> {
        match self {
            Self::Ideal(kernel) => kernel.failure_probs(alpha, p),
            Self::Wideband(kernel) => kernel.failure_probs(alpha, p),
        }
    }
}

/// A reached fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    pub p: ProbabilityVector,
    /// `Q` evaluated at `p`.
    pub q: QVector,
    /// Number of iterates visited, the last one being `p`.
    pub iterations: usize,
    /// Evaluations of the failure map, including Jacobian probes.
    pub evaluations: usize,
    /// `sup |T(p) - p|` of the returned iterate.
    pub residual: f64,
    pub diagnostics: InversionDiagnostics,
}

/// Solves the recursion from `<1, 0, ..., 0>` with default discretisation.
pub fn solve_fixed_point(scenario: &Scenario, tol: f64, max_iter: usize) -> Result<FixedPointSolution> {
    let opts = AnalysisOptions {
        tol,
        max_iter,
        ..AnalysisOptions::default()
    };
    solve_fixed_point_with(scenario, &opts)
}

pub fn solve_fixed_point_with(scenario: &Scenario, opts: &AnalysisOptions) -> Result<FixedPointSolution> {
    let model = FailureModel::for_scenario(scenario, opts)?;
    solve_with_model(&model, scenario.alpha(), scenario.max_retx(), opts)
}

struct CountedMap<'a> {
    model: &'a FailureModel,
    alpha: f64,
    evaluations: usize,
    diagnostics: InversionDiagnostics,
}

impl CountedMap<'_> {
    fn eval(&mut self, p: &ProbabilityVector) -> Result<QVector> {
        self.evaluations += 1;
        let (q, diag) = self.model.failure_probs(self.alpha, p)?;
        self.diagnostics.merge(&diag);
        Ok(q)
    }
}

/// Plain iterations slower than this contraction ratio switch on Newton steps.
const SLOW_CONTRACTION: f64 = 0.5;
/// Halvings of a rejected step before falling back to the plain step.
const MAX_BACKTRACKS: u32 = 3;
/// Largest multiple of the plain step tried when Newton gives no step.
const MAX_EXTRAPOLATION: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StepKind {
    /// Must shrink the residual.
    Newton,
    /// Must stay below its image, `T(P) >= P - tol`.
    RisingExtrapolation,
    /// Must stay above its image.
    FallingExtrapolation,
}

/// An accelerated iterate awaiting its residual.
struct PendingStep {
    base: ProbabilityVector,
    /// Plain image of `base`.
    plain: ProbabilityVector,
    base_residual: f64,
    full: ProbabilityVector,
    halvings: u32,
    kind: StepKind,
}

/// Iterates `P <- T(P)` for an already built failure model.
///
/// Plain iterates increase monotonically towards the fixed point reached from
/// `<1, 0, ..., 0>`. With `opts.accelerate`, once they contract slowly they are
/// replaced by Newton steps from a forward-difference Jacobian, or, where the
/// Newton direction does not point up the path, by a growing multiple of the
/// plain step. A Newton iterate is kept if it shrinks the residual, an
/// extrapolated one if it still lies below its image, `T(P) >= P - tol`.
/// A rejected step is halved a few times before the plain step is taken
/// instead.
pub fn solve_with_model(
    model: &FailureModel,
    alpha: f64,
    max_retx: usize,
    opts: &AnalysisOptions,
) -> Result<FixedPointSolution> {
    if !(opts.tol > 0.0) {
        return domain(format!("tolerance must be positive, got {}", opts.tol));
    }
    if opts.max_iter == 0 {
        return domain("max_iter must be positive");
    }
    let mut p = ProbabilityVector::initial(max_retx);
    let mut counted = CountedMap {
        model,
        alpha,
        evaluations: 0,
        diagnostics: InversionDiagnostics::default(),
    };
    let mut residual = f64::INFINITY;
    let mut previous = f64::INFINITY;
    let mut accelerating = false;
    let mut extrapolation = 2.0;
    let mut pending: Option<PendingStep> = None;
    for iteration in 1..=opts.max_iter {
        let q = counted.eval(&p)?;
        let next = ProbabilityVector::from_failures(&q);
        residual = next.sup_distance(&p);
        if residual <= opts.tol {
            return Ok(FixedPointSolution {
                p,
                q,
                iterations: iteration,
                evaluations: counted.evaluations,
                residual,
                diagnostics: counted.diagnostics,
            });
        }
        if let Some(mut step) = pending.take() {
            let pairs = || next.values().iter().zip(p.values());
            let accepted = match step.kind {
                StepKind::Newton => residual < step.base_residual,
                StepKind::RisingExtrapolation => pairs().all(|(t, x)| *t >= x - opts.tol),
                StepKind::FallingExtrapolation => pairs().all(|(t, x)| *t <= x + opts.tol),
            };
            if !accepted {
                extrapolation = 2.0;
                if step.kind == StepKind::Newton && step.halvings < MAX_BACKTRACKS {
                    step.halvings += 1;
                    p = step.base.blend(&step.full, 0.5f64.powi(step.halvings as i32));
                    pending = Some(step);
                } else {
                    p = step.plain;
                    previous = step.base_residual;
                }
                continue;
            }
        }
        accelerating |= opts.accelerate && residual > SLOW_CONTRACTION * previous;
        previous = residual;
        if accelerating {
            let mut probe_images = Vec::with_capacity(max_retx);
            for (h, probe) in newton::probes(&p) {
                let q = counted.eval(&probe)?;
                probe_images.push((h, ProbabilityVector::from_failures(&q)));
            }
            let pairs = || next.values().iter().zip(p.values());
            let (full, kind) = match newton::step(&p, &next, &probe_images) {
                Some(full) => (full, StepKind::Newton),
                None => {
                    let kind = if pairs().all(|(t, x)| t >= x) {
                        StepKind::RisingExtrapolation
                    } else if pairs().all(|(t, x)| t <= x) {
                        StepKind::FallingExtrapolation
                    } else {
                        p = next;
                        continue;
                    };
                    let full = newton::extrapolate(&p, &next, extrapolation);
                    extrapolation = (2.0 * extrapolation).min(MAX_EXTRAPOLATION);
                    (full, kind)
                }
            };
            let base = std::mem::replace(&mut p, full.clone());
            pending = Some(PendingStep {
                base,
                plain: next,
                base_residual: residual,
                full,
                halvings: 0,
                kind,
            });
            continue;
        }
        p = if iteration > opts.relax_after {
            p.blend(&next, opts.relaxation)
        } else {
            next
        };
    }
    Err(Error::FixedPoint {
        iterations: opts.max_iter,
        residual,
        last_iterate: p.values().to_vec(),
    })
}

/// Everything a sweep row needs from one analytical evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub solution: FixedPointSolution,
    pub ladder: PowerLadder,
    pub metrics: Metrics,
}

/// Solves the fixed point and derives the metrics for one scenario.
pub fn analyze(scenario: &Scenario, opts: &AnalysisOptions) -> Result<Analysis> {
    let solution = solve_fixed_point_with(scenario, opts)?;
    let ladder = normalized_ladder(scenario.v(), scenario.max_retx())?;
    let metrics = compute_metrics(scenario, &solution.p, &ladder)?;
    Ok(Analysis {
        solution,
        ladder,
        metrics,
    })
}
