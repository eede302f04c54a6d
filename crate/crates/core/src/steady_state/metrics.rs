use crate::error::{domain, Result};
use crate::wideband::lognormal_mean_factor;

use super::types::{Model, ProbabilityVector, Scenario};

/// Received power per attempt, normalised so the smallest level is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLadder(Vec<f64>);

impl PowerLadder {
    pub fn levels(&self) -> &[f64] {
        &self.0
    }
}

/// `p_k = v^k` for `v >= 1` (first attempt at the minimum power) and
/// `p_k = v^(k-K)` for `v < 1` (last attempt at the minimum power).
pub fn normalized_ladder(v: f64, max_retx: usize) -> Result<PowerLadder> {
    if !(v > 0.0) || !v.is_finite() {
        return domain(format!("power factor v must be positive, got {v}"));
    }
    let k_max = max_retx as i32;
    let levels = (0..=k_max)
        .map(|k| if v >= 1.0 { v.powi(k) } else { v.powi(k - k_max) })
        .collect();
    Ok(PowerLadder(levels))
}

/// Steady-state performance of one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// `P_{K+1}`.
    pub packet_loss_rate: f64,
    /// Delivered packets per slot, `alpha (1 - P_{K+1})`.
    pub throughput: f64,
    /// Delivered packets per unit of normalised received energy.
    pub energy_efficiency: f64,
    /// `sum_{k <= K} P_k`.
    pub avg_transmissions: f64,
}

pub fn compute_metrics(
    scenario: &Scenario,
    p: &ProbabilityVector,
    ladder: &PowerLadder,
) -> Result<Metrics> {
    if p.max_retx() != scenario.max_retx() || ladder.0.len() != scenario.max_retx() + 1 {
        return domain(format!(
            "lengths disagree with K = {}: P has {} entries, ladder {}",
            scenario.max_retx(),
            p.values().len(),
            ladder.0.len()
        ));
    }
    let loss = p.loss();
    let delivered = 1.0 - loss;
    let mean_factor = match scenario.model() {
        Model::Ideal => 1.0,
        Model::Wideband => lognormal_mean_factor(scenario.sigma_db()),
    };
    let energy: f64 = p
        .transmitting()
        .iter()
        .zip(&ladder.0)
        .map(|(pk, level)| pk * level * mean_factor * scenario.slot_time())
        .sum();
    Ok(Metrics {
        packet_loss_rate: loss,
        throughput: scenario.alpha() * delivered,
        energy_efficiency: delivered / energy,
        avg_transmissions: p.transmitting_mass(),
    })
}
