//! Slot-by-slot Monte-Carlo simulation of the access channel.
//!
//! Devices are stateless spawners: each of the `n_devices` emits a fresh
//! packet with probability `alpha / n_devices` per slot, and every packet is
//! then tracked on its own until it is delivered or dropped after attempt
//! `K + 1`. A transmission succeeds iff its received power is at least
//! `T` times the sum of the other powers in the slot.

mod stats;

pub use stats::{confidence_interval, SimEstimate, SimMetric};

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::steady_state::{normalized_ladder, Scenario};
use crate::wideband::BETA;

/// Simulation settings for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub n_devices: u64,
    pub n_slots: u64,
    /// Slots discarded before tallying.
    pub warmup_slots: u64,
    /// Mean of the exponential backoff, in slots.
    pub backoff_mean_slots: f64,
    pub replications: usize,
    pub master_seed: u64,
}

impl SimConfig {
    pub const DEFAULT_DEVICES: u64 = 5000;
    pub const DEFAULT_SLOTS: u64 = 200_000;
    pub const DEFAULT_WARMUP: u64 = 20_000;
    pub const DEFAULT_BACKOFF_MEAN: f64 = 36.0;
    pub const DEFAULT_REPLICATIONS: usize = 40;

    pub fn new(scenario: Scenario, master_seed: u64) -> Self {
        Self {
            scenario,
            n_devices: Self::DEFAULT_DEVICES,
            n_slots: Self::DEFAULT_SLOTS,
            warmup_slots: Self::DEFAULT_WARMUP,
            backoff_mean_slots: Self::DEFAULT_BACKOFF_MEAN,
            replications: Self::DEFAULT_REPLICATIONS,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_devices == 0 {
            return domain("n_devices must be positive");
        }
        let per_device = self.scenario.alpha() / self.n_devices as f64;
        if per_device > 1.0 {
            return domain(format!(
                "alpha / n_devices = {per_device} is not a probability"
            ));
        }
        if self.n_slots <= self.warmup_slots {
            return domain(format!(
                "n_slots ({}) must exceed warmup_slots ({})",
                self.n_slots, self.warmup_slots
            ));
        }
        if !(self.backoff_mean_slots > 0.0) || !self.backoff_mean_slots.is_finite() {
            return domain(format!(
                "backoff mean must be positive, got {}",
                self.backoff_mean_slots
            ));
        }
        if self.replications == 0 {
            return domain("replications must be positive");
        }
        Ok(())
    }

    /// `alpha / n_devices`, the per-device per-slot arrival probability.
    pub fn arrival_probability(&self) -> f64 {
        self.scenario.alpha() / self.n_devices as f64
    }

    /// Generator of replication `rep_index`: a ChaCha stream keyed by the
    /// master seed, one stream per replication.
    pub fn replication_rng(&self, rep_index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(rep_index as u64);
        rng
    }
}

/// Fate of every packet created during a replication.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PacketAccounting {
    pub fresh: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
}

/// Per-slot outcomes split by the number of simultaneous transmissions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CaptureTally {
    pub single_slots: u64,
    pub single_successes: u64,
    pub multi_slots: u64,
    pub multi_successes: u64,
}

/// Sample moments of the fresh-arrival count per measured slot.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArrivalStats {
    pub slots: u64,
    pub mean: f64,
    pub variance: f64,
}

/// Point estimates and bookkeeping of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutcome {
    pub rep_index: usize,
    /// Dropped over resolved packets born after warmup; 0 if none resolved.
    pub packet_loss_rate: f64,
    /// Successful transmissions per measured slot.
    pub throughput: f64,
    /// Delivered packets per unit of received energy.
    pub energy_efficiency: f64,
    /// Transmissions per resolved packet.
    pub avg_transmissions: f64,
    /// No packet born after warmup was resolved.
    pub zero_sample: bool,
    pub accounting: PacketAccounting,
    /// Largest number of attempts any packet made.
    pub max_attempts: usize,
    pub capture: CaptureTally,
    pub arrivals: ArrivalStats,
    /// Transmissions at attempt index `k` in measured slots.
    pub attempts_by_class: Vec<u64>,
    /// Failed transmissions at attempt index `k` in measured slots.
    pub failures_by_class: Vec<u64>,
}

impl ReplicationOutcome {
    pub fn value(&self, metric: SimMetric) -> f64 {
        match metric {
            SimMetric::Plr => self.packet_loss_rate,
            SimMetric::Throughput => self.throughput,
            SimMetric::EnergyEfficiency => self.energy_efficiency,
            SimMetric::AvgTransmissions => self.avg_transmissions,
        }
    }

    /// Empirical `Q_k`, `None` for classes never seen.
    pub fn failure_rates(&self) -> Vec<Option<f64>> {
        self.attempts_by_class
            .iter()
            .zip(&self.failures_by_class)
            .map(|(&n, &f)| (n > 0).then(|| f as f64 / n as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    /// Attempts already made.
    attempts: usize,
    measured: bool,
    energy: f64,
}

/// A packet waiting for its next slot; ordered by slot, then creation.
#[derive(Debug, Clone, Copy)]
struct Scheduled {
    slot: u64,
    seq: u64,
    packet: Packet,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.slot, self.seq) == (other.slot, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.slot, self.seq).cmp(&(other.slot, other.seq))
    }
}

#[derive(Default)]
struct CohortTally {
    delivered: u64,
    dropped: u64,
    transmissions: u64,
    energy: f64,
}

/// Runs replication `rep_index`. The result depends only on the config and
/// the index.
pub fn run_replication(config: &SimConfig, rep_index: usize) -> Result<ReplicationOutcome> {
    config.validate()?;
    if rep_index >= config.replications {
        return domain(format!(
            "rep_index {rep_index} out of range for {} replications",
            config.replications
        ));
    }
    let scenario = &config.scenario;
    let max_retx = scenario.max_retx();
    let ladder = normalized_ladder(scenario.v(), max_retx)?;
    let levels = ladder.levels();
    let threshold = scenario.capture().linear();
    let error_scale = BETA * scenario.sigma_db();
    let slot_time = scenario.slot_time();
    let arrivals = Binomial::new(config.n_devices, config.arrival_probability())
        .map_err(|e| crate::Error::Domain(format!("arrival law: {e}")))?;
    let backoff = Exp::new(1.0 / config.backoff_mean_slots)
        .map_err(|e| crate::Error::Domain(format!("backoff law: {e}")))?;
    let mut rng = config.replication_rng(rep_index);

    let mut queue: BinaryHeap<Reverse<Scheduled>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut accounting = PacketAccounting::default();
    let mut capture = CaptureTally::default();
    let mut cohort = CohortTally::default();
    let mut max_attempts = 0;
    let mut successes = 0u64;
    let mut attempts_by_class = vec![0u64; max_retx + 1];
    let mut failures_by_class = vec![0u64; max_retx + 1];
    let (mut arrival_sum, mut arrival_sq) = (0.0, 0.0);
    let mut slot_packets: Vec<Packet> = Vec::new();
    let mut powers: Vec<f64> = Vec::new();

    for slot in 0..config.n_slots {
        let measuring = slot >= config.warmup_slots;
        slot_packets.clear();
        let fresh = arrivals.sample(&mut rng);
        accounting.fresh += fresh;
        if measuring {
            let f = fresh as f64;
            arrival_sum += f;
            arrival_sq += f * f;
        }
        slot_packets.extend((0..fresh).map(|_| Packet {
            attempts: 0,
            measured: measuring,
            energy: 0.0,
        }));
        while queue.peek().is_some_and(|Reverse(s)| s.slot == slot) {
            let Reverse(s) = queue.pop().expect("peeked");
            slot_packets.push(s.packet);
        }

        powers.clear();
        powers.extend(slot_packets.iter().map(|p| {
            let level = levels[p.attempts];
            if error_scale > 0.0 {
                let eps: f64 = rng.sample(StandardNormal);
                level * (error_scale * eps).exp()
            } else {
                level
            }
        }));
        let total: f64 = powers.iter().sum();
        let mut slot_successes = 0u64;
        for (packet, &power) in slot_packets.iter_mut().zip(&powers) {
            let class = packet.attempts;
            let interference = if powers.len() == 1 { 0.0 } else { total - power };
            let success = power >= threshold * interference;
            packet.attempts += 1;
            packet.energy += power * slot_time;
            max_attempts = max_attempts.max(packet.attempts);
            if measuring {
                attempts_by_class[class] += 1;
                if !success {
                    failures_by_class[class] += 1;
                }
            }
            if success {
                slot_successes += 1;
                accounting.delivered += 1;
            } else if packet.attempts > max_retx {
                accounting.dropped += 1;
            } else {
                let wait = backoff.sample(&mut rng).ceil().max(1.0) as u64;
                queue.push(Reverse(Scheduled {
                    slot: slot + wait,
                    seq,
                    packet: *packet,
                }));
                seq += 1;
                continue;
            }
            if packet.measured {
                cohort.transmissions += packet.attempts as u64;
                cohort.energy += packet.energy;
                if success {
                    cohort.delivered += 1;
                } else {
                    cohort.dropped += 1;
                }
            }
        }
        if measuring {
            successes += slot_successes;
            match slot_packets.len() {
                0 => {}
                1 => {
                    capture.single_slots += 1;
                    capture.single_successes += slot_successes;
                }
                _ => {
                    capture.multi_slots += 1;
                    capture.multi_successes += slot_successes;
                }
            }
        }
    }
    accounting.in_flight = queue.len() as u64;

    let measured_slots = (config.n_slots - config.warmup_slots) as f64;
    let resolved = cohort.delivered + cohort.dropped;
    let zero_sample = resolved == 0;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let arrival_mean = arrival_sum / measured_slots;
    let arrival_variance = if measured_slots > 1.0 {
        (arrival_sq - measured_slots * arrival_mean * arrival_mean) / (measured_slots - 1.0)
    } else {
        0.0
    };
    Ok(ReplicationOutcome {
        rep_index,
        packet_loss_rate: ratio(cohort.dropped as f64, resolved as f64),
        throughput: successes as f64 / measured_slots,
        energy_efficiency: ratio(cohort.delivered as f64, cohort.energy),
        avg_transmissions: ratio(cohort.transmissions as f64, resolved as f64),
        zero_sample,
        accounting,
        max_attempts,
        capture,
        arrivals: ArrivalStats {
            slots: measured_slots as u64,
            mean: arrival_mean,
            variance: arrival_variance,
        },
        attempts_by_class,
        failures_by_class,
    })
}

/// All replications of a config and their 95% intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    /// In `rep_index` order.
    pub outcomes: Vec<ReplicationOutcome>,
    pub estimates: Vec<SimEstimate>,
}

impl Experiment {
    pub fn estimate(&self, metric: SimMetric) -> &SimEstimate {
        self.estimates
            .iter()
            .find(|e| e.metric == metric)
            .expect("every metric is estimated")
    }
}

/// CI level of every experiment estimate.
pub const CONFIDENCE_LEVEL: f64 = 0.95;

/// Runs every replication, in parallel, and aggregates in index order.
pub fn run_experiment(config: &SimConfig) -> Result<Experiment> {
    config.validate()?;
    if config.replications < 2 {
        return domain("an experiment needs at least 2 replications");
    }
    let outcomes = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, rep))
        .collect::<Result<Vec<_>>>()?;
    let estimates = SimMetric::ALL
        .iter()
        .map(|&metric| {
            let samples: Vec<f64> = outcomes.iter().map(|o| o.value(metric)).collect();
            SimEstimate::from_samples(metric, &samples, CONFIDENCE_LEVEL)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment { outcomes, estimates })
}
