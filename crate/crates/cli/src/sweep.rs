use aloha_core::simulator::{run_experiment, SimConfig, SimMetric};
use aloha_core::steady_state::{solve_with_model, FailureModel};
use aloha_core::{compute_metrics, normalized_ladder, AnalysisOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, ScenarioKey, SweepSpec};

pub const STATUS_OK: &str = "ok";

/// Simulation settings for a sweep. Row `i` (in output order) uses seed
/// `base_seed + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub n_devices: u64,
    pub n_slots: u64,
    pub warmup_slots: u64,
    pub backoff_mean_slots: f64,
    pub replications: usize,
    pub base_seed: u64,
}

impl SimSettings {
    pub fn from_spec(spec: &SweepSpec) -> Self {
        let sim = &spec.sim;
        Self {
            n_devices: sim.devices.unwrap_or(SimConfig::DEFAULT_DEVICES),
            n_slots: spec.slots(),
            warmup_slots: spec.warmup(),
            backoff_mean_slots: sim.backoff_mean.unwrap_or(SimConfig::DEFAULT_BACKOFF_MEAN),
            replications: sim.replications.unwrap_or(SimConfig::DEFAULT_REPLICATIONS),
            base_seed: spec.seed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    pub analysis: AnalysisOptions,
    /// Run the simulator for every row as well.
    pub simulation: Option<SimSettings>,
}

/// One output line. Analytical cells are blank only when the row failed, in
/// which case `status` carries the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub alpha: f64,
    pub model: ModelKind,
    pub v: f64,
    pub capture_db: f64,
    pub sigma_db: f64,
    pub plr: Option<f64>,
    pub throughput: Option<f64>,
    pub ee: Option<f64>,
    pub avg_tx: Option<f64>,
    pub iterations: Option<usize>,
    pub plr_sim_mean: Option<f64>,
    pub plr_sim_ci_low: Option<f64>,
    pub plr_sim_ci_high: Option<f64>,
    pub status: String,
    pub seed: Option<u64>,
}

impl ResultRow {
    fn new(key: &ScenarioKey, alpha: f64) -> Self {
        Self {
            alpha,
            model: key.model,
            v: key.v,
            capture_db: key.capture_db,
            sigma_db: key.sigma_db,
            plr: None,
            throughput: None,
            ee: None,
            avg_tx: None,
            iterations: None,
            plr_sim_mean: None,
            plr_sim_ci_low: None,
            plr_sim_ci_high: None,
            status: STATUS_OK.to_string(),
            seed: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    pub fn has_simulation(&self) -> bool {
        self.plr_sim_mean.is_some() && self.plr_sim_ci_low.is_some() && self.plr_sim_ci_high.is_some()
    }

    fn fail(&mut self, what: &str, err: impl std::fmt::Display) {
        if self.is_ok() {
            self.status = format!("failed: {what}: {err}");
        }
    }
}

/// Evaluates every `(scenario, alpha)` pair; rows come back ordered by
/// scenario, then alpha, whatever the thread count. Failures are recorded
/// per row and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Vec<ResultRow> {
    let alphas = spec.alphas();
    let keys = spec.scenarios();
    keys.par_iter()
        .enumerate()
        .flat_map_iter(|(i, key)| {
            scenario_rows(spec, opts, key, &alphas, i * alphas.len()).into_iter()
        })
        .collect()
}

fn scenario_rows(
    spec: &SweepSpec,
    opts: &SweepOptions,
    key: &ScenarioKey,
    alphas: &[f64],
    first_row: usize,
) -> Vec<ResultRow> {
    let k_max = spec.k_max;
    let setup = key.scenario(0.0, k_max).and_then(|base| {
        let model = FailureModel::for_scenario(&base, &opts.analysis)?;
        let ladder = normalized_ladder(base.v(), k_max)?;
        Ok((base, model, ladder))
    });
    alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let mut row = ResultRow::new(key, alpha);
            let (base, model, ladder) = match &setup {
                Ok(s) => s,
                Err(e) => {
                    row.fail("setup", e);
                    return row;
                }
            };
            let scenario = match base.with_alpha(alpha) {
                Ok(s) => s,
                Err(e) => {
                    row.fail("setup", e);
                    return row;
                }
            };
            match solve_with_model(model, alpha, k_max, &opts.analysis)
                .and_then(|sol| Ok((compute_metrics(&scenario, &sol.p, ladder)?, sol.iterations)))
            {
                Ok((m, iterations)) => {
                    row.plr = Some(m.packet_loss_rate);
                    row.throughput = Some(m.throughput);
                    row.ee = Some(m.energy_efficiency);
                    row.avg_tx = Some(m.avg_transmissions);
                    row.iterations = Some(iterations);
                }
                Err(e) => row.fail("analysis", e),
            }
            if let Some(sim) = &opts.simulation {
                let seed = sim.base_seed.wrapping_add((first_row + j) as u64);
                row.seed = Some(seed);
                let config = SimConfig {
                    scenario,
                    n_devices: sim.n_devices,
                    n_slots: sim.n_slots,
                    warmup_slots: sim.warmup_slots,
                    backoff_mean_slots: sim.backoff_mean_slots,
                    replications: sim.replications,
                    master_seed: seed,
                };
                match run_experiment(&config) {
                    Ok(exp) => {
                        let est = exp.estimate(SimMetric::Plr);
                        row.plr_sim_mean = Some(est.mean);
                        row.plr_sim_ci_low = Some(est.ci_low);
                        row.plr_sim_ci_high = Some(est.ci_high);
                    }
                    Err(e) => row.fail("simulation", e),
                }
            }
            row
        })
        .collect()
}
