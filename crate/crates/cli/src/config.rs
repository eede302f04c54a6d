//! Scenario files.
//!
//! A scenario file is TOML:
//!
//! ```toml
//! alpha = { start = 0.1, stop = 1.5, step = 0.1 }
//! k_max = 4                  # default 4
//! v = [1, 2, 0.5]            # a number or a list
//! capture_db = [3, 0, -3]
//! sigma_db = 1
//! model = "auto"             # auto | ideal | wideband
//!
//! [sim]                      # every key optional
//! reps = 40
//! slots = 200000
//! warmup = 20000            # default slots / 10
//! devices = 5000
//! backoff_mean = 36
//! seed = 1
//! coverage_threshold = 0.9
//! ```
//!
//! Unset lists default to the full grid `v = [1, 2, 0.5]`,
//! `capture_db = [3, 0, -3]`, `sigma_db = [0, 1, 3]`.

use std::fmt;
use std::path::{Path, PathBuf};

use aloha_core::ideal::RationalPowerFactor;
use aloha_core::simulator::SimConfig;
use aloha_core::{CaptureRatio, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_K_MAX: usize = 4;
pub const DEFAULT_V: [f64; 3] = [1.0, 2.0, 0.5];
pub const DEFAULT_CAPTURE_DB: [f64; 3] = [3.0, 0.0, -3.0];
pub const DEFAULT_SIGMA_DB: [f64; 3] = [0.0, 1.0, 3.0];
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_COVERAGE_THRESHOLD: f64 = 0.9;

/// Which model a grid point uses. `Auto` picks the lattice model for
/// `sigma_db = 0` and the wide-band model otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    #[default]
    Auto,
    Ideal,
    Wideband,
}

/// The model a row was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ideal,
    Wideband,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Ideal => "ideal",
            ModelKind::Wideband => "wideband",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AlphaRange {
    /// `start, start + step, ...` up to `stop`, rounded to 12 decimals so that
    /// `0.1 + 2 * 0.1` prints as `0.3`.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

/// Simulation settings given in the file; unset fields take the simulator
/// defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOverrides {
    pub replications: Option<usize>,
    pub slots: Option<u64>,
    pub warmup: Option<u64>,
    pub devices: Option<u64>,
    pub backoff_mean: Option<f64>,
    pub seed: Option<u64>,
    pub coverage_threshold: Option<f64>,
}

/// One grid point apart from the arrival rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioKey {
    pub model: ModelKind,
    pub v: f64,
    pub capture_db: f64,
    pub sigma_db: f64,
}

impl ScenarioKey {
    pub fn scenario(&self, alpha: f64, k_max: usize) -> aloha_core::Result<Scenario> {
        let capture = CaptureRatio::from_db(self.capture_db)?;
        match self.model {
            ModelKind::Ideal => {
                Scenario::ideal(alpha, k_max, RationalPowerFactor::from_f64(self.v)?, capture)
            }
            ModelKind::Wideband => Scenario::wideband(alpha, k_max, self.v, capture, self.sigma_db),
        }
    }
}

/// A validated sweep: the arrival-rate range times the scenario grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub alpha: AlphaRange,
    pub k_max: usize,
    pub v: Vec<f64>,
    pub capture_db: Vec<f64>,
    pub sigma_db: Vec<f64>,
    pub model: ModelChoice,
    pub sim: SimOverrides,
}

impl SweepSpec {
    /// The full grid over `alpha in [0.1, 1.5]`.
    pub fn default_grid() -> Self {
        Self {
            alpha: AlphaRange {
                start: 0.1,
                stop: 1.5,
                step: 0.1,
            },
            k_max: DEFAULT_K_MAX,
            v: DEFAULT_V.to_vec(),
            capture_db: DEFAULT_CAPTURE_DB.to_vec(),
            sigma_db: DEFAULT_SIGMA_DB.to_vec(),
            model: ModelChoice::Auto,
            sim: SimOverrides::default(),
        }
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.alpha.values()
    }

    /// Grid points in file order: `v`, then capture ratio, then `sigma_db`.
    pub fn scenarios(&self) -> Vec<ScenarioKey> {
        let mut out = Vec::new();
        for &v in &self.v {
            for &capture_db in &self.capture_db {
                for &sigma_db in &self.sigma_db {
                    let model = match self.model {
                        ModelChoice::Ideal => ModelKind::Ideal,
                        ModelChoice::Wideband => ModelKind::Wideband,
                        ModelChoice::Auto if sigma_db == 0.0 => ModelKind::Ideal,
                        ModelChoice::Auto => ModelKind::Wideband,
                    };
                    out.push(ScenarioKey {
                        model,
                        v,
                        capture_db,
                        sigma_db,
                    });
                }
            }
        }
        out
    }

    pub fn seed(&self) -> u64 {
        self.sim.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn slots(&self) -> u64 {
        self.sim.slots.unwrap_or(SimConfig::DEFAULT_SLOTS)
    }

    /// Unless set, a tenth of the run: the default 20000 of 200000 slots.
    pub fn warmup(&self) -> u64 {
        match (self.sim.warmup, self.sim.slots) {
            (Some(w), _) => w,
            (None, Some(slots)) => slots / 10,
            (None, None) => SimConfig::DEFAULT_WARMUP,
        }
    }

    pub fn coverage_threshold(&self) -> f64 {
        self.sim.coverage_threshold.unwrap_or(DEFAULT_COVERAGE_THRESHOLD)
    }

    /// Checks every invariant; `origin` names the source in error messages.
    pub fn validate(&self, origin: &Path) -> Result<()> {
        let invalid = |key: &str, message: String| {
            Err(CliError::Invalid {
                path: origin.to_path_buf(),
                key: key.to_string(),
                message,
            })
        };
        let a = self.alpha;
        for (key, x) in [("alpha.start", a.start), ("alpha.stop", a.stop), ("alpha.step", a.step)] {
            if !x.is_finite() {
                return invalid(key, format!("must be finite, got {x}"));
            }
        }
        if a.start < 0.0 {
            return invalid("alpha.start", format!("must be >= 0, got {}", a.start));
        }
        if a.start > a.stop {
            return invalid("alpha.stop", format!("must be >= alpha.start, got {}", a.stop));
        }
        if !(a.step > 0.0) {
            return invalid("alpha.step", format!("must be > 0, got {}", a.step));
        }
        if (a.stop - a.start) / a.step > 1e6 {
            return invalid("alpha.step", "more than a million grid points".into());
        }
        for (key, list) in [("v", &self.v), ("capture_db", &self.capture_db), ("sigma_db", &self.sigma_db)] {
            if list.is_empty() {
                return invalid(key, "must not be empty".into());
            }
            if let Some(x) = list.iter().find(|x| !x.is_finite()) {
                return invalid(key, format!("must be finite, got {x}"));
            }
        }
        if let Some(v) = self.v.iter().find(|&&v| !(v > 0.0)) {
            return invalid("v", format!("must be positive, got {v}"));
        }
        if let Some(s) = self.sigma_db.iter().find(|&&s| s < 0.0) {
            return invalid("sigma_db", format!("must be >= 0, got {s}"));
        }
        match self.model {
            ModelChoice::Wideband if self.sigma_db.contains(&0.0) => {
                return invalid("sigma_db", format!("{}", aloha_core::Error::UseIdealModel));
            }
            ModelChoice::Ideal if self.sigma_db.iter().any(|&s| s != 0.0) => {
                return invalid(
                    "sigma_db",
                    "the ideal model has perfect power control; sigma_db must be 0".into(),
                );
            }
            _ => {}
        }
        for key in self.scenarios() {
            if key.model == ModelKind::Ideal {
                if let Err(e) = RationalPowerFactor::from_f64(key.v) {
                    return invalid("v", format!("the ideal model needs a rational factor: {e}"));
                }
            }
        }
        let sim = &self.sim;
        if let Some(r) = sim.replications {
            if r < 2 {
                return invalid("sim.reps", format!("needs at least 2 replications, got {r}"));
            }
        }
        if sim.devices == Some(0) {
            return invalid("sim.devices", "must be positive".into());
        }
        let slots = self.slots();
        let warmup = self.warmup();
        if slots <= warmup {
            return invalid(
                if sim.slots.is_some() { "sim.slots" } else { "sim.warmup" },
                format!("slots ({slots}) must exceed warmup ({warmup})"),
            );
        }
        if let Some(b) = sim.backoff_mean {
            if !(b > 0.0) || !b.is_finite() {
                return invalid("sim.backoff_mean", format!("must be positive, got {b}"));
            }
        }
        if let Some(t) = sim.coverage_threshold {
            if !(0.0..=1.0).contains(&t) {
                return invalid("sim.coverage_threshold", format!("must lie in [0, 1], got {t}"));
            }
        }
        let devices = sim.devices.unwrap_or(SimConfig::DEFAULT_DEVICES);
        if a.stop > devices as f64 {
            return invalid(
                "sim.devices",
                format!("alpha.stop / devices must be <= 1, got {} / {devices}", a.stop),
            );
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlpha {
    start: f64,
    stop: f64,
    step: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSim {
    reps: Option<usize>,
    slots: Option<u64>,
    warmup: Option<u64>,
    devices: Option<u64>,
    backoff_mean: Option<f64>,
    seed: Option<u64>,
    coverage_threshold: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    alpha: RawAlpha,
    k_max: Option<usize>,
    v: Option<OneOrMany>,
    capture_db: Option<OneOrMany>,
    sigma_db: Option<OneOrMany>,
    model: Option<ModelChoice>,
    sim: Option<RawSim>,
}

/// Parses and validates scenario-file text; `origin` is used in messages.
pub fn parse_scenario_str(text: &str, origin: &Path) -> Result<SweepSpec> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        line: e
            .span()
            .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1),
        message: e.message().to_string(),
    })?;
    let sim = raw.sim.unwrap_or_default();
    let spec = SweepSpec {
        alpha: AlphaRange {
            start: raw.alpha.start,
            stop: raw.alpha.stop,
            step: raw.alpha.step,
        },
        k_max: raw.k_max.unwrap_or(DEFAULT_K_MAX),
        v: raw.v.map_or(DEFAULT_V.to_vec(), OneOrMany::into_vec),
        capture_db: raw.capture_db.map_or(DEFAULT_CAPTURE_DB.to_vec(), OneOrMany::into_vec),
        sigma_db: raw.sigma_db.map_or(DEFAULT_SIGMA_DB.to_vec(), OneOrMany::into_vec),
        model: raw.model.unwrap_or_default(),
        sim: SimOverrides {
            replications: sim.reps,
            slots: sim.slots,
            warmup: sim.warmup,
            devices: sim.devices,
            backoff_mean: sim.backoff_mean,
            seed: sim.seed,
            coverage_threshold: sim.coverage_threshold,
        },
    };
    spec.validate(origin)?;
    Ok(spec)
}

pub fn parse_scenario_file(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: PathBuf::from(path),
        source,
    })?;
    parse_scenario_str(&text, path)
}
