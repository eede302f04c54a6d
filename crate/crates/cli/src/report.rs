use std::fmt;

use crate::config::ModelKind;
use crate::error::{CliError, Result};
use crate::output::format_float;
use crate::sweep::ResultRow;

/// Coverage of one scenario's alpha points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCoverage {
    pub model: ModelKind,
    pub v: f64,
    pub capture_db: f64,
    pub sigma_db: f64,
    pub points: usize,
    pub covered: usize,
    /// Rows whose analytical PLR falls outside the simulation interval.
    pub flagged: Vec<ResultRow>,
}

impl ScenarioCoverage {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.points as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub scenarios: Vec<ScenarioCoverage>,
    pub threshold: f64,
}

impl CoverageReport {
    pub fn points(&self) -> usize {
        self.scenarios.iter().map(|s| s.points).sum()
    }

    pub fn covered(&self) -> usize {
        self.scenarios.iter().map(|s| s.covered).sum()
    }

    /// Fraction of all rows whose analytical PLR lies in the interval.
    pub fn coverage(&self) -> f64 {
        self.covered() as f64 / self.points() as f64
    }

    pub fn passed(&self) -> bool {
        self.coverage() >= self.threshold
    }
}

fn inside(row: &ResultRow) -> bool {
    match (row.plr, row.plr_sim_ci_low, row.plr_sim_ci_high) {
        (Some(p), Some(lo), Some(hi)) => lo <= p && p <= hi,
        _ => false,
    }
}

/// Groups rows by scenario (consecutive rows sharing model, v, capture and
/// sigma) and measures how often the analytical PLR lies inside the
/// simulation interval.
pub fn compare_report(rows: &[ResultRow], threshold: f64) -> Result<CoverageReport> {
    if rows.is_empty() {
        return Err(CliError::Usage("nothing to compare: no rows".into()));
    }
    if let Some(r) = rows.iter().find(|r| !r.has_simulation() && r.is_ok()) {
        return Err(CliError::Usage(format!(
            "row alpha={} v={} has no simulation columns; run with simulation enabled",
            format_float(r.alpha),
            format_float(r.v)
        )));
    }
    let mut scenarios: Vec<ScenarioCoverage> = Vec::new();
    for row in rows {
        let same = |s: &ScenarioCoverage| {
            s.model == row.model
                && s.v == row.v
                && s.capture_db == row.capture_db
                && s.sigma_db == row.sigma_db
        };
        if !scenarios.last().is_some_and(same) {
            scenarios.push(ScenarioCoverage {
                model: row.model,
                v: row.v,
                capture_db: row.capture_db,
                sigma_db: row.sigma_db,
                points: 0,
                covered: 0,
                flagged: Vec::new(),
            });
        }
        let s = scenarios.last_mut().expect("pushed above");
        s.points += 1;
        if inside(row) {
            s.covered += 1;
        } else {
            s.flagged.push(row.clone());
        }
    }
    Ok(CoverageReport {
        scenarios,
        threshold,
    })
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<9} {:>6} {:>11} {:>9} {:>8} {:>9}",
            "model", "v", "capture_db", "sigma_db", "points", "coverage"
        )?;
        for s in &self.scenarios {
            writeln!(
                f,
                "{:<9} {:>6} {:>11} {:>9} {:>8} {:>9.3}",
                s.model.name(),
                format_float(s.v),
                format_float(s.capture_db),
                format_float(s.sigma_db),
                s.points,
                s.coverage()
            )?;
        }
        let flagged: Vec<&ResultRow> = self.scenarios.iter().flat_map(|s| &s.flagged).collect();
        if !flagged.is_empty() {
            writeln!(f)?;
            writeln!(f, "analytical PLR outside the simulation interval:")?;
            for r in flagged {
                write!(
                    f,
                    "  {} v={} capture_db={} sigma_db={} alpha={}: plr {} vs [{}, {}]",
                    r.model.name(),
                    format_float(r.v),
                    format_float(r.capture_db),
                    format_float(r.sigma_db),
                    format_float(r.alpha),
                    cell(r.plr),
                    cell(r.plr_sim_ci_low),
                    cell(r.plr_sim_ci_high)
                )?;
                if !r.is_ok() {
                    write!(f, " ({})", r.status)?;
                }
                writeln!(f)?;
            }
        }
        writeln!(f)?;
        write!(
            f,
            "overall coverage {}/{} = {:.3} (threshold {}): {}",
            self.covered(),
            self.points(),
            self.coverage(),
            format_float(self.threshold),
            if self.passed() { "pass" } else { "below threshold" }
        )
    }
}
