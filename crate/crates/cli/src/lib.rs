//! Command-line front end: scenario files, sweeps over scenario grids,
//! analytical/simulation comparison and CSV/JSON output.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod sweep;

pub use config::{parse_scenario_file, parse_scenario_str, SweepSpec};
pub use error::{CliError, Result};
pub use output::{read_csv, write_csv, write_json};
pub use report::{compare_report, CoverageReport};
pub use sweep::{run_sweep, ResultRow, SimSettings, SweepOptions};
