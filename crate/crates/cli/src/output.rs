use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CliError, Result};
use crate::sweep::ResultRow;

pub const CSV_HEADER: [&str; 15] = [
    "alpha",
    "model",
    "v",
    "capture_db",
    "sigma_db",
    "plr",
    "throughput",
    "ee",
    "avg_tx",
    "iterations",
    "plr_sim_mean",
    "plr_sim_ci_low",
    "plr_sim_ci_high",
    "status",
    "seed",
];

const SIGNIFICANT_DIGITS: usize = 9;

/// Shortest of fixed or scientific notation with 9 significant digits,
/// trailing zeros removed (`%.9g`).
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded to what the CSV keeps.
pub fn round_significant(x: f64) -> f64 {
    format_float(x).parse().expect("formatted float parses")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn opt_int<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            format_float(r.alpha),
            r.model.to_string(),
            format_float(r.v),
            format_float(r.capture_db),
            format_float(r.sigma_db),
            opt_float(r.plr),
            opt_float(r.throughput),
            opt_float(r.ee),
            opt_float(r.avg_tx),
            opt_int(r.iterations),
            opt_float(r.plr_sim_mean),
            opt_float(r.plr_sim_ci_low),
            opt_float(r.plr_sim_ci_high),
            r.status.clone(),
            opt_int(r.seed),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(CliError::Usage(format!(
            "unexpected CSV header {}",
            header.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}

/// Rows as a JSON array of records, with floats rounded like the CSV.
pub fn write_json<W: Write>(rows: &[ResultRow], mut writer: W) -> Result<()> {
    let rounded: Vec<ResultRow> = rows.iter().map(rounded_row).collect();
    serde_json::to_writer_pretty(&mut writer, &rounded)?;
    writeln!(writer).map_err(serde_json::Error::io)?;
    Ok(())
}

fn rounded_row(r: &ResultRow) -> ResultRow {
    let round = |x: Option<f64>| x.map(round_significant);
    ResultRow {
        alpha: round_significant(r.alpha),
        v: round_significant(r.v),
        capture_db: round_significant(r.capture_db),
        sigma_db: round_significant(r.sigma_db),
        plr: round(r.plr),
        throughput: round(r.throughput),
        ee: round(r.ee),
        avg_tx: round(r.avg_tx),
        plr_sim_mean: round(r.plr_sim_mean),
        plr_sim_ci_low: round(r.plr_sim_ci_low),
        plr_sim_ci_high: round(r.plr_sim_ci_high),
        ..r.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: Format, writer: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(rows, writer),
        Format::Json => write_json(rows, writer),
    }
}

pub fn write_rows_to_path(rows: &[ResultRow], format: Format, path: &Path) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = BufWriter::new(File::create(path).map_err(io)?);
    write_rows(rows, format, &mut file)?;
    file.flush().map_err(io)
}
