//! Output files. Every file carries a [`RunManifest`]: CSVs as leading
//! `# key: value` comment lines, JSON as a top-level `manifest` object.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::experiment::{CellSummary, ResultRow, Scheme};
use crate::rng::PRNG_ID;

pub const TOOL_VERSION: &str = concat!("cocogen ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_paths: Vec<String>,
    pub seed: u64,
    pub tool_version: String,
    pub prng_id: String,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config_paths: Vec<String>, seed: u64) -> Self {
        Self {
            command: command.into(),
            config_paths,
            seed,
            tool_version: TOOL_VERSION.to_string(),
            prng_id: PRNG_ID.to_string(),
            started: String::new(),
            finished: String::new(),
        }
    }

    /// Comment lines; timestamps last so they are easy to strip.
    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("# command: {}", self.command),
            format!("# config_paths: {}", self.config_paths.join(";")),
            format!("# seed: {}", self.seed),
            format!("# tool_version: {}", self.tool_version),
            format!("# prng_id: {}", self.prng_id),
            format!("# started: {}", self.started),
            format!("# finished: {}", self.finished),
        ]
    }
}

/// True for manifest lines that legitimately differ between identical runs.
pub fn is_timestamp_line(line: &str) -> bool {
    line.starts_with("# started:") || line.starts_with("# finished:")
}

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn write_table<W: Write>(
    mut w: W,
    manifest: &RunManifest,
    header: &[&str],
    records: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    for line in manifest.comment_lines() {
        write!(w, "{line}\r\n")?;
    }
    let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
    csv.write_record(header)?;
    for r in records {
        csv.write_record(&r)?;
    }
    csv.flush()
}

pub const RESULTS_HEADER: [&str; 15] = [
    "job",
    "gamma_level",
    "gamma_lo",
    "gamma_hi",
    "alpha_d",
    "repetition",
    "seed",
    "scheme",
    "welfare",
    "mean_d_gen",
    "ir_all",
    "bb_sum",
    "converged",
    "realized_gamma_bar",
    "status",
];

pub fn write_results_csv<W: Write>(w: W, manifest: &RunManifest, rows: &[ResultRow]) -> io::Result<()> {
    write_table(
        w,
        manifest,
        &RESULTS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.job.to_string(),
                r.gamma_level.to_string(),
                fmt_f64(r.gamma_lo),
                fmt_f64(r.gamma_hi),
                fmt_f64(r.alpha_d),
                r.repetition.to_string(),
                r.seed.to_string(),
                r.scheme.name().to_string(),
                fmt_f64(r.welfare),
                fmt_f64(r.mean_d_gen),
                r.ir_all.to_string(),
                fmt_f64(r.bb_sum),
                r.converged.to_string(),
                fmt_f64(r.realized_gamma_bar),
                r.status.clone(),
            ]
        }),
    )
}

const SUMMARY_HEADER: [&str; 16] = [
    "gamma_level",
    "gamma_lo",
    "gamma_hi",
    "alpha_d",
    "scheme",
    "n_ok",
    "n_failed",
    "welfare_mean",
    "welfare_std",
    "mean_d_gen_mean",
    "mean_d_gen_std",
    "gamma_bar_mean",
    "gamma_bar_std",
    "ir_rate",
    "converged_rate",
    "welfare_gain_vs_scheme",
];

/// Aggregated table. The last column is CoCoGen's relative welfare gain over
/// the row's scheme (empty on CoCoGen rows).
pub fn write_summary_csv<W: Write>(
    w: W,
    manifest: &RunManifest,
    cells: &[CellSummary],
    schemes: &[Scheme],
) -> io::Result<()> {
    let records = cells.iter().filter(|c| schemes.contains(&c.scheme)).map(|c| {
        let gain = if c.scheme == Scheme::CoCoGen {
            String::new()
        } else {
            cells
                .iter()
                .find(|o| o.gamma_level == c.gamma_level && o.alpha_d == c.alpha_d && o.scheme == Scheme::CoCoGen)
                .map(|co| fmt_f64((co.welfare.mean - c.welfare.mean) / c.welfare.mean.abs()))
                .unwrap_or_default()
        };
        vec![
            c.gamma_level.to_string(),
            fmt_f64(c.gamma_lo),
            fmt_f64(c.gamma_hi),
            fmt_f64(c.alpha_d),
            c.scheme.name().to_string(),
            c.n_ok.to_string(),
            c.n_failed.to_string(),
            fmt_f64(c.welfare.mean),
            fmt_f64(c.welfare.std),
            fmt_f64(c.mean_d_gen.mean),
            fmt_f64(c.mean_d_gen.std),
            fmt_f64(c.realized_gamma_bar.mean),
            fmt_f64(c.realized_gamma_bar.std),
            fmt_f64(c.ir_rate),
            fmt_f64(c.converged_rate),
            gain,
        ]
    });
    write_table(w, manifest, &SUMMARY_HEADER, records)
}

/// `iteration,F` rows, one per recorded potential value.
pub fn write_trace_csv<W: Write>(w: W, manifest: &RunManifest, trace: &[f64]) -> io::Result<()> {
    write_table(
        w,
        manifest,
        &["iteration", "F"],
        trace.iter().enumerate().map(|(k, f)| vec![k.to_string(), fmt_f64(*f)]),
    )
}

/// `{"manifest": ..., "<key>": payload}`, pretty printed.
pub fn to_json_with_manifest<T: Serialize>(manifest: &RunManifest, key: &str, payload: &T) -> String {
    let mut map = serde_json::Map::new();
    map.insert("manifest".into(), serde_json::to_value(manifest).expect("manifest serializes"));
    map.insert(key.into(), serde_json::to_value(payload).expect("payload serializes"));
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("json serializes") + "\n"
}
