//! Command-line runner for the hardywave audits and solver.
//!
//! Every subcommand reads an optional JSON config, validates it in full and
//! then writes `<experiment>.json` and `<experiment>.csv` into the output
//! directory. Exit codes: 0 when every check passes, 1 when a check fails,
//! 2 for configuration or runtime errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod corpus;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Value};

pub use commands::{run_experiment, Failure, Outcome, Table};
pub use config::{resolve, Config, ConfigError, Experiment, Settings};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "hardywave",
    version,
    about = "Lorentz-norm audits and mild solutions of wave equations with singular potentials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub experiment: Experiment,

    /// JSON experiment config; defaults apply when omitted
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (overrides output.dir; default `out`)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Seed for randomized corpora (overrides the config's seed)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Failure(Failure),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Failure(f) => f.exit_code(),
            _ => 2,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => e.fmt(f),
            Self::Failure(e) => e.fmt(f),
            Self::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Failure> for RunError {
    fn from(e: Failure) -> Self {
        Self::Failure(e)
    }
}

fn io(e: impl std::fmt::Display) -> RunError {
    RunError::Io(e.to_string())
}

pub fn render_csv(table: &Table) -> Result<String, RunError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    String::from_utf8(w.into_inner().map_err(io)?).map_err(io)
}

fn document(outcome: &Outcome, settings: Value) -> Value {
    let summary: serde_json::Map<String, Value> = outcome
        .summary
        .iter()
        .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
        .collect();
    json!({
        "experiment": outcome.experiment,
        "passed": outcome.passed(),
        "failures": outcome.failures,
        "summary": summary,
        "settings": settings,
        "report": outcome.report,
    })
}

fn write_all(dir: &Path, name: &str, doc: &Value, tables: &[Table]) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let json_path = dir.join(format!("{name}.json"));
    let mut text = serde_json::to_string_pretty(doc).map_err(io)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(io)?;
    written.push(json_path);
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        fs::write(&path, render_csv(t)?).map_err(io)?;
        written.push(path);
    }
    Ok(written)
}

/// Runs a single experiment from validated settings and writes its artifacts.
pub fn execute(settings: &Settings, dir: &Path) -> Result<Outcome, RunError> {
    let outcome = run_experiment(settings)?;
    let doc = document(&outcome, json!(settings));
    write_all(dir, settings.experiment.name(), &doc, &outcome.tables)?;
    Ok(outcome)
}

struct SweepRow {
    values: Vec<f64>,
    status: &'static str,
    summary: Vec<(&'static str, String)>,
    error: String,
}

/// Cartesian product of the ranges, first key varying slowest.
fn grid_points(ranges: &BTreeMap<String, Vec<f64>>) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for values in ranges.values() {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    points
}

fn sweep_point(config: &Config, keys: &[&String], values: &[f64], inner: Experiment, seed: Option<u64>) -> SweepRow {
    let run = || -> Result<Outcome, RunError> {
        let mut c = config.clone();
        for (k, &v) in keys.iter().zip(values) {
            c = config::with_value(&c, k, v)?;
        }
        let settings = resolve(&c, inner, seed)?;
        Ok(run_experiment(&settings)?)
    };
    match run() {
        Ok(o) => SweepRow {
            values: values.to_vec(),
            status: if o.passed() { "pass" } else { "fail" },
            error: o.failures.join("; "),
            summary: o.summary,
        },
        Err(e) => SweepRow {
            values: values.to_vec(),
            status: "error",
            summary: Vec::new(),
            error: e.to_string(),
        },
    }
}

/// Runs every point of the sweep; failed points are recorded in their row.
pub fn sweep(config: &Config, seed: Option<u64>, dir: &Path) -> Result<Outcome, RunError> {
    let settings = resolve(config, Experiment::Sweep, seed)?;
    let block = config.sweep.as_ref().expect("resolve checked the sweep block");
    let inner = settings.experiment;
    if block.ranges.is_empty() {
        return Err(ConfigError("sweep.ranges must name at least one parameter".into()).into());
    }
    for (key, values) in &block.ranges {
        if values.is_empty() {
            return Err(ConfigError(format!("sweep.ranges.{key} is empty")).into());
        }
        for &v in values {
            config::with_value(config, key, v)?;
        }
    }
    let keys: Vec<&String> = block.ranges.keys().collect();
    let points = grid_points(&block.ranges);
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|v| sweep_point(config, &keys, v, inner, seed))
        .collect();

    let columns = commands::summary_columns(inner);
    let mut table_rows = Vec::new();
    let mut records = Vec::new();
    for row in &rows {
        let mut cells: Vec<String> = row.values.iter().map(|&v| commands::num(v)).collect();
        cells.push(row.status.to_string());
        let mut record = serde_json::Map::new();
        for (k, v) in keys.iter().zip(&row.values) {
            record.insert(k.to_string(), json!(v));
        }
        record.insert("status".into(), json!(row.status));
        for col in columns {
            let v = row
                .summary
                .iter()
                .find(|(k, _)| k == col)
                .map(|(_, v)| v.clone())
                .unwrap_or_default();
            record.insert(col.to_string(), json!(v));
            cells.push(v);
        }
        cells.push(row.error.clone());
        record.insert("error".into(), json!(row.error));
        table_rows.push(cells);
        records.push(Value::Object(record));
    }
    let failed = rows.iter().filter(|r| r.status != "pass").count();
    let failures: Vec<String> = rows
        .iter()
        .filter(|r| r.status != "pass")
        .map(|r| {
            let point: Vec<String> = keys.iter().zip(&r.values).map(|(k, v)| format!("{k}={v}")).collect();
            format!("[{}] {}: {}", point.join(", "), r.status, r.error)
        })
        .collect();
    let header: Vec<String> = keys
        .iter()
        .map(|k| k.to_string())
        .chain(std::iter::once("status".to_string()))
        .chain(columns.iter().map(|c| c.to_string()))
        .chain(std::iter::once("error".to_string()))
        .collect();
    let outcome = Outcome {
        experiment: Experiment::Sweep,
        failures,
        summary: vec![("points", rows.len().to_string()), ("failed", failed.to_string())],
        report: json!({"experiment": inner, "rows": records}),
        tables: vec![Table {
            name: "sweep".into(),
            header,
            rows: table_rows,
        }],
    };
    let doc = document(
        &outcome,
        json!({"experiment": inner, "ranges": block.ranges, "seed": settings.seed}),
    );
    write_all(dir, "sweep", &doc, &outcome.tables)?;
    Ok(outcome)
}

fn output_dir(cli: &Cli, config: &Config) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Parses, validates and runs; returns the outcome or the error with its exit code.
pub fn run(cli: &Cli) -> Result<Outcome, RunError> {
    let config = match &cli.config {
        Some(path) => config::load(path)?,
        None => Config::default(),
    };
    let dir = output_dir(cli, &config);
    if cli.workers == Some(0) {
        return Err(ConfigError("--workers must be at least 1".into()).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(io)?;
    pool.install(|| {
        if cli.experiment == Experiment::Sweep {
            sweep(&config, cli.seed, &dir)
        } else {
            let settings = resolve(&config, cli.experiment, cli.seed)?;
            execute(&settings, &dir)
        }
    })
}

/// Exit code of a finished run, printing a short status line.
pub fn report(result: &Result<Outcome, RunError>) -> i32 {
    match result {
        Ok(o) => {
            if o.experiment == Experiment::Params {
                println!("{}", serde_json::to_string_pretty(&o.report).unwrap_or_default());
            }
            let fields: Vec<String> = o.summary.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!(
                "{}: {} ({})",
                o.experiment,
                if o.passed() { "pass" } else { "FAIL" },
                fields.join(", ")
            );
            for f in &o.failures {
                eprintln!("  check failed: {f}");
            }
            if o.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
