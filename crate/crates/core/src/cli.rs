//! `dca-lab` command line.
//!
//! ```text
//! dca-lab run --data <path> [--config <path>] [--seed <u64>] [--out <dir>] [--trace]
//! dca-lab gen-config --out <path>
//! ```
//!
//! `run` writes `results.csv`, `histogram.csv` and `report.json` (plus
//! `trace.csv` with `--trace`) into the output directory, which defaults to
//! `$DCA_LAB_OUT` or `dca-out`.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{ClassificationResult, ConfusionCounts, McavHistogram, Metrics};
use crate::data_ingest::{load_dataset, DatasetSummary, IngestError};
use crate::engine::{run_traced, EngineError, RunReport, RunStats, SimConfig, World};

pub const EXIT_BAD_ARGS: u8 = 2;
pub const EXIT_DATASET: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;
pub const EXIT_ENGINE: u8 = 5;
pub const EXIT_IO: u8 = 6;

pub const RESULTS_FILE: &str = "results.csv";
pub const REPORT_FILE: &str = "report.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const TRACE_FILE: &str = "trace.csv";

#[derive(Debug, Parser)]
#[command(
    name = "dca-lab",
    version,
    about = "Agent-based Dendritic Cell Algorithm classifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a data file and write results, histogram and report.
    Run(RunArgs),
    /// Write the default configuration as JSON.
    GenConfig(GenConfigArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Data file in the UCI breast-cancer-wisconsin.data layout.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON config; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if absent.
    #[arg(long, env = "DCA_LAB_OUT", default_value = "dca-out")]
    pub out: PathBuf,
    /// Also write a per-event trace.csv.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GenConfigArgs {
    /// Where to write the config file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Args(String),
    #[error("dataset {}: {source}", path.display())]
    Dataset { path: PathBuf, source: IngestError },
    #[error("config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("simulation failed: {0}")]
    Engine(EngineError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Args(_) => EXIT_BAD_ARGS,
            CliError::Dataset { .. } => EXIT_DATASET,
            CliError::Config { .. } | CliError::InvalidConfig(_) => EXIT_CONFIG,
            CliError::Engine(_) => EXIT_ENGINE,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidConfig(msg) => CliError::InvalidConfig(msg),
            other => CliError::Engine(other),
        }
    }
}

const CONFIG_COMMENT: &[&str] = &[
    "dca-lab simulation config. Every field is required; this file holds the built-in defaults.",
    "population_size: DCs alive at every tick. dcs_per_antigen: DCs each antigen picks (<= population_size).",
    "threshold_range: each DC's migration threshold is drawn uniformly from [min, max] (csm units, min > 0).",
    "weight_matrix: rows are input signals, columns are outputs; csm weights must be >= 0.",
    "  normalize_by_weight_sum divides each output by the sum of |weights| in its column.",
    "signal_mapping: attribute columns (0-based) averaged into each input signal on a 0..100 scale;",
    "  safe_is_complement uses 100 * (1 - mean) for the safe signal.",
    "anomalous_threshold: MCAV strictly above this is classified anomalous.",
    "attribute_policy: missing_value_policy is skip_record or impute_median; bounds are fixed min-max scales per column.",
    "seed: 64-bit seed of the ChaCha8 random stream; --seed on the command line overrides it.",
];

#[derive(Serialize)]
struct ConfigDocument<'a> {
    #[serde(rename = "_comment")]
    comment: &'a [&'a str],
    #[serde(flatten)]
    config: &'a SimConfig,
}

/// Serialises `config` as the commented JSON config format.
pub fn config_to_json(config: &SimConfig) -> String {
    let doc = ConfigDocument {
        comment: CONFIG_COMMENT,
        config,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("config serialises");
    s.push('\n');
    s
}

/// Parses the JSON config format. A top-level `_comment` entry is ignored;
/// any other unknown field is an error.
pub fn config_from_json(text: &str) -> Result<SimConfig, String> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if let Some(map) = value.as_object_mut() {
        map.remove("_comment");
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}

pub fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    config_from_json(&text).map_err(|message| CliError::Config {
        path: path.to_path_buf(),
        message,
    })
}

pub fn gen_config(path: &Path) -> Result<(), CliError> {
    write_atomic(path, config_to_json(&SimConfig::default()).as_bytes())
}

/// Writes via a temporary file in the destination directory and renames it
/// into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn results_csv(results: &[ClassificationResult]) -> String {
    let mut s = String::from("antigen_id,mcav,predicted,actual\n");
    for r in results {
        s.push_str(&format!(
            "{},{:.6},{},{}\n",
            r.antigen_id, r.mcav, r.predicted, r.actual
        ));
    }
    s
}

pub fn histogram_csv(h: &McavHistogram) -> String {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for (lo, hi, count) in h.bins() {
        s.push_str(&format!("{lo},{hi},{count}\n"));
    }
    s
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    seed: u64,
    config: &'a SimConfig,
    dataset: &'a DatasetSummary,
    metrics: &'a Metrics,
    confusion: &'a ConfusionCounts,
    histogram: &'a McavHistogram,
    stats: &'a RunStats,
    results: &'a [ClassificationResult],
}

pub fn report_json(report: &RunReport, dataset: &DatasetSummary) -> String {
    let doc = ReportDocument {
        seed: report.seed,
        config: &report.config,
        dataset,
        metrics: &report.metrics,
        confusion: &report.confusion,
        histogram: &report.histogram,
        stats: &report.stats,
        results: &report.results,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serialises");
    s.push('\n');
    s
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub dataset: DatasetSummary,
    pub written: Vec<PathBuf>,
}

/// Loads data and config, runs the simulation, and writes the output files.
pub fn run_command(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;

    let file = File::open(&args.data).map_err(|e| CliError::io(&args.data, e))?;
    let (records, dataset) =
        load_dataset(file, &config.attribute_policy).map_err(|source| CliError::Dataset {
            path: args.data.clone(),
            source,
        })?;

    let (report, trace) = if args.trace {
        let (r, t) = run_traced(&config, records)?;
        (r, Some(t))
    } else {
        (World::init(&config, records)?.finish(&config)?.0, None)
    };

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: &[u8]| -> Result<(), CliError> {
        let path = args.out.join(name);
        write_atomic(&path, contents)?;
        written.push(path);
        Ok(())
    };
    emit(RESULTS_FILE, results_csv(&report.results).as_bytes())?;
    emit(HISTOGRAM_FILE, histogram_csv(&report.histogram).as_bytes())?;
    emit(REPORT_FILE, report_json(&report, &dataset).as_bytes())?;
    if let Some(trace) = trace {
        let mut buf = Vec::new();
        trace
            .write_csv(&mut buf)
            .map_err(|e| CliError::io(&args.out.join(TRACE_FILE), e))?;
        emit(TRACE_FILE, &buf)?;
    }

    Ok(RunOutcome {
        report,
        dataset,
        written,
    })
}

/// Parses `std::env::args` and runs the chosen subcommand.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_BAD_ARGS)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenConfig(args) => {
            gen_config(&args.out)?;
            println!("wrote {}", args.out.display());
        }
        Command::Run(args) => {
            let outcome = run_command(&args)?;
            let m = &outcome.report.metrics;
            println!(
                "{} records, accuracy {:.4}, seed {}",
                outcome.report.results.len(),
                m.accuracy,
                outcome.report.seed
            );
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AntigenId, Category};
    use crate::analysis::build_histogram;

    #[test]
    fn default_config_round_trips() {
        let text = config_to_json(&SimConfig::default());
        assert!(text.contains("\"_comment\""));
        assert_eq!(config_from_json(&text).unwrap(), SimConfig::default());
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let text = config_to_json(&SimConfig::default()).replace("\"seed\"", "\"sead\"");
        assert!(config_from_json(&text).is_err());
    }

    #[test]
    fn results_rows_use_six_decimals() {
        let rows = [ClassificationResult {
            antigen_id: AntigenId(3),
            mcav: 2.0 / 3.0,
            predicted: Category::Anomalous,
            actual: Category::Normal,
        }];
        assert_eq!(
            results_csv(&rows),
            "antigen_id,mcav,predicted,actual\n3,0.666667,anomalous,normal\n"
        );
    }

    #[test]
    fn histogram_rows() {
        let h = build_histogram(&[0.1, 0.9, 1.0], 2).unwrap();
        assert_eq!(histogram_csv(&h), "bin_lo,bin_hi,count\n0,0.5,1\n0.5,1,2\n");
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            EXIT_BAD_ARGS,
            EXIT_DATASET,
            EXIT_CONFIG,
            EXIT_ENGINE,
            EXIT_IO,
        ];
        let mut sorted = codes.to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
        assert_eq!(
            CliError::from(EngineError::InvalidConfig("x".into())).exit_code(),
            EXIT_CONFIG
        );
        assert_eq!(
            CliError::from(EngineError::EmptyDataset).exit_code(),
            EXIT_ENGINE
        );
    }
}
