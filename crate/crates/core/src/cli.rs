//! `swarm-forecast` command line: `train`, `eval`, `compare`, `predict`.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 numeric failure
//! during training or forecasting.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::Error;
use crate::experiments::{
    compare_models, evaluate, horizon_to_csv, predict_horizon, train, ForecastModel, Trainer,
};
use crate::swarm::trace_to_csv;
use crate::timeseries::{parse_series_csv, split_train_test, TimeSeries, YearMonth};

#[derive(Debug, Parser)]
#[command(name = "swarm-forecast", version, about = "Train and evaluate swarm-trained consumption forecasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and write model.json and trace.csv.
    Train(TrainArgs),
    /// Score a model on the months from --split on.
    Eval(EvalArgs),
    /// Train BP, PSO-BP and MPSO-BP for each seed and tabulate.
    Compare(CompareArgs),
    /// Forecast the months after the end of --data.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// `month,value` CSV.
    #[arg(long)]
    data: PathBuf,
    /// key=value overrides of the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First month of the held-out range (YYYY-MM).
    #[arg(long)]
    split: Option<YearMonth>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    algorithm: Trainer,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    split: YearMonth,
    /// Output directory; defaults to the model's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    horizon: usize,
    /// Forecast CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult {
    fs::create_dir_all(path).map_err(|e| Failure::Invalid(format!("cannot create {}: {e}", path.display())))
}

fn load_series(path: &Path) -> CliResult<TimeSeries> {
    let text = read(path)?;
    parse_series_csv(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> CliResult<ForecastModel> {
    let text = read(path)?;
    ForecastModel::from_json(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

/// Defaults, then the seed environment variable, then the config file.
fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::from_env()?;
    if let Some(path) = path {
        let text = read(path)?;
        cfg.apply_text(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    }
    Ok(cfg)
}

/// Explicit boundary, else the last twelve months are held out.
fn resolve_split(series: &TimeSeries, split: Option<YearMonth>) -> CliResult<(TimeSeries, TimeSeries)> {
    let boundary = split.unwrap_or_else(|| series.end().offset(-11));
    Ok(split_train_test(series, boundary)?)
}

fn cmd_train(args: TrainArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = load_config(args.common.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(split) = args.common.split {
        cfg.split = Some(split);
    }
    cfg.validate()?;
    let series = load_series(&args.common.data)?;
    let (train_part, _) = resolve_split(&series, cfg.split)?;
    let dataset = cfg.experiment.training_set(&train_part)?;
    let topology = cfg.experiment.topology()?;
    let run = train(args.algorithm, &dataset, topology, &cfg.experiment.hybrid, cfg.seed)?;

    create_dir(&args.out)?;
    write(&args.out.join("model.json"), &(run.trained.model.to_json() + "\n"))?;
    write(&args.out.join("trace.csv"), &trace_to_csv(run.trace()))?;
    if run.trained.model.trainer != Trainer::Bp && !run.bp_trace.is_empty() {
        write(&args.out.join("bp_trace.csv"), &trace_to_csv(&run.bp_trace))?;
    }
    let t = &run.trained;
    let _ = writeln!(
        out,
        "{}: final fitness {} after {} iterations ({} BP epochs), target {}",
        t.model.trainer.label(),
        t.final_fitness,
        t.iterations_used,
        t.bp_epochs,
        if t.reached_target { "reached" } else { "not reached" }
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> CliResult {
    let model = load_model(&args.model)?;
    let series = load_series(&args.data)?;
    let (history, test) = split_train_test(&series, args.split)?;
    let report = evaluate(&model, &test, &history)?;
    let dir = match args.out {
        Some(d) => d,
        None => args.model.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if !dir.as_os_str().is_empty() {
        create_dir(&dir)?;
    }
    let table = report.to_table(model.trainer.label());
    write(&dir.join("metrics.json"), &(report.to_json() + "\n"))?;
    write(&dir.join("metrics.txt"), &table)?;
    write(&dir.join("predictions.csv"), &report.to_csv())?;
    let _ = write!(out, "{table}");
    Ok(())
}

fn cmd_compare(args: CompareArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = load_config(args.common.config.as_deref())?;
    if let Some(split) = args.common.split {
        cfg.split = Some(split);
    }
    cfg.validate()?;
    let series = load_series(&args.common.data)?;
    let (train_part, test) = resolve_split(&series, cfg.split)?;
    let report = compare_models(&train_part, &test, &cfg.experiment, &args.seeds)?;
    create_dir(&args.out)?;
    let table = report.to_table();
    write(&args.out.join("comparison.json"), &(report.to_json() + "\n"))?;
    write(&args.out.join("comparison.txt"), &table)?;
    let _ = write!(out, "{table}");
    Ok(())
}

fn cmd_predict(args: PredictArgs, out: &mut dyn Write) -> CliResult {
    if args.horizon == 0 {
        return Err(Error::EmptyHorizon.into());
    }
    let model = load_model(&args.model)?;
    let series = load_series(&args.data)?;
    let points = predict_horizon(&model, &series, args.horizon)?;
    let csv = horizon_to_csv(&points);
    match args.out {
        Some(path) => write(&path, &csv)?,
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs one command, returning the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Predict(a) => cmd_predict(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Invalid(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Numeric(m)) => {
            let _ = writeln!(err, "numeric failure: {m}");
            2
        }
    }
}
