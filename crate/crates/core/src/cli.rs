//! Command-line harness: configuration, runs, starter sweeps and record files.
//!
//! Every subcommand reads an optional JSON config (the reference scenario on
//! the default model when omitted) and writes its records into an output
//! directory. Floats in CSV files use `{:.16e}`, which round-trips `f64`
//! exactly, so identical inputs give byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::assembly::{simultaneous_oracle, Action, GapStats};
use crate::error::{Error, Result};
use crate::heuristics::{
    pick_best, run_heuristic, sweep_starters, GapDelta, Policy, RunResult, StopReason,
    REFERENCE_HOLES,
};
use crate::model::{HoleLayout, ModelParams, HOLE_COUNT};
use crate::{Matrix, Model, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "boltseq", version, about = "Fastener installation sequencing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one policy and write trace.csv, wide.csv and summary.json.
    Run(RunArgs),
    /// Gap-gradient run from every scenario hole; writes starters.csv and best_starter.json.
    SweepStarters(CommonArgs),
    /// Simultaneous installation of all scenario holes; writes oracle.json.
    Oracle(CommonArgs),
    /// Writes the condensed stiffness (Kc.csv) and hole layout (layout.csv).
    ModelDump(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config; defaults to the 20-hole reference scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// maxgap, maxmindivide, blockwise, maxperim, maxarea, gapgradient or kf.
    #[arg(long, default_value = "maxgap")]
    pub algo: String,
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long)]
    pub max_actions: Option<usize>,
}

/// On-disk configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    #[serde(default)]
    pub model: ModelParams,
    /// Condensed stiffness to use instead of building one from `model`.
    /// Relative paths are taken from the config file's directory.
    #[serde(default)]
    pub kc_csv: Option<PathBuf>,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub holes: Vec<usize>,
    pub start: Option<usize>,
    pub max_actions: usize,
    pub n_divisor: usize,
    pub lambda: f64,
    pub mean_tol: f64,
    pub std_tol: f64,
    pub force_floor: f64,
    pub gap_delta: GapDelta,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            model: ModelParams::default(),
            kc_csv: None,
            scenario: ScenarioConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let s = Scenario::new(REFERENCE_HOLES);
        Self {
            holes: s.holes,
            start: s.start,
            max_actions: s.max_actions,
            n_divisor: s.n_divisor,
            lambda: s.lambda,
            mean_tol: s.mean_tol,
            std_tol: s.std_tol,
            force_floor: s.force_floor,
            gap_delta: s.gap_delta,
        }
    }
}

impl ScenarioConfig {
    /// Unvalidated scenario; validation happens against the model.
    pub fn to_scenario(&self) -> Scenario {
        let mut s = Scenario::new(self.holes.iter().copied());
        s.start = self.start;
        s.max_actions = self.max_actions;
        s.n_divisor = self.n_divisor;
        s.lambda = self.lambda;
        s.mean_tol = self.mean_tol;
        s.std_tol = self.std_tol;
        s.force_floor = self.force_floor;
        s.gap_delta = self.gap_delta;
        s
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    /// Reads a config file; a relative `kc_csv` is made relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(kc) = cfg.kc_csv.as_mut() {
            if kc.is_relative() {
                *kc = path.parent().unwrap_or(Path::new("")).join(&*kc);
            }
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<Model> {
        match &self.kc_csv {
            None => Model::build(&self.model),
            Some(path) => {
                let kc = read_matrix_csv(path)?;
                let layout = HoleLayout::on_grid(self.model.grid)?;
                Model::from_parts(
                    kc,
                    layout,
                    vec![self.model.initial_gap; HOLE_COUNT],
                    self.model.k_f,
                )
            }
        }
    }
}

/// Process exit status for an error: 1 input, 2 unknown policy, 3 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownPolicy(_) => 2,
        Error::Numerical(_) => 3,
        _ => 1,
    }
}

/// Parses the process arguments, runs, reports errors; returns the exit status.
pub fn main_from_env() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepStarters(args) => cmd_sweep_starters(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::ModelDump(args) => cmd_model_dump(args),
    }
}

fn load(args: &CommonArgs) -> Result<(Config, PathBuf)> {
    let cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn prepare(args: &CommonArgs) -> Result<(Model, Scenario, PathBuf)> {
    let (cfg, out) = load(args)?;
    let model = cfg.model()?;
    let scenario = cfg.scenario.to_scenario();
    scenario.validate(model.hole_count())?;
    fs::create_dir_all(&out)?;
    Ok((model, scenario, out))
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let policy: Policy = args.algo.parse()?;
    let (model, mut scenario, out) = prepare(&args.common)?;
    if let Some(s) = args.start {
        scenario.start = Some(s);
    }
    if let Some(n) = args.max_actions {
        scenario.max_actions = n;
    }
    let run = run_heuristic(&model, &scenario, policy)?;
    write_file(&out.join("trace.csv"), |w| write_trace_csv(&run, w))?;
    write_file(&out.join("wide.csv"), |w| write_wide_csv(&run, w))?;
    write_json(&out.join("summary.json"), &Summary::new(&scenario, &run))
}

pub fn cmd_sweep_starters(args: &CommonArgs) -> Result<()> {
    let (model, scenario, out) = prepare(args)?;
    let outcomes = sweep_starters(&model, &scenario)?;
    write_file(&out.join("starters.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["starter", "gap_mean", "gap_var", "loss"])
            .map_err(csv_err)?;
        for o in &outcomes {
            let st = o.result.final_stats();
            csv.write_record([
                o.starter.to_string(),
                fmt_f64(st.gap_mean),
                fmt_f64(st.gap_var),
                fmt_f64(o.result.final_loss),
            ])
            .map_err(csv_err)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let best = pick_best(&outcomes).expect("validated scenario is non-empty");
    write_json(
        &out.join("best_starter.json"),
        &BestStarter {
            schema: SCHEMA_VERSION,
            best_starter: best.starter,
            loss: best.result.final_loss,
            run: Summary::new(&scenario.clone().with_start(best.starter), &best.result),
        },
    )
}

pub fn cmd_oracle(args: &CommonArgs) -> Result<()> {
    let (model, scenario, out) = prepare(args)?;
    let stats = simultaneous_oracle(&model, &scenario.holes)?;
    write_json(
        &out.join("oracle.json"),
        &OracleRecord {
            schema: SCHEMA_VERSION,
            holes: scenario.holes,
            oracle: stats,
        },
    )
}

pub fn cmd_model_dump(args: &CommonArgs) -> Result<()> {
    let (cfg, out) = load(args)?;
    let model = cfg.model()?;
    fs::create_dir_all(&out)?;
    write_file(&out.join("Kc.csv"), |w| write_matrix_csv(model.kc(), w))?;
    write_file(&out.join("layout.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["index", "x", "y", "block"]).map_err(csv_err)?;
        for h in model.layout().holes() {
            csv.write_record([
                h.index.to_string(),
                h.x.to_string(),
                h.y.to_string(),
                h.block.to_string(),
            ])
            .map_err(csv_err)?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// 17 significant digits: exact round trip for `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv<W: Write>(run: &RunResult<f64>, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "step",
        "action_kind",
        "hole",
        "gap_mean",
        "gap_var",
        "gap_std",
        "force_mean",
        "force_var",
        "loss",
    ])
    .map_err(csv_err)?;
    for t in &run.trace {
        let (kind, hole) = match t.action {
            Some(a) => (a.kind.as_str().to_owned(), a.hole.to_string()),
            None => (String::new(), String::new()),
        };
        let s = &t.stats;
        csv.write_record([
            t.step.to_string(),
            kind,
            hole,
            fmt_f64(s.gap_mean),
            fmt_f64(s.gap_var),
            fmt_f64(s.gap_std),
            fmt_f64(s.force_mean),
            fmt_f64(s.force_var),
            fmt_f64(t.loss),
        ])
        .map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

/// One row per step: `step, gap_0.., force_0..`.
pub fn write_wide_csv<W: Write>(run: &RunResult<f64>, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let n = run.trace.first().map_or(0, |t| t.gaps.len());
    let header = std::iter::once("step".to_owned())
        .chain((0..n).map(|i| format!("gap_{i}")))
        .chain((0..n).map(|i| format!("force_{i}")));
    csv.write_record(header).map_err(csv_err)?;
    for t in &run.trace {
        let row = std::iter::once(t.step.to_string())
            .chain(t.gaps.iter().map(|&g| fmt_f64(g)))
            .chain(t.forces.iter().map(|&f| fmt_f64(f)));
        csv.write_record(row).map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

/// Headerless square matrix, one row per line.
pub fn write_matrix_csv<W: Write>(m: &Matrix, w: W) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.rows() {
        csv.write_record(m.row(i).iter().map(|&v| fmt_f64(v)))
            .map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    Error::Config(format!("{}: bad number `{f}`: {e}", path.display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub policy: Policy,
    pub holes: Vec<usize>,
    pub start: Option<usize>,
    pub sequence: Vec<Action>,
    pub actions_used: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub final_stats: GapStats<f64>,
    pub final_loss: f64,
    pub min_gap: f64,
    pub oracle: GapStats<f64>,
}

impl Summary {
    pub fn new(scenario: &Scenario, run: &RunResult<f64>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            policy: run.policy,
            holes: scenario.holes.clone(),
            start: scenario.start,
            sequence: run.sequence.clone(),
            actions_used: run.actions_used,
            converged: run.converged,
            stop: run.stop,
            final_stats: *run.final_stats(),
            final_loss: run.final_loss,
            min_gap: run.min_gap(),
            oracle: run.oracle,
        }
    }
}

#[derive(Debug, Serialize)]
struct BestStarter {
    schema: u32,
    best_starter: usize,
    loss: f64,
    run: Summary,
}

#[derive(Debug, Serialize)]
struct OracleRecord {
    schema: u32,
    holes: Vec<usize>,
    oracle: GapStats<f64>,
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
