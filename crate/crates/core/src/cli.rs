//! Command-line front end.
//!
//! Three subcommands:
//!
//! * `run` executes one seeded ensemble run and writes `trajectory.csv` and
//!   `summary.toml` into the output directory.
//! * `exact` prints exact-diagonalization data for given `t`, `u`.
//! * `figdata` splits a trajectory table into per-trial energy series and a
//!   stacked shot-allocation series.
//!
//! Settings come from built-in defaults, then a flat TOML config file, then
//! command-line flags, each layer overriding the previous one. The output
//! directory is taken from `--out-dir`, else the config file, else the
//! `KDVQE_OUTPUT_DIR` environment variable, else the working directory.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use crate::ansatz::{AnsatzSpec, RotationKind};
use crate::ensemble::{run, Mode, Problem, RunRecord, ScheduleConfig, WeightSource};
use crate::estimator::PenaltySign;
use crate::hubbard::{build_hubbard_hamiltonian, exact_ground, particle_number_operator, HubbardParams, TrialLabel};
use crate::qsim::exact_expectation;

pub const OUTPUT_DIR_ENV: &str = "KDVQE_OUTPUT_DIR";
pub const TABLE_HEADER: [&str; 7] = ["step", "trial", "epsilon", "stderr", "shots", "temperature", "active"];

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration, malformed input.
    Usage(String),
    /// Failure while running or writing results.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Csv,
    Tsv,
}

impl TableFormat {
    fn delimiter(self) -> u8 {
        match self {
            Self::Csv => b',',
            Self::Tsv => b'\t',
        }
    }

    fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Tsv => "tsv",
        }
    }

    fn name(self) -> &'static str {
        self.extension()
    }

    fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Self::Tsv,
            _ => Self::Csv,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub hubbard: HubbardParams,
    pub ansatz: AnsatzSpec,
    pub schedule: ScheduleConfig,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub format: TableFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hubbard: HubbardParams::default(),
            ansatz: AnsatzSpec::default(),
            schedule: ScheduleConfig::default(),
            seed: 0,
            out_dir: None,
            format: TableFormat::Csv,
        }
    }
}

fn as_float(key: &str, v: &Value) -> Result<f64, CliError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => usage(format!("{key}: expected a number, got {v}")),
    }
}

fn as_uint(key: &str, v: &Value) -> Result<u64, CliError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => usage(format!("{key}: expected a non-negative integer, got {v}")),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str, CliError> {
    v.as_str().map_or_else(|| usage(format!("{key}: expected a string, got {v}")), Ok)
}

fn choice<T: Copy>(key: &str, v: &Value, options: &[(&str, T)]) -> Result<T, CliError> {
    let s = as_str(key, v)?;
    options.iter().find(|(name, _)| name.eq_ignore_ascii_case(s)).map(|(_, x)| *x).map_or_else(
        || {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            usage(format!("{key}: expected one of {}, got {s:?}", names.join(", ")))
        },
        Ok,
    )
}

const MODES: [(&str, Mode); 2] = [("shots", Mode::Shots), ("exact", Mode::Exact)];
const ROTATIONS: [(&str, RotationKind); 2] = [("y", RotationKind::Y), ("euler", RotationKind::Euler)];
const WEIGHT_SOURCES: [(&str, WeightSource); 2] = [("penalized", WeightSource::Penalized), ("energy", WeightSource::Energy)];
const PENALTY_SIGNS: [(&str, PenaltySign); 2] = [("added", PenaltySign::Added), ("subtracted", PenaltySign::Subtracted)];
const FORMATS: [(&str, TableFormat); 2] = [("csv", TableFormat::Csv), ("tsv", TableFormat::Tsv)];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], x: &T) -> &'static str {
    options.iter().find(|(_, v)| v == x).map(|(n, _)| *n).expect("every variant is listed")
}

impl RunConfig {
    /// Sets one key from a config-file or flag value.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<(), CliError> {
        let s = &mut self.schedule;
        match key {
            "t" => self.hubbard.t = as_float(key, v)?,
            "u" => self.hubbard.u = as_float(key, v)?,
            "lambda" => s.lambda = as_float(key, v)?,
            "eta" => s.learning_rate = as_float(key, v)?,
            "n_shots" => s.total_shots = as_uint(key, v)?,
            "t0" => s.t0 = as_float(key, v)?,
            "decay" => s.decay = as_float(key, v)?,
            "prune_threshold" => s.prune_threshold = as_uint(key, v)?,
            "max_steps" => s.max_steps = as_uint(key, v)? as usize,
            "n_layers" => self.ansatz.n_layers = as_uint(key, v)? as usize,
            "seed" => self.seed = as_uint(key, v)?,
            "mode" => s.mode = choice(key, v, &MODES)?,
            "gradient_shot_fraction" => s.gradient_shot_fraction = as_float(key, v)?,
            "temperature_floor" => s.temperature_floor = as_float(key, v)?,
            "refinement_steps" => s.refinement_steps = as_uint(key, v)? as usize,
            "rotation" => self.ansatz.rotation = choice(key, v, &ROTATIONS)?,
            "weight_source" => s.weight_source = choice(key, v, &WEIGHT_SOURCES)?,
            "penalty_sign" => s.penalty_sign = choice(key, v, &PENALTY_SIGNS)?,
            "fourier_tail" => {
                self.ansatz.include_fourier_tail =
                    v.as_bool().map_or_else(|| usage(format!("{key}: expected true or false, got {v}")), Ok)?
            }
            "format" => self.format = choice(key, v, &FORMATS)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(as_str(key, v)?)),
            _ => return usage(format!("{key}: unknown configuration key")),
        }
        Ok(())
    }

    pub fn apply(&mut self, table: &Table) -> Result<(), CliError> {
        for (k, v) in table {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Reads a config file. A `[config]` table, as written into run
    /// summaries, is used in place of the top level when present.
    pub fn load_table(path: &Path) -> Result<Table, CliError> {
        let text = fs::read_to_string(path).or_else(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let table: Table = text.parse().or_else(|e| usage(format!("cannot parse config {}: {e}", path.display())))?;
        match table.get("config") {
            Some(Value::Table(inner)) => Ok(inner.clone()),
            _ => Ok(table),
        }
    }

    /// Range checks; the message starts with the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        if !self.hubbard.t.is_finite() {
            return usage(format!("t: must be finite, got {}", self.hubbard.t));
        }
        if !self.hubbard.u.is_finite() {
            return usage(format!("u: must be finite, got {}", self.hubbard.u));
        }
        if self.ansatz.n_layers == 0 {
            return usage("n_layers: must be at least 1");
        }
        if !self.schedule.t0.is_finite() {
            return usage(format!("t0: must be finite, got {}", self.schedule.t0));
        }
        if self.seed > i64::MAX as u64 {
            return usage(format!("seed: must not exceed {}", i64::MAX));
        }
        self.schedule.validate().map_err(|e| match e {
            crate::Error::InvalidInput(m) => CliError::Usage(m),
            other => CliError::Usage(other.to_string()),
        })
    }

    /// Flat table with every key, loadable by [`RunConfig::apply`].
    pub fn to_table(&self) -> Table {
        let s = &self.schedule;
        let mut t = Table::new();
        let mut put = |k: &str, v: Value| {
            t.insert(k.to_string(), v);
        };
        put("t", Value::Float(self.hubbard.t));
        put("u", Value::Float(self.hubbard.u));
        put("lambda", Value::Float(s.lambda));
        put("eta", Value::Float(s.learning_rate));
        put("n_shots", Value::Integer(s.total_shots as i64));
        put("t0", Value::Float(s.t0));
        put("decay", Value::Float(s.decay));
        put("prune_threshold", Value::Integer(s.prune_threshold as i64));
        put("max_steps", Value::Integer(s.max_steps as i64));
        put("n_layers", Value::Integer(self.ansatz.n_layers as i64));
        put("seed", Value::Integer(self.seed as i64));
        put("mode", Value::String(name_of(&MODES, &s.mode).into()));
        put("gradient_shot_fraction", Value::Float(s.gradient_shot_fraction));
        put("temperature_floor", Value::Float(s.temperature_floor));
        put("refinement_steps", Value::Integer(s.refinement_steps as i64));
        put("rotation", Value::String(name_of(&ROTATIONS, &self.ansatz.rotation).into()));
        put("weight_source", Value::String(name_of(&WEIGHT_SOURCES, &s.weight_source).into()));
        put("penalty_sign", Value::String(name_of(&PENALTY_SIGNS, &s.penalty_sign).into()));
        put("fourier_tail", Value::Boolean(self.ansatz.include_fourier_tail));
        put("format", Value::String(self.format.name().into()));
        t
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let params = HubbardParams::new(self.hubbard.t, self.hubbard.u).map_err(|e| CliError::Usage(e.to_string()))?;
        Problem::hubbard(params, &self.ansatz, &self.schedule).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Parser, Debug)]
#[command(name = "kdvqe", version, about = "Ensemble VQE with Boltzmann shot allocation and virtual annealing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Run one seeded ensemble optimization and write its trajectory and summary.
    Run(RunArgs),
    /// Print exact ground-state data and the starting-state energies.
    Exact {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        u: f64,
    },
    /// Split a trajectory table into per-trial energy series and an allocation series.
    Figdata {
        /// Trajectory table written by `run`.
        table: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
#[command(next_help_heading = "Overrides", allow_negative_numbers = true)]
pub struct RunArgs {
    /// Flat TOML file with any of the override keys (underscored names).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub n_shots: Option<u64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub prune_threshold: Option<u64>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub n_layers: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// shots or exact
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub gradient_shot_fraction: Option<f64>,
    #[arg(long)]
    pub temperature_floor: Option<f64>,
    #[arg(long)]
    pub refinement_steps: Option<u64>,
    /// y or euler
    #[arg(long)]
    pub rotation: Option<String>,
    /// penalized or energy
    #[arg(long)]
    pub weight_source: Option<String>,
    /// added or subtracted
    #[arg(long)]
    pub penalty_sign: Option<String>,
    #[arg(long)]
    pub fourier_tail: Option<bool>,
    /// csv or tsv
    #[arg(long)]
    pub format: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Table, CliError> {
        let mut t = Table::new();
        let float = |x: f64| Value::Float(x);
        let int = |k: &str, x: u64| {
            i64::try_from(x).map(Value::Integer).or_else(|_| usage(format!("{k}: value {x} is too large")))
        };
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                t.insert(k.to_string(), v);
            }
        };
        put("t", self.t.map(float));
        put("u", self.u.map(float));
        put("lambda", self.lambda.map(float));
        put("eta", self.eta.map(float));
        put("n_shots", self.n_shots.map(|x| int("n_shots", x)).transpose()?);
        put("t0", self.t0.map(float));
        put("decay", self.decay.map(float));
        put("prune_threshold", self.prune_threshold.map(|x| int("prune_threshold", x)).transpose()?);
        put("max_steps", self.max_steps.map(|x| int("max_steps", x)).transpose()?);
        put("n_layers", self.n_layers.map(|x| int("n_layers", x)).transpose()?);
        put("seed", self.seed.map(|x| int("seed", x)).transpose()?);
        put("mode", self.mode.clone().map(Value::String));
        put("gradient_shot_fraction", self.gradient_shot_fraction.map(float));
        put("temperature_floor", self.temperature_floor.map(float));
        put("refinement_steps", self.refinement_steps.map(|x| int("refinement_steps", x)).transpose()?);
        put("rotation", self.rotation.clone().map(Value::String));
        put("weight_source", self.weight_source.clone().map(Value::String));
        put("penalty_sign", self.penalty_sign.clone().map(Value::String));
        put("fourier_tail", self.fourier_tail.map(Value::Boolean));
        put("format", self.format.clone().map(Value::String));
        Ok(t)
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply(&RunConfig::load_table(path)?)?;
        }
        cfg.apply(&self.overrides()?)?;
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = Some(dir.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn fmt_float(x: f64) -> String {
    format!("{x}")
}

/// Serializes the trajectory rows with full-precision floats.
pub fn write_table(record: &RunRecord, format: TableFormat) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().delimiter(format.delimiter()).from_writer(Vec::new());
    w.write_record(TABLE_HEADER).map_err(runtime)?;
    for r in &record.rows {
        w.write_record([
            r.step.to_string(),
            r.trial.to_string(),
            fmt_float(r.epsilon),
            fmt_float(r.stderr),
            r.shots.to_string(),
            fmt_float(r.temperature),
            r.active.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.into_inner().map_err(runtime)
}

pub fn summary_table(cfg: &RunConfig, record: &RunRecord) -> Table {
    let mut t = Table::new();
    t.insert("seed".into(), Value::Integer(cfg.seed as i64));
    if let Some(s) = &record.summary {
        t.insert("condensed".into(), Value::Boolean(s.condensation_step.is_some()));
        if let Some(sc) = s.condensation_step {
            t.insert("s_c".into(), Value::Integer(sc as i64));
        }
        t.insert("annealing_steps".into(), Value::Integer(s.annealing_steps as i64));
        t.insert("total_steps".into(), Value::Integer(s.total_steps as i64));
        t.insert("survivor".into(), Value::String(s.survivor.to_string()));
        t.insert("final_energy".into(), Value::Float(s.final_energy));
        t.insert("final_stderr".into(), Value::Float(s.final_stderr));
        t.insert("final_exact_energy".into(), Value::Float(s.final_exact_energy));
        t.insert("annealed_exact_energy".into(), Value::Float(s.annealed_exact_energy));
        t.insert("final_params".into(), Value::Array(s.final_params.iter().map(|&p| Value::Float(p)).collect()));
        let mut pruned = Table::new();
        for (label, at) in &s.pruned_at {
            if let Some(step) = at {
                pruned.insert(label.to_string(), Value::Integer(*step as i64));
            }
        }
        t.insert("pruned_at".into(), Value::Table(pruned));
    }
    t.insert("config".into(), Value::Table(cfg.to_table()));
    t
}

pub fn cmd_run(args: &RunArgs) -> Result<PathBuf, CliError> {
    let cfg = args.resolve()?;
    let problem = cfg.problem()?;
    let record = run(&cfg.schedule, &problem, cfg.seed).map_err(runtime)?;

    let dir = resolve_out_dir(cfg.out_dir.as_deref());
    fs::create_dir_all(&dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    let table_path = dir.join(format!("trajectory.{}", cfg.format.extension()));
    fs::write(&table_path, write_table(&record, cfg.format)?)
        .map_err(|e| runtime(format!("cannot write {}: {e}", table_path.display())))?;
    let summary = toml::to_string(&summary_table(&cfg, &record)).map_err(runtime)?;
    let summary_path = dir.join("summary.toml");
    fs::write(&summary_path, summary).map_err(|e| runtime(format!("cannot write {}: {e}", summary_path.display())))?;

    if let Some(s) = &record.summary {
        println!("survivor      {}", s.survivor);
        match s.condensation_step {
            Some(sc) => println!("s_c           {sc}"),
            None => println!("s_c           not reached"),
        }
        println!("final energy  {} +/- {}", s.final_energy, s.final_stderr);
        println!("exact energy  {}", s.final_exact_energy);
    }
    println!("wrote {} and {}", table_path.display(), summary_path.display());
    Ok(dir)
}

/// `x` with 12 significant digits.
pub fn format_significant(x: f64) -> String {
    let x = if x.abs() < 1e-12 { 0.0 } else { x };
    if x == 0.0 {
        return format!("{:.11}", 0.0);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Exact ground energy, ground-state particle number and the exact energy
/// of each starting state, as `key = value` lines.
pub fn exact_report(t: f64, u: f64) -> Result<String, CliError> {
    if !t.is_finite() {
        return usage(format!("t: must be finite, got {t}"));
    }
    if !u.is_finite() {
        return usage(format!("u: must be finite, got {u}"));
    }
    let params = HubbardParams::new(t, u).map_err(|e| CliError::Usage(e.to_string()))?;
    let h = build_hubbard_hamiltonian(params);
    let (e0, ground) = exact_ground(&h).map_err(runtime)?;
    let n0 = exact_expectation(&ground, &particle_number_operator()).map_err(runtime)?;
    let problem = Problem::hubbard(params, &AnsatzSpec::default(), &ScheduleConfig::default()).map_err(runtime)?;

    let mut out = String::new();
    out.push_str(&format!("ground_energy = {}\n", format_significant(e0)));
    out.push_str(&format!("ground_particle_number = {}\n", format_significant(n0)));
    for trial in &problem.trials {
        let e = problem.exact_energy(&trial.params0).map_err(runtime)?;
        out.push_str(&format!("{} = {}\n", trial.label, format_significant(e)));
    }
    Ok(out)
}

/// One parsed trajectory row.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub step: usize,
    pub trial: TrialLabel,
    pub epsilon: f64,
    pub stderr: f64,
    pub shots: u64,
    pub temperature: f64,
    pub active: bool,
}

/// Parses a trajectory table; errors give the 1-based line number.
pub fn read_table(bytes: &[u8], format: TableFormat) -> Result<Vec<TableRow>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.or_else(|e| usage(format!("row {line}: {e}")))?;
        if i == 0 {
            if rec.iter().ne(TABLE_HEADER) {
                return usage(format!("row 1: expected header {}", TABLE_HEADER.join(",")));
            }
            continue;
        }
        if rec.len() != TABLE_HEADER.len() {
            return usage(format!("row {line}: expected {} fields, found {}", TABLE_HEADER.len(), rec.len()));
        }
        let field = |k: usize| &rec[k];
        let bad = |k: usize| CliError::Usage(format!("row {line}: invalid {} value {:?}", TABLE_HEADER[k], &rec[k]));
        let float = |k: usize| field(k).parse::<f64>().map_err(|_| bad(k));
        rows.push(TableRow {
            step: field(0).parse().map_err(|_| bad(0))?,
            trial: TrialLabel::parse(field(1)).ok_or_else(|| bad(1))?,
            epsilon: float(2)?,
            stderr: float(3)?,
            shots: field(4).parse().map_err(|_| bad(4))?,
            temperature: float(5)?,
            active: field(6).parse().map_err(|_| bad(6))?,
        });
    }
    if rows.is_empty() {
        return usage("row 2: table has no data rows");
    }
    Ok(rows)
}

/// Writes `energy_<trial>.<ext>` per trial and `allocation.<ext>`; returns the paths.
pub fn figdata(rows: &[TableRow], format: TableFormat, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut trials: Vec<TrialLabel> = Vec::new();
    for r in rows {
        if !trials.contains(&r.trial) {
            trials.push(r.trial);
        }
    }
    let mut steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
    steps.dedup();
    if steps.windows(2).any(|w| w[1] < w[0]) {
        return usage("table steps are not in increasing order");
    }
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;

    let write = |path: PathBuf, records: Vec<Vec<String>>| -> Result<PathBuf, CliError> {
        let mut w = csv::WriterBuilder::new().delimiter(format.delimiter()).from_writer(Vec::new());
        for r in records {
            w.write_record(r).map_err(runtime)?;
        }
        let bytes = w.into_inner().map_err(runtime)?;
        fs::write(&path, bytes).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    };

    let mut written = Vec::new();
    for &trial in &trials {
        let mut records = vec![vec!["step".into(), "epsilon".into(), "stderr".into(), "temperature".into(), "active".into()]];
        for r in rows.iter().filter(|r| r.trial == trial) {
            records.push(vec![
                r.step.to_string(),
                fmt_float(r.epsilon),
                fmt_float(r.stderr),
                fmt_float(r.temperature),
                r.active.to_string(),
            ]);
        }
        written.push(write(dir.join(format!("energy_{trial}.{}", format.extension())), records)?);
    }

    let mut header = vec!["step".to_string()];
    header.extend(trials.iter().map(|t| t.to_string()));
    header.push("total".into());
    let mut records = vec![header];
    for &step in &steps {
        let mut shots = vec![0u64; trials.len()];
        for r in rows.iter().filter(|r| r.step == step) {
            let k = trials.iter().position(|t| *t == r.trial).expect("collected above");
            shots[k] = r.shots;
        }
        let mut rec = vec![step.to_string()];
        rec.extend(shots.iter().map(u64::to_string));
        rec.push(shots.iter().sum::<u64>().to_string());
        records.push(rec);
    }
    written.push(write(dir.join(format!("allocation.{}", format.extension())), records)?);
    Ok(written)
}

pub fn cmd_figdata(table: &Path, out_dir: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let bytes = fs::read(table).or_else(|e| usage(format!("cannot read {}: {e}", table.display())))?;
    let format = TableFormat::from_path(table);
    let rows = read_table(&bytes, format)?;
    let paths = figdata(&rows, format, &resolve_out_dir(out_dir))?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(paths)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|_| ()),
        Command::Exact { t, u } => exact_report(*t, *u).map(|r| print!("{r}")),
        Command::Figdata { table, out_dir } => cmd_figdata(table, out_dir.as_deref()).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
