//! Command-line front end: argument parsing, validation, and rendering of
//! curves (CSV) and certificates (JSON). Every artifact embeds the
//! [`RunConfig`] that produced it.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::darwinism::{
    find_f_delta, pip, redundancy_vs_time, PipCurve, SamplingPolicy, SliceStatus, SweepRow,
};
use crate::envariance::{
    born_finegrain, find_countertransform, schmidt, swap_matrix, Cut, RationalAmps, Verdict,
    COUNTER_FAMILY,
};
use crate::error::Error;
use crate::hilbert::{PureState, Register, MAX_DIM};
use crate::linalg::{CMatrix, C64};
use crate::models::{branching_state, haar_state, BranchSpec};
use crate::repeatability::{orthogonality_witness, CopyScenario, RepeatVerdict};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Model(_) => 2,
            CliError::Io(_) | CliError::Serialize(_) => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "qdarwin",
    version,
    about = "Quantum Darwinism, envariance and repeatability at desk scale"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Partial information plot of a branching or random state.
    Pip(PipArgs),
    /// Redundancy R_δ of a branching or random state.
    Redundancy(RedundancyArgs),
    /// PIPs and redundancy along a dephasing time grid.
    TimeSweep(SweepArgs),
    /// Born probabilities by finegraining α ∝ √μ, β ∝ √ν.
    Born(BornArgs),
    /// Countertransform search for an operation on the system.
    Envariance(EnvarianceArgs),
    /// Overlap identity for candidate outcome states under a copy unitary.
    Repeatability(RepeatabilityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Destination file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Exit with status 3 when the verdict is negative.
    #[arg(long)]
    pub expect_pass: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StateArgs {
    #[arg(long, default_value_t = 0.3)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 8)]
    pub n_env: usize,
    #[arg(long, default_value_t = 0.0)]
    pub record_overlap: f64,
    /// Haar-random state of system and environment instead.
    #[arg(long)]
    pub random: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_exhaustive: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RedundancyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Times in units of the decoherence time, ascending.
    #[arg(long = "t", value_delimiter = ',', required = true)]
    pub t_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 8)]
    pub n_env: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_exhaustive: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BornArgs {
    #[arg(long)]
    pub mu: u64,
    #[arg(long)]
    pub nu: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedState {
    /// (|00⟩ + |11⟩)/√2
    Bell,
    /// √α²|00⟩ + √(1−α²)|11⟩
    Uneven,
    /// branching state with N environment qubits
    Branching,
    /// Haar-random system + environment
    Haar,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnvarianceArgs {
    #[arg(long, value_enum, default_value_t = NamedState::Bell)]
    pub state: NamedState,
    /// identity | swap01 | phase:<radians>
    #[arg(long, default_value = "swap01")]
    pub op: String,
    #[arg(long, default_value_t = 0.3)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 1)]
    pub n_env: usize,
    #[arg(long, default_value_t = 0.0)]
    pub record_overlap: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    /// records |k⟩ for pointer states |k⟩
    Cnot,
    /// no record at all
    Identity,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RepeatabilityArgs {
    #[arg(long, value_enum, default_value_t = ScenarioName::Cnot)]
    pub scenario: ScenarioName,
    /// Comma-separated qubit states: 0, 1, plus, minus, i, -i.
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    pub candidates: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

/// Command name and every parameter, as parsed (defaults filled in).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub parameters: Map<String, Value>,
}

impl RunConfig {
    pub fn from_command(command: &Command) -> CliResult<Self> {
        let Value::Object(outer) = serde_json::to_value(command)? else {
            return Err(CliError::Serialize(
                "command did not serialize to an object".into(),
            ));
        };
        let (name, params) = outer
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Serialize("empty command".into()))?;
        let Value::Object(parameters) = params else {
            return Err(CliError::Serialize(
                "parameters did not serialize to an object".into(),
            ));
        };
        Ok(Self {
            command: name,
            parameters,
        })
    }
}

/// One file (or standard-output block) to write.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub contents: String,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Whether the certificate verdict is positive.
    pub passed: bool,
}

/// Runs a parsed command without touching the filesystem.
pub fn execute(command: &Command) -> CliResult<RunOutput> {
    let config = RunConfig::from_command(command)?;
    match command {
        Command::Pip(a) => cmd_pip(a, &config),
        Command::Redundancy(a) => cmd_redundancy(a, &config),
        Command::TimeSweep(a) => cmd_time_sweep(a, &config),
        Command::Born(a) => cmd_born(a, &config),
        Command::Envariance(a) => cmd_envariance(a, &config),
        Command::Repeatability(a) => cmd_repeatability(a, &config),
    }
}

/// Executes, writes artifacts, and maps the outcome to an exit status.
pub fn run(cli: &Cli) -> i32 {
    let outcome = execute(&cli.command).and_then(|out| {
        for a in &out.artifacts {
            match &a.path {
                Some(p) => std::fs::write(p, &a.contents)?,
                None => print!("{}", a.contents),
            }
        }
        Ok(out)
    });
    match outcome {
        Ok(out) if !out.passed && expect_pass(&cli.command) => {
            eprintln!("expectation failed: verdict is negative");
            3
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn expect_pass(command: &Command) -> bool {
    match command {
        Command::Pip(a) => a.out.expect_pass,
        Command::Redundancy(a) => a.out.expect_pass,
        Command::TimeSweep(a) => a.out.expect_pass,
        Command::Born(a) => a.out.expect_pass,
        Command::Envariance(a) => a.out.expect_pass,
        Command::Repeatability(a) => a.out.expect_pass,
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn check_alpha2(alpha2: f64) -> CliResult<()> {
    if !(0.0..=1.0).contains(&alpha2) {
        return Err(invalid(format!("--alpha2 {alpha2} must lie in [0, 1]")));
    }
    Ok(())
}

fn check_n_env(n_env: usize) -> CliResult<()> {
    if n_env == 0 || (2usize << n_env.min(63)) > MAX_DIM {
        return Err(invalid(format!(
            "--n-env {n_env} must lie in 1..={}",
            MAX_DIM.trailing_zeros() - 1
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> CliResult<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("--delta {delta} must lie in (0, 1)")));
    }
    Ok(())
}

fn policy(seed: u64, samples: usize, max_exhaustive: u64) -> CliResult<SamplingPolicy> {
    if samples == 0 {
        return Err(invalid("--samples must be positive"));
    }
    Ok(SamplingPolicy {
        max_exhaustive,
        samples,
        seed,
    })
}

fn alpha_beta(alpha2: f64) -> (C64, C64) {
    (
        C64::new(alpha2.sqrt(), 0.0),
        C64::new((1.0 - alpha2).sqrt(), 0.0),
    )
}

impl StateArgs {
    fn validate(&self) -> CliResult<()> {
        check_n_env(self.n_env)?;
        if !self.random {
            check_alpha2(self.alpha2)?;
            if !(0.0..=1.0).contains(&self.record_overlap) {
                return Err(invalid(format!(
                    "--record-overlap {} must lie in [0, 1]",
                    self.record_overlap
                )));
            }
        }
        Ok(())
    }

    fn state(&self) -> CliResult<PureState> {
        self.validate()?;
        if self.random {
            return Ok(haar_state(&Register::qubits(self.n_env + 1)?, self.seed)?);
        }
        Ok(branching_state(&BranchSpec::from_alpha2(
            self.alpha2,
            self.n_env,
            self.record_overlap,
        )?)?)
    }

    fn curve(&self) -> CliResult<PipCurve> {
        let policy = policy(self.seed, self.samples, self.max_exhaustive)?;
        Ok(pip(&self.state()?, &policy)?)
    }
}

fn header(config: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("config".into(), json!(config));
    m.insert("version".into(), json!(VERSION));
    m
}

fn to_json(map: Map<String, Value>) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(&Value::Object(map))? + "\n")
}

/// CSV with the metadata as a leading `#` comment line, plus a JSON sidecar
/// next to the file when writing to disk.
fn csv_artifacts<R: Serialize>(
    out: &OutputArgs,
    meta: Map<String, Value>,
    rows: &[R],
) -> CliResult<Vec<Artifact>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(
        w.into_inner()
            .map_err(|e| CliError::Serialize(e.to_string()))?,
    )
    .map_err(|e| CliError::Serialize(e.to_string()))?;
    let comment = serde_json::to_string(&Value::Object(meta.clone()))?;
    let mut artifacts = vec![Artifact {
        path: out.output.clone(),
        contents: format!("# {comment}\n{body}"),
    }];
    if let Some(p) = &out.output {
        let mut side = p.clone().into_os_string();
        side.push(".meta.json");
        artifacts.push(Artifact {
            path: Some(side.into()),
            contents: to_json(meta)?,
        });
    }
    Ok(artifacts)
}

fn json_artifact(out: &OutputArgs, map: Map<String, Value>) -> CliResult<Vec<Artifact>> {
    Ok(vec![Artifact {
        path: out.output.clone(),
        contents: to_json(map)?,
    }])
}

fn cmd_pip(a: &PipArgs, config: &RunConfig) -> CliResult<RunOutput> {
    let curve = a.state.curve()?;
    let mut meta = header(config);
    meta.insert("h_s".into(), json!(curve.h_s));
    meta.insert("n_env".into(), json!(curve.n_env));
    meta.insert("sampling".into(), json!(curve.sampling));
    let artifacts = match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_artifacts(&a.out, meta, &curve.rows)?,
        Format::Json => {
            meta.insert("rows".into(), json!(curve.rows));
            json_artifact(&a.out, meta)?
        }
    };
    Ok(RunOutput {
        artifacts,
        passed: true,
    })
}

#[derive(Debug, Serialize)]
struct RedundancyRow {
    h_s: f64,
    delta: f64,
    status: SliceStatus,
    r_delta: f64,
    f_delta: Option<f64>,
    interpolated: bool,
}

fn cmd_redundancy(a: &RedundancyArgs, config: &RunConfig) -> CliResult<RunOutput> {
    check_delta(a.delta)?;
    let curve = a.state.curve()?;
    let row = match find_f_delta(&curve, a.delta) {
        Ok(r) => RedundancyRow {
            h_s: curve.h_s,
            delta: a.delta,
            status: SliceStatus::Reached,
            r_delta: r.r_delta,
            f_delta: Some(r.f_delta),
            interpolated: r.interpolated,
        },
        Err(e @ (Error::NeverReached { .. } | Error::DegeneratePlateau(_))) => RedundancyRow {
            h_s: curve.h_s,
            delta: a.delta,
            status: if matches!(e, Error::NeverReached { .. }) {
                SliceStatus::NeverReached
            } else {
                SliceStatus::DegeneratePlateau
            },
            r_delta: 1.0,
            f_delta: None,
            interpolated: false,
        },
        Err(e) => return Err(e.into()),
    };
    let passed = row.status == SliceStatus::Reached;
    let mut meta = header(config);
    meta.insert("sampling".into(), json!(curve.sampling));
    let artifacts = match a.out.format.unwrap_or(Format::Json) {
        Format::Csv => csv_artifacts(&a.out, meta, &[row])?,
        Format::Json => {
            if let Value::Object(fields) = json!(row) {
                meta.extend(fields);
            }
            json_artifact(&a.out, meta)?
        }
    };
    Ok(RunOutput { artifacts, passed })
}

#[derive(Debug, Serialize)]
struct SweepCsvRow {
    t_over_tau: f64,
    m: usize,
    f: f64,
    i_mean: f64,
    i_min: f64,
    i_max: f64,
    n_samples: usize,
}

fn sweep_summary(r: &SweepRow) -> Value {
    json!({
        "t_over_tau": r.t_over_tau,
        "record_overlap": r.record_overlap,
        "h_s": r.curve.h_s,
        "r_delta": r.r_delta,
        "f_delta": r.f_delta,
        "status": r.status,
    })
}

fn cmd_time_sweep(a: &SweepArgs, config: &RunConfig) -> CliResult<RunOutput> {
    check_alpha2(a.alpha2)?;
    check_n_env(a.n_env)?;
    check_delta(a.delta)?;
    if a.t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0))
        || a.t_grid.windows(2).any(|w| w[1] < w[0])
    {
        return Err(invalid(
            "--t must be an ascending list of nonnegative times",
        ));
    }
    let (alpha, beta) = alpha_beta(a.alpha2);
    let policy = policy(a.seed, a.samples, a.max_exhaustive)?;
    let sweep = redundancy_vs_time(alpha, beta, a.n_env, &a.t_grid, a.delta, &policy)?;
    let passed = sweep.windows(2).all(|w| w[1].r_delta >= w[0].r_delta);

    let mut meta = header(config);
    let artifacts = match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            meta.insert(
                "slices".into(),
                Value::Array(sweep.iter().map(sweep_summary).collect()),
            );
            let rows: Vec<SweepCsvRow> = sweep
                .iter()
                .flat_map(|s| {
                    s.curve.rows.iter().map(|r| SweepCsvRow {
                        t_over_tau: s.t_over_tau,
                        m: r.m,
                        f: r.f,
                        i_mean: r.i_mean,
                        i_min: r.i_min,
                        i_max: r.i_max,
                        n_samples: r.n_samples,
                    })
                })
                .collect();
            csv_artifacts(&a.out, meta, &rows)?
        }
        Format::Json => {
            let slices = sweep
                .iter()
                .map(|s| {
                    let mut v = sweep_summary(s);
                    v["rows"] = json!(s.curve.rows);
                    v["sampling"] = json!(s.curve.sampling);
                    v
                })
                .collect();
            meta.insert("slices".into(), Value::Array(slices));
            json_artifact(&a.out, meta)?
        }
    };
    Ok(RunOutput { artifacts, passed })
}

fn ratio(p: &Ratio<u64>) -> Value {
    json!([p.numer(), p.denom()])
}

fn require_json(out: &OutputArgs) -> CliResult<()> {
    if out.format == Some(Format::Csv) {
        return Err(invalid("certificates are written as JSON only"));
    }
    Ok(())
}

fn cmd_born(a: &BornArgs, config: &RunConfig) -> CliResult<RunOutput> {
    require_json(&a.out)?;
    let amps = RationalAmps::new(a.mu, a.nu).map_err(|e| invalid(e.to_string()))?;
    let cert = born_finegrain(amps)?;
    let mut meta = header(config);
    meta.insert("p_up".into(), ratio(&cert.p_up));
    meta.insert("p_down".into(), ratio(&cert.p_down));
    meta.insert("n_branches".into(), json!(cert.finegrained.n_branches()));
    meta.insert(
        "amplitude_spread".into(),
        json!(cert.check.amplitude_spread),
    );
    meta.insert("swap_residual".into(), json!(cert.check.swap_residual));
    meta.insert(
        "dense_swap".into(),
        match &cert.check.dense {
            Some(d) => json!({ "verdict": d.verdict, "residual": d.residual }),
            None => Value::Null,
        },
    );
    Ok(RunOutput {
        artifacts: json_artifact(&a.out, meta)?,
        passed: true,
    })
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|z| json!([z.re, z.im])).collect()))
            .collect(),
    )
}

fn parse_op(op: &str) -> CliResult<CMatrix> {
    match op {
        "identity" => Ok(CMatrix::identity(2)),
        "swap01" => Ok(swap_matrix(2, 0, 1)?),
        _ => {
            let phi = op
                .strip_prefix("phase:")
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|p| p.is_finite())
                .ok_or_else(|| {
                    invalid(format!(
                        "unknown --op {op:?}; expected identity, swap01 or phase:<radians>"
                    ))
                })?;
            Ok(CMatrix::diag(&[
                C64::new(1.0, 0.0),
                C64::from_polar(1.0, phi),
            ]))
        }
    }
}

fn cmd_envariance(a: &EnvarianceArgs, config: &RunConfig) -> CliResult<RunOutput> {
    require_json(&a.out)?;
    let op = parse_op(&a.op)?;
    let state = match a.state {
        NamedState::Bell | NamedState::Uneven => {
            let alpha2 = if a.state == NamedState::Bell {
                0.5
            } else {
                a.alpha2
            };
            check_alpha2(alpha2)?;
            let (x, y) = alpha_beta(alpha2);
            PureState::new(
                Register::qubits(2)?,
                vec![x, C64::new(0.0, 0.0), C64::new(0.0, 0.0), y],
            )?
        }
        NamedState::Branching => {
            check_alpha2(a.alpha2)?;
            check_n_env(a.n_env)?;
            branching_state(&BranchSpec::from_alpha2(
                a.alpha2,
                a.n_env,
                a.record_overlap,
            )?)?
        }
        NamedState::Haar => {
            check_n_env(a.n_env)?;
            haar_state(&Register::qubits(a.n_env + 1)?, a.seed)?
        }
    };
    let cut = Cut::system();
    let sf = schmidt(&state, &cut)?;
    let cert = find_countertransform(&state, &op, &cut)?;
    let mut meta = header(config);
    meta.insert("verdict".into(), json!(cert.verdict));
    meta.insert("residual".into(), json!(cert.residual));
    meta.insert("schmidt_coefficients".into(), json!(sf.coefficients));
    meta.insert("counter_family".into(), json!(COUNTER_FAMILY));
    meta.insert("applied".into(), matrix_json(&cert.applied));
    meta.insert(
        "counter".into(),
        cert.counter
            .as_ref()
            .map(matrix_json)
            .unwrap_or(Value::Null),
    );
    Ok(RunOutput {
        artifacts: json_artifact(&a.out, meta)?,
        passed: cert.verdict == Verdict::Envariant,
    })
}

fn named_qubit(name: &str) -> CliResult<PureState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = match name {
        "0" => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        "1" => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        "plus" => (C64::new(s, 0.0), C64::new(s, 0.0)),
        "minus" => (C64::new(s, 0.0), C64::new(-s, 0.0)),
        "i" => (C64::new(s, 0.0), C64::new(0.0, s)),
        "-i" => (C64::new(s, 0.0), C64::new(0.0, -s)),
        _ => {
            return Err(invalid(format!(
                "unknown candidate {name:?}; expected 0, 1, plus, minus, i or -i"
            )))
        }
    };
    Ok(PureState::new(Register::new(vec![2])?, vec![a, b])?)
}

fn cmd_repeatability(a: &RepeatabilityArgs, config: &RunConfig) -> CliResult<RunOutput> {
    require_json(&a.out)?;
    if a.candidates.len() < 2 {
        return Err(invalid("--candidates needs at least two states"));
    }
    let candidates = a
        .candidates
        .iter()
        .map(|c| named_qubit(c.trim()))
        .collect::<CliResult<Vec<_>>>()?;
    let scenario = match a.scenario {
        ScenarioName::Cnot => CopyScenario::cnot()?,
        ScenarioName::Identity => CopyScenario::identity(2, 2)?,
    };
    let table = orthogonality_witness(&scenario, &candidates)?;
    let passed = table.orthogonal_when_distinguished
        && table
            .pairs
            .iter()
            .all(|r| r.report.verdict == RepeatVerdict::RepeatablePair);
    let rows: Vec<Value> = table
        .pairs
        .iter()
        .map(|r| {
            json!({
                "v": a.candidates[r.i],
                "w": a.candidates[r.j],
                "verdict": r.report.verdict,
                "sv_overlap": [r.report.sv_overlap.re, r.report.sv_overlap.im],
                "record_overlap": [r.report.record_overlap.re, r.report.record_overlap.im],
                "repeat_residual_v": r.report.repeat_residual_v,
                "repeat_residual_w": r.report.repeat_residual_w,
                "eq4_residual": r.report.eq4_residual,
            })
        })
        .collect();
    let candidates: Vec<Value> = a
        .candidates
        .iter()
        .zip(&table.repeatable)
        .map(|(name, ok)| {
            json!({
                "state": name,
                "verdict": if *ok { "repeatable" } else { "not_repeatable" },
            })
        })
        .collect();
    let mut meta = header(config);
    meta.insert("candidates".into(), Value::Array(candidates));
    meta.insert("pairs".into(), Value::Array(rows));
    meta.insert(
        "orthogonal_when_distinguished".into(),
        json!(table.orthogonal_when_distinguished),
    );
    Ok(RunOutput {
        artifacts: json_artifact(&a.out, meta)?,
        passed,
    })
}
