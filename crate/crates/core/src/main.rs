//! `becv` command-line interface.
//!
//! Exit codes: 0 success, 1 input or runtime error, 2 indeterminate
//! certification, 3 search exhausted. Every run that writes `--out PATH` also
//! writes `PATH.manifest.json`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use becv::certifier::{certify, CertifierConfig};
use becv::circuit::{bound_state_preset, paper_circuit, paper_partition, simulate_circuit, CircuitSpec};
use becv::error::Error;
use becv::gaussian::ModePartition;
use becv::io::{full_precision_vec, CovarianceFile, PartitionJson, ORDERING};
use becv::search::{
    random_walk_circuit, random_walk_normal_form, Acceptance, CircuitMask, CircuitSteps, Improvement, MoveOrder,
    StopFlag, WalkConfig,
};
use becv::tomography::{
    bootstrap_certify, default_setting_plan, estimate_covariance, gaussianity_tests, generate_dataset, BootstrapConfig,
    MeasurementSetting, QuadratureDataset, ResampleMode,
};

static STOP: AtomicBool = AtomicBool::new(false);

#[derive(Parser)]
#[command(name = "becv", version, about = "Bound entangled Gaussian state certification and verification")]
struct Cli {
    /// Run seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Certifier bisection tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path; stdout when omitted (where the output is a single file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute E, P and physicality of a covariance file.
    Certify(CertifyArgs),
    /// Propagate a circuit file to its output covariance.
    Simulate(SimulateArgs),
    /// Random-walk search for bound entangled states.
    Search(SearchArgs),
    /// Synthetic tomography pipeline.
    #[command(subcommand)]
    Tomo(TomoCommand),
    /// Write a shipped circuit file.
    Preset {
        #[arg(value_enum)]
        which: PresetName,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PresetName {
    /// Three-source circuit with all splitting ratios 0.5.
    PaperCircuit,
    /// The shipped bound entangled circuit.
    BoundState,
}

impl PresetName {
    fn circuit(self) -> CircuitSpec {
        match self {
            PresetName::PaperCircuit => paper_circuit([0.5; 4], paper_partition()),
            PresetName::BoundState => bound_state_preset(),
        }
    }
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    /// Covariance JSON file.
    input: PathBuf,
    /// Bipartition such as `1,4|2,3`; overrides the file's partition.
    #[arg(long)]
    partition: Option<String>,
    /// Certify even when the matrix violates the uncertainty relation.
    #[arg(long)]
    allow_unphysical: bool,
    #[arg(long)]
    max_newton_steps: Option<usize>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Circuit JSON file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetName>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Space {
    NormalForm,
    Circuit,
}

#[derive(Args, Serialize)]
struct SearchArgs {
    #[arg(long, value_enum, default_value = "normal-form")]
    space: Space,
    /// Stop once min{E, P} reaches this value.
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    /// Certifier call budget (0 = unlimited).
    #[arg(long, default_value_t = 0)]
    max_calls: u64,
    #[arg(long, default_value_t = 1_000_000)]
    draw_budget: u64,
    #[arg(long, default_value_t = 100)]
    max_restarts: usize,
    /// Normal-form axis step.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Normal-form plane rotation, radians.
    #[arg(long, default_value_t = 0.01)]
    rotation_angle: f64,
    #[arg(long, value_enum, default_value = "both-improve")]
    acceptance: AcceptanceArg,
    #[arg(long, value_enum, default_value = "first")]
    improvement: ImprovementArg,
    #[arg(long, value_enum, default_value = "shuffled")]
    order: OrderArg,
    /// Base circuit for the circuit space (default: paper circuit).
    #[arg(long)]
    base: Option<PathBuf>,
    /// Circuit knobs to vary: any of variances, orientations, ratios, phases.
    #[arg(long, default_value = "ratios")]
    mask: String,
    #[arg(long, default_value_t = 0.01)]
    variance_step: f64,
    #[arg(long, default_value_t = 0.01)]
    ratio_step: f64,
    #[arg(long, default_value_t = 1.0)]
    angle_step: f64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum AcceptanceArg {
    BothImprove,
    MinImproves,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ImprovementArg {
    First,
    Best,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OrderArg {
    Shuffled,
    Fixed,
}

#[derive(Subcommand)]
enum TomoCommand {
    /// Sample a quadrature dataset from a state.
    Generate(GenerateArgs),
    /// Least-squares covariance reconstruction.
    Estimate(EstimateArgs),
    /// Bootstrap E, P and physicality.
    Bootstrap(BootstrapArgs),
    /// Moments, Q-Q pairs and χ² test per channel.
    GaussTest(GaussArgs),
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    /// Covariance JSON file of the state to sample.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    cov: Option<PathBuf>,
    /// Sample the output of a shipped circuit.
    #[arg(long, value_enum)]
    preset: Option<PresetName>,
    /// Samples per setting.
    #[arg(long, default_value_t = 500_000)]
    count: usize,
    /// Settings JSON (list of {angles_deg, label}); default plan otherwise.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Write a CSV directory instead of the binary container.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    /// Dataset file, or a CSV directory with plan.json.
    input: PathBuf,
    /// Partition recorded in the output file.
    #[arg(long)]
    partition: Option<String>,
}

#[derive(Args, Serialize)]
struct BootstrapArgs {
    input: PathBuf,
    /// Default for four modes: `1,4|2,3`.
    #[arg(long)]
    partition: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
    /// Resample this fraction of each setting without replacement.
    #[arg(long)]
    subsample: Option<f64>,
    /// Rescale channels by the shot-noise setting before estimating.
    #[arg(long)]
    normalize_shot_noise: bool,
    /// (P, E) scatter CSV; default `<out>.scatter.csv`.
    #[arg(long)]
    scatter: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GaussArgs {
    input: PathBuf,
    /// Q-Q grid points per channel.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// Q-Q CSV; default `<out>.qq.csv`.
    #[arg(long)]
    qq: Option<PathBuf>,
}

/// Run failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Indeterminate { .. } => 2,
            Error::SearchExhausted { .. } => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

/// Prefixes errors from reading `path` with the path.
fn at(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let f = Failure::from(e);
        Failure { code: f.code, message: format!("{}: {}", path.display(), f.message) }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

/// What a command produced, for the manifest.
#[derive(Default)]
struct Outcome {
    config: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    argv: Vec<String>,
    config: Value,
    seeds: Value,
    inputs: Vec<String>,
    outputs: Vec<String>,
    version: &'static str,
    wall_time_s: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let _ = ctrlc::set_handler(|| STOP.store(true, Ordering::Relaxed));
    let start = Instant::now();
    let result = run(&cli);
    match result {
        Ok(outcome) => {
            if let Err(f) = write_manifest(&cli, outcome, start) {
                eprintln!("error: {}", f.message);
                return ExitCode::from(f.code);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Certify(_) => "certify",
        Command::Simulate(_) => "simulate",
        Command::Search(_) => "search",
        Command::Tomo(TomoCommand::Generate(_)) => "tomo generate",
        Command::Tomo(TomoCommand::Estimate(_)) => "tomo estimate",
        Command::Tomo(TomoCommand::Bootstrap(_)) => "tomo bootstrap",
        Command::Tomo(TomoCommand::GaussTest(_)) => "tomo gauss-test",
        Command::Preset { .. } => "preset",
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `out` with `.suffix` appended to its file name.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}

fn write_manifest(cli: &Cli, outcome: Outcome, start: Instant) -> Result<(), Failure> {
    let Some(out) = &cli.out else { return Ok(()) };
    let manifest = RunManifest {
        command: command_name(&cli.command).into(),
        argv: std::env::args().collect(),
        config: outcome.config,
        seeds: json!({
            "run": cli.seed,
            "derivation": "splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index) seeds ChaCha8; \
                           streams: sampling=1 (index=setting), bootstrap=2 (index=resample), \
                           hypercube=3, shuffle=4 (index=restart<<32|step)",
        }),
        inputs: outcome.inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    std::fs::write(manifest_path(out), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

/// Writes `text` to `--out` or stdout.
fn emit(cli: &Cli, text: &str, outcome: &mut Outcome) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text.to_owned() + "\n")?;
            outcome.outputs.push(path.clone());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn certifier_config(cli: &Cli) -> Result<CertifierConfig, Failure> {
    let cfg = match cli.tol {
        Some(t) => CertifierConfig::with_tol(t),
        None => CertifierConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn partition_for(
    text: Option<&str>,
    fallback: Option<ModePartition>,
    n_modes: usize,
) -> Result<ModePartition, Failure> {
    match text {
        Some(t) => Ok(ModePartition::parse(t, n_modes).map_err(|e| input_error(format!("partition: {e}")))?),
        None => fallback.ok_or_else(|| input_error("partition: none given and the input file has none")),
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Certify(a) => cmd_certify(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Search(a) => cmd_search(cli, a),
        Command::Tomo(TomoCommand::Generate(a)) => cmd_generate(cli, a),
        Command::Tomo(TomoCommand::Estimate(a)) => cmd_estimate(cli, a),
        Command::Tomo(TomoCommand::Bootstrap(a)) => cmd_bootstrap(cli, a),
        Command::Tomo(TomoCommand::GaussTest(a)) => cmd_gauss(cli, a),
        Command::Preset { which } => {
            let mut outcome = Outcome { config: json!({ "preset": which }), ..Default::default() };
            emit(cli, &which.circuit().to_json()?, &mut outcome)?;
            Ok(outcome)
        }
    }
}

fn cmd_certify(cli: &Cli, a: &CertifyArgs) -> Result<Outcome, Failure> {
    let file = CovarianceFile::read(&a.input).map_err(at(&a.input))?;
    let state = file.state()?;
    let partition = partition_for(a.partition.as_deref(), file.partition()?, file.n_modes)?;
    let mut cfg = certifier_config(cli)?;
    cfg.allow_unphysical = a.allow_unphysical;
    if let Some(n) = a.max_newton_steps {
        cfg.max_newton_steps = n;
    }
    let report = certify(&state, &partition, &cfg)?;
    let mut outcome =
        Outcome { config: json!({ "args": a, "certifier": cfg }), inputs: vec![a.input.clone()], ..Default::default() };
    emit(cli, &serde_json::to_string_pretty(&report)?, &mut outcome)?;
    Ok(outcome)
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<Outcome, Failure> {
    let mut outcome = Outcome { config: json!({ "args": a }), ..Default::default() };
    let spec = match (&a.input, a.preset) {
        (Some(path), _) => {
            outcome.inputs.push(path.clone());
            CircuitSpec::read(path).map_err(at(path))?
        }
        (None, Some(p)) => p.circuit(),
        (None, None) => return Err(input_error("simulate needs a circuit file or --preset")),
    };
    let state = simulate_circuit(&spec)?;
    let file = CovarianceFile::from_state(&state, spec.partition.as_ref());
    emit(cli, &file.to_json()?, &mut outcome)?;
    Ok(outcome)
}

fn cmd_search(cli: &Cli, a: &SearchArgs) -> Result<Outcome, Failure> {
    let config = WalkConfig {
        step: a.step,
        rotation_angle: a.rotation_angle,
        max_steps: a.max_steps,
        seed: cli.seed,
        objective_floor: a.floor.unwrap_or(f64::INFINITY),
        certifier: certifier_config(cli)?,
        draw_budget: a.draw_budget,
        max_certifier_calls: a.max_calls,
        improvement: match a.improvement {
            ImprovementArg::First => Improvement::First,
            ImprovementArg::Best => Improvement::Best,
        },
        order: match a.order {
            OrderArg::Shuffled => MoveOrder::Shuffled,
            OrderArg::Fixed => MoveOrder::Fixed,
        },
        acceptance: match a.acceptance {
            AcceptanceArg::BothImprove => Acceptance::BothImprove,
            AcceptanceArg::MinImproves => Acceptance::MinImproves,
        },
        max_restarts: a.max_restarts,
        stop: StopFlag(Some(&STOP)),
        ..WalkConfig::default()
    };
    let mut outcome = Outcome { config: json!({ "args": a }), ..Default::default() };
    let result = match a.space {
        Space::NormalForm => random_walk_normal_form(&config)?,
        Space::Circuit => {
            let base = match &a.base {
                Some(p) => {
                    outcome.inputs.push(p.clone());
                    CircuitSpec::read(p).map_err(at(p))?
                }
                None => PresetName::PaperCircuit.circuit(),
            };
            let mask = CircuitMask::parse(&a.mask)?;
            let steps = CircuitSteps { variance: a.variance_step, ratio: a.ratio_step, angle_deg: a.angle_step };
            random_walk_circuit(&base, &mask, &steps, &config)?
        }
    };
    emit(cli, &serde_json::to_string_pretty(&result)?, &mut outcome)?;
    Ok(outcome)
}

fn read_dataset(path: &Path) -> Result<QuadratureDataset, Failure> {
    let data = if path.is_dir() { QuadratureDataset::read_csv_dir(path) } else { QuadratureDataset::read(path) };
    data.map_err(at(path))
}

fn require_out(cli: &Cli, what: &str) -> Result<PathBuf, Failure> {
    cli.out.clone().ok_or_else(|| input_error(format!("{what} needs --out")))
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> Result<Outcome, Failure> {
    let out = require_out(cli, "tomo generate")?;
    let mut outcome = Outcome { config: json!({ "args": a }), ..Default::default() };
    let state = match (&a.cov, a.preset) {
        (Some(path), _) => {
            outcome.inputs.push(path.clone());
            CovarianceFile::read(path).map_err(at(path))?.state()?
        }
        (None, Some(p)) => simulate_circuit(&p.circuit())?,
        (None, None) => return Err(input_error("tomo generate needs --cov or --preset")),
    };
    let plan: Vec<MeasurementSetting> = match &a.plan {
        Some(path) => {
            outcome.inputs.push(path.clone());
            let text = std::fs::read_to_string(path).map_err(|e| at(path)(e.into()))?;
            serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?
        }
        None => default_setting_plan(state.n_modes())?,
    };
    let data = generate_dataset(&state, &plan, a.count, cli.seed)?;
    if a.csv {
        data.write_csv_dir(&out)?;
    } else {
        data.write(&out)?;
    }
    outcome.outputs.push(out);
    Ok(outcome)
}

/// Covariance file plus entrywise standard errors; readable by `certify`.
#[derive(Serialize)]
struct EstimateFile {
    n_modes: usize,
    ordering: &'static str,
    #[serde(serialize_with = "full_precision_vec")]
    matrix: Vec<f64>,
    #[serde(serialize_with = "full_precision_vec")]
    mean: Vec<f64>,
    #[serde(serialize_with = "full_precision_vec")]
    std_errors: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    partition: Option<PartitionJson>,
}

fn cmd_estimate(cli: &Cli, a: &EstimateArgs) -> Result<Outcome, Failure> {
    let data = read_dataset(&a.input)?;
    let est = estimate_covariance(&data)?;
    let partition = a.partition.as_deref().map(|t| partition_for(Some(t), None, data.n_modes())).transpose()?;
    let file = EstimateFile {
        n_modes: data.n_modes(),
        ordering: ORDERING,
        matrix: est.covariance.to_row_major(),
        mean: est.mean.iter().copied().collect(),
        std_errors: est.std_errors.transpose().iter().copied().collect(),
        partition: partition.as_ref().map(PartitionJson::from),
    };
    if let Some(w) = est.covariance.symmetry_warning() {
        eprintln!("warning: estimate asymmetry {w:e} before symmetrization");
    }
    let mut outcome = Outcome { config: json!({ "args": a }), inputs: vec![a.input.clone()], ..Default::default() };
    emit(cli, &serde_json::to_string_pretty(&file)?, &mut outcome)?;
    Ok(outcome)
}

fn default_partition(n_modes: usize) -> Option<ModePartition> {
    (n_modes == 4).then(paper_partition)
}

fn cmd_bootstrap(cli: &Cli, a: &BootstrapArgs) -> Result<Outcome, Failure> {
    let data = read_dataset(&a.input)?;
    let partition = partition_for(a.partition.as_deref(), default_partition(data.n_modes()), data.n_modes())?;
    let config = BootstrapConfig {
        resamples: a.resamples,
        seed: cli.seed,
        mode: match a.subsample {
            Some(fraction) => ResampleMode::Subsample { fraction },
            None => ResampleMode::WithReplacement,
        },
        certifier: CertifierConfig { allow_unphysical: true, ..certifier_config(cli)? },
        normalize_shot_noise: a.normalize_shot_noise,
    };
    let report = bootstrap_certify(&data, &partition, &config)?;
    let mut outcome = Outcome {
        config: json!({ "args": a, "bootstrap": config, "partition": partition.to_string() }),
        inputs: vec![a.input.clone()],
        ..Default::default()
    };
    let scatter = a.scatter.clone().or_else(|| cli.out.as_deref().map(|o| sibling(o, "scatter.csv")));
    if let Some(path) = scatter {
        report.write_scatter_csv(&path)?;
        outcome.outputs.push(path);
    }
    emit(cli, &serde_json::to_string_pretty(&report)?, &mut outcome)?;
    Ok(outcome)
}

fn cmd_gauss(cli: &Cli, a: &GaussArgs) -> Result<Outcome, Failure> {
    let data = read_dataset(&a.input)?;
    let report = gaussianity_tests(&data, a.grid)?;
    let mut outcome = Outcome { config: json!({ "args": a }), inputs: vec![a.input.clone()], ..Default::default() };
    let qq = a.qq.clone().or_else(|| cli.out.as_deref().map(|o| sibling(o, "qq.csv")));
    if let Some(path) = qq {
        report.write_qq_csv(&path)?;
        outcome.outputs.push(path);
    }
    emit(cli, &serde_json::to_string_pretty(&report)?, &mut outcome)?;
    Ok(outcome)
}
