//! `nadir-wc`: command-line front end for worst-case frequency nadir analysis.
//!
//! Every command validates its input completely before touching the output
//! location, so a rejected run leaves no files behind. Exit codes:
//! 0 ok, 1 property violation, 2 input error, 3 model-assumption failure.

mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nadir_core::nalgebra::DVector;
use nadir_core::{
    dominance_report, generate_random_network, sample_norm_ball, search_basis, simulate_step_response,
    strong_connectivity_check, validate_network, DisturbanceSpec, DominanceReport, ModalBasis, NadirResult,
    NetworkModel, NormKind, RandomNetworkConfig, SearchOptions, SimConfig, Topology, Trajectory,
};
use serde::Serialize;

pub use output::{table_csv, trajectory_csv, write_atomic};

pub const THREADS_ENV: &str = "NADIR_WC_THREADS";

/// Factor applied to `F*` under `verify --self-test`.
pub const SELF_TEST_SHRINK: f64 = 0.5;

/// Sampled nadirs may exceed `F*` by this much before it counts as a violation.
pub const DOMINANCE_SLACK: f64 = 1e-6;

/// Relative tolerance for `u0*` reproducing `F*` in simulation.
pub const REPRODUCTION_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(
    name = "nadir-wc",
    version,
    about = "Worst-case frequency nadir of linearized power networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Worst-case nadir, the disturbance attaining it, and the full bus-by-time table.
    Analyze(AnalyzeArgs),
    /// Per-bus and COI frequency trajectories for a step disturbance.
    Simulate(SimulateArgs),
    /// Check the analytic bound against simulated random disturbances.
    Verify(VerifyArgs),
    /// Write a random proportional network file.
    GenRandom(GenRandomArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BudgetArgs {
    /// Disturbance budget norm.
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    pub norm: NormKind,
    /// Budget radius, pu.
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    /// Grid spacing, s.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Also evaluate the settled column (t -> inf).
    #[arg(long, value_enum, default_value = "on")]
    pub steady_state: Switch,
}

impl Default for BudgetArgs {
    fn default() -> Self {
        Self {
            norm: NormKind::Two,
            rho: 0.5,
            dt: 0.01,
            steps: 100,
            steady_state: Switch::On,
        }
    }
}

impl BudgetArgs {
    fn spec(&self) -> Result<DisturbanceSpec, CliError> {
        Ok(DisturbanceSpec::new(self.norm, self.rho)?)
    }

    fn options(&self) -> Result<SearchOptions, CliError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CliError::Input(format!("--dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(CliError::Input("--steps must be at least 1".into()));
        }
        Ok(SearchOptions {
            step: self.dt,
            steps: self.steps,
            steady_state: self.steady_state == Switch::On,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    pub network: PathBuf,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    pub network: PathBuf,
    /// JSON file with the disturbance (array, or object with `u0_star`), or `worst`.
    #[arg(long)]
    pub u0: String,
    /// Simulated time span, s.
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Budget and output grid; the budget only matters for `--u0 worst`.
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    pub network: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Deliberately shrink the bound to make sure violations are caught.
    #[arg(long)]
    pub self_test: bool,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenRandomArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `ring` or `random-tree-plus-edges`.
    #[arg(long, default_value = "random-tree-plus-edges", value_parser = parse_topology)]
    pub topology: Topology,
    #[arg(long, default_value_t = 1.0)]
    pub weight_scale: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_norm(s: &str) -> Result<NormKind, String> {
    s.parse().map_err(|e: nadir_core::Error| e.to_string())
}

fn parse_topology(s: &str) -> Result<Topology, String> {
    s.parse().map_err(|e: nadir_core::Error| e.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("model assumption failed: {0}")]
    Assumption(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Assumption(_) => 3,
        }
    }
}

impl From<nadir_core::Error> for CliError {
    fn from(e: nadir_core::Error) -> Self {
        use nadir_core::Error as E;
        match e {
            E::NotProportional { residual } => {
                CliError::Assumption(format!("proportionality (residual {residual:.3e})"))
            }
            E::NotHomogeneous { .. } => CliError::Assumption(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub input: Option<PathBuf>,
    pub spec: Option<DisturbanceSpec>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub duration_s: f64,
    /// Every flag of the invocation, defaults included.
    pub arguments: serde_json::Value,
}

impl RunManifest {
    fn new<A: Serialize>(command: &'static str, input: Option<&Path>, args: &A, started: Instant) -> Self {
        Self {
            command,
            input: input.map(Path::to_path_buf),
            spec: None,
            dt: None,
            steps: None,
            seed: None,
            version: env!("CARGO_PKG_VERSION"),
            duration_s: started.elapsed().as_secs_f64(),
            arguments: serde_json::to_value(args).unwrap_or(serde_json::Value::Null),
        }
    }

    fn with_budget(mut self, budget: &BudgetArgs) -> Self {
        self.spec = Some(DisturbanceSpec {
            kind: budget.norm,
            rho: budget.rho,
        });
        self.dt = Some(budget.dt);
        self.steps = Some(budget.steps);
        self
    }
}

#[derive(Debug, Serialize)]
pub struct ResultFlags {
    pub proportionality_residual: f64,
    pub connected: bool,
    pub components: usize,
    pub lambda2: Option<f64>,
    /// `Some` only for homogeneous networks.
    pub strong_connectivity: Option<bool>,
    pub strong_connectivity_threshold: Option<f64>,
    /// Whether `N dt >= 5 m/d`, i.e. the zero mode has settled by the last grid point.
    pub horizon_settled: bool,
}

#[derive(Debug, Serialize)]
pub struct ResultFile {
    pub worst_value: f64,
    pub bus: usize,
    /// `null` when the maximum sits in the settled column.
    pub t_star: Option<f64>,
    pub steady_state: bool,
    pub norm: NormKind,
    pub rho: f64,
    pub u0_star: Vec<f64>,
    pub steady_state_column: Option<Vec<f64>>,
    pub flags: ResultFlags,
}

pub struct AnalyzeOutput {
    pub result: NadirResult,
    pub flags: ResultFlags,
}

pub struct VerifyOutput {
    pub result: NadirResult,
    pub report: DominanceReport,
    pub violated: bool,
}

#[derive(Debug, Serialize)]
struct VerifyFile<'a> {
    norm: NormKind,
    rho: f64,
    seed: u64,
    self_test: bool,
    bus: usize,
    t_star: Option<f64>,
    integrator_step: f64,
    reproduction_tol: f64,
    violated: bool,
    #[serde(flatten)]
    report: &'a DominanceReport,
}

/// Parse `args` (program name first), run the command, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    let outcome = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a).map(|out| {
            let r = &out.result;
            match r.steady_state {
                true => println!("F* = {} pu at bus {} (settled)", r.value, r.bus),
                false => println!("F* = {} pu at bus {}, t = {} s", r.value, r.bus, r.time),
            }
            0
        }),
        Command::Simulate(a) => cmd_simulate(a).map(|traj| {
            println!("{} samples written", traj.len());
            0
        }),
        Command::Verify(a) => cmd_verify(a).map(|out| {
            let rep = &out.report;
            println!(
                "{}/{} samples dominated, max sampled nadir {} vs bound {}",
                rep.dominated, rep.samples, rep.max_sample_nadir, rep.bound
            );
            if out.violated {
                eprintln!(
                    "property violated: dominance ({} violations, reproduction error {:.3e})",
                    rep.violations.len(),
                    rep.worst_reproduction_rel_error
                );
                1
            } else {
                0
            }
        }),
        Command::GenRandom(a) => cmd_gen_random(a).map(|_| 0),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

/// Size the global rayon pool from `NADIR_WC_THREADS`, once per process.
fn configure_threads() {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(k) if k > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
        _ => eprintln!("warning: ignoring {THREADS_ENV}={raw:?}"),
    }
}

/// Load and validate a network file; failing error-level checks are named.
pub fn load_validated(path: &Path) -> Result<NetworkModel, CliError> {
    let model = nadir_core::netmodel::load_network_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let report = validate_network(&model);
    if !report.is_valid() {
        let names: Vec<String> = report
            .failures()
            .filter(|c| c.severity == nadir_core::netmodel::Severity::Error)
            .map(|c| format!("{} (residual {:.3e})", c.name, c.residual))
            .collect();
        return Err(CliError::Input(format!("validation failed: {}", names.join(", "))));
    }
    Ok(model)
}

fn require_proportional(model: &NetworkModel) -> Result<(), CliError> {
    if model.is_proportional() {
        Ok(())
    } else {
        Err(nadir_core::Error::NotProportional {
            residual: model.proportionality_residual(),
        }
        .into())
    }
}

fn search(model: &NetworkModel, budget: &BudgetArgs) -> Result<(NadirResult, ResultFlags), CliError> {
    require_proportional(model)?;
    let spec = budget.spec()?;
    let opts = budget.options()?;
    let unit = model.unit();
    let settle = 5.0 * unit.inertia / unit.damping;
    let horizon_settled = opts.horizon() >= settle;
    if !horizon_settled {
        eprintln!(
            "warning: horizon N dt = {} s is shorter than 5 m/d = {settle:.4} s; the common mode has not settled",
            opts.horizon()
        );
    }
    let basis = ModalBasis::from_model(model)?;
    let result = search_basis(&basis, &spec, &opts)?;
    let report = validate_network(model);
    let strong = strong_connectivity_check(model).ok();
    let flags = ResultFlags {
        proportionality_residual: model.proportionality_residual(),
        connected: report.connected,
        components: report.components,
        lambda2: basis.lambda2(),
        strong_connectivity: strong.map(|s| s.holds),
        strong_connectivity_threshold: strong.map(|s| s.threshold),
        horizon_settled,
    };
    Ok((result, flags))
}

fn finite_or_none(t: f64) -> Option<f64> {
    t.is_finite().then_some(t)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalyzeOutput, CliError> {
    let started = Instant::now();
    let model = load_validated(&args.network)?;
    let (result, flags) = search(&model, &args.budget)?;

    let file = ResultFile {
        worst_value: result.value,
        bus: result.bus,
        t_star: finite_or_none(result.time),
        steady_state: result.steady_state,
        norm: result.spec.kind,
        rho: result.spec.rho,
        u0_star: result.disturbance.as_slice().to_vec(),
        steady_state_column: result.table.steady_state().map(<[f64]>::to_vec),
        flags,
    };
    let result_json = output::to_json(&file)?;
    let table = table_csv(&result.table)?;
    let manifest = RunManifest::new("analyze", Some(&args.network), args, started).with_budget(&args.budget);

    write_atomic(&args.out.join("result.json"), &result_json)?;
    write_atomic(&args.out.join("table.csv"), &table)?;
    write_atomic(&args.out.join("manifest.json"), &output::to_json(&manifest)?)?;
    Ok(AnalyzeOutput {
        result,
        flags: file.flags,
    })
}

/// Read a disturbance: a bare JSON array, or an object carrying `u0_star`.
pub fn read_disturbance(path: &Path) -> Result<DVector<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let entries = match &value {
        serde_json::Value::Array(_) => &value,
        serde_json::Value::Object(map) => map
            .get("u0_star")
            .ok_or_else(|| CliError::Input(format!("{}: no \"u0_star\" field", path.display())))?,
        _ => {
            return Err(CliError::Input(format!(
                "{}: expected an array of numbers",
                path.display()
            )))
        }
    };
    let u0: Vec<f64> =
        serde_json::from_value(entries.clone()).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Input(format!(
            "{}: non-finite disturbance entry",
            path.display()
        )));
    }
    Ok(DVector::from_vec(u0))
}

/// Integrator step dividing `dt`, at least ten substeps and inside the stability guard.
pub fn integration_step(model: &NetworkModel, dt: f64) -> f64 {
    let guard = SimConfig::stability_guard(model);
    let substeps = ((dt / guard).ceil() as usize).max(10);
    dt / substeps as f64
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Trajectory, CliError> {
    let started = Instant::now();
    let model = load_validated(&args.network)?;
    let dt = args.budget.options()?.step;
    if !(args.horizon.is_finite() && args.horizon > 0.0) {
        return Err(CliError::Input(format!(
            "--horizon must be positive, got {}",
            args.horizon
        )));
    }
    let u0 = if args.u0 == "worst" {
        search(&model, &args.budget)?.0.disturbance
    } else {
        read_disturbance(Path::new(&args.u0))?
    };
    if u0.len() != model.n() {
        return Err(nadir_core::Error::Dimension {
            expected: model.n(),
            got: u0.len(),
        }
        .into());
    }
    let step = integration_step(&model, dt);
    let every = (dt / step).round() as usize;
    let traj = simulate_step_response(&model, &u0, &SimConfig::new(step, args.horizon).recording_every(every))?;

    let mut manifest = RunManifest::new("simulate", Some(&args.network), args, started);
    manifest.dt = Some(dt);
    if args.u0 == "worst" {
        manifest = manifest.with_budget(&args.budget);
    }
    write_atomic(&args.out.join("trajectory.csv"), &trajectory_csv(&traj)?)?;
    write_atomic(&args.out.join("manifest.json"), &output::to_json(&manifest)?)?;
    Ok(traj)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<VerifyOutput, CliError> {
    let started = Instant::now();
    if args.samples == 0 {
        return Err(CliError::Input("--samples must be at least 1".into()));
    }
    let model = load_validated(&args.network)?;
    let (mut result, _) = search(&model, &args.budget)?;
    if args.self_test {
        result.value *= SELF_TEST_SHRINK;
    }
    let samples = sample_norm_ball(args.budget.norm, args.budget.rho, model.n(), args.samples, args.seed);
    let step = integration_step(&model, args.budget.dt);
    let report = dominance_report(&model, &result, step, &samples, DOMINANCE_SLACK)?;
    let violated = !report.all_dominated() || report.worst_reproduction_rel_error > REPRODUCTION_TOL;

    let file = VerifyFile {
        norm: args.budget.norm,
        rho: args.budget.rho,
        seed: args.seed,
        self_test: args.self_test,
        bus: result.bus,
        t_star: finite_or_none(result.time),
        integrator_step: step,
        reproduction_tol: REPRODUCTION_TOL,
        violated,
        report: &report,
    };
    let mut manifest = RunManifest::new("verify", Some(&args.network), args, started).with_budget(&args.budget);
    manifest.seed = Some(args.seed);
    write_atomic(&args.out.join("dominance_report.json"), &output::to_json(&file)?)?;
    write_atomic(&args.out.join("manifest.json"), &output::to_json(&manifest)?)?;
    Ok(VerifyOutput {
        result,
        report,
        violated,
    })
}

pub fn cmd_gen_random(args: &GenRandomArgs) -> Result<NetworkModel, CliError> {
    if args.n == 0 {
        return Err(CliError::Input("--n must be at least 1".into()));
    }
    let model = generate_random_network(&RandomNetworkConfig {
        n: args.n,
        seed: args.seed,
        weight_scale: args.weight_scale,
        topology: args.topology,
        ..Default::default()
    })?;
    let text = model.to_json_string()?;
    write_atomic(&args.out, text.as_bytes())?;
    Ok(model)
}
