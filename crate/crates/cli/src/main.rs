//! su2search: matched-curve datasets, certainty plans, N-dimensional
//! search simulations, and the property verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 numeric-domain error. stdout carries data (CSV or JSON); stderr
//! carries human-readable diagnostics only.

mod config;
mod emit;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use su2search_core::matching::{hoyer_point, trace_curve, MatchingInputs};
use su2search_core::pipeline::{plan_report, simulate, SimulateMode};
use su2search_core::planner::Strategy;
use su2search_core::su2::{InitialStateParams, PhasePair, SearchGeometry, TAU};
use su2search_core::verify::{run_suite, Suite};
use su2search_core::{Error, NUnitary};

use config::Config;
use emit::{csv_field, fmt_float, AngleIo, JsonWriter};
use report::{Flat, Val};

/// Failures after argument parsing, each mapped to one exit code.
#[derive(Debug)]
pub enum Failure {
    /// exit 1: a verification check failed
    Verification(String),
    /// exit 2: flags or config are malformed or inconsistent
    Usage(String),
    /// exit 3: inputs are outside the numeric domain, or a computation
    /// reported an impossibility
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "su2search",
    version,
    about = "Quantum search with arbitrary phases in the two-level reduction",
    after_help = "Angles are radians unless --degrees is given. A --config file \
                  holds 'key = value' lines using the long option names; \
                  command-line flags override it."
)]
struct Cli {
    /// Output format (default: csv for curve and verify, json for reports)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Accept and emit angles in degrees (converted at the boundary only)
    #[arg(long, global = true)]
    degrees: bool,

    /// Key-value defaults file; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Optimal,
    FixedTheta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum UnitaryKind {
    Walsh,
    Random,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Kernel,
    Matching,
    Planner,
    Ndim,
    All,
}

macro_rules! config_parsable {
    ($($ty:ty),*) => {$(
        impl std::str::FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$ty as ValueEnum>::from_str(s, true)
            }
        }
    )*};
}
config_parsable!(Format, StrategyArg, UnitaryKind, SuiteArg);

#[derive(Subcommand)]
enum Command {
    /// Emit the matched curve phi(theta), f, w on a theta grid, plus the
    /// distinguished quarter-offset point
    Curve {
        /// Overlap angle beta in (0, pi/2)
        #[arg(long)]
        beta: Option<f64>,
        /// Initial-state amplitude angle beta0 in [0, pi/2] (default 1e-4)
        #[arg(long)]
        beta0: Option<f64>,
        /// Combined azimuth alpha + u (default 0)
        #[arg(long = "alpha-plus-u")]
        alpha_plus_u: Option<f64>,
        /// Lower end of the theta grid (default 1e-3)
        #[arg(long = "theta-min")]
        theta_min: Option<f64>,
        /// Upper end of the theta grid (default 2 pi - 1e-3)
        #[arg(long = "theta-max")]
        theta_max: Option<f64>,
        /// Number of grid points, at least 2 (default 2000)
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Plan a certainty search and verify it against the iterated kernel
    Plan {
        /// Overlap angle beta in (0, pi/2)
        #[arg(long)]
        beta: Option<f64>,
        /// Initial-state amplitude angle beta0 in [0, pi/2] (default 0)
        #[arg(long)]
        beta0: Option<f64>,
        /// Combined azimuth alpha + u (default 0)
        #[arg(long = "alpha-plus-u")]
        alpha_plus_u: Option<f64>,
        /// optimal: adjust both phases to the minimal integer m;
        /// fixed-theta: keep --theta and round f up
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        /// theta for the fixed-theta strategy
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Run the N-dimensional statevector search and report the outcome
    /// next to its two-level plan
    Simulate {
        /// walsh | random | file
        #[arg(long, value_enum)]
        unitary: Option<UnitaryKind>,
        /// Qubit count for walsh (dimension 2^n)
        #[arg(long)]
        qubits: Option<usize>,
        /// Dimension for random
        #[arg(long)]
        dim: Option<usize>,
        /// Unitary file for file: first line N, then N rows of N
        /// space-separated re,im pairs
        #[arg(long)]
        path: Option<PathBuf>,
        /// Seed for random (default 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Start index eta (default 0)
        #[arg(long)]
        eta: Option<usize>,
        /// Marked index tau (default N-1)
        #[arg(long)]
        tau: Option<usize>,
        /// Phase phi; requires --theta, auto-adjusted when omitted
        #[arg(long)]
        phi: Option<f64>,
        /// Phase theta; requires --phi, auto-adjusted when omitted
        #[arg(long)]
        theta: Option<f64>,
        /// Iteration count; derived from the phases when omitted
        #[arg(long)]
        m: Option<u64>,
    },
    /// Run seeded property suites; exit 0 iff every check passes
    Verify {
        /// kernel | matching | planner | ndim | all (default all)
        #[arg(long, value_enum)]
        suite: Option<SuiteArg>,
        /// Draws per check (default 200)
        #[arg(long)]
        samples: Option<usize>,
        /// RNG seed (default 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every tolerance; values below 1 are a negative
        /// control that must fail (default 1)
        #[arg(long = "tolerance-scale")]
        tolerance_scale: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let angles = AngleIo {
        degrees: config.flag(cli.degrees, "degrees")?,
    };
    let format = config.lookup(cli.format, "format")?;
    match cli.command {
        Command::Curve {
            beta,
            beta0,
            alpha_plus_u,
            theta_min,
            theta_max,
            steps,
        } => cmd_curve(
            &config,
            angles,
            format.unwrap_or(Format::Csv),
            beta,
            beta0,
            alpha_plus_u,
            theta_min,
            theta_max,
            steps,
        ),
        Command::Plan {
            beta,
            beta0,
            alpha_plus_u,
            strategy,
            theta,
        } => cmd_plan(
            &config,
            angles,
            format.unwrap_or(Format::Json),
            beta,
            beta0,
            alpha_plus_u,
            strategy,
            theta,
        ),
        Command::Simulate {
            unitary,
            qubits,
            dim,
            path,
            seed,
            eta,
            tau,
            phi,
            theta,
            m,
        } => cmd_simulate(
            &config,
            angles,
            format.unwrap_or(Format::Json),
            unitary,
            qubits,
            dim,
            path,
            seed,
            eta,
            tau,
            phi,
            theta,
            m,
        ),
        Command::Verify {
            suite,
            samples,
            seed,
            tolerance_scale,
        } => cmd_verify(
            &config,
            format.unwrap_or(Format::Csv),
            suite,
            samples,
            seed,
            tolerance_scale,
        ),
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("{what} is required (flag or config)")))
}

/// Status slug for a row whose computation failed; never silently blank.
fn status_slug(e: &Error) -> &'static str {
    match e {
        Error::NoMatchedPhase { .. } | Error::NotMatched { .. } => "unmatched",
        Error::DegenerateKernel { .. } => "degenerate",
        _ => "error",
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_curve(
    config: &Config,
    angles: AngleIo,
    format: Format,
    beta: Option<f64>,
    beta0: Option<f64>,
    alpha_plus_u: Option<f64>,
    theta_min: Option<f64>,
    theta_max: Option<f64>,
    steps: Option<usize>,
) -> Result<(), Failure> {
    // built-in defaults are radians; only user-supplied values convert
    let beta = angles.input(require(config.lookup(beta, "beta")?, "--beta")?);
    let beta0 = config
        .lookup(beta0, "beta0")?
        .map_or(1e-4, |x| angles.input(x));
    let apu = config
        .lookup(alpha_plus_u, "alpha-plus-u")?
        .map_or(0.0, |x| angles.input(x));
    let theta_min = config
        .lookup(theta_min, "theta-min")?
        .map_or(1e-3, |x| angles.input(x));
    let theta_max = config
        .lookup(theta_max, "theta-max")?
        .map_or(TAU - 1e-3, |x| angles.input(x));
    let steps = config.lookup(steps, "steps")?.unwrap_or(2000);

    let inputs = MatchingInputs::new(
        SearchGeometry::new(beta, apu)?,
        InitialStateParams::new(beta0, 0.0, 0.0)?,
    );
    let samples = trace_curve(&inputs, theta_min, theta_max, steps)?;

    // rows: (theta, point-or-marker, status)
    let mut rows: Vec<(f64, Option<su2search_core::matching::CurvePoint>, &str)> = samples
        .iter()
        .map(|s| match &s.outcome {
            Ok(point) => (s.theta, Some(*point), "ok"),
            Err(e) => (s.theta, None, status_slug(e)),
        })
        .collect();
    match hoyer_point(&inputs) {
        Ok(pair) => match su2search_core::matching::matched_sample(pair.theta(), &inputs) {
            Ok(point) => rows.push((pair.theta(), Some(point), "hoyer")),
            Err(e) => rows.push((pair.theta(), None, status_slug(&e))),
        },
        Err(e) => eprintln!("note: distinguished point unavailable: {e}"),
    }

    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("theta,phi,f,w,residual,status\n");
            for (theta, point, status) in &rows {
                match point {
                    Some(p) => out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        fmt_float(angles.output(*theta)),
                        fmt_float(angles.output(p.phi)),
                        fmt_float(p.f),
                        fmt_float(angles.output(p.w)),
                        fmt_float(p.residual),
                        status
                    )),
                    None => out.push_str(&format!(
                        "{},,,,,{}\n",
                        fmt_float(angles.output(*theta)),
                        status
                    )),
                }
            }
        }
        Format::Json => {
            let mut w = JsonWriter::new();
            w.begin_object();
            w.key("schema_version");
            w.int(1);
            w.key("command");
            w.string("curve");
            w.key("inputs");
            w.begin_object();
            w.key("beta");
            w.num(angles.output(beta));
            w.key("beta0");
            w.num(angles.output(beta0));
            w.key("alpha_plus_u");
            w.num(angles.output(apu));
            w.key("theta_min");
            w.num(angles.output(theta_min));
            w.key("theta_max");
            w.num(angles.output(theta_max));
            w.key("steps");
            w.int(steps as u64);
            w.end_object();
            w.key("rows");
            w.begin_array();
            for (theta, point, status) in &rows {
                w.begin_object();
                w.key("theta");
                w.num(angles.output(*theta));
                w.key("phi");
                match point {
                    Some(p) => w.num(angles.output(p.phi)),
                    None => w.null(),
                }
                w.key("f");
                match point {
                    Some(p) => w.num(p.f),
                    None => w.null(),
                }
                w.key("w");
                match point {
                    Some(p) => w.num(angles.output(p.w)),
                    None => w.null(),
                }
                w.key("residual");
                match point {
                    Some(p) => w.num(p.residual),
                    None => w.null(),
                }
                w.key("status");
                w.string(status);
                w.end_object();
            }
            w.end_array();
            w.end_object();
            out.push_str(&w.finish());
            out.push('\n');
        }
    }
    print!("{out}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan(
    config: &Config,
    angles: AngleIo,
    format: Format,
    beta: Option<f64>,
    beta0: Option<f64>,
    alpha_plus_u: Option<f64>,
    strategy: Option<StrategyArg>,
    theta: Option<f64>,
) -> Result<(), Failure> {
    let beta = angles.input(require(config.lookup(beta, "beta")?, "--beta")?);
    let beta0 = config
        .lookup(beta0, "beta0")?
        .map_or(0.0, |x| angles.input(x));
    let apu = config
        .lookup(alpha_plus_u, "alpha-plus-u")?
        .map_or(0.0, |x| angles.input(x));
    let strategy_arg = config
        .lookup(strategy, "strategy")?
        .unwrap_or(StrategyArg::Optimal);
    let theta = config
        .lookup(theta, "theta")?
        .map(|t| angles.input(t));
    let strategy = match (strategy_arg, theta) {
        (StrategyArg::Optimal, None) => Strategy::Optimal,
        (StrategyArg::Optimal, Some(_)) => {
            return Err(Failure::Usage(
                "--theta only applies to --strategy fixed-theta".to_string(),
            ))
        }
        (StrategyArg::FixedTheta, Some(t)) => Strategy::FixedTheta(t),
        (StrategyArg::FixedTheta, None) => {
            return Err(Failure::Usage(
                "--strategy fixed-theta requires --theta".to_string(),
            ))
        }
    };

    let inputs = MatchingInputs::new(
        SearchGeometry::new(beta, apu)?,
        InitialStateParams::new(beta0, 0.0, 0.0)?,
    );
    let report = plan_report(&inputs, strategy)?;

    let mut flat = Flat::new();
    flat.push("schema_version", Val::I(1));
    flat.push("command", Val::S("plan".to_string()));
    flat.push("inputs.beta", Val::F(angles.output(beta)));
    flat.push("inputs.beta0", Val::F(angles.output(beta0)));
    flat.push("inputs.alpha_plus_u", Val::F(angles.output(apu)));
    flat.push(
        "inputs.strategy",
        Val::S(
            match strategy_arg {
                StrategyArg::Optimal => "optimal",
                StrategyArg::FixedTheta => "fixed-theta",
            }
            .to_string(),
        ),
    );
    flat.push(
        "inputs.theta",
        theta.map_or(Val::Null, |t| Val::F(angles.output(t))),
    );
    push_plan(&mut flat, "plan", &report.plan, angles);
    flat.push("closed_form_m", Val::I(report.closed_form_m));
    flat.push("oracle_m", Val::I(report.oracle_m));
    flat.push("oracle_success", Val::F(report.oracle_success));
    flat.push("oracle_delta", Val::F(angles.output(report.oracle_delta)));
    flat.push("curve.min_f", Val::F(report.curve.min_f));
    flat.push(
        "curve.theta_at_min_f",
        Val::F(angles.output(report.curve.theta_at_min_f)),
    );
    flat.push("curve.max_w", Val::F(angles.output(report.curve.max_w)));
    flat.push("curve.evaluable", Val::I(report.curve.evaluable as u64));
    if report.solutions.is_empty() {
        flat.push("solutions", Val::EmptyArray);
    }
    for (i, pair) in report.solutions.iter().enumerate() {
        flat.push(&format!("solutions.{i}.phi"), Val::F(angles.output(pair.phi())));
        flat.push(
            &format!("solutions.{i}.theta"),
            Val::F(angles.output(pair.theta())),
        );
    }
    push_notes(&mut flat, &report.notes);
    emit_flat(&flat, format);
    Ok(())
}

fn push_notes(flat: &mut Flat, notes: &[String]) {
    if notes.is_empty() {
        flat.push("notes", Val::EmptyArray);
    }
    for (i, note) in notes.iter().enumerate() {
        flat.push(&format!("notes.{i}"), Val::S(note.clone()));
    }
}

/// SearchPlan fields under a common prefix.
fn push_plan(flat: &mut Flat, prefix: &str, plan: &su2search_core::SearchPlan, angles: AngleIo) {
    flat.push(
        &format!("{prefix}.phi"),
        Val::F(angles.output(plan.phases.phi())),
    );
    flat.push(
        &format!("{prefix}.theta"),
        Val::F(angles.output(plan.phases.theta())),
    );
    flat.push(&format!("{prefix}.m"), Val::I(plan.m));
    flat.push(&format!("{prefix}.f"), Val::F(plan.f_value));
    flat.push(
        &format!("{prefix}.predicted_success"),
        Val::F(plan.predicted_success),
    );
    flat.push(
        &format!("{prefix}.delta"),
        Val::F(angles.output(plan.delta)),
    );
    flat.push(&format!("{prefix}.exact"), Val::B(plan.exact));
}

/// Prints a flat report as key-value CSV or re-nested JSON.
fn emit_flat(flat: &Flat, format: Format) {
    match format {
        Format::Csv => {
            let mut out = String::from("key,value\n");
            for (key, value) in flat.entries() {
                out.push_str(&format!(
                    "{},{}\n",
                    csv_field(key),
                    csv_field(&value.render_csv())
                ));
            }
            print!("{out}");
        }
        Format::Json => println!("{}", flat.render_json()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    config: &Config,
    angles: AngleIo,
    format: Format,
    unitary: Option<UnitaryKind>,
    qubits: Option<usize>,
    dim: Option<usize>,
    path: Option<PathBuf>,
    seed: Option<u64>,
    eta: Option<usize>,
    tau: Option<usize>,
    phi: Option<f64>,
    theta: Option<f64>,
    m: Option<u64>,
) -> Result<(), Failure> {
    let kind = require(config.lookup(unitary, "unitary")?, "--unitary")?;
    let qubits = config.lookup(qubits, "qubits")?;
    let dim = config.lookup(dim, "dim")?;
    let path = require_path(config, path)?;
    let seed = config.lookup(seed, "seed")?.unwrap_or(0);
    let phi = config.lookup(phi, "phi")?.map(|x| angles.input(x));
    let theta = config.lookup(theta, "theta")?.map(|x| angles.input(x));
    let m = config.lookup(m, "m")?;

    let u = match kind {
        UnitaryKind::Walsh => {
            let n = require(qubits, "--qubits")?;
            su2search_core::ndim::build_walsh_hadamard(n)?
        }
        UnitaryKind::Random => {
            let n = require(dim, "--dim")?;
            su2search_core::ndim::build_random_unitary(n, seed)?
        }
        UnitaryKind::File => {
            let p = require(path.clone(), "--path")?;
            load_unitary(&p)?
        }
    };
    let n = u.dim();
    let eta = config.lookup(eta, "eta")?.unwrap_or(0);
    let tau = config.lookup(tau, "tau")?.unwrap_or(n - 1);

    let mode = match (phi, theta, m) {
        (None, None, None) => SimulateMode::Auto,
        (Some(p), Some(t), None) => SimulateMode::Phases(PhasePair::new(p, t)?),
        (None, None, Some(count)) => SimulateMode::Iterations(count),
        (Some(p), Some(t), Some(count)) => {
            SimulateMode::Explicit(PhasePair::new(p, t)?, count)
        }
        _ => {
            return Err(Failure::Usage(
                "--phi and --theta must be given together".to_string(),
            ))
        }
    };

    let report = simulate(&u, eta, tau, mode)?;

    let mut flat = Flat::new();
    flat.push("schema_version", Val::I(1));
    flat.push("command", Val::S("simulate".to_string()));
    flat.push(
        "inputs.unitary",
        Val::S(
            match kind {
                UnitaryKind::Walsh => "walsh",
                UnitaryKind::Random => "random",
                UnitaryKind::File => "file",
            }
            .to_string(),
        ),
    );
    flat.push("inputs.qubits", qubits.map_or(Val::Null, |q| Val::I(q as u64)));
    flat.push(
        "inputs.path",
        match (kind, &path) {
            (UnitaryKind::File, Some(p)) => Val::S(p.display().to_string()),
            _ => Val::Null,
        },
    );
    flat.push(
        "inputs.seed",
        if kind == UnitaryKind::Random {
            Val::I(seed)
        } else {
            Val::Null
        },
    );
    flat.push(
        "inputs.mode",
        Val::S(
            match mode {
                SimulateMode::Auto => "auto",
                SimulateMode::Phases(_) => "phases",
                SimulateMode::Iterations(_) => "iterations",
                SimulateMode::Explicit(..) => "explicit",
            }
            .to_string(),
        ),
    );
    flat.push("dim", Val::I(report.dim as u64));
    flat.push("eta", Val::I(report.eta as u64));
    flat.push("tau", Val::I(report.tau as u64));
    flat.push("reduction.beta", Val::F(angles.output(report.beta)));
    flat.push("reduction.alpha", Val::F(angles.output(report.alpha)));
    flat.push("reduction.beta0", Val::F(angles.output(report.beta0)));
    flat.push("reduction.u", Val::F(angles.output(report.u_phase)));
    flat.push(
        "reduction.global_phase",
        Val::F(angles.output(report.global_phase)),
    );
    push_plan(&mut flat, "plan", &report.plan, angles);
    flat.push("closed_form_m", Val::I(report.closed_form_m));
    flat.push("oracle_m", Val::I(report.oracle_m));
    flat.push("oracle_success", Val::F(report.oracle_success));
    flat.push("oracle_delta", Val::F(angles.output(report.oracle_delta)));
    push_notes(&mut flat, &report.notes);
    emit_flat(&flat, format);
    Ok(())
}

fn require_path(config: &Config, cli: Option<PathBuf>) -> Result<Option<PathBuf>, Failure> {
    if cli.is_some() {
        return Ok(cli);
    }
    Ok(config
        .lookup::<String>(None, "path")?
        .map(PathBuf::from))
}

/// Unitary file: first line N, then N rows of N space-separated re,im
/// pairs. Unitarity is enforced at 1e-8 on load, looser than the builder
/// default so externally produced matrices survive their own roundoff.
fn load_unitary(path: &std::path::Path) -> Result<NUnitary, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Numeric(format!("cannot read {}: {e}", path.display())))?;
    let bad = |msg: String| Failure::Numeric(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| bad("empty file".to_string()))?
        .parse()
        .map_err(|e| bad(format!("first line must be the dimension: {e}")))?;
    let mut matrix = ndarray::Array2::from_elem((n, n), num_complex::Complex64::new(0.0, 0.0));
    for r in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("expected {n} matrix rows, found {r}")))?;
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != n {
            return Err(bad(format!(
                "row {} has {} entries, expected {n}",
                r + 1,
                entries.len()
            )));
        }
        for (c, entry) in entries.iter().enumerate() {
            let (re, im) = entry.split_once(',').ok_or_else(|| {
                bad(format!("row {} column {}: expected re,im", r + 1, c + 1))
            })?;
            let re: f64 = re
                .parse()
                .map_err(|e| bad(format!("row {} column {}: {e}", r + 1, c + 1)))?;
            let im: f64 = im
                .parse()
                .map_err(|e| bad(format!("row {} column {}: {e}", r + 1, c + 1)))?;
            matrix[(r, c)] = num_complex::Complex64::new(re, im);
        }
    }
    if lines.next().is_some() {
        return Err(bad(format!("trailing content after {n} matrix rows")));
    }
    Ok(NUnitary::from_matrix_with_tolerance(matrix, 1e-8)?)
}

fn cmd_verify(
    config: &Config,
    format: Format,
    suite: Option<SuiteArg>,
    samples: Option<usize>,
    seed: Option<u64>,
    tolerance_scale: Option<f64>,
) -> Result<(), Failure> {
    let suite_arg = config.lookup(suite, "suite")?.unwrap_or(SuiteArg::All);
    let samples = config.lookup(samples, "samples")?.unwrap_or(200);
    let seed = config.lookup(seed, "seed")?.unwrap_or(0);
    let scale = config
        .lookup(tolerance_scale, "tolerance-scale")?
        .unwrap_or(1.0);
    let suite = match suite_arg {
        SuiteArg::Kernel => Suite::Kernel,
        SuiteArg::Matching => Suite::Matching,
        SuiteArg::Planner => Suite::Planner,
        SuiteArg::Ndim => Suite::Ndim,
        SuiteArg::All => Suite::All,
    };

    let checks = run_suite(suite, samples, seed, scale)?;
    match format {
        Format::Csv => {
            let mut out = String::from("check,pass,worst,tolerance,samples\n");
            for c in &checks {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_field(&c.name),
                    if c.pass { "pass" } else { "fail" },
                    fmt_float(c.worst),
                    fmt_float(c.tolerance),
                    c.samples
                ));
            }
            print!("{out}");
        }
        Format::Json => {
            let mut flat = Flat::new();
            flat.push("schema_version", Val::I(1));
            flat.push("command", Val::S("verify".to_string()));
            flat.push(
                "inputs.suite",
                Val::S(
                    match suite_arg {
                        SuiteArg::Kernel => "kernel",
                        SuiteArg::Matching => "matching",
                        SuiteArg::Planner => "planner",
                        SuiteArg::Ndim => "ndim",
                        SuiteArg::All => "all",
                    }
                    .to_string(),
                ),
            );
            flat.push("inputs.samples", Val::I(samples as u64));
            flat.push("inputs.seed", Val::I(seed));
            flat.push("inputs.tolerance_scale", Val::F(scale));
            for (i, c) in checks.iter().enumerate() {
                flat.push(&format!("checks.{i}.name"), Val::S(c.name.clone()));
                flat.push(&format!("checks.{i}.pass"), Val::B(c.pass));
                flat.push(&format!("checks.{i}.worst"), Val::F(c.worst));
                flat.push(&format!("checks.{i}.tolerance"), Val::F(c.tolerance));
                flat.push(&format!("checks.{i}.samples"), Val::I(c.samples as u64));
            }
            flat.push("all_pass", Val::B(checks.iter().all(|c| c.pass)));
            println!("{}", flat.render_json());
        }
    }

    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(Failure::Verification(format!(
            "{failed} of {} checks failed",
            checks.len()
        )));
    }
    Ok(())
}
