//! Command-line front end: parses measures and rewards from JSON files,
//! dispatches to the library, and prints one canonical JSON report per run.
//!
//! Exit codes: `0` success, `2` invalid input, `3` not in convex order or
//! infeasible, `4` unbounded (a `+inf` reward is chargeable), `1` any other
//! failure (violated scenario assertion, solver fault). Reports go to
//! stdout, diagnostics to stderr. Identical inputs produce byte-identical
//! stdout: rationals are canonicalized and report keys are sorted.

pub mod schema;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use mot_core::harness::{
    build_example, run_refinement_study, verify_example_properties, HarnessError, ScenarioName,
    ScenarioParams,
};
use mot_core::integrals::{concave_integral_i2, concave_integral_i3, IntegralError};
use mot_core::measures::{
    check_convex_order, decompose, Bound, Decomposition, DiscreteMeasure, IrreducibleComponent,
    MeasureError,
};
use mot_core::mot::{
    is_polar, monotonicity_set, solve_primal_dual, CertValue, Formulation, MotError, MotValue,
    RewardSpec,
};
use mot_core::scalar::{Rational, RefOps, Scalar};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    /// Malformed input: exit 2.
    Invalid(String),
    /// Convex order fails or the program is infeasible: exit 3.
    NotInOrder(String),
    /// A `+inf` reward is chargeable: exit 4.
    Unbounded(String),
    /// Anything else (violated assertions, solver faults): exit 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NotInOrder(_) => 3,
            CliError::Unbounded(_) => 4,
            CliError::Failed(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m)
            | CliError::NotInOrder(m)
            | CliError::Unbounded(m)
            | CliError::Failed(m) => m,
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::NegativeMass { .. } | MeasureError::EmptyMeasure => {
                CliError::Invalid(e.to_string())
            }
            MeasureError::NotInConvexOrder(_)
            | MeasureError::SplitInfeasible { .. }
            | MeasureError::InfiniteEndpoint => CliError::NotInOrder(e.to_string()),
        }
    }
}

impl From<MotError> for CliError {
    fn from(e: MotError) -> Self {
        match e {
            MotError::UnboundedReward { .. } => CliError::Unbounded(e.to_string()),
            MotError::Measure(m) => m.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<IntegralError> for CliError {
    fn from(e: IntegralError) -> Self {
        match e {
            IntegralError::Measure(m) => m.into(),
            IntegralError::DomainMismatch(_) | IntegralError::NotConcave(_) => {
                CliError::Invalid(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::BadParams(_) => CliError::Invalid(e.to_string()),
            HarnessError::Measure(m) => m.into(),
            HarnessError::Mot(m) => m.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "mot", about = "Martingale transport on the line at finite support")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the convex order of two measures.
    Order {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Decompose a convex-ordered pair into irreducible components.
    Decompose {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Solve the transport problem and report the coupling and certificate.
    Solve {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        reward: PathBuf,
        #[arg(long, default_value = "quasisure")]
        formulation: String,
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Also emit the monotonicity set of the returned certificate.
        #[arg(long)]
        emit_gamma: bool,
    },
    /// Decide polarity of the given points.
    Polar {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Generalized concave integral over an irreducible pair.
    Integral {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        chi: PathBuf,
        #[arg(long, default_value = "both")]
        method: String,
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Build a named counterexample scenario; verify its properties or run
    /// a refinement study over --levels.
    Harness {
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        truncation: Option<usize>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        penalty: Option<String>,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long, default_value = "exact")]
        mode: String,
    },
}

/// Runs a full argv (including the program name); returns the exit code.
/// The report goes to `out`, diagnostics to `err`.
pub fn run_command<W: Write, E: Write>(argv: &[String], out: &mut W, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with a zero-exit display
            if e.use_stderr() {
                let _ = writeln!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    let mode = command_mode(&cli.command);
    let outcome = match mode {
        "exact" => dispatch::<Rational>(&cli.command),
        "float" => dispatch::<f64>(&cli.command),
        other => Err(CliError::Invalid(format!(
            "unknown mode {other:?} (expected \"exact\" or \"float\")"
        ))),
    };
    match outcome {
        Ok((report, code)) => {
            let _ = write!(out, "{}", emit_report(&report));
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "error": e.message(),
            });
            let _ = write!(out, "{}", emit_report(&report));
            e.exit_code()
        }
    }
}

fn command_mode(command: &Command) -> &str {
    match command {
        Command::Order { mode, .. }
        | Command::Decompose { mode, .. }
        | Command::Solve { mode, .. }
        | Command::Polar { mode, .. }
        | Command::Integral { mode, .. }
        | Command::Harness { mode, .. } => mode,
    }
}

/// Deterministic serialization: keys sorted (serde_json's map is ordered),
/// rationals canonical `p/q` with `gcd(p, q) = 1`, `q > 0`.
pub fn emit_report(report: &Value) -> String {
    let mut text = serde_json::to_string(report).expect("report serializes");
    text.push('\n');
    text
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// Reads and parses a measure file.
pub fn parse_measure_file<S: Scalar>(path: &Path) -> Result<DiscreteMeasure<S>, CliError>
where
    for<'a> &'a S: RefOps<S>,
{
    schema::parse_measure(&read_file(path)?)
}

fn measure_digest<S: Scalar>(m: &DiscreteMeasure<S>) -> Value
where
    for<'a> &'a S: RefOps<S>,
{
    json!({
        "atoms": m.len(),
        "mass": m.total_mass().to_string(),
        "mean": m.mean().map(|v| v.to_string()),
    })
}

fn measure_value<S: Scalar>(m: &DiscreteMeasure<S>) -> Value
where
    for<'a> &'a S: RefOps<S>,
{
    let atoms: Vec<Value> = m
        .atoms()
        .iter()
        .map(|(x, w)| json!({"x": x.to_string(), "w": w.to_string()}))
        .collect();
    json!({ "atoms": atoms })
}

fn bound_value<S: Scalar>(b: &Bound<S>) -> Value
where
    for<'a> &'a S: RefOps<S>,
{
    Value::String(b.to_string())
}

fn component_value<S: Scalar>(c: &IrreducibleComponent<S>) -> Value
where
    for<'a> &'a S: RefOps<S>,
{
    json!({
        "index": c.index,
        "i": [bound_value(&c.lo), bound_value(&c.hi)],
        "mu_k": measure_value(&c.mu_k),
        "nu_k": measure_value(&c.nu_k),
    })
}

fn cert_entry<S: Scalar>(v: &CertValue<S>) -> Value
where
    for<'a> &'a S: RefOps<S>,
{
    match v {
        CertValue::Finite(x) => Value::String(x.to_string()),
        CertValue::PlusInf => Value::String("inf".into()),
    }
}

fn base_report(command: &str, mode: &str) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("command".into(), json!(command));
    map.insert("mode".into(), json!(mode));
    map
}

fn dispatch<S: Scalar>(command: &Command) -> Result<(Value, i32), CliError>
where
    for<'a> &'a S: RefOps<S>,
{
    match command {
        Command::Order { mu, nu, mode } => {
            let mu = parse_measure_file::<S>(mu)?;
            let nu = parse_measure_file::<S>(nu)?;
            let report = check_convex_order(&mu, &nu)?;
            let mut map = base_report("order", mode);
            map.insert("mu".into(), measure_digest(&mu));
            map.insert("nu".into(), measure_digest(&nu));
            map.insert("ordered".into(), json!(report.ordered));
            map.insert(
                "reason".into(),
                report
                    .reason
                    .as_ref()
                    .map(|r| json!(r.to_string()))
                    .unwrap_or(Value::Null),
            );
            map.insert(
                "touch_points".into(),
                json!(report
                    .touch_points
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()),
            );
            let code = if report.ordered { 0 } else { 3 };
            Ok((Value::Object(map), code))
        }
        Command::Decompose { mu, nu, mode } => {
            let mu = parse_measure_file::<S>(mu)?;
            let nu = parse_measure_file::<S>(nu)?;
            let d = decompose(&mu, &nu)?;
            let mut map = base_report("decompose", mode);
            map.insert("mu".into(), measure_digest(&mu));
            map.insert("nu".into(), measure_digest(&nu));
            map.insert(
                "components".into(),
                Value::Array(d.components.iter().map(component_value).collect()),
            );
            map.insert("stationary".into(), measure_value(&d.stationary));
            map.insert(
                "identity_coupling_mass".into(),
                json!(d.identity_coupling_mass().to_string()),
            );
            Ok((Value::Object(map), 0))
        }
        Command::Solve { mu, nu, reward, formulation, mode, emit_gamma } => {
            let mu = parse_measure_file::<S>(mu)?;
            let nu = parse_measure_file::<S>(nu)?;
            let f = schema::parse_reward::<S>(&read_file(reward)?)?;
            let formulation = parse_formulation(formulation)?;
            let solution = solve_primal_dual(&mu, &nu, &f, formulation)?;
            let mut map = base_report("solve", mode);
            map.insert("formulation".into(), json!(formulation.to_string()));
            map.insert("mu".into(), measure_digest(&mu));
            map.insert("nu".into(), measure_digest(&nu));
            let (value_text, code) = match &solution.value {
                MotValue::Finite(v) => (v.to_string(), 0),
                MotValue::PlusInf => ("inf".to_string(), 4),
                MotValue::MinusInf => ("-inf".to_string(), 0),
            };
            map.insert("value".into(), json!(value_text));
            if let Some(coupling) = &solution.coupling {
                let entries: Vec<Value> = coupling
                    .entries()
                    .map(|(x, y, w)| {
                        json!({"x": x.to_string(), "y": y.to_string(), "w": w.to_string()})
                    })
                    .collect();
                map.insert("coupling".into(), Value::Array(entries));
            }
            if let Some(cert) = &solution.certificate {
                let triple = |support: &[S], values: &[CertValue<S>]| -> Vec<Value> {
                    support
                        .iter()
                        .zip(values)
                        .map(|(x, v)| json!({"at": x.to_string(), "value": cert_entry(v)}))
                        .collect()
                };
                let h: Vec<Value> = cert
                    .x_support
                    .iter()
                    .zip(&cert.h)
                    .map(|(x, v)| json!({"at": x.to_string(), "value": v.to_string()}))
                    .collect();
                map.insert(
                    "certificate".into(),
                    json!({
                        "phi": triple(&cert.x_support, &cert.phi),
                        "psi": triple(&cert.y_support, &cert.psi),
                        "h": h,
                        "value": cert.value.to_string(),
                    }),
                );
                if *emit_gamma {
                    let gamma = monotonicity_set(cert, &f, &solution.decomposition);
                    map.insert(
                        "gamma".into(),
                        json!(gamma
                            .iter()
                            .map(|(x, y)| vec![x.to_string(), y.to_string()])
                            .collect::<Vec<_>>()),
                    );
                }
            } else if *emit_gamma {
                map.insert("gamma".into(), json!([]));
            }
            map.insert("lp_redundancy".into(), json!(solution.lp_redundancy));
            Ok((Value::Object(map), code))
        }
        Command::Polar { mu, nu, points, mode } => {
            let mu = parse_measure_file::<S>(mu)?;
            let nu = parse_measure_file::<S>(nu)?;
            let points = schema::parse_points::<S>(&read_file(points)?)?;
            let d: Decomposition<S> = decompose(&mu, &nu)?;
            let decisions = is_polar(&d, &points);
            let mut map = base_report("polar", mode);
            map.insert("mu".into(), measure_digest(&mu));
            map.insert("nu".into(), measure_digest(&nu));
            map.insert(
                "points".into(),
                json!(decisions
                    .iter()
                    .map(|p| json!({
                        "x": p.point.0.to_string(),
                        "y": p.point.1.to_string(),
                        "polar": p.polar,
                        "reason": p.reason.to_string(),
                    }))
                    .collect::<Vec<_>>()),
            );
            Ok((Value::Object(map), 0))
        }
        Command::Integral { mu, nu, chi, method, mode } => {
            let mu = parse_measure_file::<S>(mu)?;
            let nu = parse_measure_file::<S>(nu)?;
            let chi = schema::parse_chi::<S>(&read_file(chi)?)?;
            let component = IrreducibleComponent::from_irreducible_pair(&mu, &nu)?;
            let mut map = base_report("integral", mode);
            map.insert("method".into(), json!(method));
            let want_i2 = method == "i2" || method == "both";
            let want_i3 = method == "i3" || method == "both";
            if !want_i2 && !want_i3 {
                return Err(CliError::Invalid(format!(
                    "unknown method {method:?} (expected i2, i3, or both)"
                )));
            }
            if want_i2 {
                let v = concave_integral_i2(&chi, &component)?;
                map.insert("i2".into(), json!(v.to_string()));
            }
            if want_i3 {
                // any martingale coupling gives the same value; use a solved one
                let solved = solve_primal_dual(
                    &component.mu_k,
                    &component.nu_k,
                    &RewardSpec::SquareDiff,
                    Formulation::Quasisure,
                )?;
                let coupling = solved.coupling.expect("finite solve has a coupling");
                let v = concave_integral_i3(&chi, &component, &coupling)?;
                map.insert("i3".into(), json!(v.to_string()));
            }
            Ok((Value::Object(map), 0))
        }
        Command::Harness { name, n, truncation, delta, penalty, levels, mode } => {
            let scenario_name = ScenarioName::parse(name)
                .ok_or_else(|| CliError::Invalid(format!("unknown scenario {name:?}")))?;
            let parse_opt = |text: &Option<String>, field: &str| -> Result<Option<S>, CliError> {
                text.as_ref()
                    .map(|t| {
                        S::parse_str(t).ok_or_else(|| {
                            CliError::Invalid(format!("cannot parse {field} value {t:?}"))
                        })
                    })
                    .transpose()
            };
            let params = ScenarioParams {
                n: *n,
                truncation: *truncation,
                delta: parse_opt(delta, "delta")?,
                penalty: parse_opt(penalty, "penalty")?,
            };
            let mut map = base_report("harness", mode);
            map.insert("scenario".into(), json!(scenario_name.to_string()));
            if let Some(levels) = levels {
                let report = run_refinement_study::<S>(scenario_name, levels)?;
                map.insert(
                    "levels".into(),
                    json!(report
                        .levels
                        .iter()
                        .map(|r| json!({
                            "level": r.level,
                            "primal_value": r.primal_value.to_string(),
                            "quasisure_min_osc": r.quasisure_min_osc.to_string(),
                            "pointwise_min_osc": r.pointwise_min_osc.to_string(),
                        }))
                        .collect::<Vec<_>>()),
                );
                map.insert(
                    "verdicts".into(),
                    json!(report
                        .verdicts
                        .iter()
                        .map(|v| json!({"name": v.name, "passed": v.passed}))
                        .collect::<Vec<_>>()),
                );
                let code = if report.verdicts.iter().all(|v| v.passed) { 0 } else { 1 };
                Ok((Value::Object(map), code))
            } else {
                let scenario = build_example::<S>(scenario_name, &params)?;
                map.insert("mu".into(), measure_digest(&scenario.mu));
                map.insert("nu".into(), measure_digest(&scenario.nu));
                let report = verify_example_properties(&scenario)?;
                map.insert(
                    "checks".into(),
                    json!(report
                        .checks
                        .iter()
                        .map(|c| json!({"clause": c.clause, "passed": c.passed}))
                        .collect::<Vec<_>>()),
                );
                Ok((Value::Object(map), 0))
            }
        }
    }
}

fn parse_formulation(text: &str) -> Result<Formulation, CliError> {
    match text {
        "pointwise" => Ok(Formulation::Pointwise),
        "quasisure" => Ok(Formulation::Quasisure),
        "componentwise" => Ok(Formulation::Componentwise),
        other => Err(CliError::Invalid(format!(
            "unknown formulation {other:?} (expected pointwise, quasisure, or componentwise)"
        ))),
    }
}
