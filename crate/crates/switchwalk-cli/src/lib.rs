//! Command implementations behind the `switchwalk` binary.
//!
//! Four subcommands form the pipeline:
//!
//! * `analyze`: input family (+ optional injected λ/μ table) to weighted
//!   digraph file;
//! * `synthesize`: digraph file to synthesis result (circuit, cycle,
//!   lp-then-cycle, or random);
//! * `simulate`: family + synthesis result to per-trajectory norms CSV
//!   and a pass/fail report;
//! * `experiment`: graph model to Monte Carlo table CSV of empirical
//!   contractivity probability against the Azuma bound.
//!
//! Exit-code contract: 0 = ran to a verdict (including `none-exists`),
//! 2 = input error, 3 = certificate error, 4 = solver error.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use switchwalk::certificates::CertificateError;
use switchwalk::circuit_synth::{synthesize_circuit, SynthesisError, SynthesisStatus};
use switchwalk::cycle_synth::{
    detect_negative_cycle, most_negative_cycle_via_lp_support, CycleSynthError,
};
use switchwalk::digraph::{DigraphError, SwitchingDigraph};
use switchwalk::random_synth::{
    azuma_bound, generate_nicely_connected, monte_carlo_experiment, random_cycle,
    sample_weighted_digraph, RandomGraphModel, RandomSynthError, Skeleton,
};
use switchwalk::schema::{
    DigraphFile, InputFile, ModelFile, ResultFile, SchemaError, SCHEMA_VERSION,
};
use switchwalk::simulate::{signal_from_walk, verify_gas, GasConfig, GasReport};
use switchwalk::walks::{xi_bar, xi_definable_on_closed_walks, Walk};
use switchwalk::ExperimentRow;

pub const EXIT_INPUT_ERROR: i32 = 2;
pub const EXIT_CERTIFICATE_ERROR: i32 = 3;
pub const EXIT_SOLVER_ERROR: i32 = 4;

/// CLI-level error carrying its exit code class.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Certificate(String),
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT_ERROR,
            CliError::Certificate(_) => EXIT_CERTIFICATE_ERROR,
            CliError::Solver(_) => EXIT_SOLVER_ERROR,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Certificate(msg) => write!(f, "certificate error: {msg}"),
            CliError::Solver(msg) => write!(f, "solver error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        match e {
            SchemaError::Certificate(inner) => CliError::Certificate(inner.to_string()),
            SchemaError::Digraph(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<DigraphError> for CliError {
    fn from(e: DigraphError) -> Self {
        match e {
            DigraphError::Certificate(inner) => CliError::Certificate(inner.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<CertificateError> for CliError {
    fn from(e: CertificateError) -> Self {
        CliError::Certificate(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, &text)
}

/// `analyze`: build the weighted digraph of an input family and write it
/// out, printing weights, partition, and the Ξ-definability verdict.
pub fn cmd_analyze(
    input_path: &Path,
    output_path: &Path,
    margin: f64,
) -> Result<DigraphFile, CliError> {
    let input = InputFile::parse(&read_file(input_path)?)?;
    let digraph = input.digraph(margin)?;
    let file = DigraphFile::from_digraph(&digraph);
    write_json(output_path, &file)?;
    print!("{}", analyze_summary(&digraph));
    Ok(file)
}

fn analyze_summary(g: &SwitchingDigraph) -> String {
    let mut out = String::new();
    let stable: Vec<String> = g.stable().iter().map(usize::to_string).collect();
    let unstable: Vec<String> = g.unstable().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "stable vertices:   {{{}}}", stable.join(", "));
    let _ = writeln!(out, "unstable vertices: {{{}}}", unstable.join(", "));
    for &v in g.vertices() {
        let _ = writeln!(out, "w({v}) = {:.6}", g.vertex_weight(v).unwrap());
    }
    for &(i, j) in g.edges() {
        let _ = writeln!(
            out,
            "w({i},{j}) = {:.6}   cost = {:.6}",
            g.edge_weight(i, j).unwrap(),
            g.edge_cost(i, j).unwrap()
        );
    }
    if !xi_definable_on_closed_walks(g) {
        let _ = writeln!(
            out,
            "verdict: Xi is undefined for every closed walk (no stable vertex lies on a cycle); \
             no stabilizing switching signal exists on this graph"
        );
    }
    out
}

/// Synthesis method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Circuit,
    Cycle,
    LpThenCycle,
    Random,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Circuit => "circuit",
            Method::Cycle => "cycle",
            Method::LpThenCycle => "lp-then-cycle",
            Method::Random => "random",
        }
    }
}

const STATUS_CONTRACTIVE: &str = "contractive";
const STATUS_NONE_EXISTS: &str = "none-exists";
/// Random method only: a cycle was produced but its cost is nonnegative.
const STATUS_NOT_CONTRACTIVE: &str = "not-contractive";

/// `synthesize`: run one synthesis method on a digraph file (or, for the
/// random method, directly on a model file) and write the result.
pub fn cmd_synthesize(
    input_path: &Path,
    method: Method,
    seed: u64,
    model_path: Option<&Path>,
    output_path: &Path,
) -> Result<ResultFile, CliError> {
    let text = read_file(input_path)?;
    let model = match model_path {
        Some(p) => Some(ModelFile::parse(&read_file(p)?)?.to_model()),
        None => None,
    };
    let result = match DigraphFile::parse(&text) {
        Ok(file) => {
            let g = file.to_digraph()?;
            synthesize_on_digraph(&g, method, seed, model.as_ref())?
        }
        Err(digraph_err) => {
            // The random method also accepts a model file directly.
            if method == Method::Random {
                match ModelFile::parse(&text) {
                    Ok(model_file) => synthesize_on_model(&model_file.to_model(), seed)?,
                    Err(_) => return Err(digraph_err.into()),
                }
            } else {
                return Err(digraph_err.into());
            }
        }
    };
    write_json(output_path, &result)?;
    match &result.walk {
        Some(walk) => println!(
            "{}: {} walk {:?} with xi_bar = {}",
            result.method,
            result.status,
            walk,
            result.xi_bar.unwrap()
        ),
        None => println!("{}: {}", result.method, result.status),
    }
    Ok(result)
}

fn result_file(
    method: Method,
    walk: Option<(Walk, f64)>,
    bound: Option<f64>,
) -> ResultFile {
    match walk {
        Some((walk, cost)) => ResultFile {
            schema_version: SCHEMA_VERSION,
            method: method.name().into(),
            status: if cost < 0.0 {
                STATUS_CONTRACTIVE.into()
            } else {
                STATUS_NOT_CONTRACTIVE.into()
            },
            walk: Some(walk.vertices().to_vec()),
            xi_bar: Some(cost),
            bound,
        },
        None => ResultFile {
            schema_version: SCHEMA_VERSION,
            method: method.name().into(),
            status: STATUS_NONE_EXISTS.into(),
            walk: None,
            xi_bar: None,
            bound,
        },
    }
}

fn synthesize_on_digraph(
    g: &SwitchingDigraph,
    method: Method,
    seed: u64,
    model: Option<&RandomGraphModel>,
) -> Result<ResultFile, CliError> {
    match method {
        Method::Circuit => match synthesize_circuit(g) {
            Ok(solution) => {
                let walk = match solution.status {
                    SynthesisStatus::Contractive => {
                        let circuit = solution.circuit.expect("contractive solutions carry one");
                        let cost = xi_bar(&circuit, g)
                            .map_err(|e| CliError::Solver(e.to_string()))?;
                        Some((circuit, cost))
                    }
                    SynthesisStatus::NoneExists => None,
                };
                Ok(result_file(method, walk, None))
            }
            // No closed walk at all certainly means no contractive circuit.
            Err(SynthesisError::Infeasible) => Ok(result_file(method, None, None)),
            Err(e) => Err(CliError::Solver(e.to_string())),
        },
        Method::Cycle => {
            let walk = detect_negative_cycle(g).map(|cycle| {
                let cost = xi_bar(&cycle, g).expect("detected cycles are closed");
                (cycle, cost)
            });
            Ok(result_file(method, walk, None))
        }
        Method::LpThenCycle => match most_negative_cycle_via_lp_support(g) {
            Ok(found) => {
                let walk = found.map(|cycle| {
                    let cost = xi_bar(&cycle, g).expect("cycles are closed");
                    (cycle, cost)
                });
                Ok(result_file(method, walk, None))
            }
            Err(CycleSynthError::Synthesis(SynthesisError::Infeasible)) => {
                Ok(result_file(method, None, None))
            }
            Err(e) => Err(CliError::Solver(e.to_string())),
        },
        Method::Random => {
            let skeleton = Skeleton::from_digraph(g);
            let floor = model.map(RandomGraphModel::degree_floor).unwrap_or(1);
            match random_cycle(&skeleton, floor, seed) {
                Ok(cycle) => {
                    let cost =
                        xi_bar(&cycle, g).map_err(|e| CliError::Solver(e.to_string()))?;
                    let bound = match model {
                        Some(m) => Some(
                            azuma_bound(m, cycle.len())
                                .map_err(|e| CliError::Input(e.to_string()))?,
                        ),
                        None => None,
                    };
                    Ok(result_file(method, Some((cycle, cost)), bound))
                }
                // The randomized walk cannot run on this graph: report the
                // no-cycle verdict rather than failing.
                Err(
                    RandomSynthError::NotNicelyConnected { .. }
                    | RandomSynthError::DeadEnd { .. }
                    | RandomSynthError::EmptyStableSet,
                ) => Ok(result_file(method, None, None)),
                Err(e) => Err(CliError::Solver(e.to_string())),
            }
        }
    }
}

/// Random synthesis directly from a model: generate the skeleton, sample
/// weights, run the randomized walk, and report the bound at the cycle's
/// length.
fn synthesize_on_model(model: &RandomGraphModel, seed: u64) -> Result<ResultFile, CliError> {
    let skeleton =
        generate_nicely_connected(model, seed).map_err(|e| CliError::Input(e.to_string()))?;
    let g = sample_weighted_digraph(&skeleton, model, seed.wrapping_add(1))
        .map_err(|e| CliError::Input(e.to_string()))?;
    let cycle = random_cycle(&skeleton, model.degree_floor(), seed.wrapping_add(2))
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let cost = xi_bar(&cycle, &g).map_err(|e| CliError::Solver(e.to_string()))?;
    let bound =
        azuma_bound(model, cycle.len()).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(result_file(Method::Random, Some((cycle, cost)), Some(bound)))
}

/// `report.json` written by `simulate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub schema_version: u32,
    pub passed: bool,
    pub samples: usize,
    pub failures: usize,
    pub worst_decay_ratio: f64,
    pub worst_boundedness_ratio: f64,
    pub max_transient_periods: Option<usize>,
    /// Cost of the simulated generator walk.
    pub xi_bar: f64,
}

/// `simulate`: validate the synthesized signal on the family by sampling
/// initial conditions; writes the norm series CSV and the report.
#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    input_path: &Path,
    result_path: &Path,
    config: &GasConfig,
    margin: f64,
    norms_path: &Path,
    report_path: &Path,
) -> Result<ReportFile, CliError> {
    let input = InputFile::parse(&read_file(input_path)?)?;
    let family = input.family()?;
    let digraph = input.digraph(margin)?;
    let result = ResultFile::parse(&read_file(result_path)?)?;
    let vertices = result
        .walk
        .ok_or_else(|| CliError::Input("result file carries no walk to simulate".into()))?;
    let walk = Walk::validated(vertices, &digraph)
        .map_err(|e| CliError::Input(format!("result walk does not fit the digraph: {e}")))?;
    let signal =
        signal_from_walk(&walk, &digraph).map_err(|e| CliError::Input(e.to_string()))?;
    if !signal.is_contractive() {
        eprintln!(
            "warning: generator walk has xi_bar = {} >= 0, no stability guarantee",
            signal.xi_bar()
        );
    }
    let report = verify_gas(&family, &signal, config)
        .map_err(|e| CliError::Input(e.to_string()))?;
    write_file(norms_path, &norms_csv(&report))?;
    let file = ReportFile {
        schema_version: SCHEMA_VERSION,
        passed: report.passed,
        samples: report.samples.len(),
        failures: report.failures,
        worst_decay_ratio: report.worst_decay_ratio,
        worst_boundedness_ratio: report.worst_boundedness_ratio,
        max_transient_periods: report.max_transient_periods,
        xi_bar: signal.xi_bar(),
    };
    write_json(report_path, &file)?;
    println!(
        "simulated {} trajectories: {} (worst decay ratio {:.3e}, worst overshoot {:.3})",
        file.samples,
        if file.passed { "pass" } else { "FAIL" },
        file.worst_decay_ratio,
        file.worst_boundedness_ratio
    );
    Ok(file)
}

fn norms_csv(report: &GasReport) -> String {
    let mut out = String::from("sample,t,norm\n");
    for (idx, sample) in report.samples.iter().enumerate() {
        for (t, norm) in sample.norms.iter().enumerate() {
            let _ = writeln!(out, "{idx},{t},{norm}");
        }
    }
    out
}

/// `experiment`: Monte Carlo table of empirical contractivity probability
/// versus the Azuma bound, one row per requested cycle length.
pub fn cmd_experiment(
    model_path: &Path,
    lengths: &[usize],
    trials: usize,
    seed: u64,
    output_path: &Path,
) -> Result<Vec<ExperimentRow>, CliError> {
    let model = ModelFile::parse(&read_file(model_path)?)?.to_model();
    let rows = monte_carlo_experiment(&model, lengths, trials, seed).map_err(|e| match e {
        RandomSynthError::InvalidModel(_) | RandomSynthError::InvalidLength => {
            CliError::Input(e.to_string())
        }
        other => CliError::Solver(other.to_string()),
    })?;
    write_file(output_path, &experiment_csv(&rows))?;
    for row in &rows {
        println!(
            "n = {:>4}: empirical P(X_n < 0) = {:.4}, bound = {:.4}",
            row.n, row.empirical, row.bound
        );
    }
    Ok(rows)
}

fn experiment_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from("n,empirical,bound\n");
    for row in rows {
        let _ = writeln!(out, "{},{},{}", row.n, row.empirical, row.bound);
    }
    out
}
