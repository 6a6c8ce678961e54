//! Command implementations behind the `guesswork` binary: problem ingestion,
//! report and figure emission, simulation runs, and the verification suite.
//!
//! Reports are versioned JSON; figures are CSV with fixed 9-significant-digit
//! decimal formatting and `\n` line endings, byte-stable across runs.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dist::{Channel, Distribution, GuessingProblem};
use crate::error::{Error, Result};
use crate::exponent::{exponent_with_side_info, noiseless_exponent, solve_exponent, SolverOptions};
use crate::figures::{figure_q_rows, figure_rho_rows, FigureRow};
use crate::samplers::GuessStrategy;
use crate::simulator::{exact_moment, fixed_list_moment, simulate_moment, MomentReport};
use crate::verify::{run_checks, CheckOutcome, VerifyLevel};

pub const PROBLEM_SCHEMA_VERSION: u32 = 1;
pub const LN_2: f64 = std::f64::consts::LN_2;

/// On-disk problem description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub version: u32,
    pub source: Vec<f64>,
    pub channel: Vec<Vec<f64>>,
    pub rho: f64,
    /// Optional Y×Z joint law coupling the target with side information.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_info_joint: Option<Vec<Vec<f64>>>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let file: ProblemFile = serde_json::from_str(&raw)?;
        if file.version != PROBLEM_SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "problem file version {} unsupported (expected {PROBLEM_SCHEMA_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn build(&self) -> Result<GuessingProblem> {
        GuessingProblem::new(
            Distribution::new(self.source.clone())?,
            Channel::new(self.channel.clone())?,
            self.rho,
        )
    }
}

/// JSON report of an exponent computation.
#[derive(Debug, Serialize)]
pub struct ExponentReport {
    pub version: u32,
    pub exponent_nats: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent_bits: Option<f64>,
    pub noiseless_exponent_nats: f64,
    pub flat: bool,
    pub v_star: Vec<f64>,
    pub q_induced: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
    pub converse_warning: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side_info_exponent_nats: Option<f64>,
}

/// Fixed-point decimal with `sig` significant digits; no exponent notation.
/// Keeps CSV output byte-stable across platforms (libm last-ulp differences
/// sit far below the ninth significant digit).
pub fn format_sig(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let exp10 = if x == 0.0 { 0 } else { x.abs().log10().floor() as i32 };
    let decimals = (sig as i32 - 1 - exp10).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn figure_csv(label: &str, rows: &[FigureRow]) -> String {
    let mut csv = format!("{label},exponent_nats,flat\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            format_sig(row.sweep_value, 9),
            format_sig(row.exponent, 9),
            row.flat
        ));
    }
    csv
}

/// `guesswork exponent`: solve one problem file and emit the JSON report.
pub fn cmd_exponent(
    problem_path: &Path,
    opts: &SolverOptions,
    bits: bool,
    output: Option<&Path>,
) -> Result<()> {
    let file = ProblemFile::load(problem_path)?;
    let problem = file.build()?;
    if problem.channel.has_deterministic_transition() {
        eprintln!(
            "warning: channel has a deterministic transition (w_max = 1); \
             the reported value is achievable but the converse bound is not guaranteed"
        );
    }
    let res = solve_exponent(&problem, opts)?;
    let side_info_exponent_nats = match &file.side_info_joint {
        Some(joint) => {
            let marginal: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
            for (y, (&m, &p)) in marginal.iter().zip(&file.source).enumerate() {
                if (m - p).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "side_info_joint target marginal ({m}) disagrees with source ({p}) \
                         at symbol {y}"
                    )));
                }
            }
            Some(exponent_with_side_info(joint, &problem.channel, problem.rho, opts)?)
        }
        None => None,
    };
    let report = ExponentReport {
        version: 1,
        exponent_nats: res.value,
        exponent_bits: bits.then(|| res.value / LN_2),
        noiseless_exponent_nats: noiseless_exponent(&problem.source, problem.rho),
        flat: res.flat,
        v_star: res.v_star.probs().to_vec(),
        q_induced: res.q_induced.probs().to_vec(),
        iterations: res.iterations,
        gap: res.gap,
        converse_warning: res.converse_warning,
        side_info_exponent_nats,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_output(output, &text)
}

/// `guesswork figure-q`: exponent vs BSC crossover, CSV.
pub fn cmd_figure_q(
    p: f64,
    rho: f64,
    q_min: f64,
    q_max: f64,
    steps: usize,
    opts: &SolverOptions,
    output: Option<&Path>,
) -> Result<()> {
    let rows = figure_q_rows(p, rho, q_min, q_max, steps, opts)?;
    write_output(output, &figure_csv("q", &rows))
}

/// `guesswork figure-rho`: exponent vs moment order, CSV.
pub fn cmd_figure_rho(
    p: f64,
    q: f64,
    rho_min: f64,
    rho_max: f64,
    steps: usize,
    opts: &SolverOptions,
    output: Option<&Path>,
) -> Result<()> {
    let rows = figure_rho_rows(p, q, rho_min, rho_max, steps, opts)?;
    write_output(output, &figure_csv("rho", &rows))
}

/// Strategy selection for `guesswork simulate`.
#[derive(Debug, Clone)]
pub enum StrategyChoice {
    /// Designed i.i.d. guessing; `None` means the solver's optimal law.
    Iid(Option<Vec<f64>>),
    Universal,
    /// Explicit list from a JSON file (array of symbol arrays).
    List { path: PathBuf, horizon: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulateMode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    version: u32,
    #[serde(flatten)]
    report: MomentReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_value_per_n_bits: Option<f64>,
}

/// `guesswork simulate`: one moment evaluation, exact or Monte-Carlo.
#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    problem_path: &Path,
    strategy: &StrategyChoice,
    n: usize,
    mode: SimulateMode,
    trials: u64,
    seed: u64,
    eps: f64,
    solver_opts: &SolverOptions,
    bits: bool,
    output: Option<&Path>,
) -> Result<()> {
    let file = ProblemFile::load(problem_path)?;
    let problem = file.build()?;
    let report = match strategy {
        StrategyChoice::List { path, horizon } => {
            if mode == SimulateMode::MonteCarlo {
                return Err(Error::InvalidInput(
                    "monte-carlo mode needs a randomized strategy; lists are exact-only".into(),
                ));
            }
            let raw = std::fs::read_to_string(path)?;
            let list: Vec<Vec<usize>> = serde_json::from_str(&raw)?;
            let horizon = horizon.unwrap_or(list.len());
            fixed_list_moment(&problem, &list, n, horizon, eps)?
        }
        _ => {
            let strategy = match strategy {
                StrategyChoice::Iid(Some(v)) => GuessStrategy::Iid(Distribution::new(v.clone())?),
                StrategyChoice::Iid(None) => {
                    GuessStrategy::Iid(solve_exponent(&problem, solver_opts)?.v_star)
                }
                StrategyChoice::Universal => GuessStrategy::Universal,
                StrategyChoice::List { .. } => unreachable!(),
            };
            match mode {
                SimulateMode::Exact => exact_moment(&problem, &strategy, n, eps)?,
                SimulateMode::MonteCarlo => simulate_moment(&problem, &strategy, n, trials, seed)?,
            }
        }
    };
    let wrapped = SimulateReport {
        version: 1,
        log_value_per_n_bits: bits.then(|| report.log_value_per_n / LN_2),
        report,
    };
    let mut text = serde_json::to_string_pretty(&wrapped)?;
    text.push('\n');
    write_output(output, &text)
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    version: u32,
    level: String,
    passed: usize,
    failed: usize,
    checks: Vec<CheckOutcome>,
}

/// `guesswork verify`: run the consistency suite, print one line per check
/// to stderr, emit the machine-readable summary, and fail on any red check.
pub fn cmd_verify(
    level: VerifyLevel,
    problem_path: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    let mut checks = run_checks(level)?;
    if let Some(path) = problem_path {
        // Parse-stage failures surface as input errors before any check runs.
        let file = ProblemFile::load(path)?;
        let problem = file.build()?;
        let res = solve_exponent(&problem, &SolverOptions::default())?;
        checks.push(CheckOutcome {
            name: "problem-file-solvable".into(),
            tolerance: 1e-8,
            residual: res.gap,
            passed: res.gap <= 1e-8,
            detail: format!("exponent {} nats at rho {}", res.value, problem.rho),
        });
    }
    for c in &checks {
        eprintln!(
            "{} {} residual {:.3e} tolerance {:.3e} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let report = VerifyReport {
        version: 1,
        level: match level {
            VerifyLevel::Quick => "quick".into(),
            VerifyLevel::Full => "full".into(),
        },
        passed: checks.len() - failed,
        failed,
        checks,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_output(output, &text)?;
    if failed > 0 {
        return Err(Error::VerificationFailed { failed, total: report.passed + failed });
    }
    Ok(())
}
