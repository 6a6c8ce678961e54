use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use guesswork::cli::{
    cmd_exponent, cmd_figure_q, cmd_figure_rho, cmd_simulate, cmd_verify, SimulateMode,
    StrategyChoice,
};
use guesswork::error::Error;
use guesswork::exponent::SolverOptions;
use guesswork::verify::VerifyLevel;

/// Guessing exponents over noisy channels: solve, sweep, simulate, verify.
#[derive(Parser)]
#[command(name = "guesswork", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags every command accepts. The seed defaults to 0 and every code path
/// is deterministic given it.
#[derive(Args)]
struct Common {
    /// RNG seed for stochastic operations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver optimality tolerance in nats.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Additionally report information values converted to bits.
    #[arg(long)]
    bits: bool,
    /// Solver iteration budget.
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
}

impl Common {
    fn solver_options(&self) -> SolverOptions {
        SolverOptions { tolerance: self.tolerance, max_iters: self.max_iters, ..Default::default() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the guessing exponent for a problem file.
    Exponent {
        /// Problem JSON: {version, source, channel, rho, side_info_joint?}.
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the exponent against the BSC crossover q (CSV).
    FigureQ {
        /// Binary source parameter in (0, 1).
        #[arg(long)]
        p: f64,
        /// Moment order.
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        q_min: f64,
        #[arg(long, default_value_t = 0.5)]
        q_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the exponent against the moment order rho (CSV).
    FigureRho {
        /// Binary source parameter in (0, 1).
        #[arg(long)]
        p: f64,
        /// BSC crossover in [0, 0.5].
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.0)]
        rho_min: f64,
        #[arg(long, default_value_t = 3.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the guess-count moment for a strategy, exactly or by
    /// Monte Carlo.
    Simulate {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        /// Guess law for --strategy iid, e.g. "0.1,0.9"; the solver's
        /// optimal law when omitted.
        #[arg(long)]
        v: Option<String>,
        /// JSON list of guesses for --strategy list.
        #[arg(long)]
        list_file: Option<PathBuf>,
        /// Cyclic-extension horizon for lists; defaults to the list length.
        #[arg(long)]
        horizon: Option<usize>,
        /// Block length.
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Relative series-truncation budget for exact evaluation.
        #[arg(long, default_value_t = 1e-10)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the cross-module consistency suite.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Optionally validate and solve a problem file as part of the run.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Iid,
    Universal,
    List,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

fn parse_probs(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad probability '{t}': {e}")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Exponent { problem, common } => cmd_exponent(
            &problem,
            &common.solver_options(),
            common.bits,
            common.output.as_deref(),
        ),
        Command::FigureQ { p, rho, q_min, q_max, steps, common } => cmd_figure_q(
            p,
            rho,
            q_min,
            q_max,
            steps,
            &common.solver_options(),
            common.output.as_deref(),
        ),
        Command::FigureRho { p, q, rho_min, rho_max, steps, common } => cmd_figure_rho(
            p,
            q,
            rho_min,
            rho_max,
            steps,
            &common.solver_options(),
            common.output.as_deref(),
        ),
        Command::Simulate {
            problem,
            strategy,
            v,
            list_file,
            horizon,
            n,
            mode,
            trials,
            eps,
            common,
        } => {
            let strategy = match strategy {
                StrategyArg::Iid => {
                    StrategyChoice::Iid(v.as_deref().map(parse_probs).transpose()?)
                }
                StrategyArg::Universal => StrategyChoice::Universal,
                StrategyArg::List => StrategyChoice::List {
                    path: list_file.ok_or_else(|| {
                        Error::InvalidInput("--strategy list requires --list-file".into())
                    })?,
                    horizon,
                },
            };
            let mode = match mode {
                ModeArg::Exact => SimulateMode::Exact,
                ModeArg::Mc => SimulateMode::MonteCarlo,
            };
            cmd_simulate(
                &problem,
                &strategy,
                n,
                mode,
                trials,
                common.seed,
                eps,
                &common.solver_options(),
                common.bits,
                common.output.as_deref(),
            )
        }
        Command::Verify { level, problem, common } => {
            let level = match level {
                LevelArg::Quick => VerifyLevel::Quick,
                LevelArg::Full => VerifyLevel::Full,
            };
            cmd_verify(level, problem.as_deref(), common.output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
