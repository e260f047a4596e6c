//! `sepkit`: Schmidt-rank norms, entanglement measures and preserver
//! classification from the command line.
//!
//! Exit codes: 0 success, 1 selftest failure, 2 violation or counterexample
//! witnessed, 3 hypothesis failure (ill-conditioned, not completely
//! positive), 4 input or format error.

mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::EXIT_INPUT;

#[derive(Parser, Debug)]
#[command(name = "sepkit", version, about = "Schmidt-rank norms, entanglement measures and preserver classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

/// Options every report echoes.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0, env = "SEPKIT_SEED")]
    pub seed: u64,

    /// Relative threshold for ranks, leaks and proportionality.
    #[arg(long, global = true, default_value_t = 1e-8, env = "SEPKIT_TOL")]
    pub tol: f64,

    /// Relative threshold on the second operator Schmidt coefficient.
    #[arg(long, global = true, default_value_t = 1e-7, env = "SEPKIT_REALIGN_TOL")]
    pub realign_tol: f64,

    /// Condition number above which invertibility is treated as unknown.
    #[arg(long, global = true, default_value_t = 1e6, env = "SEPKIT_COND_BOUND")]
    pub cond_bound: f64,

    /// Random inputs per sampled test.
    #[arg(long, global = true, default_value_t = 200, env = "SEPKIT_SAMPLES")]
    pub samples: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Schmidt decomposition of a ket across a cut.
    Schmidt(SchmidtArgs),
    /// s(k) norm of a ket or see-saw S(k) norm of an operator.
    Norm(NormArgs),
    /// Structural classification of operators and superoperators.
    #[command(subcommand)]
    Classify(ClassifyCommand),
    /// Geometric measure of entanglement of a multipartite ket.
    Gme(GmeArgs),
    /// Recover L = S_sigma (P_1 (x) ... (x) P_p) or find an entangling product input.
    Recover(InputArg),
    /// Compare E(v) and E(U v) on probe and random kets.
    GmeInvariance(InputArg),
    /// Randomized counterexample search for the open questions.
    Search(SearchArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
pub struct InputArg {
    /// JSON or text file; `-` reads stdin.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args, Debug)]
pub struct SchmidtArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// 1-based parties on the left of the cut, e.g. `1` or `1,3`. Defaults to `1`.
    #[arg(long, value_delimiter = ',')]
    pub cut: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Ket,
    Operator,
}

#[derive(Args, Debug)]
pub struct NormArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Read the input as this kind instead of inferring it from the entry count.
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Also run the brute-force oracle with this many samples (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub oracle_samples: usize,
}

#[derive(Subcommand, Debug)]
pub enum ClassifyCommand {
    /// Is L of the form P (x) Q or S (P (x) Q)?
    LocalForm(InputArg),
    /// Does L send Schmidt rank <= k to Schmidt rank <= k?
    Preserver(KArgs),
    /// Is a completely positive map a local conjugation?
    Cp(KArgs),
    /// Does a superoperator preserve the S(k) norm?
    Isometry(KArgs),
}

#[derive(Args, Debug)]
pub struct KArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
}

#[derive(Args, Debug)]
pub struct GmeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// `rank-r-bipartite` or `multipartite-k`.
    #[arg(long)]
    pub question: String,
    /// Comma-separated dimensions, e.g. `2,2,2`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub shape: Vec<usize>,
    #[arg(long)]
    pub k: usize,
    /// Rank-one terms per test input (rank-r-bipartite only).
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub inputs_per_trial: usize,
    /// Largest relative residual accepted as a known-form match.
    #[arg(long, default_value_t = 1e-6)]
    pub known_tol: f64,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Criteria to run (default: all), e.g. `1,5,7`.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u32>>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = commands::dispatch(&cli);
    let code = outcome.code;
    match report::emit(&cli, outcome) {
        Ok(()) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: cannot write report: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
