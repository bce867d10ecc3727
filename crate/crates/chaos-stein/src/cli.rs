use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use chaos_stein_core::mc::DEFAULT_SEED;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{self, BreuerMajorArgs, FbmQvArgs, KernelArgs, ModelArgs, Outcome, ProductArgs, SteinSolveArgs};
use crate::exec::{parallel, Rayon};
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chaos-stein", version, about = "Normal approximation bounds by exact chaos algebra and seeded Monte Carlo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Run the invariant battery for this subcommand instead.
    #[arg(long, global = true)]
    pub selftest: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Stein equation for a test function and check the sup-norm caps.
    SteinSolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SteinSolveArgs,
    },
    /// Kolmogorov distance of a standardized i.i.d. sum against 7.1 Σγ.
    BerryEsseen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ModelArgs,
    },
    /// Wasserstein distance and the zero-bias coupling gap.
    ZeroBias {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ModelArgs,
    },
    /// Regression and antisymmetry checks on the resample-one exchangeable pair.
    PairCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ModelArgs,
    },
    /// Compare the chaos product formula with pointwise products.
    ProductCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ProductArgs,
    },
    /// Total variation distance of I_k(f) to N(0,1) against the fourth moment cap.
    FourthMoment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: KernelArgs,
    },
    /// Conditional variance bound on d_TV via T = <DF, -DL^{-1}F>.
    TvBound {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: KernelArgs,
    },
    /// Limit variance and simulated law of Hermite functionals of fGn.
    BreuerMajor {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: BreuerMajorArgs,
    },
    /// Quadratic variation of fractional Gaussian noise: cumulants and rates.
    FbmQv {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: FbmQvArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandName {
    SteinSolve,
    BerryEsseen,
    ZeroBias,
    PairCheck,
    ProductCheck,
    FourthMoment,
    TvBound,
    BreuerMajor,
    FbmQv,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SteinSolve => "stein-solve",
            Self::BerryEsseen => "berry-esseen",
            Self::ZeroBias => "zero-bias",
            Self::PairCheck => "pair-check",
            Self::ProductCheck => "product-check",
            Self::FourthMoment => "fourth-moment",
            Self::TvBound => "tv-bound",
            Self::BreuerMajor => "breuer-major",
            Self::FbmQv => "fbm-qv",
        }
    }
}

impl Command {
    fn parts(&self) -> (CommandName, &Common) {
        match self {
            Self::SteinSolve { common, .. } => (CommandName::SteinSolve, common),
            Self::BerryEsseen { common, .. } => (CommandName::BerryEsseen, common),
            Self::ZeroBias { common, .. } => (CommandName::ZeroBias, common),
            Self::PairCheck { common, .. } => (CommandName::PairCheck, common),
            Self::ProductCheck { common, .. } => (CommandName::ProductCheck, common),
            Self::FourthMoment { common, .. } => (CommandName::FourthMoment, common),
            Self::TvBound { common, .. } => (CommandName::TvBound, common),
            Self::BreuerMajor { common, .. } => (CommandName::BreuerMajor, common),
            Self::FbmQv { common, .. } => (CommandName::FbmQv, common),
        }
    }
}

fn execute(cmd: &Command, mc: &commands::Mc) -> anyhow::Result<Outcome> {
    match cmd {
        Command::SteinSolve { args, .. } => commands::stein_solve(args),
        Command::BerryEsseen { args, .. } => commands::berry_esseen(args, mc),
        Command::ZeroBias { args, .. } => commands::zero_bias(args, mc),
        Command::PairCheck { args, .. } => commands::pair(args, mc),
        Command::ProductCheck { args, .. } => commands::product_check(args, mc.seed),
        Command::FourthMoment { args, .. } => commands::fourth_moment(args, mc),
        Command::TvBound { args, .. } => commands::tv_bound(args, mc),
        Command::BreuerMajor { args, .. } => commands::breuer_major(args, mc),
        Command::FbmQv { args, .. } => commands::fbm_qv(args),
    }
}

fn emit(outcome: &Outcome, name: CommandName, common: &Common) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    match common.format {
        Format::Csv => outcome.table.write_csv(&mut buf)?,
        Format::Json => outcome.table.write_json(name.as_str(), common.seed, &mut buf)?,
    }
    match &common.output {
        Some(path) => std::fs::write(path, &buf).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&buf)?;
            out.flush().context("writing to stdout")
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<i32> {
    let (name, common) = cli.command.parts();
    let mc = parallel(common.seed, Rayon::from_env()?);
    let outcome = if common.selftest {
        let (table, failed) = selftest::run(name, common.seed, &mc);
        eprintln!("selftest {}: {}", name.as_str(), if failed == 0 { "ok" } else { "FAILED" });
        Outcome {
            table,
            violation: failed > 0,
        }
    } else {
        execute(&cli.command, &mc)?
    };
    emit(&outcome, name, common)?;
    Ok(exit_code(&outcome))
}

pub fn exit_code(outcome: &Outcome) -> i32 {
    if outcome.violation {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 2 when a bound is violated, 1 on usage
/// or IO errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}
