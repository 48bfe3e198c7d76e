//! `medianlab` command-line tool.

mod commands;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use medianlab::instances::{Distribution, Encoding};
use medianlab::{NormOrder, TieBreak};

#[derive(Parser)]
#[command(
    name = "medianlab",
    version,
    about = "Coordinate-wise median facility location: bounds, instances, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upper bound UB(q) with the solved tangency quantities
    Bounds(BoundsArgs),
    /// CSV curves: UB over q, or prediction bounds over c
    #[command(subcommand)]
    Curve(CurveCmd),
    /// Write an instance file
    #[command(subcommand)]
    Gen(GenCmd),
    /// Ratio of a mechanism on an instance file
    Eval(EvalArgs),
    /// Run one verification; exit 1 if it fails
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Run every check and write a markdown summary with CSVs
    Report(ReportArgs),
}

fn parse_q(s: &str) -> Result<NormOrder, String> {
    s.parse::<NormOrder>().map_err(|e| e.to_string())
}

fn parse_c(s: &str) -> Result<f64, String> {
    let c: f64 = s.parse().map_err(|_| format!("cannot parse '{s}' as a number"))?;
    if (0.0..1.0).contains(&c) {
        Ok(c)
    } else {
        Err(format!("c must lie in [0, 1), got {c}"))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Lower,
    Upper,
}

impl From<TieArg> for TieBreak {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Lower => TieBreak::Lower,
            TieArg::Upper => TieBreak::Upper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Decimal,
    Hex,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Decimal => Encoding::Decimal,
            EncodingArg::Hex => Encoding::Hex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DistributionArg {
    Uniform,
    Gaussian,
}

impl From<DistributionArg> for Distribution {
    fn from(d: DistributionArg) -> Self {
        match d {
            DistributionArg::Uniform => Distribution::UniformCube,
            DistributionArg::Gaussian => Distribution::Gaussian,
        }
    }
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "MEDIANLAB_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BoundsArgs {
    /// Norm order, a number >= 1 or "inf"
    #[arg(long, value_parser = parse_q)]
    q: NormOrder,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum CurveCmd {
    /// Columns q, a_star, lambda_star, ub
    Ub {
        #[arg(long, default_value_t = 1.0)]
        q_min: f64,
        #[arg(long, default_value_t = 20.0)]
        q_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Columns c, consistency, robustness, r_a, r_b
    Prediction {
        #[arg(long, default_value_t = 200)]
        c_steps: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenCommon {
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = EncodingArg::Decimal)]
    encoding: EncodingArg,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Lower-bound family for finite q > 1
    Lb {
        #[arg(long, value_parser = parse_q)]
        q: NormOrder,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Exact fractions as weights instead of n rounded points
        #[arg(long)]
        weighted: bool,
        #[command(flatten)]
        common: GenCommon,
    },
    /// L-infinity lower-bound family
    Linf {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[command(flatten)]
        common: GenCommon,
    },
    /// I.i.d. random points
    Random {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = DistributionArg::Uniform)]
        distribution: DistributionArg,
        #[command(flatten)]
        common: GenCommon,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Solver restarts
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = parse_q)]
    q: NormOrder,
    /// Predicted facility, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "c")]
    prediction: Option<Vec<f64>>,
    /// Prediction weight in [0, 1)
    #[arg(long, value_parser = parse_c, requires = "prediction")]
    c: Option<f64>,
    #[arg(long, value_enum, default_value_t = TieArg::Lower)]
    tie_break: TieArg,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpMechanism {
    Median,
    Cmp,
    Mean,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// min u(a) >= 0 at lambda (default lambda*)
    Cert {
        #[arg(long, value_parser = parse_q)]
        q: NormOrder,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long)]
        json: bool,
    },
    /// Random unilateral deviations; by default the median for q in {1, 2, inf}
    /// and CMP for c in {0.25, 0.5, 0.75}
    Sp {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, value_enum)]
        mechanism: Option<SpMechanism>,
        #[arg(long, value_parser = parse_c)]
        c: Option<f64>,
        #[arg(long, value_parser = parse_q)]
        q: Option<NormOrder>,
        #[arg(long, value_enum, default_value_t = TieArg::Lower)]
        tie_break: TieArg,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Lower-bound sweep over dimensions
    Lb {
        #[arg(long, value_parser = parse_q)]
        q: NormOrder,
        #[arg(long, value_delimiter = ',', default_value = "8,16,64,256,1024")]
        dims: Vec<usize>,
        /// Instances are built and solved up to this dimension
        #[arg(long, default_value_t = 1024)]
        build_max_d: usize,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Adversarial search for a bad instance
    Search {
        #[arg(long, value_parser = parse_q)]
        q: NormOrder,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Fail unless the best ratio reaches this value
        #[arg(long)]
        min_ratio: Option<f64>,
        /// Write the best instance here
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Args)]
struct ReportArgs {
    #[arg(short, long)]
    output: PathBuf,
    /// Multiply every lambda* by this factor before the certificate checks
    #[arg(long, default_value_t = 1.0)]
    perturb_lambda: f64,
    /// Strategy-proofness trials per mechanism
    #[arg(long, default_value_t = 10_000)]
    sp_trials: usize,
    #[command(flatten)]
    seed: SeedArg,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
