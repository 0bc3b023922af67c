//! `superosc` - batch verification front end for the anharmonic-oscillator
//! toolkit.
//!
//! Exit codes: 0 all checks passed, 1 a verification threshold failed,
//! 2 usage or parse error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use superosc_cli::commands::{
    cmd_classify, cmd_geodesics, cmd_lienard, cmd_verify_integrals, ClassifyParams, CmdError,
    GeodesicsParams, LienardParams, VerifyParams,
};

#[derive(Parser)]
#[command(name = "superosc", version, about = "First-integral and metrisability verification suites for the anharmonic oscillator family")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Drift suites for the first integrals along integrated trajectories
    VerifyIntegrals(VerifyArgs),
    /// Tabulate the explicit geodesic curves x(y) as CSV
    Geodesics(GeoArgs),
    /// Classify a cubic oscillator from an expression file, optionally
    /// reconstructing its metric
    Classify(ClassifyArgs),
    /// Point-equivalence suites for the damped families
    Lienard(LienardArgs),
}

fn parse_pair(s: &str) -> Result<Vec<f64>, String> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == 2 => Ok(v),
        _ => Err(format!("expected `a,b`, got `{s}`")),
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Oscillator exponent (n = -1 routes to the logarithmic suite)
    #[arg(long, allow_hyphen_values = true)]
    n: f64,
    /// Oscillator coefficient
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    /// Initial condition `y,y_x`; repeatable. Seeded-random ICs when absent
    #[arg(long = "ic", value_parser = parse_pair)]
    ics: Vec<Vec<f64>>,
    /// Integration span in x
    #[arg(long, default_value_t = 5.0)]
    span: f64,
    /// RNG seed for random initial conditions
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random ICs when none are given
    #[arg(long, default_value_t = 5)]
    random_ics: usize,
    /// Also run the lifted geodesic-flow suite (L, H, T, R)
    #[arg(long)]
    with_geodesic: bool,
    /// Metric parameter C1 for the geodesic suite
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    c1: f64,
    /// Metric parameter C2 for the geodesic suite
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c2: f64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeoArgs {
    #[arg(long, allow_hyphen_values = true)]
    n: f64,
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    /// Value of the autonomous integral (C3 = 0 dispatches to the
    /// degenerate curves, which need delta < 0)
    #[arg(long, allow_hyphen_values = true)]
    c3: f64,
    /// Integration constant of the non-autonomous integral
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c4: f64,
    /// Offset of the degenerate curves (used when C3 = 0)
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c5: f64,
    #[arg(long)]
    y_min: f64,
    #[arg(long)]
    y_max: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Write the CSV table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a gnuplot script plotting the CSV
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Expression file: `k = ...`, `h = ...`, `f = ...`, `g = ...`,
    /// `interval = a, b` (variable `y`)
    #[arg(long)]
    file: PathBuf,
    /// Number of Chebyshev sample points on the interval
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Solve the psi-system and report the reconstructed metric
    #[arg(long)]
    reconstruct: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LienardArgs {
    /// One of: duffing, case2, case3, dvdp, duffing-shift
    #[arg(long)]
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Case-I generator M(w) in the expression grammar (family `case1`)
    #[arg(long)]
    m_expr: Option<String>,
    /// Case-I constant C1 (family `case1`)
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<f64>,
    /// Initial condition `w,w_xi`
    #[arg(long, value_parser = parse_pair)]
    ic: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5.0)]
    span: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::VerifyIntegrals(a) => cmd_verify_integrals(VerifyParams {
            n: a.n,
            delta: a.delta,
            ics: a.ics.iter().map(|v| [v[0], v[1]]).collect(),
            span: a.span,
            seed: a.seed,
            random_ics: a.random_ics,
            with_geodesic: a.with_geodesic,
            c1: a.c1,
            c2: a.c2,
            out: a.out,
        }),
        Cmd::Geodesics(a) => cmd_geodesics(GeodesicsParams {
            n: a.n,
            delta: a.delta,
            c3: a.c3,
            c4: a.c4,
            c5: a.c5,
            y_min: a.y_min,
            y_max: a.y_max,
            samples: a.samples,
            out: a.out,
            plot: a.plot,
        }),
        Cmd::Classify(a) => cmd_classify(ClassifyParams {
            file: a.file,
            samples: a.samples,
            reconstruct: a.reconstruct,
            out: a.out,
        }),
        Cmd::Lienard(a) => cmd_lienard(LienardParams {
            family: a.family,
            n: a.n,
            alpha: a.alpha,
            delta: a.delta,
            m: a.m,
            mu: a.mu,
            m_expr: a.m_expr,
            c1: a.c1,
            ic: a.ic.map(|v| [v[0], v[1]]),
            span: a.span,
            out: a.out,
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CmdError::Usage(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
