use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use twistkit::point_search::XMaxPolicy;

#[derive(Debug, Parser)]
#[command(name = "twistkit", version, about = "Integral points and bound audits for y^2 = x^3 - D^2 x")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Output encoding.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write records here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "TWISTKIT_JOBS", global = true)]
    pub jobs: Option<usize>,
}

impl GlobalOpts {
    pub fn jobs(&self) -> usize {
        self.jobs
            .filter(|&j| j > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List integral points on E_D.
    Points(PointsArgs),
    /// Group integral points on E_D into cosets of 2E_D(Q).
    Cosets(PointsArgs),
    /// Scan a range of squarefree D for exceptional cosets.
    Scan(ScanArgs),
    /// Weil and canonical heights with envelope checks.
    Heights(HeightsArgs),
    /// Pell data and the extra point in the coset of (D, 0).
    Pell(PellArgs),
    /// Solve aX^2 - bY^2 = d, bY^2 - cZ^2 = d by search and lift to E_abcd.
    Simpell(SimpellArgs),
    /// Split a solution of A^2 X^4 - B Y^2 = C^2.
    Quartic(QuarticArgs),
    /// Spherical-code bounds on the number of small points per coset.
    Bounds(BoundsArgs),
    /// Audit the explicit constant chain.
    Audit,
    /// Run the full acceptance suite.
    VerifyPaper(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PointsArgs {
    #[arg(long = "d")]
    pub d: BigInt,
    /// Search bound for x; defaults to ceil(D^2.02) plus the Pell point.
    #[arg(long)]
    pub xmax: Option<BigInt>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub from: u64,
    #[arg(long)]
    pub to: u64,
    /// `negative`, `abc` or `fixed:N`.
    #[arg(long, default_value = "negative")]
    pub policy: XMaxPolicy,
    /// Emit one line per D instead of a single summary.
    #[arg(long)]
    pub per_d: bool,
}

#[derive(Debug, Clone, Args)]
pub struct HeightsArgs {
    #[arg(long = "d")]
    pub d: BigInt,
    /// Point to evaluate; without it every non-torsion point of the default listing is used.
    #[arg(long, requires = "y", allow_hyphen_values = true)]
    pub x: Option<BigInt>,
    #[arg(long, requires = "x", allow_hyphen_values = true)]
    pub y: Option<BigInt>,
    #[arg(long, default_value_t = twistkit::heights::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PellArgs {
    #[arg(long = "d")]
    pub d: BigInt,
    /// Also audit the torsion cosets by enumeration up to this bound.
    #[arg(long)]
    pub audit_xmax: Option<BigInt>,
}

#[derive(Debug, Clone, Args)]
pub struct SimpellArgs {
    #[arg(long)]
    pub a: BigInt,
    #[arg(long)]
    pub b: BigInt,
    #[arg(long)]
    pub c: BigInt,
    #[arg(long = "d")]
    pub d: BigInt,
    #[arg(long, default_value = "10000")]
    pub limit: BigInt,
}

#[derive(Debug, Clone, Args)]
pub struct QuarticArgs {
    #[arg(long)]
    pub a: BigInt,
    #[arg(long)]
    pub b: BigInt,
    #[arg(long)]
    pub c: BigInt,
    #[arg(long)]
    pub x: BigInt,
    #[arg(long)]
    pub y: BigInt,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// Ranks to evaluate; repeat the flag for several.
    #[arg(long = "r", required = true)]
    pub r: Vec<u32>,
    #[arg(long, default_value_t = twistkit::point_search::SIZE_EPSILON)]
    pub eps: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Scan all D < 97353 in the exceptional-coset criterion.
    #[arg(long)]
    pub full: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_negative_coordinates_and_policies() {
        let cli = Cli::try_parse_from(["twistkit", "heights", "--d", "1254", "--x", "-98", "--y", "12376"]).unwrap();
        match cli.command {
            Command::Heights(h) => assert_eq!(h.x, Some(BigInt::from(-98))),
            _ => panic!("wrong subcommand"),
        }
        let cli =
            Cli::try_parse_from(["twistkit", "scan", "--from", "1", "--to", "9", "--policy", "fixed:100"]).unwrap();
        assert!(matches!(cli.command, Command::Scan(ScanArgs { policy: XMaxPolicy::Fixed(_), .. })));
        assert!(Cli::try_parse_from(["twistkit", "scan", "--from", "1", "--to", "9", "--policy", "wide"]).is_err());
        assert!(Cli::try_parse_from(["twistkit", "heights", "--d", "6", "--x", "294"]).is_err());
    }
}
