//! Command-line front end for `twistkit`: argument model, record output and
//! the acceptance criteria behind `verify-paper`.

pub mod args;
pub mod output;
pub mod verify;

use std::io::{self, Write};

use num_bigint::BigInt;
use serde::Serialize;
use twistkit::constants_audit::default_audit;
use twistkit::heights::{height_gap_report_with_tol, HeightReport};
use twistkit::pell::{
    pell_fundamental, ptors_extra, solve_double_pell, torsion_coset_audit, DoublePellSolution, TorsionAuditReport,
};
use twistkit::point_search::{
    classify_cosets, enumerate_default, enumerate_integral_points, scan_family, CosetReport, IntegralPointRecord,
};
use twistkit::simpell::{brute_count, curve_lift, quartic_reduce, SimPellInstance, SimPellSolution};
use twistkit::sphere_bounds::small_point_count_bound;
use twistkit::{Curve, CurvePoint, Error};

use crate::args::{Cli, Command, PointsArgs};
use crate::output::RecordWriter;
use crate::verify::{run_all, VerifyOptions, C8_LOG_SLACK};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Io(io::Error),
    Library(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Library(Error::Domain(_)) => EXIT_USAGE,
            CliError::Library(_) => EXIT_VERIFICATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "I/O error: {e}"),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

/// Runs one subcommand, writing records to `out`. `Ok(false)` means a checked
/// invariant failed.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    let mut w = RecordWriter::new(cli.global.format, out);
    let jobs = cli.global.jobs();
    let ok = match &cli.command {
        Command::Points(a) => {
            for r in &point_records(a)? {
                w.write(r)?;
            }
            true
        }
        Command::Cosets(a) => {
            for c in classify_cosets(&point_records(a)?)? {
                w.write(&c)?;
            }
            true
        }
        Command::Scan(a) => {
            let report = scan_family(a.from, a.to, &a.policy, jobs)?;
            let ok = report.torsion_violations() == 0;
            if a.per_d {
                for s in &report.per_d {
                    w.write(s)?;
                }
            } else {
                w.write(&ScanSummary {
                    d_from: a.from,
                    d_to: a.to,
                    policy: report.policy.clone(),
                    squarefree_count: report.per_d.len(),
                    exceptional_ds: report.exceptional_ds(),
                    exceptional_cosets: report.per_d.iter().flat_map(|s| s.exceptional_cosets.clone()).collect(),
                    torsion_violations: report.torsion_violations(),
                })?;
            }
            ok
        }
        Command::Heights(a) => {
            let curve = Curve::new(a.d.clone())?;
            let points: Vec<CurvePoint> = match (&a.x, &a.y) {
                (Some(x), Some(y)) => vec![curve.point_int(x.clone(), y.clone())?],
                _ => enumerate_default(&a.d)?
                    .records
                    .into_iter()
                    .filter(|r| r.y != BigInt::from(0))
                    .map(|r| curve.point_int(r.x, r.y))
                    .collect::<Result<_, _>>()?,
            };
            let mut ok = true;
            for p in &points {
                let report = height_gap_report_with_tol(p, a.tol)?;
                ok &= report.all_pass();
                w.write(&HeightLine::new(&a.d, p, report))?;
            }
            ok
        }
        Command::Pell(a) => {
            let fundamental = pell_fundamental(&a.d)?;
            let extra = ptors_extra(&a.d)?;
            let audit = a.audit_xmax.as_ref().map(|x| torsion_coset_audit(&a.d, x)).transpose()?;
            let ok = audit.as_ref().map(|r| r.passes).unwrap_or(true);
            w.write(&PellLine {
                d: a.d.to_string(),
                v: fundamental.v.to_string(),
                u: fundamental.u.to_string(),
                double_pell: solve_double_pell(&a.d)?,
                ptors_x: extra.as_ref().and_then(|p| p.x()).map(|x| x.to_string()),
                ptors_y: extra.as_ref().and_then(|p| p.y()).map(|y| y.to_string()),
                audit,
            })?;
            ok
        }
        Command::Simpell(a) => {
            let inst = SimPellInstance::new(a.a.clone(), a.b.clone(), a.c.clone(), a.d.clone())?;
            let mut keys = std::collections::BTreeSet::new();
            for sol in brute_count(&inst, &a.limit) {
                let p = curve_lift(&inst, &sol)?;
                let key = p.theta()?.to_string();
                keys.insert(key.clone());
                w.write(&SimpellLine {
                    instance: inst.clone(),
                    solution: sol,
                    lift_x: p.x().map(|x| x.to_string()).unwrap_or_default(),
                    lift_y: p.y().map(|y| y.to_string()).unwrap_or_default(),
                    coset_key: key,
                })?;
            }
            keys.len() <= 1
        }
        Command::Quartic(a) => {
            w.write(&quartic_reduce(&a.a, &a.b, &a.c, &a.x, &a.y)?)?;
            true
        }
        Command::Bounds(a) => {
            let mut ok = true;
            for &r in &a.r {
                let b = small_point_count_bound(r, a.eps)?;
                ok &= b.below_target(C8_LOG_SLACK);
                w.write(&b)?;
            }
            ok
        }
        Command::Audit => {
            let items = default_audit()?;
            for i in &items {
                w.write(i)?;
            }
            items.iter().all(|i| i.passes())
        }
        Command::VerifyPaper(a) => {
            let outcomes = run_all(&VerifyOptions { jobs, full_scan: a.full });
            for o in &outcomes {
                w.write(o)?;
            }
            outcomes.iter().all(|o| o.passed)
        }
    };
    w.flush()?;
    Ok(ok)
}

fn point_records(a: &PointsArgs) -> Result<Vec<IntegralPointRecord>, CliError> {
    Ok(match &a.xmax {
        Some(x) => enumerate_integral_points(&a.d, x)?,
        None => enumerate_default(&a.d)?.records,
    })
}

#[derive(Serialize)]
struct ScanSummary {
    d_from: u64,
    d_to: u64,
    policy: String,
    squarefree_count: usize,
    exceptional_ds: Vec<u64>,
    exceptional_cosets: Vec<CosetReport>,
    torsion_violations: usize,
}

#[derive(Serialize)]
struct HeightLine {
    #[serde(rename = "D")]
    d: String,
    x: String,
    y: String,
    #[serde(flatten)]
    report: HeightReport,
    all_pass: bool,
}

impl HeightLine {
    fn new(d: &BigInt, p: &CurvePoint, report: HeightReport) -> Self {
        HeightLine {
            d: d.to_string(),
            x: p.x().map(|x| x.to_string()).unwrap_or_default(),
            y: p.y().map(|y| y.to_string()).unwrap_or_default(),
            all_pass: report.all_pass(),
            report,
        }
    }
}

#[derive(Serialize)]
struct PellLine {
    #[serde(rename = "D")]
    d: String,
    v: String,
    u: String,
    double_pell: Option<DoublePellSolution>,
    ptors_x: Option<String>,
    ptors_y: Option<String>,
    audit: Option<TorsionAuditReport>,
}

#[derive(Serialize)]
struct SimpellLine {
    #[serde(flatten)]
    instance: SimPellInstance,
    #[serde(flatten)]
    solution: SimPellSolution,
    lift_x: String,
    lift_y: String,
    coset_key: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn run_args(args: &[&str]) -> (Result<bool, CliError>, String) {
        let cli = Cli::try_parse_from(std::iter::once("twistkit").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = run(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn points_d6() {
        let (r, out) = run_args(&["points", "--d", "6", "--xmax", "1000000"]);
        assert!(r.unwrap());
        let xs: Vec<String> = out
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["x"].as_str().unwrap().to_string())
            .collect();
        assert_eq!(xs, ["-6", "-3", "-2", "0", "6", "12", "18", "294"]);
    }

    #[test]
    fn cosets_csv_has_header_and_seven_rows() {
        let (r, out) = run_args(&["cosets", "--d", "6", "--format", "csv"]);
        assert!(r.unwrap());
        assert_eq!(out.lines().count(), 8);
        assert!(out.starts_with("exceeds_theorem_bound,exceptional,key,kind,members,pair_count,representative\n"));
    }

    #[test]
    fn domain_errors_are_usage_errors() {
        let (r, _) = run_args(&["points", "--d", "12"]);
        assert_eq!(r.unwrap_err().exit_code(), EXIT_USAGE);
        let (r, _) = run_args(&["pell", "--d", "9"]);
        assert_eq!(r.unwrap_err().exit_code(), EXIT_USAGE);
    }

    #[test]
    fn audit_and_bounds_pass() {
        let (r, out) = run_args(&["audit"]);
        assert!(r.unwrap());
        assert_eq!(out.lines().count(), 9);
        let (r, out) = run_args(&["bounds", "--r", "10", "--r", "2000"]);
        assert!(r.unwrap());
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn pell_simpell_quartic_heights() {
        let (r, out) = run_args(&["pell", "--d", "6", "--audit-xmax", "1000"]);
        assert!(r.unwrap());
        assert!(out.contains("\"ptors_x\":\"294\""));
        let (r, out) = run_args(&["simpell", "--a", "2", "--b", "1", "--c", "3", "--d", "1"]);
        assert!(r.unwrap());
        assert!(out.contains("\"lift_x\":\"294\""));
        let (r, out) = run_args(&["quartic", "--a", "1", "--b", "5", "--c", "1", "--x", "3", "--y", "4"]);
        assert!(r.unwrap());
        assert!(out.contains("\"b_ratio\":\"4\""));
        let (r, out) = run_args(&["heights", "--d", "1254", "--x", "-98", "--y", "12376"]);
        assert!(r.unwrap());
        assert!(out.contains("\"all_pass\":true"));
    }

    #[test]
    fn scan_output_is_independent_of_jobs() {
        let (r1, one) = run_args(&["scan", "--from", "1", "--to", "1300", "--jobs", "1", "--per-d"]);
        let (r4, four) = run_args(&["scan", "--from", "1", "--to", "1300", "--jobs", "4", "--per-d"]);
        assert!(r1.unwrap() && r4.unwrap());
        assert_eq!(one, four);
        let (_, summary) = run_args(&["scan", "--from", "1", "--to", "1300"]);
        assert!(summary.contains("\"exceptional_ds\":[1254]"));
    }
}
