//! One line per acceptance criterion; exits non-zero if any fails.
//! Set `TWISTKIT_FULL_SCAN=1` to scan all D < 97353 in criterion 2.

use std::process::ExitCode;

use twistkit_cli::verify::{run_all, VerifyOptions};

fn main() -> ExitCode {
    let jobs = std::env::var("TWISTKIT_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&j: &usize| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let full_scan = std::env::var("TWISTKIT_FULL_SCAN").is_ok_and(|v| v == "1");
    println!("acceptance suite ({jobs} workers)");
    let outcomes = run_all(&VerifyOptions { jobs, full_scan });
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
