//! Acceptance criteria: one PASS/FAIL line per criterion.

use deligne::suite::Suite;
use std::process::ExitCode;

fn main() -> ExitCode {
    let verbose = std::env::args().any(|a| a == "--verbose");
    let suite = match Suite::builtin(1) {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut all = true;
    for c in suite.run_all() {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {} ({:.1} s, {} checks)", c.id, c.title, c.seconds, c.reports.len());
        for r in &c.reports {
            if verbose || !r.pass {
                let mark = if r.pass { "ok  " } else { "FAIL" };
                println!("    {mark} {} residual {:.3e} tol {:.1e} {}", r.name, r.residual, r.tol, r.detail);
            }
        }
        all &= c.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
