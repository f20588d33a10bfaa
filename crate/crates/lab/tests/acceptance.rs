//! The full acceptance suite, one line per criterion. Runs without the
//! libtest harness so the table is printed even when everything passes.

use std::time::Instant;

use doiflow_lab::verify::{criteria, run_criterion, Status};

fn main() {
    let seed = std::env::var("DOIFLOW_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut failed = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        let r = run_criterion(&c, seed);
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        };
        println!(
            "[{status}] {:>2} {:<34} measured {:.3e}  tolerance {:.3e}  ({:.1} s)",
            r.criterion_id,
            r.name,
            r.measured,
            r.tolerance,
            start.elapsed().as_secs_f64()
        );
        for k in &r.checks {
            println!("         {} {}: {:.3e} <= {:.3e}", if k.passed { "ok  " } else { "FAIL" }, k.name, k.measured, k.tolerance);
        }
        if let Some(e) = &r.error {
            println!("         error [{}]: {}", e.code, e.message);
        }
        if r.status == Status::Fail {
            failed.push(r.criterion_id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria().len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
