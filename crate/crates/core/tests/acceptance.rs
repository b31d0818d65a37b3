//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::process::ExitCode;

use skewrg::suite::{run_check, Context, BUDGETS};

fn main() -> ExitCode {
    let ctx = Context::new();
    let mut failed = Vec::new();
    for id in 1..=BUDGETS.len() as u8 {
        let c = run_check(id, &ctx);
        println!("{c}");
        if !c.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", BUDGETS.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
