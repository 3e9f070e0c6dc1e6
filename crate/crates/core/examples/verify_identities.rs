//! Runs the identity checks on the progress function and prints a table.

use snowsim::analytic::{verify_derivative_bound, verify_identities};

fn main() -> snowsim::Result<()> {
    let mut reports = verify_identities(20, 0.001, 1e-12)?;
    reports.push(verify_derivative_bound(10, 0.001, 1e-6, 1e-6)?);
    for r in &reports {
        println!(
            "{:<18} k {:>2}..{:<2} max violation {:>10.3e}  {}",
            r.name,
            r.k_range.0,
            r.k_range.1,
            r.max_violation,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
