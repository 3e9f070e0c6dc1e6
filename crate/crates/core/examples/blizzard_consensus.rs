//! Runs the Blizzard experiment at a reduced size and prints its checks.

use snowsim::experiments::{default_config, run_experiment};

fn main() -> snowsim::Result<()> {
    let mut cfg = default_config("blizzard")?;
    cfg.set("seeds", "10")?;
    cfg.set("n", "512")?;
    let r = run_experiment("blizzard", &cfg)?;
    for row in r.rows_for("median_finish_round") {
        println!(
            "beta={:<3} adversary={:<18} median finish round {}",
            row.param("beta").unwrap_or("?"),
            row.param("adversary").unwrap_or("?"),
            row.value
        );
    }
    for c in &r.checks {
        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    Ok(())
}
