//! Paired per-round progress of Snowball and Slush from matched states.

use snowsim::experiments::{default_config, run_experiment};

fn main() -> snowsim::Result<()> {
    let mut cfg = default_config("snowball-vs-slush")?;
    cfg.set("seeds", "50")?;
    cfg.set("p0", "0.6")?;
    let r = run_experiment("snowball-vs-slush", &cfg)?;
    for row in r.rows_for("mean_paired_difference") {
        println!(
            "round {:<2} snowball - slush = {:+8.3} (se {:.3})",
            row.param("round").unwrap_or("?"),
            row.value,
            row.dispersion.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
