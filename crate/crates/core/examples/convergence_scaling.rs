//! Median Slush rounds to stable consensus as `n` grows, written as CSV.

use snowsim::experiments::{default_config, run_experiment};

fn main() -> snowsim::Result<()> {
    let mut cfg = default_config("convergence-scaling")?;
    cfg.set("seeds", "20")?;
    cfg.set("ns", "256,1024,4096")?;
    cfg.set("sweep_ks", "3,10,30")?;
    cfg.set("sweep_n", "1024")?;
    let r = run_experiment("convergence-scaling", &cfg)?;
    r.write_csv(&mut std::io::stdout().lock())
}
