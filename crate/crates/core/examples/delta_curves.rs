//! Prints the progress function for a few `(k, alpha)` pairs and the point
//! where each is largest.

use snowsim::analytic::{curve, delta_at};

fn main() -> snowsim::Result<()> {
    for (k, alpha) in [(1, 1), (3, 2), (5, 3), (10, 6), (20, 15)] {
        let pts = curve(k, alpha, 0.01)?;
        let (p_max, d_max) = pts
            .iter()
            .copied()
            .filter(|(p, _)| *p >= 0.5)
            .fold((0.5, 0.0), |best, pt| if pt.1 > best.1 { pt } else { best });
        println!(
            "k={k:>2} alpha={alpha:>2}  delta(0.6)={:+.5}  delta(0.75)={:+.5}  max on [1/2,1] {d_max:.5} at p={p_max:.2}",
            delta_at(k, alpha, 0.6)?,
            delta_at(k, alpha, 0.75)?,
        );
    }
    Ok(())
}
