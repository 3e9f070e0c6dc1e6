//! Closed-form expected one-round progress of Slush and grid checks of its
//! structural properties.
//!
//! For sample size `k`, majority threshold `alpha` and a share `p` of parties
//! holding opinion one, the expected relative progress is
//!
//! ```text
//! delta(p) = sum_{l=alpha}^{k} C(k,l) [ p^l (1-p)^(k-l+1) - (1-p)^l p^(k-l+1) ]
//! ```
//!
//! All sums are evaluated directly in double precision with compensated
//! summation. `k` is capped at [`MAX_SAMPLE_SIZE`].

use crate::error::{domain, Result};

/// Largest sample size accepted by the closed-form routines.
pub const MAX_SAMPLE_SIZE: u32 = 64;

/// Default tolerance for identity checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Default p-grid step for identity checks.
pub const DEFAULT_P_STEP: f64 = 0.001;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Exact binomial coefficient `C(k, l)`, rounded once to `f64`.
pub fn binomial(k: u32, l: u32) -> f64 {
    if l > k {
        return 0.0;
    }
    let l = l.min(k - l);
    let mut c: u128 = 1;
    for i in 0..l {
        // exact: c * (k - i) is divisible by i + 1
        c = c * u128::from(k - i) / u128::from(i + 1);
    }
    c as f64
}

/// Smallest legal majority threshold for sample size `k`, i.e. `ceil((k+1)/2)`.
pub fn min_alpha(k: u32) -> u32 {
    k / 2 + 1
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 || k > MAX_SAMPLE_SIZE {
        return Err(domain(format!(
            "k must lie in [1, {MAX_SAMPLE_SIZE}], got {k}"
        )));
    }
    Ok(())
}

/// `P(Bin(k, p) >= alpha)`.
pub fn binom_tail(k: u32, alpha: u32, p: f64) -> Result<f64> {
    check_k(k)?;
    check_p(p)?;
    if alpha > k {
        return Err(domain(format!("alpha must not exceed k ({alpha} > {k})")));
    }
    let q = 1.0 - p;
    let mut acc = CompensatedSum::default();
    for l in alpha..=k {
        acc.add(binomial(k, l) * p.powi(l as i32) * q.powi((k - l) as i32));
    }
    Ok(acc.value())
}

/// A validated `(k, alpha, p)` point for the progress function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressQuery {
    k: u32,
    alpha: u32,
    p: f64,
}

impl ProgressQuery {
    pub fn new(k: u32, alpha: u32, p: f64) -> Result<Self> {
        check_k(k)?;
        check_p(p)?;
        if 2 * alpha <= k || alpha > k {
            return Err(domain(format!(
                "alpha must satisfy k/2 < alpha <= k (k={k}, alpha={alpha})"
            )));
        }
        Ok(Self { k, alpha, p })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Same `(k, alpha)` at a different share.
    pub fn at(&self, p: f64) -> Result<Self> {
        Self::new(self.k, self.alpha, p)
    }
}

/// Expected relative progress towards opinion one in a single round.
pub fn delta(q: &ProgressQuery) -> f64 {
    let (k, p) = (q.k, q.p);
    let r = 1.0 - p;
    let mut acc = CompensatedSum::default();
    for l in q.alpha..=k {
        let c = binomial(k, l);
        let up = p.powi(l as i32) * r.powi((k - l + 1) as i32);
        let down = r.powi(l as i32) * p.powi((k - l + 1) as i32);
        acc.add(c * up);
        acc.add(-(c * down));
    }
    acc.value()
}

/// Convenience wrapper validating its arguments.
pub fn delta_at(k: u32, alpha: u32, p: f64) -> Result<f64> {
    Ok(delta(&ProgressQuery::new(k, alpha, p)?))
}

/// Alternative closed form valid only for `alpha = ceil((k+1)/2)`.
pub fn delta_short_form(q: &ProgressQuery) -> Result<f64> {
    let (k, alpha, p) = (q.k, q.alpha, q.p);
    if alpha != min_alpha(k) {
        return Err(crate::Error::Precondition(format!(
            "short form requires alpha = ceil((k+1)/2) = {}, got {alpha}",
            min_alpha(k)
        )));
    }
    let mut acc = CompensatedSum::default();
    acc.add(binom_tail(k, alpha, p)?);
    acc.add(-p);
    if k % 2 == 0 {
        acc.add(
            binomial(k, alpha - 1) * p.powi(alpha as i32) * (1.0 - p).powi((alpha - 1) as i32),
        );
    }
    Ok(acc.value())
}

/// Central finite difference of [`delta`] with step `h`.
pub fn delta_derivative(q: &ProgressQuery, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(domain(format!("step h must be positive, got {h}")));
    }
    let (lo, hi) = (q.p - h, q.p + h);
    if lo < 0.0 || hi > 1.0 {
        return Err(domain(format!(
            "p +/- h must stay inside [0, 1] (p={}, h={h})",
            q.p
        )));
    }
    Ok((delta(&q.at(hi)?) - delta(&q.at(lo)?)) / (2.0 * h))
}

/// Points `0, step, 2*step, ...` up to and including 1.
pub fn p_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(domain(format!("p step must lie in (0, 1], got {step}")));
    }
    let last = (1.0 / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=last).map(|i| (i as f64 * step).min(1.0)).collect();
    if *grid.last().unwrap() < 1.0 - 1e-12 {
        grid.push(1.0);
    } else {
        *grid.last_mut().unwrap() = 1.0;
    }
    Ok(grid)
}

/// `(p, delta(p))` pairs over [`p_grid`].
pub fn curve(k: u32, alpha: u32, step: f64) -> Result<Vec<(f64, f64)>> {
    let base = ProgressQuery::new(k, alpha, 0.0)?;
    p_grid(step)?
        .into_iter()
        .map(|p| Ok((p, delta(&base.at(p)?))))
        .collect()
}

/// Outcome of one grid check.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: &'static str,
    pub max_violation: f64,
    pub k_range: (u32, u32),
    pub alpha_rule: &'static str,
    pub p_step: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityReport {
    fn new(
        name: &'static str,
        max_violation: f64,
        k_range: (u32, u32),
        alpha_rule: &'static str,
        p_step: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name,
            max_violation,
            k_range,
            alpha_rule,
            p_step,
            tolerance,
            pass: max_violation <= tolerance,
        }
    }
}

/// Signature of a progress function under test: `(k, alpha, p) -> delta`.
pub type DeltaFn<'a> = &'a dyn Fn(u32, u32, f64) -> f64;

fn exact_delta(k: u32, alpha: u32, p: f64) -> f64 {
    delta(&ProgressQuery { k, alpha, p })
}

/// Checks the structural identities of the progress function on the grid
/// `k in [2, k_max]`, every legal `alpha`, `p in {0, p_step, ..., 1}`.
///
/// Violations are reported, never raised.
pub fn verify_identities(k_max: u32, p_step: f64, tol: f64) -> Result<Vec<IdentityReport>> {
    verify_identities_with(&exact_delta, k_max, p_step, tol)
}

/// [`verify_identities`] against an arbitrary progress function. The
/// short-form comparison always uses the independent short-form evaluation.
pub fn verify_identities_with(
    f: DeltaFn<'_>,
    k_max: u32,
    p_step: f64,
    tol: f64,
) -> Result<Vec<IdentityReport>> {
    if k_max < 3 || k_max > MAX_SAMPLE_SIZE {
        return Err(domain(format!(
            "k_max must lie in [3, {MAX_SAMPLE_SIZE}], got {k_max}"
        )));
    }
    if !(p_step > 0.0 && p_step <= 0.01) {
        return Err(domain(format!("p_step must lie in (0, 0.01], got {p_step}")));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let grid = p_grid(p_step)?;
    let range = (2, k_max);

    // symmetry about (1/2, 0)
    let mut sym = 0.0f64;
    for k in 2..=k_max {
        for alpha in min_alpha(k)..=k {
            sym = sym.max(f(k, alpha, 0.5).abs());
            for &p in &grid {
                sym = sym.max((f(k, alpha, p) + f(k, alpha, 1.0 - p)).abs());
            }
        }
    }

    // even/odd: delta^{2a-1,a} == delta^{2a-2,a}
    let mut even_odd = 0.0f64;
    for alpha in 2..=(k_max + 1) / 2 {
        let odd = 2 * alpha - 1;
        for &p in &grid {
            even_odd = even_odd.max((f(odd, alpha, p) - f(odd - 1, alpha, p)).abs());
        }
    }

    // alpha-domination: |delta^{k,a}| >= |delta^{k,a'}| for a' > a
    let mut dom = 0.0f64;
    for k in 2..=k_max {
        let table: Vec<Vec<f64>> = (min_alpha(k)..=k)
            .map(|alpha| grid.iter().map(|&p| f(k, alpha, p).abs()).collect())
            .collect();
        for (i, lower) in table.iter().enumerate() {
            for higher in &table[i + 1..] {
                for (a, b) in lower.iter().zip(higher) {
                    dom = dom.max(b - a);
                }
            }
        }
    }

    // chain domination along k = 2a-1 and k = 2a-2
    let mut chain = 0.0f64;
    let chain_tops: Vec<(u32, u32)> = (2..=(k_max + 1) / 2).map(|a| (2 * a - 1, a)).collect();
    let even_tops: Vec<(u32, u32)> = (2..=k_max / 2 + 1).map(|a| (2 * a - 2, a)).collect();
    for family in [&chain_tops, &even_tops] {
        for (i, &(k_small, a_small)) in family.iter().enumerate() {
            for &(k_big, a_big) in &family[i + 1..] {
                for &p in &grid {
                    let excess = f(k_small, a_small, p).abs() - f(k_big, a_big, p).abs();
                    chain = chain.max(excess);
                }
            }
        }
    }

    // short form agrees with the raw sum at alpha = ceil((k+1)/2)
    let mut short = 0.0f64;
    for k in 2..=k_max {
        let alpha = min_alpha(k);
        for &p in &grid {
            let s = delta_short_form(&ProgressQuery::new(k, alpha, p)?)?;
            short = short.max((s - f(k, alpha, p)).abs());
        }
    }

    Ok(vec![
        IdentityReport::new("symmetry", sym, range, "all legal", p_step, tol),
        IdentityReport::new("even-odd", even_odd, range, "k in {2a-1, 2a-2}", p_step, tol),
        IdentityReport::new("alpha-domination", dom, range, "all legal pairs", p_step, tol),
        IdentityReport::new("chain-domination", chain, range, "k = 2a-1 and k = 2a-2", p_step, tol),
        IdentityReport::new("short-form", short, range, "a = ceil((k+1)/2)", p_step, tol),
    ])
}

/// Checks `d delta / dp <= k - 1` for `k = 2a - 1`, `a in 2..=alpha_max`,
/// over `p in [1/2, 1]`. Grid points closer than `h` to 1 are pulled inside.
pub fn verify_derivative_bound(
    alpha_max: u32,
    p_step: f64,
    h: f64,
    tol: f64,
) -> Result<IdentityReport> {
    verify_derivative_bound_with(&exact_delta, alpha_max, p_step, h, tol)
}

pub fn verify_derivative_bound_with(
    f: DeltaFn<'_>,
    alpha_max: u32,
    p_step: f64,
    h: f64,
    tol: f64,
) -> Result<IdentityReport> {
    if alpha_max < 2 || 2 * alpha_max - 1 > MAX_SAMPLE_SIZE {
        return Err(domain(format!("alpha_max out of range: {alpha_max}")));
    }
    if !(h > 0.0 && h < 0.5) {
        return Err(domain(format!("step h out of range: {h}")));
    }
    let grid = p_grid(p_step)?;
    let mut worst = 0.0f64;
    for alpha in 2..=alpha_max {
        let k = 2 * alpha - 1;
        for &p in grid.iter().filter(|&&p| p >= 0.5) {
            let p = p.min(1.0 - h);
            let d = (f(k, alpha, p + h) - f(k, alpha, p - h)) / (2.0 * h);
            worst = worst.max(d - f64::from(k - 1));
        }
    }
    Ok(IdentityReport::new(
        "derivative-bound",
        worst.max(0.0),
        (3, 2 * alpha_max - 1),
        "k = 2a-1",
        p_step,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(k: u32, alpha: u32, p: f64) -> ProgressQuery {
        ProgressQuery::new(k, alpha, p).unwrap()
    }

    /// Brute force over all 2^k outcome vectors.
    fn tail_by_enumeration(k: u32, alpha: u32, p: f64) -> f64 {
        (0u64..1 << k)
            .filter(|m| m.count_ones() >= alpha)
            .map(|m| {
                let ones = m.count_ones() as i32;
                p.powi(ones) * (1.0 - p).powi(k as i32 - ones)
            })
            .sum()
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(20, 10), 184_756.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(64, 0), 1.0);
    }

    #[test]
    fn tail_examples() {
        assert!((binom_tail(2, 2, 0.1).unwrap() - 0.01).abs() < 1e-15);
        assert!((binom_tail(5, 0, 0.37).unwrap() - 1.0).abs() < 1e-15);
        assert!((binom_tail(3, 2, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tail_matches_enumeration() {
        for k in 1..=12 {
            for alpha in 0..=k {
                for &p in &[0.0, 0.13, 0.5, 0.77, 1.0] {
                    let a = binom_tail(k, alpha, p).unwrap();
                    let b = tail_by_enumeration(k, alpha, p);
                    assert!((a - b).abs() < 1e-13, "k={k} alpha={alpha} p={p}");
                }
            }
        }
    }

    #[test]
    fn tail_rejects_bad_args() {
        assert!(binom_tail(3, 4, 0.5).is_err());
        assert!(binom_tail(3, 2, 1.5).is_err());
        assert!(binom_tail(0, 0, 0.5).is_err());
        assert!(binom_tail(65, 1, 0.5).is_err());
    }

    #[test]
    fn tail_monotone_in_alpha() {
        for k in [1, 4, 9, 20, 64] {
            let mut prev = 1.0 + 1e-14;
            for alpha in 0..=k {
                let t = binom_tail(k, alpha, 0.42).unwrap();
                assert!(t <= prev + 1e-14);
                prev = t;
            }
        }
    }

    #[test]
    fn query_validation() {
        assert!(ProgressQuery::new(10, 5, 0.5).is_err());
        assert!(ProgressQuery::new(10, 11, 0.5).is_err());
        assert!(ProgressQuery::new(3, 2, -0.1).is_err());
        assert!(ProgressQuery::new(3, 2, f64::NAN).is_err());
        assert!(ProgressQuery::new(10, 6, 1.0).is_ok());
    }

    #[test]
    fn delta_examples() {
        for p in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert_eq!(delta(&q(1, 1, p)), 0.0);
        }
        assert!(delta(&q(20, 15, 0.5)).abs() < 1e-15);
        // collapses to p(1-p)(2p-1) for k=3, alpha=2
        assert!((delta(&q(3, 2, 0.75)) - 0.09375).abs() < 1e-15);
        for (k, alpha) in [(3, 2), (10, 6), (20, 15), (64, 40)] {
            assert_eq!(delta(&q(k, alpha, 1.0)), 0.0);
            assert_eq!(delta(&q(k, alpha, 0.0)), 0.0);
        }
    }

    #[test]
    fn delta_matches_cubic_for_three_two() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let cubic = p * (1.0 - p) * (2.0 * p - 1.0);
            assert!((delta(&q(3, 2, p)) - cubic).abs() < 1e-15);
        }
    }

    #[test]
    fn short_form_examples() {
        let v = delta_short_form(&q(5, 3, 0.75)).unwrap();
        assert!((v - 0.146484375).abs() < 1e-15);
        assert!((v - delta(&q(5, 3, 0.75))).abs() < 1e-15);
        assert!(delta_short_form(&q(4, 3, 0.5)).unwrap().abs() < 1e-15);
        assert!((delta_short_form(&q(3, 2, 0.75)).unwrap() - 0.09375).abs() < 1e-15);
        assert!(delta_short_form(&q(5, 4, 0.75)).is_err());
    }

    #[test]
    fn derivative_examples() {
        let d = delta_derivative(&q(3, 2, 0.5), 1e-6).unwrap();
        assert!((d - 0.5).abs() < 1e-8);
        assert_eq!(delta_derivative(&q(1, 1, 0.3), 1e-6).unwrap(), 0.0);
        assert!(delta_derivative(&q(3, 2, 1.0), 1e-6).is_err());
        assert!(delta_derivative(&q(3, 2, 0.5), 0.0).is_err());
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(p_grid(0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(p_grid(0.001).unwrap().len(), 1001);
        assert_eq!(*p_grid(0.3).unwrap().last().unwrap(), 1.0);
    }

    #[test]
    fn identities_hold_on_small_grid() {
        let reports = verify_identities(12, 0.01, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(reports.len(), 5);
        for r in &reports {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn even_odd_minimal_instance() {
        let reports = verify_identities(3, 0.01, DEFAULT_TOLERANCE).unwrap();
        let eo = reports.iter().find(|r| r.name == "even-odd").unwrap();
        assert!(eo.pass);
        for p in p_grid(0.01).unwrap() {
            assert!((delta(&q(3, 2, p)) - delta(&q(2, 2, p))).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_delta_is_detected() {
        let bad = |k, a, p| exact_delta(k, a, p) + 1e-6;
        let reports = verify_identities_with(&bad, 6, 0.01, DEFAULT_TOLERANCE).unwrap();
        assert!(reports.iter().any(|r| !r.pass));
    }

    #[test]
    fn identity_preconditions() {
        assert!(verify_identities(2, 0.01, 1e-12).is_err());
        assert!(verify_identities(10, 0.05, 1e-12).is_err());
        assert!(verify_identities(10, 0.01, 0.0).is_err());
    }

    #[test]
    fn derivative_bound_small() {
        let r = verify_derivative_bound(10, 0.01, DEFAULT_FD_STEP, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
