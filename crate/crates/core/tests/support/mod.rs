//! Reference implementations used as oracles by the integration tests.
//! They share no code with the library.

#![allow(dead_code)]

/// `C(k, l)` by the multiplicative formula in floating point.
pub fn choose(k: u32, l: u32) -> f64 {
    let l = l.min(k - l);
    (0..l).fold(1.0, |acc, i| acc * f64::from(k - i) / f64::from(i + 1))
}

pub fn binom_pmf(k: u32, l: u32, p: f64) -> f64 {
    choose(k, l) * p.powi(l as i32) * (1.0 - p).powi((k - l) as i32)
}

/// Expected one-round change of the one-share, from first principles: a
/// zero-holder (probability `1 - p`) switches on at least `alpha` one-replies,
/// a one-holder (probability `p`) on at least `alpha` zero-replies.
pub fn delta_oracle(k: u32, alpha: u32, p: f64) -> f64 {
    let up: f64 = (alpha..=k).map(|l| binom_pmf(k, l, p)).sum();
    let down: f64 = (alpha..=k).map(|l| binom_pmf(k, l, 1.0 - p)).sum();
    (1.0 - p) * up - p * down
}

/// Binary Median rule: the median of the own opinion and two samples.
pub fn median_rule(own: bool, a: bool, b: bool) -> bool {
    (u8::from(own) + u8::from(a) + u8::from(b)) >= 2
}

/// 2-Choices: adopt the samples' value when they agree.
pub fn two_choices_rule(own: bool, a: bool, b: bool) -> bool {
    if a == b {
        a
    } else {
        own
    }
}

/// 3-Majority: adopt the majority of three samples.
pub fn three_majority_rule(a: bool, b: bool, c: bool) -> bool {
    (u8::from(a) + u8::from(b) + u8::from(c)) >= 2
}

/// Kolmogorov-Smirnov distance between an empirical sample of counts and
/// `Bin(k, p)`.
pub fn ks_binomial(counts: &[u32], k: u32, p: f64) -> f64 {
    let mut hist = vec![0usize; k as usize + 1];
    for &c in counts {
        hist[c as usize] += 1;
    }
    let n = counts.len() as f64;
    let (mut emp, mut cdf, mut worst) = (0.0, 0.0, 0.0f64);
    for l in 0..=k {
        emp += hist[l as usize] as f64 / n;
        cdf += binom_pmf(k, l, p);
        worst = worst.max((emp - cdf).abs());
    }
    worst
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}
