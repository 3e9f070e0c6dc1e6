//! Adversaries that overwrite the opinions of undecided parties at the start
//! of every round.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::Serialize;

use crate::analytic::binom_tail;
use crate::error::{domain, invalid, Error, Result};
use crate::protocol::Opinion;
use crate::sampling::RngStream;
use crate::simulator::NetworkState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AdversaryStrategy {
    NoAdversary,
    /// Each round, moves up to `budget` undecided majority holders to the
    /// minority opinion.
    FlipToMinority { budget: usize },
    /// Pins `floor(budget/2)` parties to zero and `ceil(budget/2)` to one,
    /// every round.
    SplitGroups { budget: usize },
    /// Pins `budget` parties to `target`, every round.
    PinOpinion { budget: usize, target: Opinion },
}

impl AdversaryStrategy {
    pub fn budget(&self) -> usize {
        match *self {
            AdversaryStrategy::NoAdversary => 0,
            AdversaryStrategy::FlipToMinority { budget }
            | AdversaryStrategy::SplitGroups { budget }
            | AdversaryStrategy::PinOpinion { budget, .. } => budget,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            AdversaryStrategy::NoAdversary => "none",
            AdversaryStrategy::FlipToMinority { .. } => "flip-minority",
            AdversaryStrategy::SplitGroups { .. } => "split-groups",
            AdversaryStrategy::PinOpinion { .. } => "pin",
        }
    }

    /// Builds a strategy from its keyword, a budget and (for `pin`) a target.
    pub fn from_parts(keyword: &str, budget: usize, target: Option<Opinion>) -> Result<Self> {
        match keyword.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(AdversaryStrategy::NoAdversary),
            "flip-minority" => Ok(AdversaryStrategy::FlipToMinority { budget }),
            "split-groups" => Ok(AdversaryStrategy::SplitGroups { budget }),
            "pin" => {
                let target = target.unwrap_or(Opinion::Zero);
                if target == Opinion::Bot {
                    return Err(invalid("pin target must be 0 or 1"));
                }
                Ok(AdversaryStrategy::PinOpinion { budget, target })
            }
            other => Err(Error::Config(format!("unknown adversary '{other}'"))),
        }
    }
}

impl fmt::Display for AdversaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryStrategy::NoAdversary => f.write_str("none"),
            AdversaryStrategy::PinOpinion { budget, target } => {
                write!(f, "pin:{budget}:{target}")
            }
            s => write!(f, "{}:{}", s.keyword(), s.budget()),
        }
    }
}

/// `keyword[:budget[:target]]`, e.g. `none`, `flip-minority:32`, `pin:10:1`.
impl FromStr for AdversaryStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let keyword = parts.next().unwrap_or_default();
        let budget = match parts.next() {
            Some(b) => b
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad adversary budget in '{s}'")))?,
            None => 0,
        };
        let target = parts.next().map(str::parse).transpose()?;
        Self::from_parts(keyword, budget, target)
    }
}

/// A strategy together with the fixed groups it controls.
#[derive(Debug, Clone)]
pub struct Adversary {
    strategy: AdversaryStrategy,
    zero_group: Vec<usize>,
    one_group: Vec<usize>,
}

impl Adversary {
    /// Fixes the influenced groups (lowest-index undecided parties) for
    /// strategies that use them.
    pub fn new(strategy: AdversaryStrategy, network: &NetworkState) -> Result<Self> {
        let n = network.n();
        if strategy.budget() > n {
            return Err(invalid(format!(
                "adversary budget {} exceeds n={n}",
                strategy.budget()
            )));
        }
        let mut undecided = network
            .parties
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.decided)
            .map(|(i, _)| i);
        let (zero_group, one_group) = match strategy {
            AdversaryStrategy::SplitGroups { budget } => {
                let zeros: Vec<usize> = undecided.by_ref().take(budget / 2).collect();
                let ones: Vec<usize> = undecided.take(budget - budget / 2).collect();
                (zeros, ones)
            }
            AdversaryStrategy::PinOpinion { budget, target } => {
                let group: Vec<usize> = undecided.take(budget).collect();
                if target == Opinion::One {
                    (Vec::new(), group)
                } else {
                    (group, Vec::new())
                }
            }
            _ => (Vec::new(), Vec::new()),
        };
        Ok(Self {
            strategy,
            zero_group,
            one_group,
        })
    }

    pub fn strategy(&self) -> AdversaryStrategy {
        self.strategy
    }

    /// Parties currently held in a fixed group.
    pub fn influenced(&self) -> impl Iterator<Item = usize> + '_ {
        self.zero_group.iter().chain(&self.one_group).copied()
    }

    /// Applies one round of influence. Decided parties are never touched and
    /// are dropped from the fixed groups.
    pub fn apply(&mut self, network: &mut NetworkState, rng: &RngStream) {
        match self.strategy {
            AdversaryStrategy::NoAdversary => {}
            AdversaryStrategy::FlipToMinority { budget } => {
                let ones = network.ones();
                let zeros = network.zeros();
                if ones + zeros == 0 {
                    return;
                }
                // ties count as a one-majority
                let majority = if ones >= zeros {
                    Opinion::One
                } else {
                    Opinion::Zero
                };
                let candidates: Vec<usize> = network
                    .parties
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| !s.decided && s.opinion == majority)
                    .map(|(i, _)| i)
                    .collect();
                let amount = budget.min(candidates.len());
                let mut g = rng.rng();
                for pick in index::sample(&mut g, candidates.len(), amount) {
                    network.parties[candidates[pick]].opinion = majority.flipped();
                }
            }
            AdversaryStrategy::SplitGroups { .. } | AdversaryStrategy::PinOpinion { .. } => {
                let parties = &mut network.parties;
                for (group, value) in [
                    (&mut self.zero_group, Opinion::Zero),
                    (&mut self.one_group, Opinion::One),
                ] {
                    group.retain(|&i| !parties[i].decided);
                    for &i in group.iter() {
                        parties[i].opinion = value;
                    }
                }
            }
        }
    }
}

/// Probability that a k-sample contains at least `alpha` of `f` influenced
/// parties out of `n`.
pub fn influenced_majority_probability(f: usize, n: usize, k: u32, alpha: u32) -> Result<f64> {
    if n == 0 || f > n {
        return Err(domain(format!("need 0 <= F <= n, got F={f}, n={n}")));
    }
    if 2 * alpha <= k || alpha > k {
        return Err(domain(format!(
            "alpha must satisfy k/2 < alpha <= k (k={k}, alpha={alpha})"
        )));
    }
    binom_tail(k, alpha, f as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ProtocolKind;

    fn network(opinions: &[Opinion]) -> NetworkState {
        NetworkState::from_opinions(ProtocolKind::Slush, opinions.iter().copied())
    }

    #[test]
    fn parse_keywords() {
        assert_eq!("none".parse::<AdversaryStrategy>().unwrap(), AdversaryStrategy::NoAdversary);
        assert_eq!(
            "flip-minority:32".parse::<AdversaryStrategy>().unwrap(),
            AdversaryStrategy::FlipToMinority { budget: 32 }
        );
        assert_eq!(
            "pin:3:1".parse::<AdversaryStrategy>().unwrap(),
            AdversaryStrategy::PinOpinion { budget: 3, target: Opinion::One }
        );
        assert!("bogus:1".parse::<AdversaryStrategy>().is_err());
        let s = AdversaryStrategy::SplitGroups { budget: 40 };
        assert_eq!(s.to_string().parse::<AdversaryStrategy>().unwrap(), s);
    }

    #[test]
    fn none_is_identity() {
        let mut net = network(&[Opinion::One, Opinion::Zero, Opinion::One]);
        let before = net.clone();
        let mut adv = Adversary::new(AdversaryStrategy::NoAdversary, &net).unwrap();
        adv.apply(&mut net, &RngStream::new(0, 0, 1));
        assert_eq!(net, before);
    }

    #[test]
    fn flip_moves_budget_off_unanimity() {
        let mut net = network(&[Opinion::One; 10]);
        let mut adv = Adversary::new(AdversaryStrategy::FlipToMinority { budget: 3 }, &net).unwrap();
        adv.apply(&mut net, &RngStream::new(0, 0, 1));
        assert_eq!(net.ones(), 7);
    }

    #[test]
    fn flip_tie_goes_to_zero() {
        let mut net = network(&[Opinion::One, Opinion::Zero, Opinion::One, Opinion::Zero]);
        let mut adv = Adversary::new(AdversaryStrategy::FlipToMinority { budget: 1 }, &net).unwrap();
        adv.apply(&mut net, &RngStream::new(0, 0, 1));
        assert_eq!(net.ones(), 1);
    }

    #[test]
    fn flip_skips_decided() {
        let mut net = network(&[Opinion::One; 4]);
        for s in &mut net.parties[..3] {
            s.decided = true;
            s.decided_value = Some(Opinion::One);
        }
        let mut adv = Adversary::new(AdversaryStrategy::FlipToMinority { budget: 4 }, &net).unwrap();
        adv.apply(&mut net, &RngStream::new(0, 0, 1));
        assert_eq!(net.ones(), 3);
        assert_eq!(net.parties[3].opinion, Opinion::Zero);
    }

    #[test]
    fn split_groups_pin_both_halves() {
        let mut net = network(&[Opinion::One; 100]);
        let mut adv = Adversary::new(AdversaryStrategy::SplitGroups { budget: 4 }, &net).unwrap();
        for round in 1..=3 {
            adv.apply(&mut net, &RngStream::new(0, 0, round));
            assert_eq!(net.zeros(), 2);
            assert_eq!(net.ones(), 98);
            assert_eq!(adv.influenced().count(), 4);
            net.parties[0].opinion = Opinion::One;
        }
    }

    #[test]
    fn decided_members_leave_group() {
        let mut net = network(&[Opinion::One; 10]);
        let mut adv = Adversary::new(AdversaryStrategy::SplitGroups { budget: 4 }, &net).unwrap();
        net.parties[0].decided = true;
        net.parties[0].decided_value = Some(Opinion::One);
        adv.apply(&mut net, &RngStream::new(0, 0, 1));
        assert_eq!(adv.influenced().count(), 3);
        assert_eq!(net.parties[0].opinion, Opinion::One);
    }

    #[test]
    fn pin_sets_target() {
        let mut net = network(&[Opinion::Zero; 10]);
        let s = AdversaryStrategy::PinOpinion { budget: 3, target: Opinion::One };
        let mut adv = Adversary::new(s, &net).unwrap();
        adv.apply(&mut net, &RngStream::new(0, 0, 1));
        assert_eq!(net.ones(), 3);
    }

    #[test]
    fn budget_above_n_rejected() {
        let net = network(&[Opinion::Zero; 10]);
        assert!(Adversary::new(AdversaryStrategy::FlipToMinority { budget: 11 }, &net).is_err());
    }

    #[test]
    fn influenced_probability_examples() {
        let p = influenced_majority_probability(10, 100, 2, 2).unwrap();
        assert!((p - 0.01).abs() < 1e-15);
        assert_eq!(influenced_majority_probability(0, 100, 3, 2).unwrap(), 0.0);
        assert!((influenced_majority_probability(50, 50, 3, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!(influenced_majority_probability(101, 100, 3, 2).is_err());
    }

    #[test]
    fn influenced_probability_lower_bound() {
        for n in [10usize, 100, 1000] {
            for f in (0..=n).step_by(n / 10) {
                for k in 1..=20u32 {
                    for alpha in k / 2 + 1..=k {
                        let p = influenced_majority_probability(f, n, k, alpha).unwrap();
                        let floor = (f as f64 / n as f64).powi(k as i32);
                        assert!(p >= floor * (1.0 - 1e-12), "F={f} n={n} k={k} alpha={alpha}");
                    }
                }
            }
        }
    }
}
