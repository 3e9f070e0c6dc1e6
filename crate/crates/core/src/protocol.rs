//! Per-party state machines for Slush, Snowflake, Snowball and Blizzard.
//!
//! Every transition is a pure function from the old [`PartyState`] to a new
//! one. A party that has decided is frozen: it keeps answering queries with
//! its decided value and never updates a counter again.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::sampling::SamplingMode;

/// Threshold value that can never be reached; disables the decision rule
/// that reads it (`beta`, `max_round` or `tau`).
pub const NEVER: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Opinion {
    Zero,
    One,
    /// Not yet initialised. Adopts the opinion of the first query it receives.
    Bot,
}

impl Opinion {
    /// Slot in a two-element counter array; `None` for `Bot`.
    pub fn slot(self) -> Option<usize> {
        match self {
            Opinion::Zero => Some(0),
            Opinion::One => Some(1),
            Opinion::Bot => None,
        }
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Opinion::One
        } else {
            Opinion::Zero
        }
    }

    /// The other binary opinion. `Bot` maps to itself.
    pub fn flipped(self) -> Self {
        match self {
            Opinion::Zero => Opinion::One,
            Opinion::One => Opinion::Zero,
            Opinion::Bot => Opinion::Bot,
        }
    }
}

impl fmt::Display for Opinion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Opinion::Zero => "0",
            Opinion::One => "1",
            Opinion::Bot => "bot",
        })
    }
}

impl FromStr for Opinion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "zero" => Ok(Opinion::Zero),
            "1" | "one" => Ok(Opinion::One),
            "bot" | "none" | "_" => Ok(Opinion::Bot),
            other => Err(Error::Config(format!("unknown opinion '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ProtocolKind {
    Slush,
    Snowflake,
    Snowball,
    Blizzard,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Slush => "slush",
            ProtocolKind::Snowflake => "snowflake",
            ProtocolKind::Snowball => "snowball",
            ProtocolKind::Blizzard => "blizzard",
        })
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slush" => Ok(ProtocolKind::Slush),
            "snowflake" => Ok(ProtocolKind::Snowflake),
            "snowball" => Ok(ProtocolKind::Snowball),
            "blizzard" => Ok(ProtocolKind::Blizzard),
            other => Err(Error::Config(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Round budget for Slush decisions when none is configured: `ceil(4 log2 n)`.
pub fn default_max_round(n: usize) -> u32 {
    ((4.0 * (n.max(2) as f64).log2()).ceil() as u32).max(1)
}

/// Rounds Slush is assumed to need to reach stable consensus:
/// `ceil(c1 * (log2 n + beta))`.
pub fn t_slush(n: usize, beta: u32, c1: f64) -> u32 {
    (c1 * ((n.max(2) as f64).log2() + f64::from(beta))).ceil() as u32
}

/// Default Blizzard threshold `2 * t_slush(n, beta, 4)`.
pub fn default_tau(n: usize, beta: u32) -> u32 {
    2 * t_slush(n, beta, 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProtocolParams {
    pub kind: ProtocolKind,
    /// Sample size per query.
    pub k: u32,
    /// Votes needed for a majority; `k/2 < alpha <= k`.
    pub alpha: u32,
    /// Streak length that triggers a Snowflake/Snowball decision.
    pub beta: u32,
    /// Slush decides once its local round reaches this value.
    pub max_round: u32,
    /// Blizzard decides once one counter leads the other by this much.
    pub tau: u32,
    pub sampling: SamplingMode,
}

impl ProtocolParams {
    /// Parameters with every decision rule disabled and sampling with
    /// repetition over all parties.
    pub fn new(kind: ProtocolKind, k: u32, alpha: u32) -> Self {
        Self {
            kind,
            k,
            alpha,
            beta: NEVER,
            max_round: NEVER,
            tau: NEVER,
            sampling: SamplingMode::WithRepetitionAll,
        }
    }

    pub fn with_beta(mut self, beta: u32) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_max_round(mut self, max_round: u32) -> Self {
        self.max_round = max_round;
        self
    }

    pub fn with_tau(mut self, tau: u32) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_sampling(mut self, sampling: SamplingMode) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if 2 * self.alpha <= self.k {
            return Err(invalid(format!(
                "alpha must exceed k/2 (k={}, alpha={})",
                self.k, self.alpha
            )));
        }
        if self.alpha > self.k {
            return Err(invalid(format!(
                "alpha must not exceed k (k={}, alpha={})",
                self.k, self.alpha
            )));
        }
        match self.kind {
            ProtocolKind::Slush if self.max_round == 0 => {
                Err(invalid("max_round must be at least 1"))
            }
            ProtocolKind::Snowflake | ProtocolKind::Snowball if self.beta == 0 => {
                Err(invalid("beta must be at least 1"))
            }
            ProtocolKind::Blizzard if self.tau == 0 => Err(invalid("tau must be at least 1")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartyState {
    pub opinion: Opinion,
    pub decided: bool,
    pub decided_value: Option<Opinion>,
    /// Consecutive majorities for the current opinion (Snowflake, Snowball).
    pub streak_cnt: u32,
    /// Cumulative majorities per opinion (Snowball).
    pub confidence: [u32; 2],
    /// Cumulative majorities per opinion (Blizzard).
    pub lead_cnt: [u32; 2],
    pub local_round: u32,
}

impl PartyState {
    /// Value this party sends back when queried, before any `Bot` adoption.
    pub fn reply_value(&self) -> Opinion {
        self.decided_value.unwrap_or(self.opinion)
    }

    fn decide(mut self, value: Opinion) -> Self {
        if value != Opinion::Bot {
            self.decided = true;
            self.decided_value = Some(value);
        }
        self
    }
}

/// Fresh, undecided state holding `initial`.
pub fn init_party(_kind: ProtocolKind, initial: Opinion) -> PartyState {
    PartyState {
        opinion: initial,
        decided: false,
        decided_value: None,
        streak_cnt: 0,
        confidence: [0, 0],
        lead_cnt: [0, 0],
        local_round: 0,
    }
}

/// Answers a query carrying `incoming`. An undecided `Bot` party adopts the
/// queried value first.
pub fn reply_to_query(state: &PartyState, incoming: Opinion) -> Result<(Opinion, PartyState)> {
    if incoming == Opinion::Bot {
        return Err(Error::Precondition("queries never carry Bot".into()));
    }
    if state.decided {
        return Ok((state.reply_value(), *state));
    }
    let mut next = *state;
    if next.opinion == Opinion::Bot {
        next.opinion = incoming;
    }
    Ok((next.opinion, next))
}

/// Vote counts of one k-sample and the alpha-majority they carry, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryOutcome {
    pub votes_zero: u32,
    pub votes_one: u32,
    pub majority: Option<Opinion>,
}

impl QueryOutcome {
    pub fn from_counts(votes_zero: u32, votes_one: u32, alpha: u32) -> Self {
        let majority = if votes_one >= alpha {
            Some(Opinion::One)
        } else if votes_zero >= alpha {
            Some(Opinion::Zero)
        } else {
            None
        };
        Self {
            votes_zero,
            votes_one,
            majority,
        }
    }

    pub fn k(&self) -> u32 {
        self.votes_zero + self.votes_one
    }
}

pub fn tally(replies: &[Opinion], alpha: u32) -> Result<QueryOutcome> {
    let mut votes = [0u32; 2];
    for r in replies {
        let slot = r
            .slot()
            .ok_or_else(|| Error::Precondition("Bot is never sent as a vote".into()))?;
        votes[slot] += 1;
    }
    if 2 * alpha <= replies.len() as u32 {
        return Err(invalid(format!(
            "alpha must exceed k/2 (k={}, alpha={alpha})",
            replies.len()
        )));
    }
    Ok(QueryOutcome::from_counts(votes[0], votes[1], alpha))
}

/// Applies the result of this party's query for one round.
#[inline]
pub fn apply_round_outcome(
    state: &PartyState,
    outcome: &QueryOutcome,
    params: &ProtocolParams,
) -> Result<PartyState> {
    if state.decided {
        return Err(Error::Precondition(
            "a decided party takes no further transitions".into(),
        ));
    }
    if outcome.k() != params.k {
        return Err(Error::Precondition(format!(
            "outcome carries {} votes, expected k={}",
            outcome.k(),
            params.k
        )));
    }
    let mut s = *state;
    advance(&mut s, outcome.majority, params);
    Ok(s)
}

/// The transition itself, in place. Callers guarantee the party is
/// undecided and the outcome carries `params.k` votes.
#[inline]
pub(crate) fn advance(s: &mut PartyState, majority: Option<Opinion>, params: &ProtocolParams) {
    s.local_round += 1;
    match params.kind {
        ProtocolKind::Slush => {
            if let Some(b) = majority {
                s.opinion = b;
            }
            if s.local_round == params.max_round {
                *s = s.decide(s.opinion);
            }
        }
        ProtocolKind::Snowflake => {
            match majority {
                Some(b) if b == s.opinion => s.streak_cnt += 1,
                Some(b) => {
                    s.opinion = b;
                    s.streak_cnt = 1;
                }
                None => s.streak_cnt = 0,
            }
            if s.streak_cnt == params.beta {
                *s = s.decide(s.opinion);
            }
        }
        ProtocolKind::Snowball => {
            match majority {
                Some(b) => {
                    let slot = b.slot().expect("majority is binary");
                    s.confidence[slot] += 1;
                    if b == s.opinion {
                        s.streak_cnt += 1;
                    } else {
                        let held = s.opinion.slot().map_or(0, |i| s.confidence[i]);
                        if s.confidence[slot] > held {
                            s.opinion = b;
                        }
                        s.streak_cnt = 1;
                    }
                }
                None => s.streak_cnt = 0,
            }
            if s.streak_cnt == params.beta {
                *s = s.decide(s.opinion);
            }
        }
        ProtocolKind::Blizzard => {
            if let Some(b) = majority {
                s.opinion = b;
                s.lead_cnt[b.slot().expect("majority is binary")] += 1;
            }
            let lead = i64::from(s.lead_cnt[1]) - i64::from(s.lead_cnt[0]);
            let tau = i64::from(params.tau);
            if lead == tau {
                *s = s.decide(Opinion::One);
            } else if lead == -tau {
                *s = s.decide(Opinion::Zero);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Opinion::{Bot, One, Zero};

    fn majority(b: Opinion, k: u32, alpha: u32) -> QueryOutcome {
        match b {
            One => QueryOutcome::from_counts(k - alpha, alpha, alpha),
            Zero => QueryOutcome::from_counts(alpha, k - alpha, alpha),
            Bot => unreachable!(),
        }
    }

    #[test]
    fn init_is_undecided_and_zeroed() {
        let s = init_party(ProtocolKind::Slush, One);
        assert_eq!(s.opinion, One);
        assert!(!s.decided);
        assert_eq!((s.streak_cnt, s.local_round), (0, 0));
        let s = init_party(ProtocolKind::Snowball, Bot);
        assert_eq!(s.opinion, Bot);
        let s = init_party(ProtocolKind::Blizzard, Zero);
        assert_eq!(s.lead_cnt, [0, 0]);
    }

    #[test]
    fn bot_adopts_query() {
        let s = init_party(ProtocolKind::Slush, Bot);
        let (reply, next) = reply_to_query(&s, One).unwrap();
        assert_eq!(reply, One);
        assert_eq!(next.opinion, One);

        let s = init_party(ProtocolKind::Slush, Zero);
        let (reply, next) = reply_to_query(&s, One).unwrap();
        assert_eq!((reply, next), (Zero, s));

        let mut d = init_party(ProtocolKind::Snowflake, One);
        d.decided = true;
        d.decided_value = Some(One);
        let (reply, next) = reply_to_query(&d, Zero).unwrap();
        assert_eq!((reply, next), (One, d));

        assert!(reply_to_query(&s, Bot).is_err());
    }

    #[test]
    fn tally_examples() {
        let t = tally(&[One, One, Zero], 2).unwrap();
        assert_eq!((t.votes_zero, t.votes_one, t.majority), (1, 2, Some(One)));
        let t = tally(&[One, Zero, One, Zero], 3).unwrap();
        assert_eq!((t.votes_zero, t.votes_one, t.majority), (2, 2, None));
        assert_eq!(tally(&[Zero, Zero], 2).unwrap().majority, Some(Zero));
        assert!(tally(&[Zero, Bot], 2).is_err());
    }

    #[test]
    fn slush_adopts_majority_and_decides_at_max_round() {
        let p = ProtocolParams::new(ProtocolKind::Slush, 3, 2).with_max_round(2);
        let s = init_party(ProtocolKind::Slush, Zero);
        let s = apply_round_outcome(&s, &majority(One, 3, 2), &p).unwrap();
        assert_eq!(s.opinion, One);
        assert!(!s.decided);
        let s = apply_round_outcome(&s, &majority(One, 3, 2), &p).unwrap();
        assert!(s.decided);
        assert_eq!(s.decided_value, Some(One));
        assert!(apply_round_outcome(&s, &majority(One, 3, 2), &p).is_err());
    }

    #[test]
    fn snowflake_streak_and_decision() {
        let beta = 4;
        let p = ProtocolParams::new(ProtocolKind::Snowflake, 3, 2).with_beta(beta);
        let mut s = init_party(ProtocolKind::Snowflake, One);
        s.streak_cnt = beta - 1;
        s.local_round = beta - 1;
        let s = apply_round_outcome(&s, &majority(One, 3, 2), &p).unwrap();
        assert!(s.decided);
        assert_eq!(s.decided_value, Some(One));

        let s = init_party(ProtocolKind::Snowflake, One);
        let s = apply_round_outcome(&s, &majority(Zero, 3, 2), &p).unwrap();
        assert_eq!((s.opinion, s.streak_cnt), (Zero, 1));
    }

    #[test]
    fn snowball_switches_on_strictly_higher_confidence() {
        let p = ProtocolParams::new(ProtocolKind::Snowball, 3, 2).with_beta(10);
        let mut s = init_party(ProtocolKind::Snowball, One);
        s.confidence = [3, 2];
        s.local_round = 5;
        let n = apply_round_outcome(&s, &majority(Zero, 3, 2), &p).unwrap();
        assert_eq!(n.confidence, [4, 2]);
        assert_eq!((n.opinion, n.streak_cnt), (Zero, 1));

        s.confidence = [2, 2];
        let n = apply_round_outcome(&s, &majority(Zero, 3, 2), &p).unwrap();
        assert_eq!(n.confidence, [3, 2]);
        assert_eq!(n.opinion, Zero);

        // confidence tie after the increment keeps the current opinion
        s.confidence = [1, 2];
        let n = apply_round_outcome(&s, &majority(Zero, 3, 2), &p).unwrap();
        assert_eq!(n.confidence, [2, 2]);
        assert_eq!((n.opinion, n.streak_cnt), (One, 1));
    }

    #[test]
    fn blizzard_decides_on_lead() {
        let tau = 5;
        let p = ProtocolParams::new(ProtocolKind::Blizzard, 3, 2).with_tau(tau);
        let mut s = init_party(ProtocolKind::Blizzard, Zero);
        s.lead_cnt = [0, tau - 1];
        s.local_round = tau - 1;
        let s = apply_round_outcome(&s, &majority(One, 3, 2), &p).unwrap();
        assert!(s.decided);
        assert_eq!(s.decided_value, Some(One));

        let mut s = init_party(ProtocolKind::Blizzard, One);
        s.lead_cnt = [tau + 2, 3];
        s.local_round = tau + 5;
        let s = apply_round_outcome(&s, &majority(Zero, 3, 2), &p).unwrap();
        assert_eq!(s.decided_value, Some(Zero));
    }

    #[test]
    fn no_majority_keeps_opinion_and_resets_streak() {
        let tie = QueryOutcome::from_counts(2, 2, 3);
        for kind in [
            ProtocolKind::Slush,
            ProtocolKind::Snowflake,
            ProtocolKind::Snowball,
            ProtocolKind::Blizzard,
        ] {
            let p = ProtocolParams::new(kind, 4, 3).with_beta(9);
            let mut s = init_party(kind, One);
            s.streak_cnt = 3;
            s.local_round = 3;
            let n = apply_round_outcome(&s, &tie, &p).unwrap();
            assert_eq!(n.opinion, One);
            match kind {
                ProtocolKind::Snowflake | ProtocolKind::Snowball => assert_eq!(n.streak_cnt, 0),
                _ => assert_eq!(n.streak_cnt, 3),
            }
        }
    }

    #[test]
    fn outcome_size_must_match_k() {
        let p = ProtocolParams::new(ProtocolKind::Slush, 5, 3);
        let s = init_party(ProtocolKind::Slush, One);
        assert!(apply_round_outcome(&s, &QueryOutcome::from_counts(1, 2, 2), &p).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ProtocolParams::new(ProtocolKind::Slush, 10, 5).validate().is_err());
        assert!(ProtocolParams::new(ProtocolKind::Slush, 10, 11).validate().is_err());
        assert!(ProtocolParams::new(ProtocolKind::Blizzard, 10, 6)
            .with_tau(0)
            .validate()
            .is_err());
        assert!(ProtocolParams::new(ProtocolKind::Snowflake, 2, 2)
            .with_beta(0)
            .validate()
            .is_err());
        assert!(ProtocolParams::new(ProtocolKind::Slush, 2, 2)
            .with_max_round(0)
            .validate()
            .is_err());
        assert!(ProtocolParams::new(ProtocolKind::Snowball, 20, 15).validate().is_ok());
    }

    #[test]
    fn default_thresholds() {
        assert_eq!(default_max_round(1024), 40);
        assert_eq!(t_slush(1024, 16, 4.0), 104);
        assert_eq!(default_tau(1024, 16), 208);
    }
}
