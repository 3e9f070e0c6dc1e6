//! Synchronous round engine.
//!
//! A round runs in three steps: the adversary acts, every party's reply
//! value is frozen into a snapshot, then every undecided party holding an
//! opinion draws its k-sample against that snapshot and applies the
//! outcome. All parties therefore see the same start-of-round state, and the
//! number of one-replies in a query is `Bin(k, S/n)` when sampling over all
//! parties.
//!
//! The only mutation that happens during the query phase is `Bot` adoption:
//! a queried `Bot` party answers with the querier's opinion and adopts it in
//! the live state. It does not query in that round itself.

use serde::Serialize;

use crate::adversary::{Adversary, AdversaryStrategy};
use crate::error::{invalid, Result};
use crate::protocol::{
    advance, init_party, reply_to_query, Opinion, PartyState, ProtocolKind,
    ProtocolParams, QueryOutcome,
};
use crate::sampling::{draw_index, RngStream, RoundKey, ADVERSARY_STREAM};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkState {
    /// Number of completed rounds.
    pub round: u32,
    pub parties: Vec<PartyState>,
}

impl NetworkState {
    pub fn from_opinions(kind: ProtocolKind, opinions: impl IntoIterator<Item = Opinion>) -> Self {
        Self {
            round: 0,
            parties: opinions.into_iter().map(|o| init_party(kind, o)).collect(),
        }
    }

    /// `n` parties of which the first `ones` propose one and the rest zero.
    pub fn with_ones(kind: ProtocolKind, n: usize, ones: usize) -> Self {
        Self::from_opinions(kind, (0..n).map(|i| Opinion::from_bit(i < ones)))
    }

    /// `n` parties with `round(p0 * n)` proposing one.
    pub fn with_share(kind: ProtocolKind, n: usize, p0: f64) -> Self {
        Self::with_ones(kind, n, (p0 * n as f64).round() as usize)
    }

    pub fn n(&self) -> usize {
        self.parties.len()
    }

    fn count(&self, o: Opinion) -> usize {
        self.parties.iter().filter(|s| s.opinion == o).count()
    }

    /// `S_i`: parties currently holding opinion one.
    pub fn ones(&self) -> usize {
        self.count(Opinion::One)
    }

    pub fn zeros(&self) -> usize {
        self.count(Opinion::Zero)
    }

    pub fn bots(&self) -> usize {
        self.count(Opinion::Bot)
    }

    /// `p_i = S_i / n`.
    pub fn share(&self) -> f64 {
        self.ones() as f64 / self.n() as f64
    }

    pub fn opinions(&self) -> Vec<Opinion> {
        self.parties.iter().map(|s| s.opinion).collect()
    }
}

/// Summary of one executed round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: u32,
    pub ones: usize,
    pub zeros: usize,
    pub bots: usize,
    pub switches: usize,
    pub newly_decided: usize,
}

/// Executes one synchronous round in place.
pub fn run_round(
    network: &mut NetworkState,
    params: &ProtocolParams,
    adversary: &mut Adversary,
    seed: u64,
) -> RoundRecord {
    let round = network.round + 1;
    adversary.apply(
        network,
        &RngStream::new(seed, ADVERSARY_STREAM, u64::from(round)),
    );

    let snapshot: Vec<Opinion> = network.parties.iter().map(PartyState::reply_value).collect();
    let n = snapshot.len();
    let k = params.k;
    let mut switches = 0;
    let mut newly_decided = 0;
    let key = RoundKey::new(seed, u64::from(round));

    for j in 0..n {
        let own = snapshot[j];
        if network.parties[j].decided || own == Opinion::Bot {
            continue;
        }
        let mut rng = key.rng(j as u64);
        let mut votes_one = 0u32;
        for _ in 0..k {
            let i = draw_index(&mut rng, n, j, params.sampling);
            let reply = match snapshot[i] {
                Opinion::Bot => {
                    if let Ok((_, adopted)) = reply_to_query(&network.parties[i], own) {
                        network.parties[i] = adopted;
                    }
                    own
                }
                r => r,
            };
            if reply == Opinion::One {
                votes_one += 1;
            }
        }
        let majority = QueryOutcome::from_counts(k - votes_one, votes_one, params.alpha).majority;
        let party = &mut network.parties[j];
        advance(party, majority, params);
        switches += usize::from(party.opinion != own);
        newly_decided += usize::from(party.decided);
    }

    network.round = round;
    let mut counts = [0usize; 3];
    for s in &network.parties {
        counts[s.opinion.slot().unwrap_or(2)] += 1;
    }
    RoundRecord {
        round,
        ones: counts[1],
        zeros: counts[0],
        bots: counts[2],
        switches,
        newly_decided,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub max_rounds: u32,
    /// Majority size that counts as stable consensus; `None` means
    /// `n - ceil(sqrt(n))`.
    pub stability_threshold: Option<usize>,
    /// End the run at the first stable round.
    pub stop_when_stable: bool,
}

impl RunOptions {
    pub fn new(max_rounds: u32) -> Self {
        Self {
            max_rounds,
            stability_threshold: None,
            stop_when_stable: false,
        }
    }

    pub fn stop_when_stable(mut self) -> Self {
        self.stop_when_stable = true;
        self
    }

    pub fn with_stability_threshold(mut self, threshold: usize) -> Self {
        self.stability_threshold = Some(threshold);
        self
    }
}

/// `max_rounds` when none is configured: `10 ceil(log2 n) + 10 beta`, with
/// `beta` ignored when decisions are disabled.
pub fn default_max_rounds(n: usize, beta: u32) -> u32 {
    let log = (n.max(2) as f64).log2().ceil() as u32;
    let beta = if beta == crate::protocol::NEVER { 0 } else { beta };
    10 * log + 10 * beta
}

/// `n - ceil(sqrt(n))`.
pub fn default_stability_threshold(n: usize) -> usize {
    n - (n as f64).sqrt().ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunMetrics {
    /// `S_i` for `i = 0..=rounds`, starting with the initial state.
    pub s_trace: Vec<usize>,
    /// `delta_trace[i] = s_trace[i + 1] - s_trace[i]`.
    pub delta_trace: Vec<i64>,
    /// Parties holding `Bot` after each round, aligned with `s_trace`.
    pub bot_trace: Vec<usize>,
    pub decision_round: Vec<Option<u32>>,
    pub decided_values: Vec<Option<Opinion>>,
    /// First round whose majority reached the stability threshold.
    pub stable_round: Option<u32>,
    pub agreement: bool,
    /// Every party outside the adversary's fixed groups has decided.
    pub terminated: bool,
    pub rounds: u32,
    /// Parties outside the adversary's fixed groups at the start of the run.
    pub honest: Vec<bool>,
}

impl RunMetrics {
    pub fn max_decision_round(&self) -> Option<u32> {
        self.decision_round.iter().flatten().copied().max()
    }

    pub fn decided_count(&self) -> usize {
        self.decided_values.iter().flatten().count()
    }

    pub fn honest_decision_rounds(&self) -> impl Iterator<Item = Option<u32>> + '_ {
        self.decision_round
            .iter()
            .zip(&self.honest)
            .filter(|(_, &h)| h)
            .map(|(r, _)| *r)
    }
}

/// Runs rounds until every non-influenced party has decided or
/// `options.max_rounds` rounds have been executed.
pub fn run(
    mut network: NetworkState,
    params: &ProtocolParams,
    strategy: AdversaryStrategy,
    seed: u64,
    options: &RunOptions,
) -> Result<RunMetrics> {
    params.validate()?;
    if options.max_rounds == 0 {
        return Err(invalid("max_rounds must be at least 1"));
    }
    let n = network.n();
    if n < 2 {
        return Err(invalid(format!("need at least 2 parties, got {n}")));
    }
    let threshold = options
        .stability_threshold
        .unwrap_or_else(|| default_stability_threshold(n));
    let is_stable = |ones: usize| ones >= threshold || ones <= n - threshold.min(n);

    let mut adversary = Adversary::new(strategy, &network)?;
    let mut honest = vec![true; n];
    for i in adversary.influenced() {
        honest[i] = false;
    }

    // Fixed groups only shrink by members deciding, so "decided or held"
    // equals "decided or initially held".
    let mut pending = network
        .parties
        .iter()
        .zip(&honest)
        .filter(|(s, &h)| h && !s.decided)
        .count();

    let ones = network.ones();
    let mut metrics = RunMetrics {
        s_trace: vec![ones],
        delta_trace: Vec::new(),
        bot_trace: vec![network.bots()],
        decision_round: network
            .parties
            .iter()
            .map(|s| s.decided.then_some(0))
            .collect(),
        decided_values: network.parties.iter().map(|s| s.decided_value).collect(),
        stable_round: is_stable(ones).then_some(network.round),
        agreement: true,
        terminated: false,
        rounds: 0,
        honest,
    };

    while metrics.rounds < options.max_rounds {
        if pending == 0 {
            break;
        }
        if options.stop_when_stable && metrics.stable_round.is_some() {
            break;
        }
        let rec = run_round(&mut network, params, &mut adversary, seed);
        metrics.rounds += 1;
        let prev = *metrics.s_trace.last().unwrap();
        metrics.s_trace.push(rec.ones);
        metrics.bot_trace.push(rec.bots);
        metrics.delta_trace.push(rec.ones as i64 - prev as i64);
        if rec.newly_decided > 0 {
            for (i, s) in network.parties.iter().enumerate() {
                if s.decided && metrics.decision_round[i].is_none() {
                    metrics.decision_round[i] = Some(rec.round);
                    metrics.decided_values[i] = s.decided_value;
                    if metrics.honest[i] {
                        pending -= 1;
                    }
                }
            }
        }
        if metrics.stable_round.is_none() && is_stable(rec.ones) {
            metrics.stable_round = Some(rec.round);
        }
    }

    metrics.terminated = pending == 0;
    let mut values = metrics.decided_values.iter().flatten();
    metrics.agreement = match values.next() {
        Some(first) => values.all(|v| v == first),
        None => true,
    };
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SamplingMode;

    fn none() -> Adversary {
        Adversary::new(
            AdversaryStrategy::NoAdversary,
            &NetworkState::with_ones(ProtocolKind::Slush, 2, 0),
        )
        .unwrap()
    }

    #[test]
    fn unanimous_state_is_absorbing() {
        let params = ProtocolParams::new(ProtocolKind::Slush, 3, 2);
        let mut net = NetworkState::with_ones(ProtocolKind::Slush, 50, 50);
        let before = net.opinions();
        let rec = run_round(&mut net, &params, &mut none(), 1);
        assert_eq!(net.opinions(), before);
        assert_eq!((net.round, rec.ones, rec.switches), (1, 50, 0));
    }

    #[test]
    fn two_parties_swap_when_excluding_self() {
        let params = ProtocolParams::new(ProtocolKind::Slush, 1, 1)
            .with_sampling(SamplingMode::WithRepetitionExcludeSelf);
        let mut net = NetworkState::from_opinions(ProtocolKind::Slush, [Opinion::Zero, Opinion::One]);
        run_round(&mut net, &params, &mut none(), 3);
        assert_eq!(net.opinions(), vec![Opinion::One, Opinion::Zero]);
    }

    #[test]
    fn bot_adopts_and_does_not_query() {
        let params = ProtocolParams::new(ProtocolKind::Slush, 1, 1)
            .with_sampling(SamplingMode::WithRepetitionExcludeSelf);
        let mut net = NetworkState::from_opinions(ProtocolKind::Slush, [Opinion::One, Opinion::Bot]);
        run_round(&mut net, &params, &mut none(), 3);
        // party 0 samples the Bot party, which answers with 1 and adopts it
        assert_eq!(net.opinions(), vec![Opinion::One, Opinion::One]);
        assert_eq!(net.parties[1].local_round, 0);
    }

    #[test]
    fn slush_all_one_decides_at_max_round() {
        let params = ProtocolParams::new(ProtocolKind::Slush, 3, 2).with_max_round(5);
        let net = NetworkState::with_ones(ProtocolKind::Slush, 30, 30);
        let m = run(net, &params, AdversaryStrategy::NoAdversary, 9, &RunOptions::new(100)).unwrap();
        assert!(m.terminated && m.agreement);
        assert_eq!(m.rounds, 5);
        assert!(m.decision_round.iter().all(|&r| r == Some(5)));
        assert!(m.decided_values.iter().all(|&v| v == Some(Opinion::One)));
    }

    #[test]
    fn validity_all_zero() {
        for kind in [
            ProtocolKind::Slush,
            ProtocolKind::Snowflake,
            ProtocolKind::Snowball,
            ProtocolKind::Blizzard,
        ] {
            let params = ProtocolParams::new(kind, 5, 3)
                .with_max_round(7)
                .with_beta(7)
                .with_tau(7);
            let net = NetworkState::with_ones(kind, 40, 0);
            let m = run(net, &params, AdversaryStrategy::NoAdversary, 4, &RunOptions::new(50)).unwrap();
            assert!(m.terminated, "{kind}");
            assert!(m.decided_values.iter().all(|&v| v == Some(Opinion::Zero)), "{kind}");
        }
    }

    #[test]
    fn traces_are_consistent() {
        let params = ProtocolParams::new(ProtocolKind::Slush, 3, 2);
        let net = NetworkState::with_share(ProtocolKind::Slush, 500, 0.5);
        let m = run(net, &params, AdversaryStrategy::FlipToMinority { budget: 5 }, 11, &RunOptions::new(30))
            .unwrap();
        assert_eq!(m.s_trace.len(), m.rounds as usize + 1);
        for (i, d) in m.delta_trace.iter().enumerate() {
            assert_eq!(*d, m.s_trace[i + 1] as i64 - m.s_trace[i] as i64);
        }
        assert!(m.s_trace.iter().all(|&s| s <= 500));
        assert!(!m.terminated);
    }

    #[test]
    fn stop_when_stable() {
        let params = ProtocolParams::new(ProtocolKind::Slush, 10, 6);
        let net = NetworkState::with_share(ProtocolKind::Slush, 1024, 0.5);
        let m = run(net, &params, AdversaryStrategy::NoAdversary, 5, &RunOptions::new(200).stop_when_stable())
            .unwrap();
        assert_eq!(m.stable_round, Some(m.rounds));
        assert!(m.rounds < 40);
    }

    #[test]
    fn run_rejects_bad_params() {
        let params = ProtocolParams::new(ProtocolKind::Slush, 10, 5);
        let net = NetworkState::with_ones(ProtocolKind::Slush, 10, 5);
        assert!(run(net, &params, AdversaryStrategy::NoAdversary, 0, &RunOptions::new(3)).is_err());
    }

    #[test]
    fn defaults() {
        assert_eq!(default_stability_threshold(16384), 16384 - 128);
        assert_eq!(default_stability_threshold(1000), 1000 - 32);
        assert_eq!(default_max_rounds(1024, 16), 260);
    }
}
