//! Seeded sampling of party indices.
//!
//! Every `(party, round)` pair owns an independent random stream derived
//! from the master seed, so the draws a party makes in a round do not depend
//! on the order in which parties are processed. Each stream is a SplitMix64
//! generator (a Weyl counter passed through a fixed 64-bit mixer) whose
//! starting counter is a SplitMix64 hash of `(seed, round, party)`.
//!
//! Party indices are zero-based.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

/// Generator type behind every stream.
pub type StreamRng = SplitMix64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::protocol::{tally, Opinion, QueryOutcome};

/// Stream id reserved for the adversary's own draws.
pub const ADVERSARY_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum SamplingMode {
    /// Uniform over all `n` parties, self included, with repetition.
    #[default]
    WithRepetitionAll,
    /// Uniform over the other `n - 1` parties, with repetition.
    WithRepetitionExcludeSelf,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::WithRepetitionAll => "all",
            SamplingMode::WithRepetitionExcludeSelf => "exclude-self",
        })
    }
}

impl FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" | "with-repetition-all" => Ok(SamplingMode::WithRepetitionAll),
            "exclude-self" | "with-repetition-exclude-self" => {
                Ok(SamplingMode::WithRepetitionExcludeSelf)
            }
            other => Err(Error::Config(format!("unknown sampling mode '{other}'"))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a master seed and a list of identifiers into a 64-bit key.
pub fn derive_seed(master: u64, ids: &[u64]) -> u64 {
    ids.iter()
        .fold(splitmix64(master), |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub party: u64,
    pub round: u64,
}

impl RngStream {
    pub fn new(seed: u64, party: u64, round: u64) -> Self {
        Self { seed, party, round }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        RoundKey::new(self.seed, self.round).rng(self.party)
    }
}

/// The per-round prefix of a stream key, hoisted out of the party loop.
#[derive(Debug, Clone, Copy)]
pub struct RoundKey(u64);

impl RoundKey {
    pub fn new(seed: u64, round: u64) -> Self {
        // Stream key is `derive_seed(seed, &[round, party])`.
        Self(derive_seed(seed, &[round]))
    }

    #[inline]
    pub fn rng(self, party: u64) -> StreamRng {
        StreamRng::seed_from_u64(splitmix64(self.0 ^ splitmix64(party)))
    }
}

fn check_sizes(n: usize, k: usize, self_index: usize) -> Result<()> {
    if n < 2 {
        return Err(domain(format!("need at least 2 parties, got {n}")));
    }
    if k == 0 {
        return Err(domain("sample size k must be at least 1"));
    }
    if self_index >= n {
        return Err(domain(format!("self index {self_index} out of range for n={n}")));
    }
    Ok(())
}

/// Draws one index according to `mode`. `n >= 2` is the caller's duty.
#[inline]
pub fn draw_index<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    self_index: usize,
    mode: SamplingMode,
) -> usize {
    match mode {
        SamplingMode::WithRepetitionAll => rng.random_range(0..n),
        SamplingMode::WithRepetitionExcludeSelf => {
            let i = rng.random_range(0..n - 1);
            if i >= self_index {
                i + 1
            } else {
                i
            }
        }
    }
}

/// `k` i.i.d. uniform indices from the stream `rng`.
pub fn sample_indices(
    rng: &RngStream,
    n: usize,
    k: usize,
    self_index: usize,
    mode: SamplingMode,
) -> Result<Vec<usize>> {
    check_sizes(n, k, self_index)?;
    let mut g = rng.rng();
    Ok((0..k).map(|_| draw_index(&mut g, n, self_index, mode)).collect())
}

pub fn collect_outcome(replies: &[Opinion], alpha: u32) -> Result<QueryOutcome> {
    tally(replies, alpha)
}
