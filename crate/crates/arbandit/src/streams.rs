//! Deterministic random-stream derivation.
//!
//! Every replication draws from four sub-streams derived from
//! `(master_seed, run_index, stream tag)`:
//!
//! * `rewards` — environment draws and reward-stack fills,
//! * `policy0` / `policy1` — each policy's internal randomization,
//! * `aux` — reserved for randomized tie-breaking experiments (the built-in
//!   policies break ties to the lowest index and never touch it).
//!
//! Policy randomness is further split per period: the stream used by a
//! policy in period `t` is derived from `(policy_seed, t)`, so what a policy
//! consumes in one period can never shift the randomness seen in later
//! periods. Reward draws and policy draws come from disjoint tags, which
//! keeps policy randomization independent of all rewards.
//!
//! The mixer is a SplitMix64 avalanche folded over the input words. It is
//! not cryptographic; it only has to give well-separated ChaCha seeds for
//! distinct inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream tags. Distinct constants per purpose; never reuse a tag for a new
/// purpose or existing experiment outputs shift.
pub mod tag {
    pub const REWARDS: u64 = 0x01;
    pub const POLICY0: u64 = 0x02;
    pub const POLICY1: u64 = 0x03;
    pub const AUX: u64 = 0x04;
    pub const PERIOD: u64 = 0x05;
    pub const BATCH: u64 = 0x06;
    pub const INSTANCE: u64 = 0x07;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold `words` into `seed`, avalanching after each word.
pub fn mix64(seed: u64, words: &[u64]) -> u64 {
    let mut h = avalanche(seed.wrapping_add(GOLDEN));
    for &w in words {
        h = avalanche(h.wrapping_add(GOLDEN) ^ w);
    }
    h
}

/// ChaCha12 stream for a derived seed.
pub fn chacha(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Per-policy randomness source. Holds only the derived seed; each period
/// opens its own sub-stream.
#[derive(Debug, Clone, Copy)]
pub struct PolicyStream {
    seed: u64,
}

impl PolicyStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Fresh stream for period `t` (1-based).
    pub fn period_rng(&self, t: u32) -> ChaCha12Rng {
        chacha(mix64(self.seed, &[tag::PERIOD, u64::from(t)]))
    }
}

/// Period stream that materializes only on first use, so policies that
/// consume no randomness in a period cost no stream setup.
pub struct LazyPeriodRng {
    stream: PolicyStream,
    period: u32,
    rng: Option<ChaCha12Rng>,
}

impl LazyPeriodRng {
    pub fn new(stream: PolicyStream, period: u32) -> Self {
        Self { stream, period, rng: None }
    }

    fn get(&mut self) -> &mut ChaCha12Rng {
        let (stream, period) = (self.stream, self.period);
        self.rng.get_or_insert_with(|| stream.period_rng(period))
    }
}

impl rand::RngCore for LazyPeriodRng {
    fn next_u32(&mut self) -> u32 {
        self.get().next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.get().next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.get().fill_bytes(dest)
    }
}

/// The four sub-streams owned by a single run.
#[derive(Debug, Clone)]
pub struct RunStreams {
    pub rewards: ChaCha12Rng,
    pub policy0: PolicyStream,
    pub policy1: PolicyStream,
    pub aux: ChaCha12Rng,
}

impl RunStreams {
    pub fn for_run(master_seed: u64, run_index: u64) -> Self {
        Self {
            rewards: chacha(mix64(master_seed, &[run_index, tag::REWARDS])),
            policy0: PolicyStream::new(mix64(master_seed, &[run_index, tag::POLICY0])),
            policy1: PolicyStream::new(mix64(master_seed, &[run_index, tag::POLICY1])),
            aux: chacha(mix64(master_seed, &[run_index, tag::AUX])),
        }
    }

    /// Streams with the policy roles exchanged. Used by the swapped-order
    /// replay runner so the first-deployed policy always draws from the
    /// stream matching its role slot.
    pub fn swap_policies(self) -> Self {
        Self {
            rewards: self.rewards,
            policy0: self.policy1,
            policy1: self.policy0,
            aux: self.aux,
        }
    }
}

/// Seed for a named batch of runs under one experiment master seed.
pub fn batch_seed(master_seed: u64, batch: u64, extra: u64) -> u64 {
    mix64(master_seed, &[tag::BATCH, batch, extra])
}
