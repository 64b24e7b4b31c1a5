//! Counter-based derivation of independent random substreams.
//!
//! Every random draw in a simulation comes from a stream keyed by
//! `(master_seed, domain, run, step, agent)`. Streams are derived by hashing
//! the key, so results never depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use sha2::{Digest, Sha256};

/// The generator behind every substream.
pub type StreamRng = Xoshiro256PlusPlus;

/// Separates streams that would otherwise share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Graph = 0x0067_7261_7068,
    Init = 0x696e_6974,
    Agent = 0x0061_6765_6e74,
    Probe = 0x0070_726f_6265,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one well-mixed 64-bit key.
pub fn mix(words: &[u64]) -> u64 {
    words.iter().fold(GOLDEN, |acc, &w| {
        finalize(acc.wrapping_add(GOLDEN) ^ finalize(w.wrapping_add(GOLDEN)))
    })
}

/// Seed of realization `run` of an ensemble driven by `master_seed`.
pub fn run_seed(master_seed: u64, run: u64) -> u64 {
    mix(&[master_seed, run])
}

/// Stream for a one-off purpose within a run (graph building, initial placement).
pub fn run_stream(run_seed: u64, domain: Domain) -> StreamRng {
    StreamRng::seed_from_u64(mix(&[run_seed, domain as u64]))
}

/// Stream owned by `agent` at step `t` of the run seeded with `run_seed`.
pub fn agent_stream(run_seed: u64, t: u64, agent: u64) -> StreamRng {
    StreamRng::seed_from_u64(mix(&[run_seed, Domain::Agent as u64, t, agent]))
}

/// Stable 64-bit digest of a textual key (used for sweep cell seeds).
pub fn key_seed(master_seed: u64, key: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(master_seed.to_le_bytes())
        .chain_update(key.as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
