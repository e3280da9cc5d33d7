//! Counter-based random streams.
//!
//! Every draw is keyed by `(seed, stream, index)`. The generator for a key is a
//! ChaCha8 instance whose stream id is `stream` and whose word position starts
//! at `index << DRAW_WORD_BITS`, so draws never depend on how work is split
//! across threads and `sample(d, s, k)` is always a prefix of `sample(d, s, n)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words reserved per draw. A single draw consuming more than 2^20 words
/// (about half a million normal variates) would overlap the next index.
const DRAW_WORD_BITS: u32 = 20;

/// Stream ids used across the crate.
pub mod streams {
    pub const SAMPLE: u64 = 0;
    pub const MODEL: u64 = 1;
    pub const DATA: u64 = 2;
    pub const JOINT: u64 = 3;
    pub const BAND: u64 = 4;
    pub const DIRICHLET: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
    pub const EVIDENCE: u64 = 7;
    pub const DATA_INSTANCE: u64 = 8;
    pub const UNCERTAIN_PDF: u64 = 9;
}

pub type DrawRng = ChaCha8Rng;

pub fn draw_rng(seed: u64, stream: u64, index: u64) -> DrawRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << DRAW_WORD_BITS);
    rng
}
