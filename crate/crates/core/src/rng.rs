//! Deterministic counter-based random substreams.
//!
//! Every stochastic quantity in a sweep is drawn from a ChaCha stream
//! addressed by a `(purpose, a, b, c)` tuple packed into the 64-bit stream
//! id of [`ChaCha8Rng`]. Work units can therefore run in any order (and on
//! any number of threads) while producing bit-identical draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. Keeps unrelated draws on disjoint streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Channel matrix realization; addressed by channel index.
    Channel,
    /// Per-trial symbol and noise draws; addressed by (channel, block).
    Trials,
    /// CSI corruption; addressed by (channel, eps index).
    Csi,
    /// Method-internal randomness (e.g. SDR rounding); (channel, block).
    Method,
    /// Achievable-rate draws; addressed by (channel, batch).
    Rate,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Channel => 1,
            StreamPurpose::Trials => 2,
            StreamPurpose::Csi => 3,
            StreamPurpose::Method => 4,
            StreamPurpose::Rate => 5,
        }
    }
}

/// Derives the RNG for one work unit from the master seed.
///
/// Indices are packed into disjoint bit fields, so distinct `(purpose, a,
/// b, c)` tuples can never collide. Each index must stay below `2^20`.
pub fn substream(seed: u64, purpose: StreamPurpose, a: u64, b: u64, c: u64) -> ChaCha8Rng {
    assert!(a < (1 << 20) && b < (1 << 20) && c < (1 << 20), "substream index overflow");
    let stream = (purpose.tag() << 60) | (a << 40) | (b << 20) | c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
