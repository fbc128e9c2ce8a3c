//! Proximity measures for weighted directed graphs in which every edge and
//! node exists independently with probability equal to its weight.
//!
//! The central quantity is b(A, B), the probability that at least one
//! directed path from A to B is fully present in a random instance of the
//! graph (end nodes themselves are not required to exist). Proximity is
//! reported on a log scale, s = -ln(1 - b), which makes contributions of
//! independent alternative routes add up.
//!
//! Module map:
//!
//! - [`graph`]: weighted digraphs plus the probability-preserving rewrites
//!   (parallel merge, series reduction, node-weight splitting, hyperedge
//!   expansion),
//! - [`exact`]: exact reachability probabilities by recursive edge factoring,
//!   and a brute-force enumerator kept independent as an oracle,
//! - [`mc`]: seeded Monte Carlo estimation, including expected round-trip
//!   distance,
//! - [`paths`]: filtered minimal-path enumeration,
//! - [`approx`]: the iterative per-path contribution solver at three
//!   accuracy/cost trade-offs,
//! - [`baselines`]: reference measures (random walks with restart, damped
//!   walk counts, shared-neighbor scores, effective conductance, shortest
//!   path),
//! - [`weighting`]: turning domain statistics into edge and node weights,
//!   plus exhaustive parameter search,
//! - [`harness`]: temporal link-prediction benchmarks, metrics, and file
//!   ingestion.

pub mod approx;
pub mod baselines;
pub mod error;
pub mod exact;
pub mod graph;
pub mod harness;
pub mod io;
pub mod mc;
pub mod paths;
pub mod weighting;

pub use error::BlinkError;
pub use graph::{GraphBuilder, NodeId, WeightedGraph};

/// Probabilities are kept this far away from 1 before taking logs, so that
/// a certain connection maps to a large finite score instead of infinity.
pub const COMPLEMENT_FLOOR: f64 = 1e-15;

/// Largest representable connection probability after clamping.
pub const MAX_PROBABILITY: f64 = 1.0 - COMPLEMENT_FLOOR;

/// Log-scale proximity of a connection probability: s = -ln(1 - b), with b
/// clamped to [`MAX_PROBABILITY`]. Monotone in b; a certain connection maps
/// to about 34.54.
#[inline]
pub fn score_from_probability(b: f64) -> f64 {
    -(1.0 - b.min(MAX_PROBABILITY)).ln()
}

/// Inverse of [`score_from_probability`] on the unclamped range.
#[inline]
pub fn probability_from_score(s: f64) -> f64 {
    1.0 - (-s).exp()
}

/// Deterministic seed derivation. Streams for sub-computations are derived
/// from a root seed and structural coordinates (never from execution order),
/// which keeps every result reproducible bit for bit regardless of
/// scheduling. splitmix64 finalization per mixed-in word.
#[inline]
pub fn mix_seed(root: u64, parts: &[u64]) -> u64 {
    let mut state = root.wrapping_add(0x9e37_79b9_7f4a_7c15);
    for &p in parts {
        state ^= splitmix64(p.wrapping_add(state));
        state = splitmix64(state);
    }
    state
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
