//! Counter-based random-number streams.
//!
//! Every stochastic stage draws from a ChaCha8 stream keyed by
//! (seed, time-chunk index, role). A chunk's randomness depends only on its
//! key, never on how many chunks were generated before it or on which worker
//! generated it, so chunked parallel generation reproduces the serial stream
//! bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed time-chunk length: 0.1 s. Generation, routing, and accumulation all
/// tile time with this constant so the (seed, chunk, role) keying is stable.
pub const CHUNK_PS: u64 = 100_000_000_000;

/// Independent stream roles within one time chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    LaserGaps = 0,
    LaserPhase = 1,
    SpGaps = 2,
    SpAccept = 3,
    /// Primary routing draws: all photons (routing engine) or laser ports
    /// (kernel engine).
    PortA = 4,
    /// Secondary routing draws: single-photon ports (kernel engine).
    PortB = 5,
    /// 50/50 split behind the monitored output port (HBT topology).
    HbtSplit = 6,
    /// Laser-phase realization evolved inside the routing engine.
    PhaseWalk = 7,
    DarkCounts = 8,
}

const ROLE_COUNT: u64 = 16;

/// RNG for (seed, chunk, role). ChaCha8's 64-bit stream counter is the
/// jump-ahead mechanism: streams never overlap.
pub fn stream_rng(seed: u64, chunk: u64, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk.wrapping_mul(ROLE_COUNT).wrapping_add(role as u64));
    rng
}

/// Plain sequential RNG for stages that are defined as one ordered pass
/// (detector dead time and the like).
pub fn sequential_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Index of the chunk containing a timestamp.
#[inline]
pub fn chunk_of(t_ps: u64) -> u64 {
    t_ps / CHUNK_PS
}

/// Number of chunks tiling `[0, duration_ps)`.
#[inline]
pub fn chunk_count(duration_ps: u64) -> u64 {
    duration_ps.div_ceil(CHUNK_PS)
}

/// Bounds of chunk `k` clipped to the run duration.
#[inline]
pub fn chunk_bounds(k: u64, duration_ps: u64) -> (u64, u64) {
    let start = k * CHUNK_PS;
    let end = ((k + 1) * CHUNK_PS).min(duration_ps);
    (start, end)
}
