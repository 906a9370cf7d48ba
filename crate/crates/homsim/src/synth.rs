//! Stochastic photon-emission streams with prescribed first- and
//! second-order coherence.
//!
//! The laser is a homogeneous Poisson process carrying a phase-diffusion
//! random walk (Wiener increments of variance 2Δt/τ_L on top of the 2πΔf·t
//! detuning ramp), which gives the Lorentzian coherence envelope
//! ⟨e^{iΔW}⟩ = e^{−|τ|/τ_L}. The single-photon stream is a thinned Poisson
//! process: candidates at the configured rate are accepted with probability
//! g²_SP(t − t_last_accepted), shaping the renewal hazard so the pair
//! correlation approximates the antibunching dip to first order in
//! rate·τ_c. Single-photon events carry the fixed phase 0 of their frame
//! (their coherence time is far longer than every delay of interest).
//!
//! Generation is tiled into fixed time chunks with randomness keyed by
//! (seed, chunk, role); see [`crate::rng`]. Identical configs produce
//! bit-identical streams, and a shorter run is a prefix of a longer one.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model;
use crate::rng::{chunk_count, stream_rng, StreamRole, CHUNK_PS};

/// Which source emitted a photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Laser,
    Sp,
}

/// One emission event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonEvent {
    /// Timestamp in picoseconds.
    pub t_ps: u64,
    pub source: Source,
    /// Optical phase of the source field at emission, wrapped to [0, 2π),
    /// relative to the single-photon frame (the laser phase includes the
    /// 2πΔf·t detuning ramp).
    pub phase_rad: f64,
}

/// Source-stream generation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Mean laser detection-candidate rate in Hz.
    pub rate_laser_hz: f64,
    /// Mean single-photon candidate rate in Hz.
    pub rate_sp_hz: f64,
    /// Run length in picoseconds.
    pub duration_ps: u64,
    /// Laser coherence time in picoseconds.
    pub tau_l_ps: f64,
    /// Single-photon correlation time in picoseconds.
    pub tau_c_ps: f64,
    /// Single-photon zero-delay autocorrelation.
    pub g2_sp0: f64,
    /// Laser detuning from the single-photon frame in Hz.
    pub delta_f_hz: f64,
    pub seed: u64,
}

/// Thinning bias threshold: above rate·τ_c = 1e-2 the sparse approximation
/// is no longer clean and [`SynthConfig::validate`] warns.
pub const SP_RARITY_WARN: f64 = 1e-2;

impl SynthConfig {
    /// Validate hard constraints; returns soft warnings (currently only the
    /// single-photon rarity bound, with its first-order bias estimate).
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.rate_laser_hz >= 0.0) || !self.rate_laser_hz.is_finite() {
            return Err(Error::domain("rate_laser_hz must be >= 0"));
        }
        if !(self.rate_sp_hz >= 0.0) || !self.rate_sp_hz.is_finite() {
            return Err(Error::domain("rate_sp_hz must be >= 0"));
        }
        if !(self.tau_l_ps > 0.0) {
            return Err(Error::domain("tau_l_ps must be > 0"));
        }
        if !(self.tau_c_ps > 0.0) {
            return Err(Error::domain("tau_c_ps must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.g2_sp0) {
            return Err(Error::domain("g2_sp0 must be in [0,1]"));
        }
        if !self.delta_f_hz.is_finite() {
            return Err(Error::domain("delta_f_hz must be finite"));
        }
        let mut warnings = Vec::new();
        let rarity = self.rate_sp_hz * self.tau_c_ps * 1e-12;
        if rarity > SP_RARITY_WARN {
            warnings.push(format!(
                "rate_sp·tau_c = {rarity:.2e} exceeds {SP_RARITY_WARN:.0e}; \
                 thinned pair correlation biased at relative order {rarity:.1e}"
            ));
        }
        Ok(warnings)
    }
}

/// Poisson arrivals inside chunk `k`, exponential gaps accumulated from the
/// chunk start (memorylessness makes per-chunk restarts exact). Offsets are
/// accumulated in f64 relative to the chunk start so late chunks lose no
/// timing precision.
fn poisson_chunk(rate_hz: f64, k: u64, duration_ps: u64, seed: u64, role: StreamRole) -> Vec<u64> {
    if rate_hz <= 0.0 {
        return Vec::new();
    }
    let start = k * CHUNK_PS;
    let end = ((k + 1) * CHUNK_PS).min(duration_ps);
    let span = (end - start) as f64;
    let mean_gap_ps = 1e12 / rate_hz;
    let mut rng = stream_rng(seed, k, role);
    let mut out = Vec::with_capacity((span / mean_gap_ps * 1.1) as usize + 4);
    let mut offset = 0.0f64;
    loop {
        offset += -mean_gap_ps * (1.0 - rng.gen::<f64>()).ln();
        if offset >= span {
            return out;
        }
        let t = start + offset as u64;
        // Integer rounding can alias two very close arrivals; keep streams
        // strictly increasing.
        match out.last() {
            Some(&prev) if t <= prev => {
                if prev + 1 < end {
                    out.push(prev + 1);
                }
            }
            _ => out.push(t),
        }
    }
}

fn poisson_timestamps(rate_hz: f64, cfg: &SynthConfig, role: StreamRole) -> Vec<u64> {
    let chunks: Vec<Vec<u64>> = (0..chunk_count(cfg.duration_ps))
        .into_par_iter()
        .map(|k| poisson_chunk(rate_hz, k, cfg.duration_ps, cfg.seed, role))
        .collect();
    let mut out = Vec::with_capacity(chunks.iter().map(Vec::len).sum());
    for c in chunks {
        out.extend(c);
    }
    out
}

/// Laser field phase at each of the given times.
///
/// φ(tᵢ) = θ₀ + W(tᵢ) + 2πΔf·tᵢ, with W a Wiener walk whose increment over a
/// gap Δt has variance 2Δt/τ_L and θ₀ uniform in [0, 2π). The beat ramp is
/// accumulated gap by gap and everything is wrapped to [0, 2π), so phase
/// *differences* at physical delays keep full precision even late in a long
/// run. Normal increments are drawn from the chunk stream of the event's
/// chunk, so the walk is reproducible under chunked generation.
pub fn gen_laser_phase(
    times_ps: &[u64],
    tau_l_ps: f64,
    delta_f_hz: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(tau_l_ps > 0.0) {
        return Err(Error::domain("tau_l_ps must be > 0"));
    }
    for w in times_ps.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::precondition("times must be strictly increasing"));
        }
    }
    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
    let mut init_rng = stream_rng(seed, u64::MAX, StreamRole::LaserPhase);
    let theta0: f64 = init_rng.gen::<f64>() * TWO_PI;

    let mut phases = Vec::with_capacity(times_ps.len());
    let mut rng_chunk = u64::MAX;
    let mut rng = init_rng; // replaced before first use
    let mut phase = theta0;
    let mut prev_t: Option<u64> = None;
    for &t in times_ps {
        let k = t / CHUNK_PS;
        if prev_t.is_none() || k != rng_chunk {
            rng = stream_rng(seed, k, StreamRole::LaserPhase);
            rng_chunk = k;
        }
        if let Some(p) = prev_t {
            let dt_ps = (t - p) as f64;
            let z: f64 = rng.sample(StandardNormal);
            phase += (2.0 * dt_ps / tau_l_ps).sqrt() * z;
            phase += TWO_PI * delta_f_hz * dt_ps * 1e-12;
            phase = phase.rem_euclid(TWO_PI);
        } else {
            // Fold the detuning ramp accumulated before the first event.
            phase = (phase + TWO_PI * (delta_f_hz * t as f64 * 1e-12).fract()).rem_euclid(TWO_PI);
        }
        phases.push(phase);
        prev_t = Some(t);
    }
    Ok(phases)
}

/// Homogeneous Poisson laser stream with phase samples. Deterministic in the
/// seed; expected count = rate·duration; empty for zero duration or rate.
pub fn gen_laser_events(cfg: &SynthConfig) -> Result<Vec<PhotonEvent>> {
    cfg.validate()?;
    let times = poisson_timestamps(cfg.rate_laser_hz, cfg, StreamRole::LaserGaps);
    let phases = gen_laser_phase(&times, cfg.tau_l_ps, cfg.delta_f_hz, cfg.seed)?;
    Ok(times
        .into_iter()
        .zip(phases)
        .map(|(t_ps, phase_rad)| PhotonEvent { t_ps, source: Source::Laser, phase_rad })
        .collect())
}

/// Renewal-hazard thinning state: accepts a candidate at gap Δt from the
/// last accepted event with probability g²_SP(Δt).
#[derive(Debug, Clone, Copy, Default)]
pub struct SpThinner {
    last_accepted_ps: Option<u64>,
}

impl SpThinner {
    pub fn accept(&mut self, t_ps: u64, u: f64, g2_sp0: f64, tau_c_ps: f64) -> bool {
        let p = match self.last_accepted_ps {
            None => 1.0,
            Some(last) => {
                let gap = (t_ps - last) as i64;
                model::g2_sp(gap, g2_sp0, tau_c_ps).unwrap_or(1.0)
            }
        };
        if u < p {
            self.last_accepted_ps = Some(t_ps);
            true
        } else {
            false
        }
    }
}

/// Laser arrivals for chunk `k`.
pub(crate) fn laser_chunk(cfg: &SynthConfig, k: u64) -> Vec<u64> {
    poisson_chunk(cfg.rate_laser_hz, k, cfg.duration_ps, cfg.seed, StreamRole::LaserGaps)
}

/// Candidate timestamps and their acceptance uniforms for chunk `k`.
pub(crate) fn sp_candidates_chunk(cfg: &SynthConfig, k: u64) -> (Vec<u64>, Vec<f64>) {
    let times = poisson_chunk(cfg.rate_sp_hz, k, cfg.duration_ps, cfg.seed, StreamRole::SpGaps);
    let mut rng = stream_rng(cfg.seed, k, StreamRole::SpAccept);
    let us = times.iter().map(|_| rng.gen::<f64>()).collect();
    (times, us)
}

/// Antibunched single-photon stream: thinned Poisson process, all events at
/// the fixed frame phase 0. Exact pair correlation in the sparse limit;
/// bias O(rate·τ_c) (see [`SynthConfig::validate`]).
pub fn gen_sp_events(cfg: &SynthConfig) -> Result<Vec<PhotonEvent>> {
    cfg.validate()?;
    let chunks: Vec<(Vec<u64>, Vec<f64>)> = (0..chunk_count(cfg.duration_ps))
        .into_par_iter()
        .map(|k| sp_candidates_chunk(cfg, k))
        .collect();
    let mut thinner = SpThinner::default();
    let mut out = Vec::new();
    for (times, us) in &chunks {
        for (&t, &u) in times.iter().zip(us) {
            if thinner.accept(t, u, cfg.g2_sp0, cfg.tau_c_ps) {
                out.push(PhotonEvent { t_ps: t, source: Source::Sp, phase_rad: 0.0 });
            }
        }
    }
    Ok(out)
}
