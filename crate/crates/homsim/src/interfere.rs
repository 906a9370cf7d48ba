//! Beam-splitter mixing of the two photon streams and detector effects.
//!
//! Two engines produce detector click streams from the same source streams:
//!
//! * **Routing** — semiclassical: every photon is routed by the
//!   instantaneous output-intensity fraction p₁(t) = ½[1 + v·cos Δφ(t)],
//!   v = 2√η·a/(1+η), where Δφ is the laser−SP phase difference (beat ramp
//!   plus phase diffusion). Second-order interference only: the extracted
//!   visibility never exceeds the 50% classical limit.
//! * **Kernel** — samples the quantum two-photon coincidence statistics:
//!   photons route 50/50 independently except that each single photon is
//!   conditioned on its nearest laser photon within 5τ_L through the joint
//!   port distribution {(1,1),(1,2),(2,1),(2,2)} ∝ {1+K, 1−K, 1−K, 1+K}/4,
//!   K = V₀·e^{−|τ|/τ_L}·cos(2πΔf·τ) in the parallel configuration. The
//!   normalized cross-correlation converges to the full model in the
//!   sparse-single-photon regime; conditioning on the nearest laser only
//!   dilutes the measured envelope by e^{−2·r_L·|τ|}, negligible when
//!   r_L·τ_L ≪ 1.
//!
//! The routing engine evolves its own laser-phase realization over the
//! merged arrival times (same Wiener law as the synthesizer, own seed): the
//! per-event phases carried by laser events sample the laser field only at
//! laser arrival times, which is not enough to route single photons exactly.
//!
//! Both engines draw from (seed, chunk, role) streams, so batch and chunked
//! (pipeline) processing produce bit-identical clicks.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::{sequential_rng, stream_rng, StreamRole, CHUNK_PS};
use crate::synth::PhotonEvent;

/// Detector channel tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    D1,
    D2,
}

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickRecord {
    pub t_ps: u64,
    pub channel: Channel,
}

/// Polarization configuration of the two inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pol {
    Parallel,
    Perpendicular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Routing,
    Kernel,
}

/// Which sources a photon pair comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairType {
    LaserLaser,
    SpSp,
    LaserSp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub pol: Pol,
    /// Fig.-5 topology: both detectors look at a 50/50 split of output
    /// port 1 (autocorrelation of one output); port 2 is discarded.
    pub same_port_hbt: bool,
    /// Field amplitude overlap of the routing engine. The mode overlap is
    /// its square: defaults to √v0 when unset.
    pub amp_overlap: Option<f64>,
    /// Accept an amp_overlap inconsistent with model.v0.
    pub allow_overlap_mismatch: bool,
    pub model: ModelParams,
    pub engine: Engine,
    pub seed: u64,
}

impl InterferometerConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if let Some(a) = self.amp_overlap {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::domain("amp_overlap must be in [0,1]"));
            }
            if !self.allow_overlap_mismatch && (a * a - self.model.v0).abs() >= 1e-9 {
                return Err(Error::config(format!(
                    "amp_overlap² = {} inconsistent with v0 = {}",
                    a * a,
                    self.model.v0
                )));
            }
        }
        Ok(())
    }

    pub fn effective_amp_overlap(&self) -> f64 {
        self.amp_overlap.unwrap_or_else(|| self.model.v0.sqrt())
    }
}

/// Detector imperfections, applied in this order: efficiency thinning,
/// Gaussian timing jitter (then re-sort), non-paralyzable dead time per
/// channel, dark-count injection (darks are an independent stream and
/// bypass the dead-time filter).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub jitter_sigma_ps: f64,
    pub dead_time_ps: u64,
    pub dark_rate_hz: f64,
    pub efficiency: f64,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            jitter_sigma_ps: 0.0,
            dead_time_ps: 0,
            dark_rate_hz: 0.0,
            efficiency: 1.0,
            seed: 0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma_ps >= 0.0) || !self.jitter_sigma_ps.is_finite() {
            return Err(Error::domain("jitter_sigma_ps must be >= 0"));
        }
        if !(self.dark_rate_hz >= 0.0) || !self.dark_rate_hz.is_finite() {
            return Err(Error::domain("dark_rate_hz must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::domain("efficiency must be in [0,1]"));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.jitter_sigma_ps == 0.0
            && self.dead_time_ps == 0
            && self.dark_rate_hz == 0.0
            && self.efficiency == 1.0
    }
}

/// Interference weight K(τ) = V₀·e^{−|τ|/τ_L}·cos(2πΔf·τ) in the parallel
/// configuration, 0 in the perpendicular one.
fn interference_k(pol: Pol, tau_ps: i64, model: &ModelParams) -> f64 {
    match pol {
        Pol::Perpendicular => 0.0,
        Pol::Parallel => {
            model.v0
                * (-(tau_ps.unsigned_abs() as f64) / model.tau_l_ps).exp()
                * model.beat_phase(tau_ps).cos()
        }
    }
}

/// Relative two-photon coincidence weight for a photon pair at delay τ.
/// Only laser–single-photon pairs interfere: 1 − K across output ports,
/// 1 + K into the same port; every other combination is 1.
pub fn pair_kernel(
    pair: PairType,
    pol: Pol,
    same_port: bool,
    tau_ps: i64,
    model: &ModelParams,
) -> f64 {
    match pair {
        PairType::LaserLaser | PairType::SpSp => 1.0,
        PairType::LaserSp => {
            let k = interference_k(pol, tau_ps, model);
            if same_port {
                1.0 + k
            } else {
                1.0 - k
            }
        }
    }
}

/// Merge the chunk's laser and single-photon arrivals in time order.
fn merge_sources<'a>(laser: &'a [u64], sp: &'a [u64]) -> impl Iterator<Item = (u64, bool)> + 'a {
    let mut li = 0;
    let mut si = 0;
    std::iter::from_fn(move || {
        let take_laser = match (laser.get(li), sp.get(si)) {
            (Some(&l), Some(&s)) => l <= s,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => return None,
        };
        if take_laser {
            li += 1;
            Some((laser[li - 1], true))
        } else {
            si += 1;
            Some((sp[si - 1], false))
        }
    })
}

/// Detection stage shared by both engines: port-1 photons either go
/// straight to the two detectors (cross-port topology, port index = channel)
/// or through a second 50/50 splitter with port-2 photons discarded
/// (same-port HBT topology).
struct DetectionStage {
    same_port: bool,
}

impl DetectionStage {
    fn place(
        &self,
        t: u64,
        port1: bool,
        split_rng: &mut impl Rng,
        d1: &mut Vec<u64>,
        d2: &mut Vec<u64>,
    ) {
        if self.same_port {
            if port1 {
                if split_rng.gen::<f64>() < 0.5 {
                    d1.push(t);
                } else {
                    d2.push(t);
                }
            }
        } else if port1 {
            d1.push(t);
        } else {
            d2.push(t);
        }
    }
}

/// Semiclassical phase-correlated routing engine (streaming form).
pub(crate) struct RoutingEngine {
    v: f64,
    parallel: bool,
    stage: DetectionStage,
    tau_l_ps: f64,
    delta_f_hz: f64,
    seed: u64,
    phase: f64,
    prev_t: Option<u64>,
}

impl RoutingEngine {
    pub(crate) fn new(cfg: &InterferometerConfig) -> Result<Self> {
        cfg.validate()?;
        let eta = cfg.model.eta;
        let a = cfg.effective_amp_overlap();
        // 2√η·a/(1+η) ≤ 1 by AM–GM; the routing probability stays in [0,1].
        let v = 2.0 * eta.sqrt() * a / (1.0 + eta);
        let mut init = stream_rng(cfg.seed, u64::MAX, StreamRole::PhaseWalk);
        let theta0 = init.gen::<f64>() * 2.0 * std::f64::consts::PI;
        Ok(RoutingEngine {
            v,
            parallel: cfg.pol == Pol::Parallel,
            stage: DetectionStage { same_port: cfg.same_port_hbt },
            tau_l_ps: cfg.model.tau_l_ps,
            delta_f_hz: cfg.model.delta_f_hz,
            seed: cfg.seed,
            phase: theta0,
            prev_t: None,
        })
    }

    /// Route one chunk of arrivals (both sources, chunk `k`). Returns the
    /// per-detector click times, sorted.
    pub(crate) fn process_chunk(
        &mut self,
        k: u64,
        laser: &[u64],
        sp: &[u64],
    ) -> (Vec<u64>, Vec<u64>) {
        const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
        let mut walk = stream_rng(self.seed, k, StreamRole::PhaseWalk);
        let mut route = stream_rng(self.seed, k, StreamRole::PortA);
        let mut split = stream_rng(self.seed, k, StreamRole::HbtSplit);
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        for (t, _source) in merge_sources(laser, sp) {
            let p1 = if self.parallel {
                // Advance the laser-phase realization to this arrival; the
                // SP frame phase is 0, so Δφ is the laser phase itself.
                if let Some(p) = self.prev_t {
                    let dt = (t - p) as f64;
                    let z: f64 = walk.sample(StandardNormal);
                    self.phase += (2.0 * dt / self.tau_l_ps).sqrt() * z
                        + TWO_PI * self.delta_f_hz * dt * 1e-12;
                    self.phase = self.phase.rem_euclid(TWO_PI);
                }
                self.prev_t = Some(t);
                0.5 * (1.0 + self.v * self.phase.cos())
            } else {
                0.5
            };
            let port1 = route.gen::<f64>() < p1;
            self.stage.place(t, port1, &mut split, &mut d1, &mut d2);
        }
        (d1, d2)
    }
}

/// Laser arrivals of one chunk with their realized output ports.
pub(crate) struct LaserChunk {
    pub times: Vec<u64>,
    pub port1: Vec<bool>,
}

impl LaserChunk {
    pub(crate) fn route(seed: u64, k: u64, times: Vec<u64>) -> Self {
        let mut rng = stream_rng(seed, k, StreamRole::PortA);
        let port1 = times.iter().map(|_| rng.gen::<f64>() < 0.5).collect();
        LaserChunk { times, port1 }
    }
}

/// Pair-kernel sampling engine (streaming form). Single photons in chunk k
/// may be conditioned on laser photons in chunks k−1..k+1; the partner
/// window is bounded by the chunk length.
pub(crate) struct KernelEngine {
    pol: Pol,
    stage: DetectionStage,
    model: ModelParams,
    seed: u64,
    window_ps: u64,
}

impl KernelEngine {
    pub(crate) fn new(cfg: &InterferometerConfig) -> Result<Self> {
        cfg.validate()?;
        let window_ps = (5.0 * cfg.model.tau_l_ps).ceil() as u64;
        if window_ps > CHUNK_PS {
            return Err(Error::config(format!(
                "kernel engine needs 5·tau_l ({window_ps} ps) <= chunk length ({CHUNK_PS} ps)"
            )));
        }
        Ok(KernelEngine {
            pol: cfg.pol,
            stage: DetectionStage { same_port: cfg.same_port_hbt },
            model: cfg.model,
            seed: cfg.seed,
            window_ps,
        })
    }

    /// Route the single photons of chunk `k` and emit the chunk's clicks.
    /// `prev`/`cur`/`next` are the routed laser chunks of k−1, k, k+1.
    pub(crate) fn process_chunk(
        &mut self,
        k: u64,
        sp: &[u64],
        prev: Option<&LaserChunk>,
        cur: &LaserChunk,
        next: Option<&LaserChunk>,
    ) -> (Vec<u64>, Vec<u64>) {
        let mut sp_rng = stream_rng(self.seed, k, StreamRole::PortB);
        let mut split = stream_rng(self.seed, k, StreamRole::HbtSplit);

        // The SP times are ascending, so the nearest laser is found with a
        // rolling cursor over the concatenated prev|cur|next laser chunks.
        let segs: Vec<&LaserChunk> = [prev, Some(cur), next].into_iter().flatten().collect();
        let lens: Vec<usize> = segs.iter().map(|c| c.times.len()).collect();
        let total: usize = lens.iter().sum();
        let locate = |mut i: usize| -> (usize, usize) {
            for (s, &l) in lens.iter().enumerate() {
                if i < l {
                    return (s, i);
                }
                i -= l;
            }
            unreachable!("laser index out of range")
        };
        let time_at = |i: usize| -> u64 {
            let (s, off) = locate(i);
            segs[s].times[off]
        };
        let port_at = |i: usize| -> bool {
            let (s, off) = locate(i);
            segs[s].port1[off]
        };

        let mut cursor = 0usize; // first laser with time >= current sp time
        let sp_port1: Vec<bool> = sp
            .iter()
            .map(|&t| {
                let u = sp_rng.gen::<f64>();
                while cursor < total && time_at(cursor) < t {
                    cursor += 1;
                }
                // Nearest of the lasers bracketing t, earlier one on ties.
                let mut best: Option<(u64, usize)> = None;
                for cand in [cursor.wrapping_sub(1), cursor] {
                    if cand < total {
                        let gap = t.abs_diff(time_at(cand));
                        if gap <= self.window_ps && best.map_or(true, |(bg, _)| gap < bg) {
                            best = Some((gap, cand));
                        }
                    }
                }
                match best {
                    Some((_, cand)) => {
                        let tau = t as i64 - time_at(cand) as i64;
                        let kappa = interference_k(self.pol, tau, &self.model);
                        if u < 0.5 * (1.0 + kappa) {
                            port_at(cand)
                        } else {
                            !port_at(cand)
                        }
                    }
                    None => u < 0.5,
                }
            })
            .collect();

        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        let (mut li, mut si) = (0, 0);
        while li < cur.times.len() || si < sp.len() {
            let take_laser = match (cur.times.get(li), sp.get(si)) {
                (Some(&l), Some(&s)) => l <= s,
                (Some(_), None) => true,
                _ => false,
            };
            let (t, port1) = if take_laser {
                li += 1;
                (cur.times[li - 1], cur.port1[li - 1])
            } else {
                si += 1;
                (sp[si - 1], sp_port1[si - 1])
            };
            self.stage.place(t, port1, &mut split, &mut d1, &mut d2);
        }
        (d1, d2)
    }
}

fn check_sorted(events: &[PhotonEvent], what: &str) -> Result<()> {
    for w in events.windows(2) {
        if w[1].t_ps < w[0].t_ps {
            return Err(Error::precondition(format!("{what} stream not sorted")));
        }
    }
    Ok(())
}

fn chunk_slices(times: &[u64], n_chunks: u64) -> Vec<&[u64]> {
    let mut out = Vec::with_capacity(n_chunks as usize);
    let mut lo = 0;
    for k in 0..n_chunks {
        let end = (k + 1) * CHUNK_PS;
        let hi = lo + times[lo..].partition_point(|&t| t < end);
        out.push(&times[lo..hi]);
        lo = hi;
    }
    out
}

fn collect_clicks(per_chunk: Vec<(Vec<u64>, Vec<u64>)>) -> (Vec<ClickRecord>, Vec<ClickRecord>) {
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    for (c1, c2) in per_chunk {
        d1.extend(c1.into_iter().map(|t_ps| ClickRecord { t_ps, channel: Channel::D1 }));
        d2.extend(c2.into_iter().map(|t_ps| ClickRecord { t_ps, channel: Channel::D2 }));
    }
    (d1, d2)
}

fn n_chunks_for(laser: &[u64], sp: &[u64]) -> u64 {
    let last = laser.last().copied().unwrap_or(0).max(sp.last().copied().unwrap_or(0));
    last / CHUNK_PS + 1
}

/// Mix the two streams with the semiclassical routing engine (batch form).
/// The carried event phases are ignored; the engine evolves its own laser
/// phase realization at every arrival time (see the module docs).
pub fn route_phase_engine(
    laser_events: &[PhotonEvent],
    sp_events: &[PhotonEvent],
    cfg: &InterferometerConfig,
) -> Result<(Vec<ClickRecord>, Vec<ClickRecord>)> {
    if cfg.engine != Engine::Routing {
        return Err(Error::config("route_phase_engine requires engine = routing"));
    }
    check_sorted(laser_events, "laser")?;
    check_sorted(sp_events, "sp")?;
    let laser: Vec<u64> = laser_events.iter().map(|e| e.t_ps).collect();
    let sp: Vec<u64> = sp_events.iter().map(|e| e.t_ps).collect();
    let mut engine = RoutingEngine::new(cfg)?;
    let n = n_chunks_for(&laser, &sp);
    let lc = chunk_slices(&laser, n);
    let sc = chunk_slices(&sp, n);
    let per_chunk = (0..n as usize)
        .map(|k| engine.process_chunk(k as u64, lc[k], sc[k]))
        .collect();
    Ok(collect_clicks(per_chunk))
}

/// Mix the two streams with the pair-kernel sampling engine (batch form).
pub fn sample_kernel_engine(
    laser_events: &[PhotonEvent],
    sp_events: &[PhotonEvent],
    cfg: &InterferometerConfig,
) -> Result<(Vec<ClickRecord>, Vec<ClickRecord>)> {
    if cfg.engine != Engine::Kernel {
        return Err(Error::config("sample_kernel_engine requires engine = kernel"));
    }
    check_sorted(laser_events, "laser")?;
    check_sorted(sp_events, "sp")?;
    let laser: Vec<u64> = laser_events.iter().map(|e| e.t_ps).collect();
    let sp: Vec<u64> = sp_events.iter().map(|e| e.t_ps).collect();
    let mut engine = KernelEngine::new(cfg)?;
    let n = n_chunks_for(&laser, &sp);
    let lc = chunk_slices(&laser, n);
    let sc = chunk_slices(&sp, n);
    let routed: Vec<LaserChunk> = (0..n as usize)
        .map(|k| LaserChunk::route(cfg.seed, k as u64, lc[k].to_vec()))
        .collect();
    let per_chunk = (0..n as usize)
        .map(|k| {
            let prev = if k > 0 { Some(&routed[k - 1]) } else { None };
            let next = routed.get(k + 1);
            engine.process_chunk(k as u64, sc[k], prev, &routed[k], next)
        })
        .collect();
    Ok(collect_clicks(per_chunk))
}

/// Apply detector imperfections to a sorted, possibly mixed-channel click
/// stream over the observation span `duration_ps`. Deterministic in
/// `det.seed`; identity settings return the input unchanged. Output is
/// sorted, strictly increasing per channel (1 ps tie-bumping after jitter).
pub fn apply_detector_effects(
    clicks: &[ClickRecord],
    duration_ps: u64,
    det: &DetectorConfig,
) -> Result<Vec<ClickRecord>> {
    det.validate()?;
    for w in clicks.windows(2) {
        if w[1].t_ps < w[0].t_ps {
            return Err(Error::precondition("click stream not sorted"));
        }
    }
    if det.is_identity() {
        return Ok(clicks.to_vec());
    }
    let mut rng = sequential_rng(det.seed);

    // Efficiency thinning, then jitter (each survivor draws in order).
    let shift_max = (8.0 * det.jitter_sigma_ps).ceil();
    let mut out: Vec<ClickRecord> = Vec::with_capacity(clicks.len());
    for &c in clicks {
        if det.efficiency < 1.0 && rng.gen::<f64>() >= det.efficiency {
            continue;
        }
        let t = if det.jitter_sigma_ps > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            let shift = (det.jitter_sigma_ps * z).clamp(-shift_max, shift_max);
            let t = c.t_ps as f64 + shift;
            if t < 0.0 {
                0
            } else {
                t.round() as u64
            }
        } else {
            c.t_ps
        };
        out.push(ClickRecord { t_ps: t, channel: c.channel });
    }
    out.sort_by_key(|c| (c.t_ps, c.channel == Channel::D2));

    // Non-paralyzable dead time per channel.
    if det.dead_time_ps > 0 {
        let mut last: [Option<u64>; 2] = [None, None];
        out.retain(|c| {
            let ch = (c.channel == Channel::D2) as usize;
            match last[ch] {
                Some(prev) if c.t_ps < prev + det.dead_time_ps => false,
                _ => {
                    last[ch] = Some(c.t_ps);
                    true
                }
            }
        });
    }

    // Independent uniform dark counts, injected after the dead-time filter.
    if det.dark_rate_hz > 0.0 && duration_ps > 0 {
        let mean_gap_ps = 1e12 / det.dark_rate_hz;
        for channel in [Channel::D1, Channel::D2] {
            let mut t = 0.0f64;
            loop {
                t += -mean_gap_ps * (1.0 - rng.gen::<f64>()).ln();
                if t >= duration_ps as f64 {
                    break;
                }
                out.push(ClickRecord { t_ps: t as u64, channel });
            }
        }
        out.sort_by_key(|c| (c.t_ps, c.channel == Channel::D2));
    }

    // Strictly increasing per channel.
    let mut last: [Option<u64>; 2] = [None, None];
    for c in out.iter_mut() {
        let ch = (c.channel == Channel::D2) as usize;
        if let Some(prev) = last[ch] {
            if c.t_ps <= prev {
                c.t_ps = prev + 1;
            }
        }
        last[ch] = Some(c.t_ps);
    }
    out.sort_by_key(|c| (c.t_ps, c.channel == Channel::D2));
    Ok(out)
}
