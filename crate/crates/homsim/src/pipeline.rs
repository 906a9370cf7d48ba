//! Chunked source → beam splitter → detector runs.
//!
//! One pass over simulated time drives any number of interferometer "lanes"
//! sharing the same source streams (e.g. the two polarization
//! configurations, or several detunings): sources are generated chunk by
//! chunk, each lane routes the chunk with its own engine and seed, and the
//! clicks go to that lane's sink. Chunk-keyed randomness makes the result
//! identical to the batch engine calls on fully materialized streams, while
//! memory stays at a few chunks regardless of run length.
//!
//! Detector imperfections are applied on the collected click streams (the
//! statistical runs that need streaming use ideal detectors; runs with
//! detector effects are far smaller).

use rayon::prelude::*;
use std::collections::VecDeque;
use std::io::{Seek, Write};

use crate::correlator::Correlator;
use crate::error::Result;
use crate::interfere::{
    apply_detector_effects, Channel, ClickRecord, DetectorConfig, Engine, InterferometerConfig,
    KernelEngine, LaserChunk, RoutingEngine,
};
use crate::ptt::PttWriter;
use crate::rng::chunk_count;
use crate::synth::{laser_chunk, sp_candidates_chunk, SpThinner, SynthConfig};

/// Full single-lane pipeline settings.
#[derive(Debug, Clone, Copy)]
pub struct PipelineSpec {
    pub synth: SynthConfig,
    pub interferometer: InterferometerConfig,
    pub detector: DetectorConfig,
}

/// Counts and bookkeeping from one run.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub n_laser: u64,
    pub n_sp: u64,
    /// (D1, D2) click counts per lane, in lane order.
    pub clicks: Vec<(u64, u64)>,
    pub duration_ps: u64,
    pub warnings: Vec<String>,
}

/// Consumer of per-chunk click streams (time-ordered within and across
/// chunks, per channel). `Send` so independent lanes can run on workers.
pub trait ClickSink: Send {
    fn chunk(&mut self, d1: &[u64], d2: &[u64]) -> Result<()>;
}

/// Accumulates D1×D2 cross-correlation on the fly.
pub struct CorrelatorSink(pub Correlator);

impl ClickSink for CorrelatorSink {
    fn chunk(&mut self, d1: &[u64], d2: &[u64]) -> Result<()> {
        self.0.push_a(d1)?;
        self.0.push_b(d2)
    }
}

/// Collects all clicks in memory.
#[derive(Default)]
pub struct VecSink {
    pub d1: Vec<u64>,
    pub d2: Vec<u64>,
}

impl ClickSink for VecSink {
    fn chunk(&mut self, d1: &[u64], d2: &[u64]) -> Result<()> {
        self.d1.extend_from_slice(d1);
        self.d2.extend_from_slice(d2);
        Ok(())
    }
}

/// Streams clicks into a PTT file: D1 on channel 0, D2 on channel 1.
pub struct PttSink<W: Write + Seek + Send>(pub PttWriter<W>);

impl<W: Write + Seek + Send> ClickSink for PttSink<W> {
    fn chunk(&mut self, d1: &[u64], d2: &[u64]) -> Result<()> {
        for &t in d1 {
            self.0.write_record(0, t)?;
        }
        for &t in d2 {
            self.0.write_record(1, t)?;
        }
        Ok(())
    }
}

/// One interferometer configuration fed by the shared sources.
pub struct Lane<'a> {
    pub cfg: InterferometerConfig,
    pub sink: &'a mut dyn ClickSink,
}

enum LaneEngine {
    Routing(RoutingEngine),
    Kernel { engine: KernelEngine, routed: VecDeque<(u64, LaserChunk)> },
}

struct LaneState<'a, 'b> {
    lane: &'a mut Lane<'b>,
    engine: LaneEngine,
    n_d1: u64,
    n_d2: u64,
}

struct SourceChunk {
    k: u64,
    laser: Vec<u64>,
    sp: Vec<u64>,
}

const GEN_BATCH: u64 = 4;

/// Run every lane over one shared source realization. Lanes use ideal
/// detectors; apply [`apply_detector_effects`] downstream where needed.
pub fn run_lanes(synth: &SynthConfig, lanes: &mut [Lane<'_>]) -> Result<RunStats> {
    let warnings = synth.validate()?;
    let mut states = Vec::with_capacity(lanes.len());
    for lane in lanes.iter_mut() {
        let engine = match lane.cfg.engine {
            Engine::Routing => LaneEngine::Routing(RoutingEngine::new(&lane.cfg)?),
            Engine::Kernel => LaneEngine::Kernel {
                engine: KernelEngine::new(&lane.cfg)?,
                routed: VecDeque::new(),
            },
        };
        states.push(LaneState { lane, engine, n_d1: 0, n_d2: 0 });
    }

    let mut stats = RunStats {
        duration_ps: synth.duration_ps,
        warnings,
        ..Default::default()
    };
    let n_chunks = chunk_count(synth.duration_ps);
    let mut thinner = SpThinner::default();
    let mut window: VecDeque<SourceChunk> = VecDeque::new();

    let process = |chunk: &SourceChunk,
                       next: Option<&SourceChunk>,
                       states: &mut [LaneState<'_, '_>]|
     -> Result<()> {
        // Lanes are mutually independent given the source chunk.
        states.par_iter_mut().try_for_each(|st| {
            let (d1, d2) = match &mut st.engine {
                LaneEngine::Routing(engine) => {
                    engine.process_chunk(chunk.k, &chunk.laser, &chunk.sp)
                }
                LaneEngine::Kernel { engine, routed } => {
                    // The kernel engine looks one chunk back and forward for
                    // partner lasers; keep the lane's routed window synced.
                    if routed.back().map_or(true, |(k, _)| *k < chunk.k) {
                        routed.push_back((
                            chunk.k,
                            LaserChunk::route(st.lane.cfg.seed, chunk.k, chunk.laser.clone()),
                        ));
                    }
                    if let Some(nx) = next {
                        if routed.back().map_or(true, |(k, _)| *k < nx.k) {
                            routed.push_back((
                                nx.k,
                                LaserChunk::route(st.lane.cfg.seed, nx.k, nx.laser.clone()),
                            ));
                        }
                    }
                    while routed.len() > 3 {
                        routed.pop_front();
                    }
                    let pos = routed.iter().position(|(k, _)| *k == chunk.k).unwrap();
                    let (head, tail) = routed.as_slices();
                    let get = |i: usize| -> &LaserChunk {
                        if i < head.len() { &head[i].1 } else { &tail[i - head.len()].1 }
                    };
                    let prev = if pos > 0 { Some(get(pos - 1)) } else { None };
                    let nxt = if pos + 1 < routed.len() { Some(get(pos + 1)) } else { None };
                    engine.process_chunk(chunk.k, &chunk.sp, prev, get(pos), nxt)
                }
            };
            st.n_d1 += d1.len() as u64;
            st.n_d2 += d2.len() as u64;
            st.lane.sink.chunk(&d1, &d2)
        })
    };

    let mut next_to_generate = 0u64;
    while next_to_generate < n_chunks || window.len() > 1 {
        if next_to_generate < n_chunks {
            let hi = (next_to_generate + GEN_BATCH).min(n_chunks);
            let batch: Vec<(u64, Vec<u64>, Vec<u64>, Vec<f64>)> = (next_to_generate..hi)
                .into_par_iter()
                .map(|k| {
                    let laser = laser_chunk(synth, k);
                    let (cand, us) = sp_candidates_chunk(synth, k);
                    (k, laser, cand, us)
                })
                .collect();
            next_to_generate = hi;
            for (k, laser, cand, us) in batch {
                let sp: Vec<u64> = cand
                    .iter()
                    .zip(&us)
                    .filter(|&(&t, &u)| thinner.accept(t, u, synth.g2_sp0, synth.tau_c_ps))
                    .map(|(&t, _)| t)
                    .collect();
                stats.n_laser += laser.len() as u64;
                stats.n_sp += sp.len() as u64;
                window.push_back(SourceChunk { k, laser, sp });
            }
        }
        // A chunk is safe to process once its successor exists (kernel
        // lookahead) or the run is fully generated.
        while window.len() > 1 || (next_to_generate >= n_chunks && !window.is_empty()) {
            if window.len() == 1 && next_to_generate < n_chunks {
                break;
            }
            let chunk = window.pop_front().unwrap();
            process(&chunk, window.front(), &mut states)?;
        }
    }

    stats.clicks = states.iter().map(|st| (st.n_d1, st.n_d2)).collect();
    Ok(stats)
}

/// Single-lane run with detector effects.
pub fn run_pipeline(spec: &PipelineSpec, sink: &mut dyn ClickSink) -> Result<RunStats> {
    spec.detector.validate()?;
    if spec.detector.is_identity() {
        let mut lanes = [Lane { cfg: spec.interferometer, sink }];
        return run_lanes(&spec.synth, &mut lanes);
    }
    let mut collected = VecSink::default();
    let mut stats = {
        let mut lanes = [Lane { cfg: spec.interferometer, sink: &mut collected }];
        run_lanes(&spec.synth, &mut lanes)?
    };
    // Merge the channels in time order for the detector stage.
    let mut clicks = Vec::with_capacity(collected.d1.len() + collected.d2.len());
    let (mut i, mut j) = (0, 0);
    while i < collected.d1.len() || j < collected.d2.len() {
        let take_d1 = match (collected.d1.get(i), collected.d2.get(j)) {
            (Some(&a), Some(&b)) => a <= b,
            (Some(_), None) => true,
            _ => false,
        };
        if take_d1 {
            clicks.push(ClickRecord { t_ps: collected.d1[i], channel: Channel::D1 });
            i += 1;
        } else {
            clicks.push(ClickRecord { t_ps: collected.d2[j], channel: Channel::D2 });
            j += 1;
        }
    }
    let processed = apply_detector_effects(&clicks, spec.synth.duration_ps, &spec.detector)?;
    let d1: Vec<u64> =
        processed.iter().filter(|c| c.channel == Channel::D1).map(|c| c.t_ps).collect();
    let d2: Vec<u64> =
        processed.iter().filter(|c| c.channel == Channel::D2).map(|c| c.t_ps).collect();
    stats.clicks = vec![(d1.len() as u64, d2.len() as u64)];
    sink.chunk(&d1, &d2)?;
    Ok(stats)
}
