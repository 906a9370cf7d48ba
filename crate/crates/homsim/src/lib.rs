//! Simulation and analysis of time-resolved two-photon interference between
//! an independent cw laser and a stream of coherent single photons.
//!
//! The crate is organized as a pipeline:
//!
//! * [`model`] — closed-form cross-correlation functions g²⊥(τ), g²∥(τ), the
//!   HOM visibility, same-output-port bunching variants, and CQED figures of
//!   merit.
//! * [`synth`] — stochastic photon-emission streams: a Poissonian laser with
//!   phase diffusion (Lorentzian line, coherence time τ_L) and an antibunched
//!   single-photon stream (correlation time τ_c) generated by renewal
//!   thinning.
//! * [`interfere`] — beam-splitter mixing under two engines: semiclassical
//!   phase-correlated routing (capped at the 50% classical visibility limit)
//!   and pair-kernel sampling that reproduces the full quantum coincidence
//!   statistics; plus detector imperfections (efficiency, jitter, dead time,
//!   dark counts).
//! * [`correlator`] — high-throughput auto/cross-correlation histograms from
//!   timestamp streams with g²(τ) normalization and Poisson errors.
//! * [`analysis`] — visibility curves, beat-frequency extraction, and joint
//!   nonlinear least-squares fits of the correlation model to histograms.
//! * [`ptt`] — a fixed-width binary timestamp file format.
//! * [`pipeline`] — chunked, deterministic source→splitter→detector runs
//!   feeding correlators or event files.
//!
//! All randomness is counter-based: streams are keyed by (seed, time chunk,
//! role), so identical configurations produce bit-identical output regardless
//! of threading or chunk scheduling.

pub mod analysis;
pub mod correlator;
pub mod error;
pub mod interfere;
pub mod model;
pub mod pipeline;
pub mod ptt;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use model::{CqedParams, ModelParams};
