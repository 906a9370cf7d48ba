//! JSON pipeline configuration.
//!
//! One document describes a full run: sources, interferometer, detector,
//! correlator defaults, fit settings, output paths. Times and frequencies
//! take unit-suffixed strings ("150ns", "10MHz") or bare numbers (ps, Hz).
//! Seed fields are optional; unset seeds derive from the `HOMSIM_SEED`
//! environment variable (default 0) with fixed per-stage offsets.

use serde::Deserialize;
use std::path::PathBuf;

use homsim::analysis::FreeMask;
use homsim::interfere::{DetectorConfig, Engine, InterferometerConfig, Pol};
use homsim::model::ModelParams;
use homsim::pipeline::PipelineSpec;
use homsim::synth::SynthConfig;
use homsim::{Error, Result};

use crate::units::{FreqHz, TimePs};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfigFile {
    pub synth: SynthSection,
    pub interferometer: InterferometerSection,
    #[serde(default)]
    pub detector: Option<DetectorSection>,
    #[serde(default)]
    pub correlator: Option<CorrelatorSection>,
    #[serde(default)]
    pub fit: Option<FitSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub rate_laser: FreqHz,
    pub rate_sp: FreqHz,
    pub duration: TimePs,
    pub tau_l: TimePs,
    pub tau_c: TimePs,
    pub g2_sp0: f64,
    #[serde(default)]
    pub delta_f: Option<FreqHz>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub eta: f64,
    pub v0: f64,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub t: Option<f64>,
    pub tau_l: TimePs,
    pub tau_c: TimePs,
    pub g2_sp0: f64,
    #[serde(default)]
    pub delta_f: Option<FreqHz>,
}

impl ModelSection {
    pub fn to_params(&self) -> ModelParams {
        ModelParams {
            eta: self.eta,
            v0: self.v0,
            r: self.r.unwrap_or(0.5),
            t: self.t.unwrap_or(0.5),
            tau_l_ps: self.tau_l.0,
            tau_c_ps: self.tau_c.0,
            g2_sp0: self.g2_sp0,
            delta_f_hz: self.delta_f.map_or(0.0, |f| f.0),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerSection {
    pub pol: Pol,
    pub engine: Engine,
    #[serde(default)]
    pub same_port_hbt: bool,
    #[serde(default)]
    pub amp_overlap: Option<f64>,
    #[serde(default)]
    pub allow_overlap_mismatch: bool,
    pub model: ModelSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    #[serde(default)]
    pub jitter_sigma: Option<TimePs>,
    #[serde(default)]
    pub dead_time: Option<TimePs>,
    #[serde(default)]
    pub dark_rate: Option<FreqHz>,
    #[serde(default)]
    pub efficiency: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorSection {
    pub bin_width: TimePs,
    pub window: TimePs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub init: ModelSection,
    #[serde(default)]
    pub free: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub ptt: Option<PathBuf>,
}

/// Parse a free-parameter list (names as in the fit JSON; dashes and
/// underscores interchangeable).
pub fn parse_free_mask(names: &[String]) -> Result<FreeMask> {
    let mut mask = FreeMask::default();
    for name in names {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "eta" => mask.eta = true,
            "v0" => mask.v0 = true,
            "tau_l" | "tau_l_ps" => mask.tau_l = true,
            "tau_c" | "tau_c_ps" => mask.tau_c = true,
            "g2sp0" | "g2_sp0" => mask.g2_sp0 = true,
            "df" | "delta_f" | "delta_f_hz" => mask.delta_f = true,
            other => {
                return Err(Error::config(format!(
                    "unknown fit parameter {other:?} (expected eta, v0, tau_l, tau_c, g2_sp0, delta_f)"
                )))
            }
        }
    }
    Ok(mask)
}

impl PipelineConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: PipelineConfigFile =
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{path:?}: {e}")))?;
        Ok(cfg)
    }

    /// Assemble the library-side spec. Unset seeds derive from `base_seed`
    /// with fixed stage offsets so one knob reseeds the whole run.
    pub fn to_spec(&self, base_seed: u64) -> Result<PipelineSpec> {
        if self.synth.duration.0 < 0.0 {
            return Err(Error::config("synth.duration must be >= 0"));
        }
        let synth = SynthConfig {
            rate_laser_hz: self.synth.rate_laser.0,
            rate_sp_hz: self.synth.rate_sp.0,
            duration_ps: self.synth.duration.0 as u64,
            tau_l_ps: self.synth.tau_l.0,
            tau_c_ps: self.synth.tau_c.0,
            g2_sp0: self.synth.g2_sp0,
            delta_f_hz: self.synth.delta_f.map_or(0.0, |f| f.0),
            seed: self.synth.seed.unwrap_or(base_seed),
        };
        let interferometer = InterferometerConfig {
            pol: self.interferometer.pol,
            same_port_hbt: self.interferometer.same_port_hbt,
            amp_overlap: self.interferometer.amp_overlap,
            allow_overlap_mismatch: self.interferometer.allow_overlap_mismatch,
            model: self.interferometer.model.to_params(),
            engine: self.interferometer.engine,
            seed: self.interferometer.seed.unwrap_or(base_seed.wrapping_add(1)),
        };
        interferometer.validate()?;
        let det = self.detector.as_ref();
        let detector = DetectorConfig {
            jitter_sigma_ps: det.and_then(|d| d.jitter_sigma).map_or(0.0, |t| t.0),
            dead_time_ps: det.and_then(|d| d.dead_time).map_or(0.0, |t| t.0) as u64,
            dark_rate_hz: det.and_then(|d| d.dark_rate).map_or(0.0, |f| f.0),
            efficiency: det.and_then(|d| d.efficiency).unwrap_or(1.0),
            seed: det
                .and_then(|d| d.seed)
                .unwrap_or(base_seed.wrapping_add(2)),
        };
        detector.validate()?;
        Ok(PipelineSpec { synth, interferometer, detector })
    }

    /// Consistency notes between the synthesis section and the
    /// interferometer model (rates vs η, shared time constants).
    pub fn cross_check_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let m = &self.interferometer.model;
        if self.synth.rate_sp.0 > 0.0 {
            let ratio = self.synth.rate_laser.0 / self.synth.rate_sp.0;
            if (ratio - m.eta).abs() > 0.01 * m.eta.max(1e-12) {
                out.push(format!(
                    "rate_laser/rate_sp = {ratio:.4} differs from model.eta = {}",
                    m.eta
                ));
            }
        }
        for (name, a, b) in [
            ("tau_l", self.synth.tau_l.0, m.tau_l.0),
            ("tau_c", self.synth.tau_c.0, m.tau_c.0),
        ] {
            if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                out.push(format!("synth.{name} = {a} ps differs from model.{name} = {b} ps"));
            }
        }
        if (self.synth.g2_sp0 - m.g2_sp0).abs() > 1e-12 {
            out.push("synth.g2_sp0 differs from model.g2_sp0".to_string());
        }
        let sf = self.synth.delta_f.map_or(0.0, |f| f.0);
        let mf = m.delta_f.map_or(0.0, |f| f.0);
        if (sf - mf).abs() > 1e-9 * sf.abs().max(1.0) {
            out.push("synth.delta_f differs from model.delta_f".to_string());
        }
        out
    }
}
