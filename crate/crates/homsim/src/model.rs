//! Closed-form correlation functions for the laser / single-photon
//! interference experiment.
//!
//! Conventions: the two sources are mixed on a beam splitter with intensity
//! coefficients `r`, `t`; `eta` is the laser-to-single-photon intensity ratio
//! at the splitter; `v0` is the mode overlap. The laser line is Lorentzian
//! (first-order coherence envelope e^{−|τ|/τ_L}) and Poissonian
//! (g²_L(τ) ≡ 1). The single-photon stream carries full first-order
//! coherence (|g¹_SP| = 1) and an antibunching dip
//! g²_SP(τ) = 1 − (1 − g²_SP(0))·e^{−|τ|/τ_c}.
//!
//! All delay arguments are signed picosecond integers; conversion to seconds
//! happens at the boundary and every formula is evaluated in f64.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds per picosecond.
const PS: f64 = 1e-12;

/// Parameters of the two-source interference model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Intensity ratio I_laser / I_SP at the beam splitter.
    pub eta: f64,
    /// Mode overlap on the beam splitter, in [0, 1].
    pub v0: f64,
    /// Beam-splitter intensity reflection coefficient.
    pub r: f64,
    /// Beam-splitter intensity transmission coefficient.
    pub t: f64,
    /// Laser (mutual) coherence time in picoseconds.
    pub tau_l_ps: f64,
    /// Single-photon correlation time in picoseconds (twice the radiative
    /// lifetime).
    pub tau_c_ps: f64,
    /// Single-photon zero-delay autocorrelation g²_SP(0).
    pub g2_sp0: f64,
    /// Frequency separation between the two sources in hertz.
    pub delta_f_hz: f64,
}

impl Default for ModelParams {
    /// Nominal experimental values: eta = 0.2, V0 = 0.85, 50/50 splitter,
    /// τ_L = 150 ns, τ_c = 115 ps, g²_SP(0) = 0.03, degenerate sources.
    fn default() -> Self {
        ModelParams {
            eta: 0.2,
            v0: 0.85,
            r: 0.5,
            t: 0.5,
            tau_l_ps: 150_000.0,
            tau_c_ps: 115.0,
            g2_sp0: 0.03,
            delta_f_hz: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::domain(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.v0) {
            return Err(Error::domain(format!("v0 must be in [0,1], got {}", self.v0)));
        }
        if !(0.0..=1.0).contains(&self.g2_sp0) {
            return Err(Error::domain(format!(
                "g2_sp0 must be in [0,1], got {}",
                self.g2_sp0
            )));
        }
        if !(self.tau_l_ps > 0.0) || !self.tau_l_ps.is_finite() {
            return Err(Error::domain(format!(
                "tau_l_ps must be > 0, got {}",
                self.tau_l_ps
            )));
        }
        if !(self.tau_c_ps > 0.0) || !self.tau_c_ps.is_finite() {
            return Err(Error::domain(format!(
                "tau_c_ps must be > 0, got {}",
                self.tau_c_ps
            )));
        }
        if !(0.0..=1.0).contains(&self.r) || !(0.0..=1.0).contains(&self.t) {
            return Err(Error::domain(format!(
                "r, t must be in [0,1], got r={} t={}",
                self.r, self.t
            )));
        }
        // Lossy splitters (r + t < 1) are allowed; gain is not.
        if self.r + self.t > 1.0 + 1e-12 {
            return Err(Error::domain(format!(
                "r + t must be <= 1, got {}",
                self.r + self.t
            )));
        }
        if !self.delta_f_hz.is_finite() {
            return Err(Error::domain("delta_f_hz must be finite".to_string()));
        }
        Ok(())
    }

    /// Beat phase 2π·Δf·τ for a delay in picoseconds.
    #[inline]
    pub fn beat_phase(&self, tau_ps: i64) -> f64 {
        2.0 * std::f64::consts::PI * self.delta_f_hz * (tau_ps as f64) * PS
    }

    fn is_balanced(&self) -> bool {
        (self.r - 0.5).abs() < 1e-12 && (self.t - 0.5).abs() < 1e-12
    }
}

/// CQED rates of the emitter-cavity system, as (rate / 2π) in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqedParams {
    /// Emitter-cavity interaction strength g/2π.
    pub g_ghz: f64,
    /// Cavity photon decay rate κ/2π.
    pub kappa_ghz: f64,
    /// Emitter spontaneous emission rate γ∥/2π.
    pub gamma_par_ghz: f64,
    /// Pure dephasing rate γ*/2π.
    pub gamma_star_ghz: f64,
}

impl CqedParams {
    /// Polarization decay rate γ⊥ = γ∥/2 + γ*.
    pub fn gamma_perp_ghz(&self) -> f64 {
        self.gamma_par_ghz / 2.0 + self.gamma_star_ghz
    }
}

/// First-order coherence envelope |g¹_L(τ)| = e^{−|τ|/τ_L} of a Lorentzian
/// line. Even in τ, 1 at zero delay, monotone nonincreasing in |τ|.
pub fn g1_envelope(tau_ps: i64, tau_l_ps: f64) -> Result<f64> {
    if !(tau_l_ps > 0.0) || !tau_l_ps.is_finite() {
        return Err(Error::domain(format!("tau_l_ps must be > 0, got {tau_l_ps}")));
    }
    Ok((-(tau_ps.unsigned_abs() as f64) / tau_l_ps).exp())
}

/// Single-photon autocorrelation g²_SP(τ) = 1 − (1 − g²_SP(0))·e^{−|τ|/τ_c}:
/// exponential recovery from the antibunching dip, g²_SP(0) at zero delay,
/// → 1 as |τ| → ∞.
pub fn g2_sp(tau_ps: i64, g2_sp0: f64, tau_c_ps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&g2_sp0) {
        return Err(Error::domain(format!("g2_sp0 must be in [0,1], got {g2_sp0}")));
    }
    if !(tau_c_ps > 0.0) || !tau_c_ps.is_finite() {
        return Err(Error::domain(format!("tau_c_ps must be > 0, got {tau_c_ps}")));
    }
    Ok(1.0 - (1.0 - g2_sp0) * (-(tau_ps.unsigned_abs() as f64) / tau_c_ps).exp())
}

/// Normalization factor N = (1 + η²)RT + η(R² + T²). With r = t = 0.5 this
/// equals (1 + η)²/4.
pub fn normalization(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let n = (1.0 + params.eta * params.eta) * params.r * params.t
        + params.eta * (params.r * params.r + params.t * params.t);
    if n <= 0.0 {
        return Err(Error::degenerate(
            "normalization vanishes (eta = 0 with r·t = 0)".to_string(),
        ));
    }
    Ok(n)
}

/// Cross-polarized cross-correlation of the two detector outputs:
///
/// g²⊥(τ) = [η²RT·g²_L(τ) + RT·g²_SP(τ) + η(R² + T²)] / N
///
/// with g²_L ≡ 1. No interference term; even in τ; → 1 as |τ| → ∞.
pub fn g2_cross_perp(tau_ps: i64, params: &ModelParams) -> Result<f64> {
    let n = normalization(params)?;
    let rt = params.r * params.t;
    let g_sp = g2_sp(tau_ps, params.g2_sp0, params.tau_c_ps)?;
    Ok((params.eta * params.eta * rt
        + rt * g_sp
        + params.eta * (params.r * params.r + params.t * params.t))
        / n)
}

/// Interference term 2ηRT·V₀·e^{−|τ|/τ_L}·cos(2πΔf·τ) / N shared by the
/// parallel-polarized cross- and same-port correlations.
fn interference_term(tau_ps: i64, params: &ModelParams, n: f64) -> Result<f64> {
    let envelope = g1_envelope(tau_ps, params.tau_l_ps)?;
    Ok(2.0 * params.eta * params.r * params.t * params.v0 * envelope
        * params.beat_phase(tau_ps).cos()
        / n)
}

/// Parallel-polarized cross-correlation: g²⊥(τ) minus the fourth-order
/// interference term. May exceed g²⊥ where the beat cosine is negative;
/// equals g²⊥ when v0 = 0.
pub fn g2_cross_par(tau_ps: i64, params: &ModelParams) -> Result<f64> {
    let n = normalization(params)?;
    Ok(g2_cross_perp(tau_ps, params)? - interference_term(tau_ps, params, n)?)
}

/// Same-output-port autocorrelation, cross-polarized: identical to the
/// cross-port g²⊥ (no interference in either).
pub fn g2_auto_perp(tau_ps: i64, params: &ModelParams) -> Result<f64> {
    g2_cross_perp(tau_ps, params)
}

/// Same-output-port autocorrelation, parallel-polarized: the interference
/// term enters with flipped sign (photon bunching into one port instead of
/// coincidence suppression across ports).
pub fn g2_auto_par(tau_ps: i64, params: &ModelParams) -> Result<f64> {
    let n = normalization(params)?;
    Ok(g2_cross_perp(tau_ps, params)? + interference_term(tau_ps, params, n)?)
}

/// HOM visibility V(τ) = [g²⊥(τ) − g²∥(τ)] / g²⊥(τ).
///
/// For a balanced splitter this reduces to the closed form
/// 2ηV₀·e^{−|τ|/τ_L}·cos(2πΔf·τ) / (η² + 2η + g²_SP(τ)), which is used
/// directly; otherwise the definitional ratio of the two correlation
/// functions is evaluated.
pub fn v_hom(tau_ps: i64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if params.is_balanced() {
        let envelope = g1_envelope(tau_ps, params.tau_l_ps)?;
        let g_sp = g2_sp(tau_ps, params.g2_sp0, params.tau_c_ps)?;
        let denom = params.eta * params.eta + 2.0 * params.eta + g_sp;
        if denom <= 0.0 {
            return Err(Error::degenerate("visibility denominator vanishes".to_string()));
        }
        Ok(2.0 * params.eta * params.v0 * envelope * params.beat_phase(tau_ps).cos() / denom)
    } else {
        let perp = g2_cross_perp(tau_ps, params)?;
        if perp <= 0.0 {
            return Err(Error::degenerate(
                "g2_cross_perp vanishes; visibility undefined".to_string(),
            ));
        }
        Ok((perp - g2_cross_par(tau_ps, params)?) / perp)
    }
}

/// Intensity ratio maximizing V_HOM(0): η* = √(g²_SP(0)).
pub fn optimal_eta(g2_sp0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&g2_sp0) {
        return Err(Error::domain(format!("g2_sp0 must be in [0,1], got {g2_sp0}")));
    }
    Ok(g2_sp0.sqrt())
}

/// Peak of the broad visibility background, 2ηV₀/(1 + η)² — the parallel
/// interference contrast with g²_SP → 1. Bounded by V₀/2 ≤ 0.5 for all η
/// (the classical limit), with the maximum at η = 1.
pub fn background_peak(eta: f64, v0: f64) -> Result<f64> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::domain(format!("eta must be >= 0, got {eta}")));
    }
    if !(0.0..=1.0).contains(&v0) {
        return Err(Error::domain(format!("v0 must be in [0,1], got {v0}")));
    }
    Ok(2.0 * eta * v0 / ((1.0 + eta) * (1.0 + eta)))
}

/// Cooperativity C = 2g²/(κγ⊥) and critical photon number
/// n₀ = γ⊥γ∥/(4g²), with γ⊥ = γ∥/2 + γ*.
pub fn cqed_figures(cqed: &CqedParams) -> Result<(f64, f64)> {
    if !(cqed.g_ghz > 0.0) || !(cqed.kappa_ghz > 0.0) || !(cqed.gamma_par_ghz > 0.0) {
        return Err(Error::domain(
            "g, kappa, gamma_par must be > 0".to_string(),
        ));
    }
    if cqed.gamma_star_ghz < 0.0 {
        return Err(Error::domain("gamma_star must be >= 0".to_string()));
    }
    let gamma_perp = cqed.gamma_perp_ghz();
    let g2 = cqed.g_ghz * cqed.g_ghz;
    let cooperativity = 2.0 * g2 / (cqed.kappa_ghz * gamma_perp);
    let n0 = gamma_perp * cqed.gamma_par_ghz / (4.0 * g2);
    Ok((cooperativity, n0))
}
