//! Visibility extraction and model fitting on normalized correlation
//! histograms.

mod lm;

pub use lm::{LmOptions, LmOutcome};

use serde::{Deserialize, Serialize};

use crate::correlator::CorrelationHistogram;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Canonical fit-parameter order: eta, v0, tau_l_ps, tau_c_ps, g2_sp0,
/// delta_f_hz.
pub const FIT_PARAM_NAMES: [&str; 6] =
    ["eta", "v0", "tau_l_ps", "tau_c_ps", "g2_sp0", "delta_f_hz"];

/// Which model parameters a fit may vary; the rest stay at their initial
/// values. The beam-splitter coefficients are always frozen (they are set
/// by the apparatus, not fitted).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FreeMask {
    pub eta: bool,
    pub v0: bool,
    pub tau_l: bool,
    pub tau_c: bool,
    pub g2_sp0: bool,
    pub delta_f: bool,
}

impl FreeMask {
    pub fn flags(&self) -> [bool; 6] {
        [self.eta, self.v0, self.tau_l, self.tau_c, self.g2_sp0, self.delta_f]
    }

    pub fn count(&self) -> usize {
        self.flags().iter().filter(|&&f| f).count()
    }
}

/// Per-parameter standard errors; zero for frozen parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamStdErr {
    pub eta: f64,
    pub v0: f64,
    pub tau_l_ps: f64,
    pub tau_c_ps: f64,
    pub g2_sp0: f64,
    pub delta_f_hz: f64,
}

/// Outcome of a correlation-model fit.
///
/// `stderr` is sqrt(diag((JᵀWJ)⁻¹)) with the histograms' absolute Poisson
/// sigmas as weights (no reduced-χ² rescaling). `covariance` is the
/// free-parameter block in canonical order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub stderr: ParamStdErr,
    pub chi2_reduced: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub n_bins_used: usize,
    pub free: FreeMask,
    pub covariance: Vec<Vec<f64>>,
}

/// g²⊥, g²∥ and their gradients with respect to the six fit parameters in
/// canonical order, at one delay.
pub(crate) fn model_and_grad(tau_ps: i64, p: &ModelParams) -> (f64, f64, [f64; 6], [f64; 6]) {
    let rt = p.r * p.t;
    let s2 = p.r * p.r + p.t * p.t;
    let a = tau_ps.unsigned_abs() as f64;
    let tau_s = tau_ps as f64 * 1e-12;
    let ec = (-a / p.tau_c_ps).exp();
    let el = (-a / p.tau_l_ps).exp();
    let gsp = 1.0 - (1.0 - p.g2_sp0) * ec;
    let b = p.eta * p.eta * rt + rt * gsp + p.eta * s2;
    let n = (1.0 + p.eta * p.eta) * rt + p.eta * s2;
    let phase = 2.0 * std::f64::consts::PI * p.delta_f_hz * tau_s;
    let (sin_p, cos_p) = phase.sin_cos();
    let interf = 2.0 * p.eta * rt * p.v0 * el * cos_p;

    let g_perp = b / n;
    let g_par = (b - interf) / n;

    let d_bn_eta = 2.0 * p.eta * rt + s2; // ∂B/∂η = ∂N/∂η
    let d_i_eta = 2.0 * rt * p.v0 * el * cos_p;
    let d_gsp_tau_c = -(1.0 - p.g2_sp0) * ec * a / (p.tau_c_ps * p.tau_c_ps);

    let mut grad_perp = [0.0; 6];
    let mut grad_par = [0.0; 6];
    // eta
    grad_perp[0] = d_bn_eta * (n - b) / (n * n);
    grad_par[0] = ((d_bn_eta - d_i_eta) * n - (b - interf) * d_bn_eta) / (n * n);
    // v0
    grad_par[1] = -2.0 * p.eta * rt * el * cos_p / n;
    // tau_l
    grad_par[2] = -2.0 * p.eta * rt * p.v0 * cos_p * el * a / (p.tau_l_ps * p.tau_l_ps) / n;
    // tau_c
    grad_perp[3] = rt * d_gsp_tau_c / n;
    grad_par[3] = grad_perp[3];
    // g2_sp0
    grad_perp[4] = rt * ec / n;
    grad_par[4] = grad_perp[4];
    // delta_f
    grad_par[5] =
        2.0 * p.eta * rt * p.v0 * el * sin_p * 2.0 * std::f64::consts::PI * tau_s / n;

    (g_perp, g_par, grad_perp, grad_par)
}

fn apply_free(x: &[f64], init: &ModelParams, free: &FreeMask) -> ModelParams {
    let mut p = *init;
    let mut i = 0;
    let flags = free.flags();
    let fields: [&mut f64; 6] = [
        &mut p.eta,
        &mut p.v0,
        &mut p.tau_l_ps,
        &mut p.tau_c_ps,
        &mut p.g2_sp0,
        &mut p.delta_f_hz,
    ];
    for (field, &is_free) in fields.into_iter().zip(&flags) {
        if is_free {
            *field = x[i];
            i += 1;
        }
    }
    p
}

fn param_bounds() -> [(f64, f64); 6] {
    [
        (0.0, 1e6),     // eta
        (0.0, 1.0),     // v0
        (1e-3, 1e30),   // tau_l_ps
        (1e-3, 1e30),   // tau_c_ps
        (0.0, 1.0),     // g2_sp0
        (-1e15, 1e15),  // delta_f_hz
    ]
}

struct FitRow {
    tau_ps: i64,
    parallel: bool,
    g2: f64,
    sigma: f64,
}

fn collect_rows(hist: &CorrelationHistogram, parallel: bool, rows: &mut Vec<FitRow>) -> Result<()> {
    let nb = hist
        .normalized
        .as_ref()
        .ok_or_else(|| Error::precondition("histogram must be normalized before fitting"))?;
    for k in 0..hist.n_bins() {
        let sigma = nb.sigma[k];
        if sigma.is_finite() && sigma > 0.0 {
            rows.push(FitRow { tau_ps: hist.bin_center_ps(k), parallel, g2: nb.g2[k], sigma });
        }
    }
    Ok(())
}

/// Joint weighted nonlinear least-squares fit of the cross-correlation
/// model against a perpendicular/parallel histogram pair. The two
/// configurations share all parameters; only the interference term differs.
/// Bins with undefined errors (zero counts) are skipped. `converged` is true
/// when the relative parameter step fell below 1e-8 within 500 iterations;
/// a singular Jacobian returns the partial result flagged unconverged.
pub fn fit_hom(
    h_perp: &CorrelationHistogram,
    h_par: &CorrelationHistogram,
    init: &ModelParams,
    free: &FreeMask,
) -> Result<FitResult> {
    init.validate()?;
    if !h_perp.same_binning(h_par) {
        return Err(Error::config("fit_hom: histogram binning mismatch"));
    }
    let n_free = free.count();
    if n_free == 0 {
        return Err(Error::precondition("fit_hom: no free parameters"));
    }
    let mut rows = Vec::new();
    collect_rows(h_perp, false, &mut rows)?;
    collect_rows(h_par, true, &mut rows)?;
    if rows.len() < 3 * n_free {
        return Err(Error::precondition(format!(
            "fit_hom: {} usable bins for {} free parameters (need ≥ {})",
            rows.len(),
            n_free,
            3 * n_free
        )));
    }

    let flags = free.flags();
    let init_values = [
        init.eta,
        init.v0,
        init.tau_l_ps,
        init.tau_c_ps,
        init.g2_sp0,
        init.delta_f_hz,
    ];
    let all_bounds = param_bounds();
    let mut x0 = Vec::with_capacity(n_free);
    let mut bounds = Vec::with_capacity(n_free);
    for i in 0..6 {
        if flags[i] {
            x0.push(init_values[i]);
            bounds.push(all_bounds[i]);
        }
    }

    let eval = |x: &[f64], r: &mut [f64], jac: Option<&mut [f64]>| {
        let p = apply_free(x, init, free);
        let mut jac = jac;
        for (row_idx, row) in rows.iter().enumerate() {
            let (g_perp, g_par, grad_perp, grad_par) = model_and_grad(row.tau_ps, &p);
            let (g, grad) = if row.parallel { (g_par, grad_par) } else { (g_perp, grad_perp) };
            r[row_idx] = (g - row.g2) / row.sigma;
            if let Some(j) = jac.as_deref_mut() {
                let mut col = 0;
                for i in 0..6 {
                    if flags[i] {
                        j[row_idx * n_free + col] = grad[i] / row.sigma;
                        col += 1;
                    }
                }
            }
        }
    };

    let opts = LmOptions { bounds, ..Default::default() };
    let out = lm::fit(eval, rows.len(), &x0, &opts)?;

    let params = apply_free(&out.params, init, free);
    let mut stderr = ParamStdErr::default();
    {
        let fields: [&mut f64; 6] = [
            &mut stderr.eta,
            &mut stderr.v0,
            &mut stderr.tau_l_ps,
            &mut stderr.tau_c_ps,
            &mut stderr.g2_sp0,
            &mut stderr.delta_f_hz,
        ];
        let mut col = 0;
        for (field, &is_free) in fields.into_iter().zip(&flags) {
            if is_free {
                *field = out.stderr[col];
                col += 1;
            }
        }
    }
    Ok(FitResult {
        params,
        stderr,
        chi2_reduced: out.chi2 / (rows.len() - n_free) as f64,
        converged: out.converged,
        n_iter: out.n_iter,
        n_bins_used: rows.len(),
        free: *free,
        covariance: out.covariance,
    })
}

/// Which difference the visibility curve takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibilityKind {
    /// V = (g⊥ − g∥)/g⊥ — coincidence suppression across output ports.
    CrossPort,
    /// V = (g∥ − g⊥)/g⊥ — bunching into one output port.
    SamePort,
}

/// Per-bin visibility with first-order error propagation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityCurve {
    pub tau_ps: Vec<i64>,
    pub v: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Bins excluded from analysis: undefined errors or g⊥ below the
    /// 10σ floor (division blow-ups in the antibunching trough).
    pub masked: Vec<bool>,
    pub bin_width_ps: i64,
}

impl VisibilityCurve {
    pub fn n_usable(&self) -> usize {
        self.masked.iter().filter(|&&m| !m).count()
    }
}

/// Visibility V(τ) from a perpendicular/parallel histogram pair with
/// identical binning. Bins where g⊥ < 10·σ⊥ (or either error is undefined)
/// are masked; an all-masked result is an error.
pub fn visibility_curve(
    h_perp: &CorrelationHistogram,
    h_par: &CorrelationHistogram,
    kind: VisibilityKind,
) -> Result<VisibilityCurve> {
    if !h_perp.same_binning(h_par) {
        return Err(Error::config("visibility_curve: histogram binning mismatch"));
    }
    let nperp = h_perp
        .normalized
        .as_ref()
        .ok_or_else(|| Error::precondition("perpendicular histogram not normalized"))?;
    let npar = h_par
        .normalized
        .as_ref()
        .ok_or_else(|| Error::precondition("parallel histogram not normalized"))?;
    let n = h_perp.n_bins();
    let mut out = VisibilityCurve {
        tau_ps: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        sigma: Vec::with_capacity(n),
        masked: Vec::with_capacity(n),
        bin_width_ps: h_perp.bin_width_ps,
    };
    for k in 0..n {
        let (gq, sq) = (nperp.g2[k], nperp.sigma[k]);
        let (gp, sp) = (npar.g2[k], npar.sigma[k]);
        out.tau_ps.push(h_perp.bin_center_ps(k));
        let usable = sq.is_finite() && sp.is_finite() && gq > 10.0 * sq;
        if usable {
            let diff = match kind {
                VisibilityKind::CrossPort => gq - gp,
                VisibilityKind::SamePort => gp - gq,
            };
            out.v.push(diff / gq);
            out.sigma
                .push(((sp / gq).powi(2) + (gp * sq / (gq * gq)).powi(2)).sqrt());
            out.masked.push(false);
        } else {
            out.v.push(f64::NAN);
            out.sigma.push(f64::NAN);
            out.masked.push(true);
        }
    }
    if out.n_usable() == 0 {
        return Err(Error::degenerate("visibility_curve: every bin masked"));
    }
    Ok(out)
}

/// Result of a beat-frequency search on a visibility curve.
#[derive(Debug, Clone, PartialEq)]
pub enum BeatResult {
    Beat { delta_f_hz: f64, stderr_hz: f64 },
    /// No oscillation significant at 2σ (or fewer than three periods in the
    /// window).
    NoBeat,
}

/// Extract the beat frequency of the visibility modulation by damped-cosine
/// least squares, seeded by a weighted periodogram scan.
///
/// The central ±2 bins are excluded (the sharp antibunching feature is not
/// part of the beat). Frequencies at the binning Nyquist limit are rejected
/// as a configuration error: the bins are too coarse for the beat.
pub fn extract_beat(vis: &VisibilityCurve) -> Result<BeatResult> {
    let exclude = 2 * vis.bin_width_ps;
    let mut tau = Vec::new();
    let mut val = Vec::new();
    let mut sig = Vec::new();
    for k in 0..vis.tau_ps.len() {
        if vis.masked[k] || vis.tau_ps[k].abs() <= exclude {
            continue;
        }
        tau.push(vis.tau_ps[k] as f64 * 1e-12);
        val.push(vis.v[k]);
        sig.push(vis.sigma[k].max(1e-12));
    }
    if tau.len() < 8 {
        return Err(Error::precondition("extract_beat: too few usable bins"));
    }
    let span_s = tau.iter().cloned().fold(f64::MIN, f64::max)
        - tau.iter().cloned().fold(f64::MAX, f64::min);
    let f_nyquist = 0.5e12 / vis.bin_width_ps as f64;

    // Weighted periodogram over [0, f_nyquist).
    let n_scan = 4096;
    let mut best = (0.0f64, 0.0f64); // (power, frequency)
    for j in 0..n_scan {
        let f = j as f64 * f_nyquist / n_scan as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..tau.len() {
            let w = 1.0 / (sig[i] * sig[i]);
            let ph = 2.0 * std::f64::consts::PI * f * tau[i];
            re += w * val[i] * ph.cos();
            im += w * val[i] * ph.sin();
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, f);
        }
    }
    let f0 = best.1;
    if f0 > 0.9 * f_nyquist {
        return Err(Error::config(format!(
            "extract_beat: beat at {f0:.3e} Hz is at the Nyquist limit of the \
             {} ps binning; use finer bins",
            vis.bin_width_ps
        )));
    }
    if f0 * span_s < 3.0 {
        return Ok(BeatResult::NoBeat);
    }

    // Damped cosine A·e^{−|τ|/τ_d}·cos(2πfτ).
    let a0 = val.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
    let x0 = [a0.max(1e-3), span_s / 4.0, f0];
    let eval = |x: &[f64], r: &mut [f64], jac: Option<&mut [f64]>| {
        let (a, tau_d, f) = (x[0], x[1], x[2]);
        let mut jac = jac;
        for i in 0..tau.len() {
            let t = tau[i];
            let e = (-t.abs() / tau_d).exp();
            let ph = 2.0 * std::f64::consts::PI * f * t;
            let (s_ph, c_ph) = ph.sin_cos();
            r[i] = (a * e * c_ph - val[i]) / sig[i];
            if let Some(j) = jac.as_deref_mut() {
                j[i * 3] = e * c_ph / sig[i];
                j[i * 3 + 1] = a * e * c_ph * t.abs() / (tau_d * tau_d) / sig[i];
                j[i * 3 + 2] =
                    -a * e * s_ph * 2.0 * std::f64::consts::PI * t / sig[i];
            }
        }
    };
    let opts = LmOptions {
        bounds: vec![(-2.0, 2.0), (1e-12, 1e3), (0.0, f_nyquist)],
        ..Default::default()
    };
    let out = lm::fit(eval, tau.len(), &x0, &opts)?;
    let (a_fit, f_fit) = (out.params[0], out.params[2]);
    let (sigma_a, sigma_f) = (out.stderr[0], out.stderr[2]);
    if f_fit > 0.9 * f_nyquist {
        return Err(Error::config(
            "extract_beat: fitted beat sits at the binning Nyquist limit".to_string(),
        ));
    }
    if !sigma_a.is_finite() || a_fit.abs() < 2.0 * sigma_a || f_fit * span_s < 3.0 {
        return Ok(BeatResult::NoBeat);
    }
    Ok(BeatResult::Beat { delta_f_hz: f_fit, stderr_hz: sigma_f })
}

/// One row of an intensity-ratio scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaScanRow {
    pub eta: f64,
    pub v_hom0: f64,
    pub background_peak: f64,
}

/// Zero-delay visibility and background peak across an intensity-ratio
/// grid; the v_hom0 column peaks at √g²_SP(0) and the background column at
/// η = 1.
pub fn scan_eta(model: &ModelParams, eta_grid: &[f64]) -> Result<Vec<EtaScanRow>> {
    if eta_grid.is_empty() {
        return Err(Error::precondition("scan_eta: empty grid"));
    }
    eta_grid
        .iter()
        .map(|&eta| {
            let p = ModelParams { eta, ..*model };
            Ok(EtaScanRow {
                eta,
                v_hom0: crate::model::v_hom(0, &p)?,
                background_peak: crate::model::background_peak(eta, model.v0)?,
            })
        })
        .collect()
}
