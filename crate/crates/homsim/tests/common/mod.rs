//! Independent oracles shared by the integration suites.

use homsim::correlator::CorrelationHistogram;
use homsim::model::ModelParams;

/// Literal O(n²) double-loop correlation with the same binning convention as
/// the production correlator: the reference every fast path is judged
/// against.
pub fn brute_force_cross(
    a: &[u64],
    b: &[u64],
    bin_width: i64,
    tau_max: i64,
) -> CorrelationHistogram {
    let m = tau_max / bin_width;
    let n_bins = (2 * m + 1) as usize;
    let tau_min_x2 = -(2 * m + 1) * bin_width;
    let mut counts = vec![0u64; n_bins];
    for &ta in a {
        for &tb in b {
            let tau_x2 = 2 * (tb as i64 - ta as i64);
            if tau_x2 >= tau_min_x2 && tau_x2 < -tau_min_x2 {
                counts[((tau_x2 - tau_min_x2) / (2 * bin_width)) as usize] += 1;
            }
        }
    }
    let t_min = a.iter().chain(b).min().copied().unwrap_or(0) as i64;
    let t_max = a.iter().chain(b).max().copied().unwrap_or(0) as i64;
    CorrelationHistogram {
        bin_width_ps: bin_width,
        tau_min_ps: tau_min_x2 / 2,
        counts,
        n_a: a.len() as u64,
        n_b: b.len() as u64,
        duration_ps: (t_max - t_min).max(0) as u64,
        normalized: None,
    }
}

/// Fourth-order intensity-moment oracle for the superposed beam-splitter
/// output fields: ⟨I₁(t)I₂(t+τ)⟩ (cross-port) and ⟨I₁(t)I₁(t+τ)⟩
/// (same-port), expanded term by term with the moment rules
/// ⟨I_L I_L'⟩ = η²g²_L, ⟨I_SP I_SP'⟩ = g²_SP, ⟨I_L I_SP'⟩ = η,
/// ⟨x·x'⟩ = 2RTηV₀|g¹_SP||g¹_L|cos(2πΔfτ), odd cross terms vanishing by the
/// uniform global laser phase. Normalizations are ⟨I₁⟩⟨I₂⟩ and ⟨I₁⟩².
pub fn oracle_g2(tau_ps: i64, p: &ModelParams, same_port: bool) -> f64 {
    let eta = p.eta;
    let (r, t) = (p.r, p.t);
    let g2_l = 1.0;
    let g2_sp = 1.0 - (1.0 - p.g2_sp0) * (-(tau_ps.abs() as f64) / p.tau_c_ps).exp();
    let g1_l = (-(tau_ps.abs() as f64) / p.tau_l_ps).exp();
    let g1_sp = 1.0;
    let beat = (2.0 * std::f64::consts::PI * p.delta_f_hz * tau_ps as f64 * 1e-12).cos();
    let baseline = |c_l: f64, c_s: f64, d_l: f64, d_s: f64| {
        c_l * d_l * eta * eta * g2_l + c_s * d_s * g2_sp + (c_l * d_s + c_s * d_l) * eta
    };
    let xx = 2.0 * r * t * eta * p.v0 * g1_sp * g1_l * beat;
    let mean_i1 = r * eta + t;
    let mean_i2 = t * eta + r;
    if same_port {
        (baseline(r, t, r, t) + xx) / (mean_i1 * mean_i1)
    } else {
        (baseline(r, t, t, r) - xx) / (mean_i1 * mean_i2)
    }
}

/// Seeded Poisson arrival times over [0, duration), used where the test
/// needs raw streams without the synthesizer.
pub fn poisson_times(rng: &mut impl rand::Rng, rate_hz: f64, duration_ps: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mean_gap = 1e12 / rate_hz;
    let mut t = 0.0f64;
    loop {
        t += -mean_gap * (1.0 - rng.gen::<f64>()).ln();
        if t >= duration_ps as f64 {
            return out;
        }
        out.push(t as u64);
    }
}
