//! Subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use homsim::analysis::{fit_hom, FreeMask};
use homsim::correlator::{CorrelationHistogram, Correlator};
use homsim::model::{self, ModelParams};
use homsim::pipeline::{run_pipeline, PttSink};
use homsim::ptt::{PttReader, PttWriter, DEFAULT_RESOLUTION_FS};
use homsim::{Error, Result};

use crate::cli::{CorrelateArgs, FitArgs, ModelArgs, SimulateArgs};
use crate::config::{parse_free_mask, ModelSection, PipelineConfigFile};
use crate::units::{parse_freq_hz, parse_time_ps};

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Emit the analytic correlation curves as CSV `tau_ps,g2_perp,g2_par,v_hom`
/// on a symmetric delay grid. With `--same-port` the columns hold the
/// same-output-port quantities (g²⊥ is shared; g²∥ flips the interference
/// sign; the visibility column becomes [g∥ − g⊥]/g⊥).
pub fn cmd_model(args: &ModelArgs) -> Result<()> {
    let params = ModelParams {
        eta: args.eta,
        v0: args.v0,
        r: args.r,
        t: args.t,
        tau_l_ps: parse_time_ps(&args.tau_l).map_err(Error::config)?,
        tau_c_ps: parse_time_ps(&args.tau_c).map_err(Error::config)?,
        g2_sp0: args.g2sp0,
        delta_f_hz: parse_freq_hz(&args.df).map_err(Error::config)?,
    };
    params.validate()?;
    let tau_max = parse_time_ps(&args.tau_max).map_err(Error::config)? as i64;
    let step = parse_time_ps(&args.step).map_err(Error::config)? as i64;
    if step <= 0 || tau_max < 0 {
        return Err(Error::config("model: step must be > 0 and tau-max >= 0"));
    }
    let mut w = open_output(args.out.as_deref())?;
    w.write_all(b"tau_ps,g2_perp,g2_par,v_hom\n")?;
    let mut tau = -tau_max;
    while tau <= tau_max {
        let (perp, par, vis) = if args.same_port {
            let perp = model::g2_auto_perp(tau, &params)?;
            let par = model::g2_auto_par(tau, &params)?;
            (perp, par, (par - perp) / perp)
        } else {
            (
                model::g2_cross_perp(tau, &params)?,
                model::g2_cross_par(tau, &params)?,
                model::v_hom(tau, &params)?,
            )
        };
        writeln!(w, "{tau},{perp},{par},{vis}")?;
        tau += step;
    }
    w.flush()?;
    Ok(())
}

/// Run synthesis → interferometer → detector and write the click streams to
/// a PTT file; a run manifest goes to standard output as JSON.
pub fn cmd_simulate(args: &SimulateArgs, base_seed: u64) -> Result<()> {
    let cfg = PipelineConfigFile::load(&args.config)?;
    for w in cfg.cross_check_warnings() {
        eprintln!("warning: {w}");
    }
    let spec = cfg.to_spec(base_seed)?;
    for w in spec.synth.validate()? {
        eprintln!("warning: {w}");
    }
    let out_path: PathBuf = match args.out.clone().or_else(|| cfg.output.as_ref()?.ptt.clone()) {
        Some(p) => p,
        None => return Err(Error::config("simulate: no output path (--out or output.ptt)")),
    };
    let writer = PttWriter::new(
        BufWriter::new(File::create(&out_path)?),
        2,
        DEFAULT_RESOLUTION_FS,
    )?;
    let mut sink = PttSink(writer);
    let stats = run_pipeline(&spec, &mut sink)?;
    sink.0.finish()?.flush()?;

    let (n_d1, n_d2) = stats.clicks.first().copied().unwrap_or((0, 0));
    let dur_s = stats.duration_ps as f64 * 1e-12;
    let rate = |n: u64| if dur_s > 0.0 { n as f64 / dur_s } else { 0.0 };
    let manifest = serde_json::json!({
        "output": out_path,
        "seeds": {
            "synth": spec.synth.seed,
            "interferometer": spec.interferometer.seed,
            "detector": spec.detector.seed,
        },
        "duration_ps": stats.duration_ps,
        "counts": { "laser": stats.n_laser, "sp": stats.n_sp, "d1": n_d1, "d2": n_d2 },
        "effective_rates_hz": {
            "laser": rate(stats.n_laser),
            "sp": rate(stats.n_sp),
            "d1": rate(n_d1),
            "d2": rate(n_d2),
        },
        "warnings": stats.warnings,
    });
    println!("{}", serde_json::to_string_pretty(&manifest).expect("manifest json"));
    Ok(())
}

fn parse_channel(s: &str) -> Result<u8> {
    match s.to_ascii_uppercase().as_str() {
        "D1" => Ok(0),
        "D2" => Ok(1),
        other => other
            .parse::<u8>()
            .map_err(|_| Error::config(format!("bad channel {s:?} (expected D1, D2, or an index)"))),
    }
}

/// Correlate two channels of a PTT file (or one channel against itself) and
/// write the normalized histogram CSV.
pub fn cmd_correlate(args: &CorrelateArgs) -> Result<()> {
    let cfg_section = match &args.config {
        Some(path) => PipelineConfigFile::load(path)?.correlator,
        None => None,
    };
    let bin = match (&args.bin, &cfg_section) {
        (Some(s), _) => parse_time_ps(s).map_err(Error::config)? as i64,
        (None, Some(c)) => c.bin_width.0 as i64,
        (None, None) => 10,
    };
    let window = match (&args.window, &cfg_section) {
        (Some(s), _) => parse_time_ps(s).map_err(Error::config)? as i64,
        (None, Some(c)) => c.window.0 as i64,
        (None, None) => 1_000_000,
    };
    let duration_override = match &args.duration {
        Some(d) => Some(parse_time_ps(d).map_err(Error::config)? as u64),
        None => None,
    };

    let file = File::open(&args.input)?;
    let mut reader = PttReader::new(BufReader::new(file))?;
    let (ch_a, ch_b) = if args.auto {
        let ch = parse_channel(&args.channel)?;
        (ch, ch)
    } else {
        (parse_channel(&args.ch_a)?, parse_channel(&args.ch_b)?)
    };
    let mut a: Vec<u64> = Vec::new();
    let mut b: Vec<u64> = Vec::new();
    while let Some((ch, t)) = reader.next_record()? {
        if ch == ch_a {
            a.push(t);
        }
        if ch == ch_b && !args.auto {
            b.push(t);
        }
    }

    let mut w = open_output(args.out.as_deref())?;
    if a.is_empty() || (!args.auto && b.is_empty()) {
        // Nothing to correlate: header-only CSV.
        w.write_all(b"tau_ps,counts,g2,sigma\n")?;
        w.flush()?;
        return Ok(());
    }
    let hist = if args.auto {
        let mut c = Correlator::new(bin, window)?;
        c.push_a(&a)?;
        c.push_b(&a)?;
        let mut h = c.finish();
        let center = h.n_bins() / 2;
        h.counts[center] -= a.len() as u64;
        h
    } else {
        let mut c = Correlator::new(bin, window)?;
        c.push_a(&a)?;
        c.push_b(&b)?;
        c.finish()
    };
    let mut hist = hist;
    if let Some(d) = duration_override {
        hist.duration_ps = d;
    }
    let hist = hist.normalize()?;
    hist.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_hist_csv(path: &Path) -> Result<CorrelationHistogram> {
    let file = File::open(path)?;
    let hist = CorrelationHistogram::read_csv(BufReader::new(file))?;
    if hist.normalized.is_none() {
        return Err(Error::precondition(format!(
            "{path:?} has no g2/sigma columns; correlate with normalization first"
        )));
    }
    Ok(hist)
}

/// Joint fit of the correlation model against a perpendicular/parallel
/// histogram CSV pair; writes the fit result as JSON.
pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let h_perp = read_hist_csv(&args.perp)?;
    let h_par = read_hist_csv(&args.par)?;
    let fit_section = match &args.config {
        Some(path) => PipelineConfigFile::load(path)?.fit,
        None => None,
    };
    let init = match (&args.init, &fit_section) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let section: ModelSection = serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("{path:?}: {e}")))?;
            section.to_params()
        }
        (None, Some(f)) => f.init.to_params(),
        (None, None) => {
            return Err(Error::config("fit: provide --init or a --config with a fit section"))
        }
    };
    let free_names: Vec<String> = if args.free.is_empty() {
        fit_section.as_ref().map(|f| f.free.clone()).unwrap_or_default()
    } else {
        args.free.clone()
    };
    let free = if free_names.is_empty() {
        FreeMask { eta: true, v0: true, ..Default::default() }
    } else {
        let names: Vec<String> = free_names
            .iter()
            .flat_map(|s| s.split(','))
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        parse_free_mask(&names)?
    };
    let fit = fit_hom(&h_perp, &h_par, &init, &free)?;
    let mut w = open_output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &fit).map_err(|e| Error::config(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    if !fit.converged {
        eprintln!("warning: fit did not converge (n_iter = {})", fit.n_iter);
    }
    Ok(())
}
