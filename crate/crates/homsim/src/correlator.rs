//! Auto- and cross-correlation histograms from timestamp streams.
//!
//! Counting is full-pair (every pair inside the delay window), not
//! start-stop: start-stop distorts g² at high rates. Delays are
//! τ = t_b − t_a, binned half-open [lo, hi) with the zero-delay bin centered
//! by choosing tau_min = −(n_bins·Δ)/2. All accumulation is integer-exact;
//! the finite-duration edge correction is applied at normalization time.
//!
//! The incremental [`Correlator`] accepts both streams in arbitrary
//! time-ordered chunks and produces the histogram the batch call would; a
//! sorted-merge sweep keeps memory at the window occupancy, O(n·w) time.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Per-bin normalized values: g² estimate and its Poisson standard error.
/// `sigma` is NaN for empty bins (flagged, not silently zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedBins {
    pub g2: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Binned coincidence counts plus the metadata needed to normalize them to
/// g²(τ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    /// Bin width in picoseconds.
    pub bin_width_ps: i64,
    /// Lower edge of the first bin; equals −(n_bins·Δ)/2 so the center bin
    /// straddles zero delay.
    pub tau_min_ps: i64,
    /// Raw pair counts per bin.
    pub counts: Vec<u64>,
    /// Total events in stream a / stream b.
    pub n_a: u64,
    /// Total events in stream b.
    pub n_b: u64,
    /// Observation span in picoseconds.
    pub duration_ps: u64,
    /// Present after [`CorrelationHistogram::normalize`].
    pub normalized: Option<NormalizedBins>,
}

impl CorrelationHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Center of bin `k` in picoseconds.
    pub fn bin_center_ps(&self, k: usize) -> i64 {
        // tau_min is −(2m+1)Δ/2 for n_bins = 2m+1, so centers are exact
        // integer multiples of Δ.
        self.tau_min_ps + k as i64 * self.bin_width_ps + self.bin_width_ps / 2
    }

    /// Centers of all bins.
    pub fn bin_centers_ps(&self) -> Vec<i64> {
        (0..self.n_bins()).map(|k| self.bin_center_ps(k)).collect()
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Identical binning (bin width, range, bin count)?
    pub fn same_binning(&self, other: &Self) -> bool {
        self.bin_width_ps == other.bin_width_ps
            && self.tau_min_ps == other.tau_min_ps
            && self.counts.len() == other.counts.len()
    }

    /// Normalize counts to g²(τ) with Poisson errors:
    ///
    ///   g²[k] = counts[k] · T / (n_a · n_b · Δ) · T/(T − |τ_k|)
    ///
    /// where the last factor corrects the reduced pair-acceptance span of
    /// edge bins for a finite observation window T. sigma = g²/√counts; bins
    /// with zero counts get g² = 0 and sigma = NaN.
    pub fn normalize(mut self) -> Result<Self> {
        if self.n_a == 0 || self.n_b == 0 {
            return Err(Error::degenerate("normalize: a stream has zero events"));
        }
        if self.duration_ps == 0 {
            return Err(Error::degenerate("normalize: zero observation span"));
        }
        let t = self.duration_ps as f64;
        let base = t / (self.n_a as f64 * self.n_b as f64 * self.bin_width_ps as f64);
        let mut g2 = Vec::with_capacity(self.counts.len());
        let mut sigma = Vec::with_capacity(self.counts.len());
        for (k, &c) in self.counts.iter().enumerate() {
            let tau = self.bin_center_ps(k).unsigned_abs() as f64;
            if tau >= t {
                return Err(Error::degenerate(
                    "normalize: delay window exceeds observation span",
                ));
            }
            let edge = t / (t - tau);
            let val = c as f64 * base * edge;
            g2.push(val);
            sigma.push(if c > 0 { val / (c as f64).sqrt() } else { f64::NAN });
        }
        self.normalized = Some(NormalizedBins { g2, sigma });
        Ok(self)
    }

    /// Sum two histograms accumulated with identical binning. Associative and
    /// commutative; counts, totals, and spans add.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if !self.same_binning(other) {
            return Err(Error::config("merge: binning mismatch"));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(CorrelationHistogram {
            bin_width_ps: self.bin_width_ps,
            tau_min_ps: self.tau_min_ps,
            counts,
            n_a: self.n_a + other.n_a,
            n_b: self.n_b + other.n_b,
            duration_ps: self.duration_ps + other.duration_ps,
            normalized: None,
        })
    }

    /// Empty histogram with the binning implied by (Δ, τ_max).
    pub fn empty(bin_width_ps: i64, tau_max_ps: i64) -> Result<Self> {
        let (n_bins, tau_min_x2) = binning(bin_width_ps, tau_max_ps)?;
        Ok(CorrelationHistogram {
            bin_width_ps,
            tau_min_ps: tau_min_x2 / 2,
            counts: vec![0; n_bins],
            n_a: 0,
            n_b: 0,
            duration_ps: 0,
            normalized: None,
        })
    }

    /// Write the histogram as CSV: `tau_ps,counts,g2,sigma`, one row per bin,
    /// LF line endings. Unnormalized histograms leave g2/sigma empty.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"tau_ps,counts,g2,sigma\n")?;
        for k in 0..self.n_bins() {
            match &self.normalized {
                Some(nb) => writeln!(
                    w,
                    "{},{},{},{}",
                    self.bin_center_ps(k),
                    self.counts[k],
                    nb.g2[k],
                    nb.sigma[k]
                )?,
                None => writeln!(w, "{},{},,", self.bin_center_ps(k), self.counts[k])?,
            }
        }
        Ok(())
    }

    /// Parse the CSV written by [`CorrelationHistogram::write_csv`] back into
    /// a histogram (normalized columns included when present). Binning is
    /// reconstructed from the τ column; n_a/n_b/duration are not stored in
    /// the CSV and come back as zero.
    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::malformed("histogram csv: empty file"))??;
        if header.trim() != "tau_ps,counts,g2,sigma" {
            return Err(Error::malformed(format!(
                "histogram csv: unexpected header {header:?}"
            )));
        }
        let mut centers = Vec::new();
        let mut counts = Vec::new();
        let mut g2 = Vec::new();
        let mut sigma = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::malformed(format!("histogram csv: bad row {line:?}")));
            }
            let center: i64 = fields[0]
                .trim()
                .parse()
                .map_err(|_| Error::malformed(format!("histogram csv: bad tau {:?}", fields[0])))?;
            let c: u64 = fields[1]
                .trim()
                .parse()
                .map_err(|_| Error::malformed(format!("histogram csv: bad counts {:?}", fields[1])))?;
            centers.push(center);
            counts.push(c);
            if !fields[2].trim().is_empty() {
                let g: f64 = fields[2]
                    .trim()
                    .parse()
                    .map_err(|_| Error::malformed("histogram csv: bad g2"))?;
                let s: f64 = fields[3]
                    .trim()
                    .parse()
                    .map_err(|_| Error::malformed("histogram csv: bad sigma"))?;
                g2.push(g);
                sigma.push(s);
            }
        }
        if centers.is_empty() {
            return Err(Error::malformed("histogram csv: no bins"));
        }
        let bin_width = if centers.len() > 1 {
            centers[1] - centers[0]
        } else {
            1
        };
        if bin_width <= 0 {
            return Err(Error::malformed("histogram csv: non-increasing tau column"));
        }
        for w in centers.windows(2) {
            if w[1] - w[0] != bin_width {
                return Err(Error::malformed("histogram csv: uneven binning"));
            }
        }
        let normalized = if g2.len() == counts.len() {
            Some(NormalizedBins { g2, sigma })
        } else if g2.is_empty() {
            None
        } else {
            return Err(Error::malformed("histogram csv: partially normalized rows"));
        };
        Ok(CorrelationHistogram {
            bin_width_ps: bin_width,
            tau_min_ps: centers[0] - bin_width / 2,
            counts,
            n_a: 0,
            n_b: 0,
            duration_ps: 0,
            normalized,
        })
    }
}

/// Validate (Δ, τ_max) and derive (n_bins, 2·tau_min). Working in doubled
/// units keeps the half-bin offset of the centered zero bin exact for odd Δ.
fn binning(bin_width_ps: i64, tau_max_ps: i64) -> Result<(usize, i64)> {
    if bin_width_ps <= 0 {
        return Err(Error::config("bin width must be positive"));
    }
    if tau_max_ps < bin_width_ps / 2 {
        return Err(Error::config("tau_max must cover at least the zero bin"));
    }
    let m = tau_max_ps / bin_width_ps;
    let n_bins = (2 * m + 1) as usize;
    Ok((n_bins, -(2 * m + 1) * bin_width_ps))
}

/// Incremental full-pair correlator.
///
/// Feed each stream in nondecreasing time order, in chunks of any size and
/// in any interleaving of the two sides; `finish` returns the histogram.
/// Events are buffered only while the opposite stream may still produce a
/// partner inside the delay window.
pub struct Correlator {
    bin_width: i64,
    /// Doubled lower edge of bin 0 (odd multiples of Δ are representable).
    tau_min_x2: i64,
    counts: Vec<u64>,
    buf_a: VecDeque<i64>,
    buf_b: VecDeque<i64>,
    /// Rolling start of the partner window in `buf_b`: a events pop in time
    /// order, so the window start only advances.
    b_window_start: usize,
    frontier_a: i64,
    frontier_b: i64,
    n_a: u64,
    n_b: u64,
    t_min: i64,
    t_max: i64,
    duration_override: Option<u64>,
}

impl Correlator {
    pub fn new(bin_width_ps: i64, tau_max_ps: i64) -> Result<Self> {
        let (n_bins, tau_min_x2) = binning(bin_width_ps, tau_max_ps)?;
        Ok(Correlator {
            bin_width: bin_width_ps,
            tau_min_x2,
            counts: vec![0; n_bins],
            buf_a: VecDeque::new(),
            buf_b: VecDeque::new(),
            b_window_start: 0,
            frontier_a: i64::MIN / 4,
            frontier_b: i64::MIN / 4,
            n_a: 0,
            n_b: 0,
            t_min: i64::MAX,
            t_max: i64::MIN,
            duration_override: None,
        })
    }

    /// Record the true observation span instead of inferring it from the
    /// data extent.
    pub fn set_duration_ps(&mut self, duration_ps: u64) {
        self.duration_override = Some(duration_ps);
    }

    /// Doubled half-width of the delay window.
    #[inline]
    fn win_x2(&self) -> i64 {
        -self.tau_min_x2
    }

    pub fn push_a(&mut self, times_ps: &[u64]) -> Result<()> {
        self.push_side(times_ps, Side::A)
    }

    pub fn push_b(&mut self, times_ps: &[u64]) -> Result<()> {
        self.push_side(times_ps, Side::B)
    }

    fn push_side(&mut self, times_ps: &[u64], side: Side) -> Result<()> {
        let (buf, frontier, n) = match side {
            Side::A => (&mut self.buf_a, &mut self.frontier_a, &mut self.n_a),
            Side::B => (&mut self.buf_b, &mut self.frontier_b, &mut self.n_b),
        };
        for &t in times_ps {
            // Headroom for doubled-unit arithmetic: ~26 days in picoseconds.
            if t > (i64::MAX / 4) as u64 {
                return Err(Error::precondition("timestamp exceeds supported range"));
            }
            let t = t as i64;
            if t < *frontier {
                return Err(Error::precondition("stream not sorted ascending"));
            }
            *frontier = t;
            buf.push_back(t);
            *n += 1;
            self.t_min = self.t_min.min(t);
            self.t_max = self.t_max.max(t);
        }
        self.drain(false);
        Ok(())
    }

    /// Count a-side events whose partner window is fully covered, and drop
    /// b-side events no remaining or future a event can reach.
    fn drain(&mut self, flush: bool) {
        let win = self.win_x2();
        loop {
            // An a event at t is ready once b has been seen through the
            // upper window edge t + win/2 (compared in doubled units).
            let ready = match self.buf_a.front() {
                Some(&t) => flush || 2 * self.frontier_b >= 2 * t + win,
                None => false,
            };
            if !ready {
                break;
            }
            let t = self.buf_a.pop_front().unwrap();
            self.count_partners(t);
            // b events strictly below every a event still to come are dead.
            let a_low = match self.buf_a.front() {
                Some(&next) => next,
                None if flush => i64::MAX / 4,
                None => self.frontier_a,
            };
            while let Some(&tb) = self.buf_b.front() {
                if 2 * (a_low - tb) > win {
                    self.buf_b.pop_front();
                    self.b_window_start = self.b_window_start.saturating_sub(1);
                } else {
                    break;
                }
            }
        }
        if flush {
            self.buf_b.clear();
            self.b_window_start = 0;
        }
    }

    fn count_partners(&mut self, t_a: i64) {
        let win = self.win_x2();
        // Advance the rolling window start to the first b with
        // 2(t_b − t_a) ≥ −win; t_a is nondecreasing, so it never backs up.
        while self
            .buf_b
            .get(self.b_window_start)
            .is_some_and(|&tb| 2 * (tb - t_a) < -win)
        {
            self.b_window_start += 1;
        }
        for idx in self.b_window_start..self.buf_b.len() {
            let tau_x2 = 2 * (self.buf_b[idx] - t_a);
            if tau_x2 >= win {
                break;
            }
            // k = floor((2τ − 2·tau_min) / 2Δ); the offset makes it
            // non-negative inside the window.
            let k = (tau_x2 - self.tau_min_x2) / (2 * self.bin_width);
            self.counts[k as usize] += 1;
        }
    }

    pub fn finish(mut self) -> CorrelationHistogram {
        self.drain(true);
        let duration = self.duration_override.unwrap_or_else(|| {
            if self.t_max >= self.t_min {
                (self.t_max - self.t_min) as u64
            } else {
                0
            }
        });
        CorrelationHistogram {
            bin_width_ps: self.bin_width,
            tau_min_ps: self.tau_min_x2 / 2,
            counts: self.counts,
            n_a: self.n_a,
            n_b: self.n_b,
            duration_ps: duration,
            normalized: None,
        }
    }
}

enum Side {
    A,
    B,
}

/// Cross-correlate two sorted streams: counts[k] holds the number of pairs
/// with τ = t_b − t_a in bin k, over |τ| ≤ τ_max.
pub fn cross_correlate(
    stream_a: &[u64],
    stream_b: &[u64],
    bin_width_ps: i64,
    tau_max_ps: i64,
) -> Result<CorrelationHistogram> {
    let mut c = Correlator::new(bin_width_ps, tau_max_ps)?;
    c.push_a(stream_a)?;
    c.push_b(stream_b)?;
    Ok(c.finish())
}

/// Autocorrelate one sorted stream, excluding self-pairs (i = j). Pairs
/// (i, j) and (j, i) both count, matching the symmetric histogram an HBT
/// measurement of a split stream would produce.
pub fn auto_correlate(
    stream: &[u64],
    bin_width_ps: i64,
    tau_max_ps: i64,
) -> Result<CorrelationHistogram> {
    let mut hist = cross_correlate(stream, stream, bin_width_ps, tau_max_ps)?;
    // Self-pairs all land in the centered zero bin, one per event.
    let center = hist.n_bins() / 2;
    hist.counts[center] -= stream.len() as u64;
    Ok(hist)
}
