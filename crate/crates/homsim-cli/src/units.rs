//! Unit-suffixed quantities in flags and config files: times accept
//! ps/ns/us/ms/s, frequencies Hz/kHz/MHz/GHz (case-insensitive); bare
//! numbers mean picoseconds and hertz.

use serde::de::{self, Deserializer};
use serde::Deserialize;

fn parse_suffixed(s: &str, table: &[(&str, f64)], what: &str) -> Result<f64, String> {
    let s = s.trim();
    let lower = s.to_ascii_lowercase();
    // Longest suffix first so "ms" does not swallow the "s" of "ns".
    for (suffix, scale) in table {
        if let Some(num) = lower.strip_suffix(suffix) {
            let num = num.trim();
            if num.is_empty() {
                return Err(format!("{what} {s:?}: missing numeric part"));
            }
            return num
                .parse::<f64>()
                .map(|v| v * scale)
                .map_err(|_| format!("{what} {s:?}: bad number {num:?}"));
        }
    }
    s.parse::<f64>().map_err(|_| format!("{what} {s:?}: expected a number or unit suffix"))
}

/// Duration/delay in picoseconds.
pub fn parse_time_ps(s: &str) -> Result<f64, String> {
    const TABLE: [(&str, f64); 5] =
        [("ps", 1.0), ("ns", 1e3), ("us", 1e6), ("ms", 1e9), ("s", 1e12)];
    let v = parse_suffixed(s, &TABLE, "time")?;
    if !v.is_finite() {
        return Err(format!("time {s:?} is not finite"));
    }
    Ok(v)
}

/// Frequency/rate in hertz.
pub fn parse_freq_hz(s: &str) -> Result<f64, String> {
    const TABLE: [(&str, f64); 4] = [("khz", 1e3), ("mhz", 1e6), ("ghz", 1e9), ("hz", 1.0)];
    let v = parse_suffixed(s, &TABLE, "frequency")?;
    if !v.is_finite() {
        return Err(format!("frequency {s:?} is not finite"));
    }
    Ok(v)
}

/// Serde-side wrapper: a JSON number (picoseconds) or a suffixed string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePs(pub f64);

/// Serde-side wrapper: a JSON number (hertz) or a suffixed string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqHz(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrString {
    Num(f64),
    Str(String),
}

impl<'de> Deserialize<'de> for TimePs {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumOrString::deserialize(d)? {
            NumOrString::Num(v) => Ok(TimePs(v)),
            NumOrString::Str(s) => parse_time_ps(&s).map(TimePs).map_err(de::Error::custom),
        }
    }
}

impl<'de> Deserialize<'de> for FreqHz {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumOrString::deserialize(d)? {
            NumOrString::Num(v) => Ok(FreqHz(v)),
            NumOrString::Str(s) => parse_freq_hz(&s).map(FreqHz).map_err(de::Error::custom),
        }
    }
}
