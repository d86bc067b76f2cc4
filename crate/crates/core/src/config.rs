//! Plain-text key/value configuration files.
//!
//! Format: one `key = value` per line, `#` comments, blank lines ignored.
//! Keys are dotted paths (`ramp.x`, `workload.dp_level`). Unknown keys are
//! rejected so typos fail loudly. Sizes accept unit suffixes (KB, MB, GB
//! decimal; KiB etc binary), durations accept ns/us/ms/s.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: i + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config { line: i + 1, msg: "empty key or value".to_string() });
            }
            if entries.insert(key.clone(), (i + 1, value)).is_some() {
                return Err(Error::Config { line: i + 1, msg: format!("duplicate key `{key}`") });
            }
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    /// Rejects keys outside the allowed set (prefix match for `group.*`).
    pub fn check_known(&self, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            let ok = allowed.iter().any(|a| {
                if let Some(prefix) = a.strip_suffix(".*") {
                    key.starts_with(prefix) && key.len() > prefix.len()
                } else {
                    a == key
                }
            });
            if !ok {
                return Err(Error::Config { line: *line, msg: format!("unknown key `{key}`") });
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Config { line: 0, msg: format!("missing key `{key}`") })
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.entries
            .get(key)
            .map(|(line, v)| {
                parse_u64_with_units(v).ok_or(Error::Config {
                    line: *line,
                    msg: format!("`{key}` is not a count/size: `{v}`"),
                })
            })
            .transpose()
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.get_u64(key)?.unwrap_or(default))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.entries
            .get(key)
            .map(|(line, v)| {
                v.parse::<f64>().map_err(|_| Error::Config {
                    line: *line,
                    msg: format!("`{key}` is not a number: `{v}`"),
                })
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }

    /// Duration in nanoseconds; bare numbers are already nanoseconds.
    pub fn get_duration_ns(&self, key: &str) -> Result<Option<u64>> {
        self.entries
            .get(key)
            .map(|(line, v)| {
                parse_duration_ns(v).ok_or(Error::Config {
                    line: *line,
                    msg: format!("`{key}` is not a duration: `{v}`"),
                })
            })
            .transpose()
    }
}

/// Parses counts and sizes: plain integers, decimal suffixes (K/M/G/T and
/// KB/MB/GB/TB), and binary suffixes (KiB/MiB/GiB/TiB).
pub fn parse_u64_with_units(s: &str) -> Option<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Some(v);
    }
    let lower = s.to_ascii_lowercase();
    let table: [(&str, u64); 16] = [
        ("kib", 1 << 10),
        ("mib", 1 << 20),
        ("gib", 1 << 30),
        ("tib", 1u64 << 40),
        ("kb", 1_000),
        ("mb", 1_000_000),
        ("gb", 1_000_000_000),
        ("tb", 1_000_000_000_000),
        ("k", 1_000),
        ("m", 1_000_000),
        ("g", 1_000_000_000),
        ("t", 1_000_000_000_000),
        ("kbps", 1_000),
        ("mbps", 1_000_000),
        ("gbps", 1_000_000_000),
        ("tbps", 1_000_000_000_000),
    ];
    for (suffix, mult) in table {
        if let Some(num) = lower.strip_suffix(suffix) {
            let num = num.trim();
            if let Ok(v) = num.parse::<f64>() {
                if v >= 0.0 {
                    return Some((v * mult as f64).round() as u64);
                }
            }
        }
    }
    None
}

pub fn parse_duration_ns(s: &str) -> Option<u64> {
    let lower = s.trim().to_ascii_lowercase();
    for (suffix, mult) in [("ns", 1.0), ("us", 1e3), ("ms", 1e6), ("s", 1e9)] {
        if let Some(num) = lower.strip_suffix(suffix) {
            if let Ok(v) = num.trim().parse::<f64>() {
                return Some((v * mult).round() as u64);
            }
        }
    }
    lower.parse::<u64>().ok()
}

/// Deterministic float formatting for CSV output: fixed six significant
/// digits in plain notation, so byte-identical reruns diff cleanly.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return "inf".to_string();
    }
    format!("{v:.6e}")
}
