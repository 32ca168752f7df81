//! Flat key-value run configuration. Values come from an optional TOML file
//! and are overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use qbm_core::{Error, Result};
use sha2::{Digest, Sha256};

pub const KEYS: &[&str] = &[
    "p", "zeta", "beta", "omega_c", "cutoff", "tmax", "step", "decimation", "every", "check", "state", "x0", "d",
    "sigma", "grid_n", "times", "zetas", "zeta_min", "zeta_max", "n_zeta", "probes",
];

/// Raw settings before typing, keyed by config name.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    raw: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let mut s = Settings::default();
        for (k, v) in table {
            let value = flatten(&k, &v)?;
            s.set(&k, value)?;
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: String) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.raw.insert(key.to_string(), value);
        Ok(())
    }

    pub fn set_opt<T: ToString>(&mut self, key: &str, value: &Option<T>) -> Result<()> {
        match value {
            Some(v) => self.set(key, v.to_string()),
            None => Ok(()),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(String::as_str)
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.insert(key.to_string(), value);
    }

    pub fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.raw(key).map(str::to_string) {
            None => Ok(None),
            Some(s) => {
                let v = parse_f64(key, &s)?;
                self.record(key, fmt_f64(v));
                Ok(Some(v))
            }
        }
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key)?.unwrap_or(default);
        self.record(key, fmt_f64(v));
        Ok(v)
    }

    pub fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| Error::Config(format!("missing required setting `{key}` (flag --{})", flag(key))))
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = match self.raw(key) {
            None => default,
            Some(s) => s
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("`{key}` expects a non-negative integer, got `{s}`")))?,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn string_or(&mut self, key: &str, default: &str) -> String {
        let v = self.raw(key).unwrap_or(default).trim().to_string();
        self.record(key, v.clone());
        v
    }

    pub fn opt_string(&mut self, key: &str) -> Option<String> {
        let v = self.raw(key)?.trim().to_string();
        self.record(key, v.clone());
        Some(v)
    }

    pub fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(s) = self.raw(key).map(str::to_string) else {
            return Ok(None);
        };
        let values = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| parse_f64(key, p))
            .collect::<Result<Vec<_>>>()?;
        self.record_list(key, &values);
        Ok(Some(values))
    }

    pub fn record_list(&mut self, key: &str, values: &[f64]) {
        let joined = values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",");
        self.record(key, joined);
    }

    pub fn record_value(&mut self, key: &str, value: f64) {
        self.record(key, fmt_f64(value));
    }

    /// `key=value` pairs actually used by the command, sorted by key.
    pub fn fingerprint(&self) -> String {
        self.resolved
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Header lines shared by every output file of one run.
    pub fn header(&self, command: &str) -> Vec<String> {
        let fp = self.fingerprint();
        let digest = Sha256::digest(format!("{command} {fp}").as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        vec![
            format!("qbm {} {command}", env!("CARGO_PKG_VERSION")),
            format!("config {fp}"),
            format!("config_sha256 {hex}"),
        ]
    }
}

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{s}`")))
}

/// Shortest round-tripping decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn flatten(key: &str, v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(fmt_f64(*f)),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Array(items) => items
            .iter()
            .map(|i| match i {
                toml::Value::Integer(n) => Ok(n.to_string()),
                toml::Value::Float(f) => Ok(fmt_f64(*f)),
                _ => Err(Error::Config(format!("`{key}` must be a list of numbers"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(|v| v.join(",")),
        _ => Err(Error::Config(format!("`{key}` must be a scalar or a list of numbers"))),
    }
}
