//! Parameter resolution: config file first, command-line flags on top.
//!
//! A config file is either flat `key = value` lines (`#` starts a comment) or
//! a JSON document previously written with `--format json`, whose `config`
//! object is read back.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_key_values(&text)
        }
    }

    fn from_key_values(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", no + 1)))?;
            values.insert(normalize_key(k.trim()), v.trim().to_string());
        }
        Ok(Params { values })
    }

    fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
        let obj = doc
            .get("config")
            .unwrap_or(&doc)
            .as_object()
            .ok_or_else(|| CliError::Usage("JSON config must be an object".into()))?;
        let mut values = BTreeMap::new();
        for (k, v) in obj {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                other => return Err(CliError::Usage(format!("config key {k}: unsupported value {other}"))),
            };
            values.insert(normalize_key(k), s);
        }
        Ok(Params { values })
    }

    pub fn set(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    /// Fails on keys that the current command does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        for k in self.values.keys() {
            if k != "command" && !allowed.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("unknown parameter '{k}' for this command")));
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            Some(s) => parse_f64(key, s),
            None => Ok(default),
        }
    }

    pub fn f64_required(&self, key: &str) -> Result<f64, CliError> {
        let s = self
            .raw(key)
            .ok_or_else(|| CliError::Usage(format!("missing required parameter --{}", key.replace('_', "-"))))?;
        parse_f64(key, s)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Usage(format!("{key}: '{s}' is not a non-negative integer"))),
            None => Ok(default),
        }
    }

    pub fn grid(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let s = self
            .raw(key)
            .ok_or_else(|| CliError::Usage(format!("missing required grid --{}", key.replace('_', "-"))))?;
        parse_grid(s).map_err(|e| CliError::Usage(format!("{key}: {e}")))
    }
}

fn normalize_key(k: &str) -> String {
    k.replace('-', "_").to_ascii_lowercase()
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{key}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("{key}: value must be finite")));
    }
    Ok(v)
}

/// `start:stop:step` (stop included when hit to rounding), a comma list, or a
/// single value. The result must be strictly increasing.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| -> Result<f64, String> {
        let v: f64 = t.trim().parse().map_err(|_| format!("'{t}' is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err("grid values must be finite".into())
        }
    };
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("'{s}' is not of the form start:stop:step"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) {
            return Err("grid step must be positive".into());
        }
        if stop < start {
            return Err("grid stop is below start".into());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        if count > 10_000_000 {
            return Err("grid has too many points".into());
        }
        (0..=count).map(|i| start + step * i as f64).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err("grid is empty".into());
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err("grid must be strictly increasing".into());
    }
    Ok(grid)
}

/// `re,im` or a plain real number.
pub fn parse_complex(key: &str, s: &str) -> Result<num_complex::Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let vals: Vec<f64> = parts
        .iter()
        .map(|p| parse_f64(key, p))
        .collect::<Result<_, _>>()?;
    match vals[..] {
        [re] => Ok(num_complex::Complex64::new(re, 0.0)),
        [re, im] => Ok(num_complex::Complex64::new(re, im)),
        _ => Err(CliError::Usage(format!("{key}: expected 're,im'"))),
    }
}

/// `r,theta` pair.
pub fn parse_pair(key: &str, s: &str) -> Result<(f64, f64), CliError> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| parse_f64(key, p))
        .collect::<Result<_, _>>()?;
    match vals[..] {
        [a, b] => Ok((a, b)),
        _ => Err(CliError::Usage(format!("{key}: expected 'r,theta'"))),
    }
}
