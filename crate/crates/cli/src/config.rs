//! Run configuration: flags layered over a flat `key=value` file, plus the
//! record of every value a command actually resolved.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use sasakian_core::models::ModelSpace;

use crate::error::CliError;

/// Keys accepted on the command line and in config files.
pub const KEYS: [&str; 18] = [
    "model", "n", "k1", "k2", "dir", "z", "R", "T", "steps", "samples", "seed", "tol", "format", "out",
    "reference", "h-form", "suite", "method",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = key.replace('_', "-");
    KEYS.iter().copied().find(|k| *k == key)
}

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    raw: BTreeMap<&'static str, String>,
    resolved: Vec<(String, String)>,
}

impl Config {
    /// `flags` win over entries of the file at `file`.
    pub fn load(flags: Vec<(&'static str, Option<String>)>, file: Option<&Path>) -> Result<Self, CliError> {
        let mut raw = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
            raw = parse_file(&text)?;
        }
        for (key, value) in flags {
            if let Some(v) = value {
                raw.insert(key, v);
            }
        }
        Ok(Self { raw, resolved: Vec::new() })
    }

    pub fn resolved(&self) -> &[(String, String)] {
        &self.resolved
    }

    pub fn record(&mut self, key: &str, value: String) {
        self.resolved.push((key.to_string(), value));
    }

    pub fn is_set(&self, key: &'static str) -> bool {
        self.raw.contains_key(key)
    }

    fn parse<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError> {
        match self.raw.get(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("invalid value '{v}' for --{key}"))),
        }
    }

    fn missing(key: &str) -> CliError {
        CliError::Usage(format!("missing required flag --{key}"))
    }

    pub fn f64_opt(&mut self, key: &'static str) -> Result<Option<f64>, CliError> {
        let v: Option<f64> = self.parse(key)?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(CliError::Usage(format!("--{key} must be finite")));
            }
            self.record(key, fmt_float(x));
        }
        Ok(v)
    }

    pub fn f64_required(&mut self, key: &'static str) -> Result<f64, CliError> {
        self.f64_opt(key)?.ok_or_else(|| Self::missing(key))
    }

    pub fn f64_or(&mut self, key: &'static str, default: f64) -> Result<f64, CliError> {
        if self.is_set(key) {
            self.f64_required(key)
        } else {
            self.record(key, fmt_float(default));
            Ok(default)
        }
    }

    pub fn positive_f64_or(&mut self, key: &'static str, default: f64) -> Result<f64, CliError> {
        let v = self.f64_or(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("--{key} must be positive, got {v}")))
        }
    }

    pub fn int_or<T: FromStr + ToString + Copy>(&mut self, key: &'static str, default: T) -> Result<T, CliError> {
        let v = self.parse(key)?.unwrap_or(default);
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn string_or(&mut self, key: &'static str, default: &str) -> String {
        let v = self.raw.get(key).map(|s| s.trim().to_string()).unwrap_or_else(|| default.to_string());
        self.record(key, v.clone());
        v
    }

    pub fn string_opt(&mut self, key: &'static str) -> Option<String> {
        let v = self.raw.get(key).map(|s| s.trim().to_string());
        if let Some(s) = &v {
            self.record(key, s.clone());
        }
        v
    }

    /// Comma-separated list of finite floats.
    pub fn list_or(&mut self, key: &'static str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let values = match self.raw.get(key) {
            None => default.to_vec(),
            Some(text) => text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| CliError::Usage(format!("invalid entry '{}' in --{key}", s.trim())))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        if values.is_empty() {
            return Err(CliError::Usage(format!("--{key} is empty")));
        }
        self.record(key, values.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(","));
        Ok(values)
    }

    /// `--model` with `--n` and, for the constant model, `--k1 --k2`.
    pub fn model(&mut self) -> Result<ModelSpace, CliError> {
        let kind = self.string_or("model", "heisenberg");
        let n: usize = self.int_or("n", 1)?;
        let space = match kind.as_str() {
            "heisenberg" | "hopf" => {
                for key in ["k1", "k2"] {
                    if self.is_set(key) {
                        return Err(CliError::Usage(format!("--{key} only applies to --model constant")));
                    }
                }
                if kind == "hopf" {
                    ModelSpace::hopf(n)
                } else {
                    ModelSpace::heisenberg(n)
                }
            }
            "constant" => {
                let k1 = self.f64_required("k1")?;
                let k2 = self.f64_required("k2")?;
                ModelSpace::constant(n, k1, k2)
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown --model '{other}' (expected heisenberg, hopf or constant)"
                )))
            }
        };
        Ok(space?)
    }
}

fn parse_file(text: &str) -> Result<BTreeMap<&'static str, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
        let key = canonical_key(key.trim())
            .ok_or_else(|| CliError::Usage(format!("config line {}: unknown key '{}'", lineno + 1, key.trim())))?;
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_entries_and_overrides() {
        let file = parse_file("# comment\nmodel = hopf\nh_form=trace\n\nR=1,2\n").unwrap();
        assert_eq!(file["model"], "hopf");
        assert_eq!(file["h-form"], "trace");
        assert_eq!(file["R"], "1,2");
    }

    #[test]
    fn bad_lines_are_rejected() {
        assert!(parse_file("model").is_err());
        assert!(parse_file("colour=blue").is_err());
    }

    #[test]
    fn flags_win() {
        let dir = std::env::temp_dir().join(format!("sasakian-config-{}", std::process::id()));
        std::fs::write(&dir, "n=3\nz=0.5\n").unwrap();
        let mut cfg = Config::load(vec![("n", Some("2".into())), ("z", None)], Some(&dir)).unwrap();
        std::fs::remove_file(&dir).unwrap();
        assert_eq!(cfg.int_or("n", 1usize).unwrap(), 2);
        assert_eq!(cfg.f64_required("z").unwrap(), 0.5);
        assert_eq!(cfg.resolved()[1], ("z".to_string(), "5.0000000000000000e-1".to_string()));
    }

    #[test]
    fn missing_flag_is_named() {
        let mut cfg = Config::default();
        let err = cfg.f64_required("z").unwrap_err();
        assert!(err.to_string().contains("--z"));
    }

    #[test]
    fn model_parsing() {
        let mut cfg = Config::load(vec![("model", Some("constant".into())), ("k1", Some("-1".into()))], None).unwrap();
        assert!(cfg.model().unwrap_err().to_string().contains("--k2"));
        let mut cfg = Config::load(vec![("model", Some("hopf".into())), ("k1", Some("1".into()))], None).unwrap();
        assert!(cfg.model().is_err());
    }
}
