//! Flat key=value configuration: file plus command-line overrides.
//!
//! Lines are `key = value`; `#` starts a comment. Overrides given as
//! `key=value` strings take precedence over the file.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    pub entries: BTreeMap<String, String>,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key = value, got {raw:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            cfg.entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for item in overrides {
            let Some((k, v)) = item.split_once('=') else {
                return Err(Error::Config(format!("override {item:?} is not key=value")));
            };
            self.entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key} = {v:?} is not a number"))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key} = {v:?} is not an integer"))),
        }
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.entries.get(key).cloned().unwrap_or_else(|| default.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let tmp = std::env::temp_dir().join("stefan_lab_cfg_test.conf");
        std::fs::write(&tmp, "n = 64 # cells\nmu.level = 0.5\n").unwrap();
        let mut cfg = Config::from_file(&tmp).unwrap();
        assert_eq!(cfg.get_usize("n", 0).unwrap(), 64);
        cfg.apply_overrides(&["n=128".into()]).unwrap();
        assert_eq!(cfg.get_usize("n", 0).unwrap(), 128);
        assert_eq!(cfg.get_f64("mu.level", 0.0).unwrap(), 0.5);
        assert_eq!(cfg.get_f64("absent", 1.25).unwrap(), 1.25);
        assert!(cfg.get_f64("mu.level", 0.0).is_ok());
        std::fs::remove_file(&tmp).ok();
    }

    #[test]
    fn malformed_line_is_an_error() {
        let tmp = std::env::temp_dir().join("stefan_lab_cfg_bad.conf");
        std::fs::write(&tmp, "this is not a pair\n").unwrap();
        assert!(Config::from_file(&tmp).is_err());
        std::fs::remove_file(&tmp).ok();
    }
}
