//! Run configuration: defaults, an optional `key = value` file, and validation.

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Config(format!("unknown format '{other}' (expected json or csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub resolution: usize,
    pub energy_rel: f64,
    pub obstruction_rel: f64,
    pub format: OutputFormat,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { resolution: 32, energy_rel: 1e-6, obstruction_rel: 1e-6, format: OutputFormat::Json, seed: 7 }
    }
}

pub const MIN_RESOLUTION: usize = 8;

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < MIN_RESOLUTION {
            return Err(Error::Config(format!("resolution must be at least {MIN_RESOLUTION}, got {}", self.resolution)));
        }
        for (name, v) in [("energy_rel", self.energy_rel), ("obstruction_rel", self.obstruction_rel)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
        }
        match key {
            "resolution" => self.resolution = num(key, value)?,
            "energy_rel" => self.energy_rel = num(key, value)?,
            "obstruction_rel" => self.obstruction_rel = num(key, value)?,
            "format" => self.format = value.parse()?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        assert_eq!(c.resolution, 32);
        assert_eq!(c.energy_rel, 1e-6);
        c.validate().unwrap();
    }

    #[test]
    fn parses_file_text() {
        let c = RunConfig::parse("# run\nresolution = 24\nformat = csv  # trailing\n\nseed=11\nenergy_rel = 1e-7\n").unwrap();
        assert_eq!(c.resolution, 24);
        assert_eq!(c.format, OutputFormat::Csv);
        assert_eq!(c.seed, 11);
        assert_eq!(c.energy_rel, 1e-7);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("resolution = 4").is_err());
        assert!(RunConfig::parse("energy_rel = -1").is_err());
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("format = xml").is_err());
        assert!(RunConfig::parse("resolution 24").is_err());
    }
}
