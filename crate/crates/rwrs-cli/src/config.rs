//! Flat key-value configuration with typed sections.
//!
//! ```text
//! # model: two lists of value:numerator:denominator triples
//! [model]
//! step = 1:1:2 -1:1:2
//! scenery = 1:1:2 -1:1:2
//!
//! [experiment]
//! seed = 42
//! n = 1024 4096
//! ```
//!
//! Command-line overrides address keys as `section.key=value`. The full
//! effective configuration is echoed into every artifact.

use std::collections::BTreeMap;
use std::path::Path;

use rwrs_core::lattice::{validate_model, LatticePmf, ModelConfig};
use rwrs_core::observable::Observable;
use rwrs_core::walk::WindowFn;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = "experiment".to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    CliError::ConfigParse(format!("line {}: unterminated section", lineno + 1))
                })?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::ConfigParse(format!("line {}: expected key = value", lineno + 1))
            })?;
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { sections })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigParse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Apply an override of the form `section.key=value`.
    pub fn set_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (addr, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::ConfigParse(format!("override `{assignment}`: expected =")))?;
        let (section, key) = addr
            .split_once('.')
            .ok_or_else(|| CliError::ConfigParse(format!("override `{assignment}`: expected section.key")))?;
        self.sections
            .entry(section.trim().to_string())
            .or_default()
            .insert(key.trim().to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn set(&mut self, section: &str, key: &str, value: String) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value);
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|s| s.as_str())
    }

    fn parse_scalar<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                CliError::ConfigParse(format!("{section}.{key}: cannot parse `{v}`"))
            }),
        }
    }

    pub fn get_u64(&self, section: &str, key: &str, default: u64) -> Result<u64, CliError> {
        self.parse_scalar(section, key, default)
    }

    pub fn get_usize(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        self.parse_scalar(section, key, default)
    }

    pub fn get_i64(&self, section: &str, key: &str, default: i64) -> Result<i64, CliError> {
        self.parse_scalar(section, key, default)
    }

    pub fn get_f64(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        self.parse_scalar(section, key, default)
    }

    pub fn get_bool(&self, section: &str, key: &str, default: bool) -> Result<bool, CliError> {
        self.parse_scalar(section, key, default)
    }

    pub fn get_list_u64(
        &self,
        section: &str,
        key: &str,
        default: &[u64],
    ) -> Result<Vec<u64>, CliError> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|_| {
                        CliError::ConfigParse(format!("{section}.{key}: cannot parse `{t}`"))
                    })
                })
                .collect(),
        }
    }

    pub fn get_list_i64(
        &self,
        section: &str,
        key: &str,
        default: &[i64],
    ) -> Result<Vec<i64>, CliError> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|_| {
                        CliError::ConfigParse(format!("{section}.{key}: cannot parse `{t}`"))
                    })
                })
                .collect(),
        }
    }

    /// The validated model; defaults to the Rademacher pair.
    pub fn model(&self) -> Result<ModelConfig, CliError> {
        let step = self.pmf("model", "step")?;
        let scenery = self.pmf("model", "scenery")?;
        match (step, scenery) {
            (None, None) => Ok(ModelConfig::rademacher()),
            (step, scenery) => {
                let rademacher =
                    || LatticePmf::from_rationals(&[(1, 1, 2), (-1, 1, 2)]).unwrap();
                validate_model(
                    step.unwrap_or_else(rademacher),
                    scenery.unwrap_or_else(rademacher),
                )
                .map_err(|e| CliError::ConfigParse(format!("model: {e}")))
            }
        }
    }

    fn pmf(&self, section: &str, key: &str) -> Result<Option<LatticePmf>, CliError> {
        let Some(text) = self.get(section, key) else {
            return Ok(None);
        };
        let mut triples = Vec::new();
        for token in text.split_whitespace() {
            let parts: Vec<&str> = token.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::ConfigParse(format!(
                    "{section}.{key}: `{token}` is not value:numerator:denominator"
                )));
            }
            let nums: Result<Vec<i64>, _> = parts.iter().map(|p| p.parse()).collect();
            let nums = nums.map_err(|_| {
                CliError::ConfigParse(format!("{section}.{key}: cannot parse `{token}`"))
            })?;
            triples.push((nums[0], nums[1], nums[2]));
        }
        LatticePmf::from_rationals(&triples)
            .map(Some)
            .map_err(|e| CliError::ConfigParse(format!("{section}.{key}: {e}")))
    }

    /// Observable given as `level:weight` pairs.
    pub fn observable(&self, key: &str, default: &Observable) -> Result<Observable, CliError> {
        let Some(text) = self.get("experiment", key) else {
            return Ok(default.clone());
        };
        let mut pairs = Vec::new();
        for token in text.split_whitespace() {
            let (lvl, w) = token.split_once(':').ok_or_else(|| {
                CliError::ConfigParse(format!("experiment.{key}: `{token}` is not level:weight"))
            })?;
            let lvl: i64 = lvl.parse().map_err(|_| {
                CliError::ConfigParse(format!("experiment.{key}: bad level in `{token}`"))
            })?;
            let w: f64 = w.parse().map_err(|_| {
                CliError::ConfigParse(format!("experiment.{key}: bad weight in `{token}`"))
            })?;
            pairs.push((lvl, w));
        }
        Ok(Observable::from_pairs(&pairs))
    }

    /// Scenery-window factor: `one` or `indicator:<offset>:<value>`.
    pub fn window_fn(&self, key: &str) -> Result<WindowFn, CliError> {
        match self.get("experiment", key) {
            None => Ok(WindowFn::One),
            Some("one") => Ok(WindowFn::One),
            Some(text) => {
                let parts: Vec<&str> = text.split(':').collect();
                if parts.len() == 3 && parts[0] == "indicator" {
                    let offset = parts[1].parse().map_err(|_| {
                        CliError::ConfigParse(format!("experiment.{key}: bad offset in `{text}`"))
                    })?;
                    let value = parts[2].parse().map_err(|_| {
                        CliError::ConfigParse(format!("experiment.{key}: bad value in `{text}`"))
                    })?;
                    Ok(WindowFn::SceneryIndicator { offset, value })
                } else {
                    Err(CliError::ConfigParse(format!(
                        "experiment.{key}: `{text}` is not `one` or `indicator:offset:value`"
                    )))
                }
            }
        }
    }

    /// Canonical JSON echo of the effective configuration.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.sections).expect("string maps serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = Config::parse("[model]\nstep = 1:1:2 -1:1:2\n\n[experiment]\nseed = 9\n").unwrap();
        assert_eq!(cfg.get_u64("experiment", "seed", 0).unwrap(), 9);
        assert_eq!(cfg.get_u64("experiment", "reps", 77).unwrap(), 77);
        let model = cfg.model().unwrap();
        assert_eq!(model.periodicity.d, 2);
    }

    #[test]
    fn default_model_is_rademacher() {
        let cfg = Config::parse("").unwrap();
        let m = cfg.model().unwrap();
        assert!(m.has_simple_step());
        assert_eq!(m.sigma_xi_sq, 1.0);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("[model\n").is_err());
        assert!(Config::parse("model step\n").is_err());
        let cfg = Config::parse("[model]\nstep = 1:1\n").unwrap();
        assert!(cfg.model().is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let mut cfg = Config::parse("[experiment]\nseed = 1\n").unwrap();
        cfg.set_override("experiment.seed=5").unwrap();
        assert_eq!(cfg.get_u64("experiment", "seed", 0).unwrap(), 5);
        assert!(cfg.set_override("bogus").is_err());
    }

    #[test]
    fn observables_parse() {
        let cfg = Config::parse("[experiment]\nf = 0:1 1:-1\n").unwrap();
        let f = cfg.observable("f", &Observable::zero()).unwrap();
        assert_eq!(f.eval(0), 1.0);
        assert_eq!(f.eval(1), -1.0);
        assert!(f.is_centered());
    }

    #[test]
    fn window_fn_parse() {
        let cfg = Config::parse("[experiment]\ng = indicator:0:1\n").unwrap();
        assert_eq!(
            cfg.window_fn("g").unwrap(),
            WindowFn::SceneryIndicator { offset: 0, value: 1 }
        );
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg.window_fn("g").unwrap(), WindowFn::One);
    }
}
