//! Flat `key = value` configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! experiment = fig1_sweep
//! seed = 7
//! fig1.betas = 0.01, 0.05, 0.1, 0.2
//! ```
//!
//! Keys are case-sensitive and may contain dots; values run to the end of the
//! line with surrounding whitespace trimmed. Lists are comma-separated.
//! Blank lines and lines starting with `#` are ignored, as is anything after
//! a ` #` inside a line. Later entries override earlier ones.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Fig1Sweep,
    ConvolutionAcf,
    DarcyHier,
    GraphSsl,
    ActiveLearning,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::Fig1Sweep,
        ExperimentId::ConvolutionAcf,
        ExperimentId::DarcyHier,
        ExperimentId::GraphSsl,
        ExperimentId::ActiveLearning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Fig1Sweep => "fig1_sweep",
            ExperimentId::ConvolutionAcf => "convolution_acf",
            ExperimentId::DarcyHier => "darcy_hier",
            ExperimentId::GraphSsl => "graph_ssl",
            ExperimentId::ActiveLearning => "active_learning",
        }
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

impl Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parsed key-value pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find(" #") {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Config(format!("line {}: invalid key '{k}'", i + 1)));
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list_or<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse '{s}'"))))
                .collect(),
        }
    }

    /// Canonical `key = value` text, sorted by key.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// First 16 hex digits of the SHA-256 of [`Config::canonical`].
    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.canonical().as_bytes());
        d.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Shared settings every experiment reads.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub values: Config,
}

impl ExperimentConfig {
    /// Reads `experiment`, `seed` (default 0) and `out` (default `out`).
    pub fn from_config(values: Config) -> Result<Self> {
        let experiment = values
            .raw("experiment")
            .ok_or_else(|| Error::Config("missing key 'experiment'".into()))?
            .parse()?;
        let seed = values.get_or("seed", 0u64)?;
        let out_dir = PathBuf::from(values.raw("out").unwrap_or("out"));
        Ok(Self { experiment, seed, out_dir, values })
    }

    pub fn new(experiment: ExperimentId, seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        let out_dir = out_dir.into();
        let mut values = Config::default();
        values.set("experiment", experiment);
        values.set("seed", seed);
        values.set("out", out_dir.display());
        Self { experiment, seed, out_dir, values }
    }

    /// Sets one key, re-reading the shared settings.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<&mut Self> {
        let mut values = self.values.clone();
        values.set(key, value);
        *self = Self::from_config(values)?;
        Ok(self)
    }

    /// Hash of everything that determines the output. The output directory is
    /// excluded so that reruns elsewhere produce identical files.
    pub fn hash(&self) -> String {
        let mut c = self.values.clone();
        c.entries.remove("out");
        c.hash()
    }
}

/// Chain length settings shared by the samplers of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSettings {
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl ChainSettings {
    pub fn read(cfg: &Config, prefix: &str, steps: usize, burn_in: usize, thin: usize) -> Result<Self> {
        let s = Self {
            steps: cfg.get_or(&format!("{prefix}.steps"), steps)?,
            burn_in: cfg.get_or(&format!("{prefix}.burn_in"), burn_in)?,
            thin: cfg.get_or(&format!("{prefix}.thin"), thin)?,
        };
        if s.steps <= s.burn_in {
            return Err(Error::Config(format!("{prefix}: steps ({}) must exceed burn_in ({})", s.steps, s.burn_in)));
        }
        if s.thin == 0 {
            return Err(Error::Config(format!("{prefix}: thin must be positive")));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_lists_and_overrides() {
        let c = Config::parse("# top\nexperiment = fig1_sweep\n\nfig1.betas = 0.1, 0.2 # trailing\nseed=3\nseed = 4\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(4));
        assert_eq!(c.list_or::<f64>("fig1.betas", &[]).unwrap(), vec![0.1, 0.2]);
        assert_eq!(c.list_or("missing", &[1usize]).unwrap(), vec![1]);
        assert!(Config::parse("no equals sign").is_err());
        assert!(c.get::<u64>("fig1.betas").is_err());
    }

    #[test]
    fn hash_ignores_order_and_output_dir() {
        let a = Config::parse("a = 1\nb = 2\n").unwrap();
        let b = Config::parse("b = 2\na = 1\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let mut x = ExperimentConfig::new(ExperimentId::GraphSsl, 1, "/tmp/a");
        let y = ExperimentConfig::new(ExperimentId::GraphSsl, 1, "/tmp/b");
        assert_eq!(x.hash(), y.hash());
        x.set("seed", 2).unwrap();
        assert_eq!(x.seed, 2);
        assert_ne!(x.hash(), y.hash());
        assert!(x.set("experiment", "nope").is_err());
    }

    #[test]
    fn experiment_ids_round_trip() {
        for e in ExperimentId::ALL {
            assert_eq!(e.as_str().parse::<ExperimentId>().unwrap(), e);
        }
        assert!("fig2".parse::<ExperimentId>().is_err());
        assert!(ChainSettings::read(&Config::default(), "x", 10, 10, 1).is_err());
    }
}
