//! Config-driven experiment runners and the data plumbing they need.
//!
//! Each runner takes an [`ExperimentConfig`], writes CSV artifacts into its
//! output directory and returns a [`RunSummary`] with the files written and
//! the headline numbers. Every CSV starts with a `#` comment line carrying
//! the configuration hash and master seed; reruns with the same configuration
//! and seed produce byte-identical files.

mod config;
mod convolution;
mod darcy;
mod data;
mod fig1;
mod graph;
mod models;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{ChainSettings, Config, ExperimentConfig, ExperimentId};
pub use convolution::{run_convolution_acf, ConvolutionSettings};
pub use darcy::{run_darcy_hier, DarcySettings, DarcySetup};
pub use data::{
    encode_idx_images, encode_idx_labels, ingest_mnist_idx, parse_idx_images, parse_idx_labels, pca_project,
    synthetic_clusters, IdxImages, LabelledFeatures,
};
pub use fig1::{run_fig1_sweep, Fig1Problem, Fig1Settings};
pub use graph::{run_active_learning, run_graph_ssl, GraphProblem, GraphSettings};
pub use models::{CoefficientRegression, ConvolutionModel, DarcyLevelSet, GraphClassification, SeriesRegression};

use crate::error::Result;

/// Files written by a run and its headline numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub experiment: ExperimentId,
    pub files: Vec<PathBuf>,
    pub metrics: Vec<(String, f64)>,
}

impl RunSummary {
    fn new(experiment: ExperimentId) -> Self {
        Self { experiment, files: Vec::new(), metrics: Vec::new() }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn push(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value));
    }

    /// `name,value` lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (n, v) in &self.metrics {
            let _ = writeln!(s, "{n},{v}");
        }
        s
    }
}

/// Writes CSV artifacts with the shared header comment.
struct Artifacts {
    dir: PathBuf,
    hash: String,
    seed: u64,
    experiment: ExperimentId,
}

impl Artifacts {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out_dir)?;
        Ok(Self { dir: cfg.out_dir.clone(), hash: cfg.hash(), seed: cfg.seed, experiment: cfg.experiment })
    }

    fn header(&self) -> String {
        format!("# config_hash={},seed={},experiment={}\n", self.hash, self.seed, self.experiment)
    }

    /// Writes `body` under the header comment.
    fn write(&self, summary: &mut RunSummary, name: &str, body: &str) -> Result<()> {
        self.write_raw(summary, name, &(self.header() + body))
    }

    /// Writes `text` as is (for bodies that already carry the header).
    fn write_raw(&self, summary: &mut RunSummary, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)?;
        summary.files.push(path);
        Ok(())
    }

    fn finish(&self, mut summary: RunSummary) -> Result<RunSummary> {
        let body = summary.to_csv();
        self.write(&mut summary, "summary.csv", &body)?;
        Ok(summary)
    }
}

/// Dispatches on `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    log::info!("running {} (seed {}, config {})", cfg.experiment, cfg.seed, cfg.hash());
    match cfg.experiment {
        ExperimentId::Fig1Sweep => run_fig1_sweep(cfg),
        ExperimentId::ConvolutionAcf => run_convolution_acf(cfg),
        ExperimentId::DarcyHier => run_darcy_hier(cfg),
        ExperimentId::GraphSsl => run_graph_ssl(cfg),
        ExperimentId::ActiveLearning => run_active_learning(cfg),
    }
}

/// Reads the configuration file at `path`.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_config(Config::load(path)?)
}

fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}
