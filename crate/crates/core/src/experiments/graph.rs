//! Graph-based semi-supervised classification with a hierarchical spectral
//! prior, and the active-learning loop built on its uncertainty.

use std::path::PathBuf;

use rand::seq::SliceRandom;

use super::config::{ChainSettings, ExperimentConfig};
use super::data::{pca_project, synthetic_clusters, LabelledFeatures};
use super::models::GraphClassification;
use super::{csv_row, Artifacts, RunSummary};
use crate::diagnostics::{
    accuracy, confusion_matrix, select_active_batch, uncertainty_measure, RunningMean, SelectionMode,
    UncertaintyReport,
};
use crate::error::{Error, Result};
use crate::forward::LabelledNode;
use crate::gaussian_field::{load_or_compute_spectrum, GraphSpectrum};
use crate::prior_transforms::argmax_lowest;
use crate::rng::{chain_rng, derive_seed};
use crate::samplers::{run_chain_observed, ChainRecord, ChainState, HyperParam, HyperParams, Kernel, NcGibbs, RunOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSettings {
    pub features: Option<PathBuf>,
    pub pca: usize,
    pub n: usize,
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
    pub knn: usize,
    pub initial_labels: usize,
    pub m_max: usize,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub alpha_step: f64,
    pub alpha_init: f64,
    pub m_init: usize,
    pub gamma: f64,
    pub beta: f64,
    pub chain: ChainSettings,
    pub cache_dir: Option<PathBuf>,
    pub rounds: usize,
    pub batch: usize,
}

impl GraphSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let c = &cfg.values;
        let s = Self {
            features: c.raw("graph.features").map(PathBuf::from),
            pca: c.get_or("graph.pca", 0)?,
            n: c.get_or("graph.n", 200)?,
            classes: c.get_or("graph.classes", 2)?,
            dim: c.get_or("graph.dim", 5)?,
            separation: c.get_or("graph.separation", 3.0)?,
            spread: c.get_or("graph.spread", 1.0)?,
            knn: c.get_or("graph.knn", 7)?,
            initial_labels: c.get_or("graph.labels", 10)?,
            m_max: c.get_or("graph.m_max", 100)?,
            alpha_lower: c.get_or("graph.alpha_lower", 1.0)?,
            alpha_upper: c.get_or("graph.alpha_upper", 100.0)?,
            alpha_step: c.get_or("graph.alpha_step", 0.2)?,
            alpha_init: c.get_or("graph.alpha_init", 10.0)?,
            m_init: c.get_or("graph.m_init", 10)?,
            gamma: c.get_or("graph.gamma", 1e-4)?,
            beta: c.get_or("graph.beta", 0.2)?,
            chain: ChainSettings::read(c, "graph", 10_000, 2_000, 10)?,
            cache_dir: c.raw("graph.cache_dir").map(PathBuf::from),
            rounds: c.get_or("al.rounds", 3)?,
            batch: c.get_or("al.batch", 10)?,
        };
        if s.m_max < s.m_init || s.m_init < 1 {
            return Err(Error::Config("graph: need 1 <= m_init <= m_max".into()));
        }
        Ok(s)
    }
}

/// Features, ground truth and graph spectrum.
pub struct GraphProblem {
    pub settings: GraphSettings,
    pub data: LabelledFeatures,
    pub spectrum: GraphSpectrum,
    pub k: usize,
    pub m_max: usize,
}

impl GraphProblem {
    pub fn load(settings: GraphSettings, seed: u64) -> Result<Self> {
        let mut data = match &settings.features {
            Some(path) => LabelledFeatures::read_csv(path)?,
            None => synthetic_clusters(
                settings.n,
                settings.classes,
                settings.dim,
                settings.separation,
                settings.spread,
                derive_seed(seed, 0),
            )?,
        };
        if data.len() < 3 {
            return Err(Error::Config("graph: need at least three data points".into()));
        }
        if settings.pca > 0 {
            data.features = pca_project(&data.features, settings.pca)?;
        }
        let k = data.n_classes().max(2);
        let m_max = settings.m_max.min(data.len() - 1);
        if m_max < settings.m_max {
            log::warn!("M_max reduced from {} to {m_max} for a graph of {} nodes", settings.m_max, data.len());
        }
        let spectrum = load_or_compute_spectrum(settings.cache_dir.as_deref(), &data.features, settings.knn, m_max + 1)?;
        Ok(Self { settings, data, spectrum, k, m_max })
    }

    /// Random initial labelled set.
    pub fn initial_labelled(&self, seed: u64) -> Result<Vec<usize>> {
        if self.settings.initial_labels > self.data.len() {
            return Err(Error::Config("graph.labels exceeds the number of nodes".into()));
        }
        let mut idx: Vec<usize> = (0..self.data.len()).collect();
        idx.shuffle(&mut chain_rng(seed));
        let mut out = idx[..self.settings.initial_labels].to_vec();
        out.sort_unstable();
        Ok(out)
    }

    /// Runs the non-centred Gibbs sampler with the labels of `labelled`
    /// revealed, returning the uncertainty report of the posterior mean
    /// one-hot labels and the chain record.
    pub fn infer(&self, labelled: &[usize], seed: u64) -> Result<(UncertaintyReport, ChainRecord)> {
        let s = &self.settings;
        let labels: Vec<LabelledNode> =
            labelled.iter().map(|&i| LabelledNode { node: i, class: self.data.labels[i] }).collect();
        let model = GraphClassification::new(self.spectrum.clone(), self.k, self.m_max, labels, s.gamma)?;
        let hyper = HyperParams::new(vec![
            HyperParam::continuous("alpha", s.alpha_lower, s.alpha_upper, s.alpha_step)?,
            HyperParam::integer("M", 1, self.m_max as i64)?,
        ])?;
        let mut kernel = NcGibbs::new(&model, hyper, s.beta)?;
        let init = kernel.init(vec![0.0; model_dim(&model)], vec![s.alpha_init, s.m_init.min(self.m_max) as f64])?;
        let opts = RunOptions { steps: s.chain.steps, thin: s.chain.thin, burn_in: s.chain.burn_in, keep_samples: false };
        let n = self.data.len();
        let k = self.k;
        let mut counts = RunningMean::new(n * k);
        let mut onehot = vec![0.0; n * k];
        let mut visit = |step: usize, st: &ChainState| {
            if step < s.chain.burn_in {
                return;
            }
            let Ok(fields) = model.fields(&st.x, &st.theta) else { return };
            onehot.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..n {
                let r = argmax_lowest(fields.iter().map(|f| f[j]));
                onehot[j * k + r] = 1.0;
            }
            counts.push(&onehot);
        };
        let rec = run_chain_observed(&mut kernel, init, &opts, &mut chain_rng(seed), None, &mut visit)?;
        let mean = counts.mean();
        let rows: Vec<Vec<f64>> = mean.chunks(k).map(<[f64]>::to_vec).collect();
        Ok((uncertainty_measure(&rows)?, rec))
    }

    /// Accuracy on the nodes outside `labelled`.
    pub fn test_accuracy(&self, report: &UncertaintyReport, labelled: &[usize]) -> f64 {
        let pred = report.predicted();
        let (p, t): (Vec<usize>, Vec<usize>) = (0..self.data.len())
            .filter(|i| labelled.binary_search(i).is_err())
            .map(|i| (pred[i], self.data.labels[i]))
            .unzip();
        accuracy(&p, &t)
    }
}

fn model_dim(m: &GraphClassification) -> usize {
    m.n_classes() * m.block_len()
}

fn nodes_csv(problem: &GraphProblem, report: &UncertaintyReport, labelled: &[usize]) -> String {
    let pred = report.predicted();
    let mut s = String::from("node,true_class,predicted,labelled");
    for c in 0..problem.k {
        s.push_str(&format!(",mean_class{c}"));
    }
    s.push_str(",uncertainty\n");
    for j in 0..problem.data.len() {
        s.push_str(&format!(
            "{j},{},{},{},{},{}\n",
            problem.data.labels[j],
            pred[j],
            labelled.binary_search(&j).is_ok() as u8,
            csv_row(&report.mean_onehots[j]),
            report.uncertainty[j]
        ));
    }
    s
}

pub fn run_graph_ssl(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let problem = GraphProblem::load(GraphSettings::from_config(cfg)?, cfg.seed)?;
    let labelled = problem.initial_labelled(derive_seed(cfg.seed, 1))?;
    let (report, rec) = problem.infer(&labelled, derive_seed(cfg.seed, 2))?;
    let out = Artifacts::new(cfg)?;
    let mut summary = RunSummary::new(cfg.experiment);
    out.write(&mut summary, "graph_nodes.csv", &nodes_csv(&problem, &report, &labelled))?;
    let conf = confusion_matrix(&report.predicted(), &problem.data.labels, problem.k)?;
    let mut cm = String::from("true_class");
    for c in 0..problem.k {
        cm.push_str(&format!(",pred{c}"));
    }
    cm.push('\n');
    for (i, row) in conf.iter().enumerate() {
        cm.push_str(&format!("{i},{}\n", csv_row(row)));
    }
    out.write(&mut summary, "graph_confusion.csv", &cm)?;
    out.write_raw(&mut summary, "graph_chain.csv", &rec.to_csv(&cfg.hash(), cfg.seed))?;
    summary.push("accuracy", problem.test_accuracy(&report, &labelled));
    summary.push("mean_uncertainty", report.mean_uncertainty);
    summary.push("labelled", labelled.len() as f64);
    summary.push("acceptance_xi", rec.acceptance_rate());
    summary.push("acceptance_theta", rec.theta_acceptance_rate().unwrap_or(f64::NAN));
    let labelled_ok = labelled.iter().filter(|&&i| report.predicted()[i] == problem.data.labels[i]).count();
    summary.push("labelled_correct_fraction", labelled_ok as f64 / labelled.len().max(1) as f64);
    out.finish(summary)
}

pub fn run_active_learning(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let problem = GraphProblem::load(GraphSettings::from_config(cfg)?, cfg.seed)?;
    let s = &problem.settings;
    let initial = problem.initial_labelled(derive_seed(cfg.seed, 1))?;
    let (report0, _) = problem.infer(&initial, derive_seed(cfg.seed, 2))?;
    let out = Artifacts::new(cfg)?;
    let mut summary = RunSummary::new(cfg.experiment);
    let mut table = String::from("round,mode,labelled,mean_uncertainty,accuracy\n");
    summary.push("round0_mean_uncertainty", report0.mean_uncertainty);
    for mode in [SelectionMode::MostUncertain, SelectionMode::MostCertain] {
        let name = mode.as_str();
        let mut labelled = initial.clone();
        let mut report = report0.clone();
        table.push_str(&format!(
            "0,{name},{},{},{}\n",
            labelled.len(),
            report.mean_uncertainty,
            problem.test_accuracy(&report, &labelled)
        ));
        let mut exhausted = false;
        for round in 1..=s.rounds {
            let batch = match select_active_batch(&report, &labelled, s.batch, mode) {
                Ok(b) => b,
                Err(_) => {
                    log::warn!("{name}: unlabelled pool exhausted before round {round}");
                    exhausted = true;
                    break;
                }
            };
            labelled.extend(batch);
            labelled.sort_unstable();
            report = problem.infer(&labelled, derive_seed(cfg.seed, 100 + round as u64))?.0;
            table.push_str(&format!(
                "{round},{name},{},{},{}\n",
                labelled.len(),
                report.mean_uncertainty,
                problem.test_accuracy(&report, &labelled)
            ));
        }
        summary.push(format!("final_mean_uncertainty_{name}"), report.mean_uncertainty);
        summary.push(format!("final_labelled_{name}"), labelled.len() as f64);
        summary.push(format!("exhausted_{name}"), exhausted as u8 as f64);
    }
    out.write(&mut summary, "active_learning.csv", &table)?;
    out.finish(summary)
}
