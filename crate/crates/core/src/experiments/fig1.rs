//! Acceptance rate against step size for a Besov regression at several
//! truncation levels.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::ExperimentConfig;
use super::models::{CoefficientRegression, SeriesRegression};
use super::{Artifacts, RunSummary};
use crate::diagnostics::{acceptance_curve, AcceptanceTable};
use crate::error::{Error, Result};
use crate::prior_transforms::{CoefficientLaw, CosineBasis, EvaluationGrid, MeanField, Rectangle, SeriesPrior, SeriesTransform};
use crate::rng::{chain_rng, derive_seed, standard_normal_vec};
use crate::samplers::{run_chain, Kernel, Rwm, RwmVariant, RunOptions, Wmala, Wpcn};

pub const KERNELS: [&str; 4] = ["wpcn", "wmala", "rwm_white", "rwm_prior"];

/// Settings of the sweep, read from `fig1.*` keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Settings {
    pub n_values: Vec<usize>,
    pub betas: Vec<f64>,
    pub kernels: Vec<String>,
    pub steps: usize,
    /// Truncation of the prior draw that generates the data.
    pub truth_n: usize,
    pub noise_std: f64,
    pub q: f64,
    /// Overall factor on the weights `(k1^2 + k2^2)^{-1}`.
    pub weight_scale: f64,
    /// Observations on the `obs_side x obs_side` grid `{i / (obs_side + 1)}`.
    pub obs_side: usize,
}

impl Fig1Settings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let c = &cfg.values;
        let n_values: Vec<usize> = c.list_or("fig1.n_values", &[16, 64, 256, 1024, 4096])?;
        let truth_default = n_values.iter().copied().max().unwrap_or(16);
        let s = Self {
            betas: c.list_or("fig1.betas", &[0.005, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75])?,
            kernels: c.list_or("fig1.kernels", &KERNELS.map(String::from))?,
            steps: c.get_or("fig1.steps", 20_000)?,
            truth_n: c.get_or("fig1.truth_n", truth_default)?,
            noise_std: c.get_or("fig1.noise_std", 0.1)?,
            q: c.get_or("fig1.q", 1.0)?,
            weight_scale: c.get_or("fig1.weight_scale", 0.1)?,
            obs_side: c.get_or("fig1.obs_side", 4)?,
            n_values,
        };
        if let Some(k) = s.kernels.iter().find(|k| !KERNELS.contains(&k.as_str())) {
            return Err(Error::Config(format!("fig1.kernels: unknown kernel '{k}'")));
        }
        if s.n_values.is_empty() || s.betas.is_empty() || s.n_values.iter().any(|&n| n > s.truth_n || n == 0) {
            return Err(Error::Config("fig1: need truncations in 1..=truth_n and at least one beta".into()));
        }
        Ok(s)
    }
}

/// Weights `scale / (k1^2 + k2^2)` for the basis modes.
fn weights(basis: &CosineBasis, scale: f64) -> Vec<f64> {
    basis
        .modes()
        .iter()
        .map(|k| scale / k.iter().map(|&v| (v * v) as f64).sum::<f64>())
        .collect()
}

/// Synthetic data and the models at every truncation.
pub struct Fig1Problem {
    pub locations: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub truth_xi: Vec<f64>,
    pub settings: Fig1Settings,
}

impl Fig1Problem {
    pub fn generate(settings: Fig1Settings, seed: u64) -> Result<Self> {
        let side = settings.obs_side;
        let mut locations = Vec::with_capacity(side * side);
        for i in 1..=side {
            for j in 1..=side {
                locations.push(vec![i as f64 / (side + 1) as f64, j as f64 / (side + 1) as f64]);
            }
        }
        let truth_xi = standard_normal_vec(&mut chain_rng(derive_seed(seed, 0)), settings.truth_n);
        let prior = Self::prior(&settings, settings.truth_n)?;
        let grid = EvaluationGrid::from_points(2, &locations)?;
        let mut u = vec![0.0; locations.len()];
        SeriesTransform::new(prior, &grid)?.apply(&truth_xi, &mut u)?;
        let mut rng = chain_rng(derive_seed(seed, 1));
        let y = u.iter().map(|v| v + settings.noise_std * rng.sample::<f64, _>(StandardNormal)).collect();
        Ok(Self { locations, y, truth_xi, settings })
    }

    pub fn prior(settings: &Fig1Settings, n: usize) -> Result<SeriesPrior> {
        let basis = CosineBasis::enumerate(Rectangle::unit(2), n, 1)?;
        let w = weights(&basis, settings.weight_scale);
        SeriesPrior::new(MeanField::Constant(0.0), w, basis, CoefficientLaw::Besov { q: settings.q })
    }

    /// Accept flags of one chain of `kernel` at truncation `n`.
    pub fn run_cell(&self, kernel: &str, n: usize, beta: f64, seed: u64) -> Result<Vec<bool>> {
        let prior = Self::prior(&self.settings, n)?;
        let start = self.truth_xi[..n].to_vec();
        let opts = RunOptions::new(self.settings.steps);
        let mut rng = chain_rng(seed);
        if kernel == "rwm_prior" {
            let law = prior.law().clone();
            let mut coeffs = vec![0.0; n];
            for (c, &x) in coeffs.iter_mut().zip(&start) {
                *c = law.apply(0, x, 0.0)?;
            }
            let model = CoefficientRegression::new(
                prior.basis(),
                prior.weights().to_vec(),
                0.0,
                &self.locations,
                self.y.clone(),
                self.settings.noise_std,
            )?;
            let mut k = Rwm::new(&model, beta, RwmVariant::Prior(law))?;
            let init = k.init(coeffs, Vec::new())?;
            return Ok(run_chain(&mut k, init, &opts, &mut rng)?.latent_flags);
        }
        let model = SeriesRegression::new(prior, &self.locations, self.y.clone(), self.settings.noise_std)?;
        let mut k: Box<dyn Kernel + '_> = match kernel {
            "wpcn" => Box::new(Wpcn::new(&model, beta)?),
            "wmala" => Box::new(Wmala::from_beta(&model, beta)?),
            "rwm_white" => Box::new(Rwm::new(&model, beta, RwmVariant::White)?),
            other => return Err(Error::Config(format!("unknown kernel '{other}'"))),
        };
        let init = k.init(start, Vec::new())?;
        Ok(run_chain(k.as_mut(), init, &opts, &mut rng)?.latent_flags)
    }

    pub fn sweep(&self, seed: u64) -> Result<AcceptanceTable> {
        let s = &self.settings;
        let kernels: Vec<&str> = s.kernels.iter().map(String::as_str).collect();
        acceptance_curve(&kernels, &s.betas, &s.n_values, s.steps, |k, n, b, cell| {
            self.run_cell(k, n, b, derive_seed(seed, 1000 + cell))
        })
    }
}

pub fn run_fig1_sweep(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let settings = Fig1Settings::from_config(cfg)?;
    let problem = Fig1Problem::generate(settings, cfg.seed)?;
    let table = problem.sweep(cfg.seed)?;
    let out = Artifacts::new(cfg)?;
    let mut summary = RunSummary::new(cfg.experiment);
    out.write(&mut summary, "fig1_acceptance.csv", &table.to_csv())?;
    let s = &problem.settings;
    for k in &s.kernels {
        summary.push(format!("spread_{k}"), table.spread(k));
    }
    let (n_lo, n_hi) = (s.n_values[0], *s.n_values.last().unwrap());
    for k in &s.kernels {
        for &b in &s.betas {
            if let (Some(lo), Some(hi)) = (table.get(k, n_lo, b), table.get(k, n_hi, b)) {
                summary.push(format!("drop_{k}_beta{b}"), lo.rate - hi.rate);
            }
        }
    }
    out.finish(summary)
}
