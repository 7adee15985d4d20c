//! Level-set permeability recovery from pressure data, with the Matern
//! inverse length-scale `tau` either fixed or sampled by the non-centred
//! Gibbs kernel.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{ChainSettings, ExperimentConfig};
use super::models::DarcyLevelSet;
use super::{Artifacts, RunSummary};
use crate::diagnostics::{sample_variance, RunningMean};
use crate::error::{Error, Result};
use crate::forward::{DarcyProblem, DarcySolver};
use crate::gaussian_field::{kl_weights, MaternParams};
use crate::prior_transforms::{BasisEvaluator, CosineBasis, LevelSetSpec, Rectangle};
use crate::rng::{chain_rng, derive_seed, standard_normal_vec};
use crate::samplers::{
    run_chain_observed, ChainRecord, ChainState, FixedTheta, HyperParam, HyperParams, Kernel, NcGibbs, RunOptions,
    Wpcn,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DarcySettings {
    pub grid: usize,
    pub n_modes: usize,
    pub truth_modes: usize,
    pub sigma: f64,
    pub regularity: f64,
    pub classes: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub source: f64,
    pub obs_side: usize,
    pub noise_std: f64,
    pub tau_true: f64,
    pub tau_fixed: f64,
    pub tau_lower: f64,
    pub tau_upper: f64,
    pub tau_step: f64,
    pub beta: f64,
    pub chain: ChainSettings,
    pub hist_bins: usize,
}

impl DarcySettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let c = &cfg.values;
        let grid = match c.get::<usize>("grid")? {
            Some(g) => g,
            None => c.get_or("darcy.grid", 64)?,
        };
        let n_modes = c.get_or("darcy.n_modes", 400)?;
        let s = Self {
            grid,
            n_modes,
            truth_modes: c.get_or("darcy.truth_modes", 2 * n_modes)?,
            sigma: c.get_or("darcy.sigma", 1.0)?,
            regularity: c.get_or("darcy.regularity", 1.0)?,
            classes: c.list_or("darcy.classes", &[1.0, 5.0, 25.0])?,
            thresholds: c.list_or("darcy.thresholds", &[-0.4, 0.4])?,
            source: c.get_or("darcy.source", 20.0)?,
            obs_side: c.get_or("darcy.obs_side", 6)?,
            noise_std: c.get_or("darcy.noise_std", 0.05)?,
            tau_true: c.get_or("darcy.tau_true", 10.0)?,
            tau_fixed: c.get_or("darcy.tau_fixed", 60.0)?,
            tau_lower: c.get_or("darcy.tau_lower", 1.0)?,
            tau_upper: c.get_or("darcy.tau_upper", 100.0)?,
            tau_step: c.get_or("darcy.tau_step", 0.1)?,
            beta: c.get_or("darcy.beta", 0.1)?,
            chain: ChainSettings::read(c, "darcy", 20_000, 5_000, 10)?,
            hist_bins: c.get_or("darcy.hist_bins", 20)?,
        };
        if s.truth_modes < 1 || s.n_modes < 1 || s.obs_side < 1 || s.hist_bins < 1 {
            return Err(Error::Config("darcy: mode counts, observation grid and bins must be positive".into()));
        }
        if !(s.tau_lower..=s.tau_upper).contains(&s.tau_fixed) {
            return Err(Error::Config("darcy.tau_fixed must lie within the tau prior support".into()));
        }
        Ok(s)
    }
}

/// Truth, data and model of one Darcy experiment.
pub struct DarcySetup {
    pub settings: DarcySettings,
    pub model: DarcyLevelSet,
    pub truth_field: Vec<f64>,
    pub truth_classes: Vec<usize>,
    pub obs_nodes: Vec<usize>,
    pub y: Vec<f64>,
}

impl DarcySetup {
    pub fn generate(settings: DarcySettings, seed: u64) -> Result<Self> {
        let s = &settings;
        let levels = LevelSetSpec::new(s.classes.clone(), s.thresholds.clone())?;
        let problem = DarcyProblem::constant_source(2, s.grid, s.source)?;
        let grid = problem.grid();
        let solver = DarcySolver::new(problem.clone());

        let truth_basis = CosineBasis::enumerate(Rectangle::unit(2), s.truth_modes, 0)?;
        let p = MaternParams::new(s.sigma, s.tau_true, s.regularity, 2)?;
        let xi = standard_normal_vec(&mut chain_rng(derive_seed(seed, 0)), s.truth_modes);
        let coeffs: Vec<f64> = kl_weights(&truth_basis, &p).iter().zip(&xi).map(|(w, x)| w * x).collect();
        let mut truth_field = vec![0.0; grid.len()];
        BasisEvaluator::new(&truth_basis, &grid)?.synthesize(&coeffs, &mut truth_field);
        let truth_classes: Vec<usize> = truth_field.iter().map(|&v| levels.class_index(v)).collect();
        let perm: Vec<f64> = truth_field.iter().map(|&v| levels.value(v)).collect();
        let pressure = solver.solve(&perm)?;

        let side = s.obs_side;
        let mut obs_nodes = Vec::with_capacity(side * side);
        for i in 1..=side {
            for j in 1..=side {
                let x = [i as f64 / (side + 1) as f64, j as f64 / (side + 1) as f64];
                obs_nodes.push(problem.nearest_node(&x)?.0);
            }
        }
        let mut rng = chain_rng(derive_seed(seed, 1));
        let y: Vec<f64> =
            obs_nodes.iter().map(|&i| pressure[i] + s.noise_std * rng.sample::<f64, _>(StandardNormal)).collect();

        let basis = CosineBasis::enumerate(Rectangle::unit(2), s.n_modes, 0)?;
        let model = DarcyLevelSet::new(
            basis,
            s.sigma,
            s.regularity,
            levels,
            solver,
            obs_nodes.clone(),
            y.clone(),
            s.noise_std,
        )?;
        Ok(Self { settings, model, truth_field, truth_classes, obs_nodes, y })
    }

    fn hyper(&self) -> Result<HyperParams> {
        let s = &self.settings;
        HyperParams::new(vec![HyperParam::continuous("tau", s.tau_lower, s.tau_upper, s.tau_step)?])
    }

    /// Runs one chain, returning the record and the posterior mean of `v`.
    fn run(&self, hierarchical: bool, seed: u64) -> Result<(ChainRecord, Vec<f64>)> {
        let s = &self.settings;
        let opts = RunOptions { steps: s.chain.steps, thin: s.chain.thin, burn_in: s.chain.burn_in, keep_samples: false };
        let start = vec![0.0; s.n_modes];
        let mut mean_coeffs = RunningMean::new(s.n_modes);
        let mut cache: (f64, Vec<f64>) = (f64::NAN, Vec::new());
        let mut visit = |k: usize, st: &ChainState| {
            if k < s.chain.burn_in {
                return;
            }
            let tau = st.theta.first().copied().unwrap_or(s.tau_fixed);
            if cache.0 != tau {
                cache = (tau, self.model.weights(tau).unwrap_or_default());
            }
            let c: Vec<f64> = cache.1.iter().zip(&st.x).map(|(w, x)| w * x).collect();
            mean_coeffs.push(&c);
        };
        let mut rng = chain_rng(seed);
        let rec = if hierarchical {
            let mut k = NcGibbs::new(&self.model, self.hyper()?, s.beta)?;
            let init = k.init(start, vec![s.tau_fixed])?;
            run_chain_observed(&mut k, init, &opts, &mut rng, None, &mut visit)?
        } else {
            let fixed = FixedTheta { potential: &self.model, theta: vec![s.tau_fixed] };
            let mut k = Wpcn::new(&fixed, s.beta)?;
            let init = k.init(start, Vec::new())?;
            run_chain_observed(&mut k, init, &opts, &mut rng, None, &mut visit)?
        };
        let mut v = vec![0.0; self.truth_field.len()];
        let basis = CosineBasis::enumerate(Rectangle::unit(2), s.n_modes, 0)?;
        let grid = DarcyProblem::constant_source(2, s.grid, s.source)?.grid();
        BasisEvaluator::new(&basis, &grid)?.synthesize(&mean_coeffs.mean(), &mut v);
        Ok((rec, v))
    }

    /// Fraction of nodes where the level set of `v` differs from the truth's class.
    pub fn misclassified_fraction(&self, v: &[f64]) -> f64 {
        let wrong = v
            .iter()
            .zip(&self.truth_classes)
            .filter(|(&x, &c)| self.model.levels().class_index(x) != c)
            .count();
        wrong as f64 / v.len() as f64
    }
}

pub fn run_darcy_hier(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let settings = DarcySettings::from_config(cfg)?;
    let setup = DarcySetup::generate(settings, cfg.seed)?;
    let s = &setup.settings;
    let (fixed_rec, fixed_v) = setup.run(false, derive_seed(cfg.seed, 10))?;
    let (hier_rec, hier_v) = setup.run(true, derive_seed(cfg.seed, 11))?;

    let out = Artifacts::new(cfg)?;
    let mut summary = RunSummary::new(cfg.experiment);
    let hash = cfg.hash();
    out.write_raw(&mut summary, "darcy_fixed_chain.csv", &fixed_rec.to_csv(&hash, cfg.seed))?;
    out.write_raw(&mut summary, "darcy_hier_chain.csv", &hier_rec.to_csv(&hash, cfg.seed))?;

    let problem = DarcyProblem::constant_source(2, s.grid, s.source)?;
    let levels = setup.model.levels();
    let mut fields = String::from("node,x,y,truth_v,truth_class,fixed_mean_v,fixed_class,hier_mean_v,hier_class\n");
    for i in 0..fixed_v.len() {
        let p = problem.node_position(i);
        fields.push_str(&format!(
            "{i},{},{},{},{},{},{},{},{}\n",
            p[0],
            p[1],
            setup.truth_field[i],
            setup.truth_classes[i],
            fixed_v[i],
            levels.class_index(fixed_v[i]),
            hier_v[i],
            levels.class_index(hier_v[i])
        ));
    }
    out.write(&mut summary, "darcy_fields.csv", &fields)?;
    let mut obs = String::from("node,x,y,pressure\n");
    for (&i, v) in setup.obs_nodes.iter().zip(&setup.y) {
        let p = problem.node_position(i);
        obs.push_str(&format!("{i},{},{},{v}\n", p[0], p[1]));
    }
    out.write(&mut summary, "darcy_observations.csv", &obs)?;

    let taus: Vec<f64> = hier_rec.post_burn_in().map(|i| hier_rec.theta_trace[i][0]).collect();
    let width = (s.tau_upper - s.tau_lower) / s.hist_bins as f64;
    let mut counts = vec![0usize; s.hist_bins];
    for &t in &taus {
        counts[(((t - s.tau_lower) / width) as usize).min(s.hist_bins - 1)] += 1;
    }
    let mut hist = String::from("bin_lower,bin_upper,prior_density,posterior_density\n");
    for (b, &c) in counts.iter().enumerate() {
        let lo = s.tau_lower + b as f64 * width;
        let post = c as f64 / (taus.len().max(1) as f64 * width);
        hist.push_str(&format!("{lo},{},{},{post}\n", lo + width, 1.0 / (s.tau_upper - s.tau_lower)));
    }
    out.write(&mut summary, "darcy_tau_hist.csv", &hist)?;

    let all_taus: Vec<f64> = hier_rec.theta_trace.iter().map(|t| t[0]).collect();
    let in_support = all_taus.iter().all(|&t| (s.tau_lower..=s.tau_upper).contains(&t));
    let prior_var = (s.tau_upper - s.tau_lower).powi(2) / 12.0;
    let post_var = sample_variance(&taus);
    summary.push("misclassified_fixed", setup.misclassified_fraction(&fixed_v));
    summary.push("misclassified_hier", setup.misclassified_fraction(&hier_v));
    summary.push("acceptance_fixed", fixed_rec.acceptance_rate());
    summary.push("acceptance_hier_xi", hier_rec.acceptance_rate());
    summary.push("acceptance_hier_tau", hier_rec.theta_acceptance_rate().unwrap_or(f64::NAN));
    summary.push("tau_posterior_mean", taus.iter().sum::<f64>() / taus.len().max(1) as f64);
    summary.push("tau_posterior_var", post_var);
    summary.push("tau_prior_var", prior_var);
    summary.push("tau_var_ratio", post_var / prior_var);
    summary.push("tau_in_support", in_support as u8 as f64);
    out.finish(summary)
}
