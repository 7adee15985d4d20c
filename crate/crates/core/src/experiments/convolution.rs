//! Autocorrelation of `||u||` for a uniform series prior observed through a
//! damped convolution, comparing whitened pCN with whitened infinity-MALA.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{ChainSettings, ExperimentConfig};
use super::models::ConvolutionModel;
use super::{csv_row, Artifacts, RunSummary};
use crate::diagnostics::{autocorrelation, ess};
use crate::error::{Error, Result};
use crate::prior_transforms::lambda_uniform;
use crate::rng::{chain_rng, derive_seed, standard_normal_vec};
use crate::samplers::{run_chain, run_chain_observed, ChainState, Kernel, RunOptions, Wmala, Wpcn};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionSettings {
    pub n_modes: usize,
    pub truth_n: usize,
    pub mean: f64,
    pub obs_counts: Vec<usize>,
    /// Noise standard deviation as a fraction of the root-mean-square of the clean data.
    pub relative_noise: f64,
    pub chain: ChainSettings,
    pub max_lag: usize,
    pub pilot_betas: Vec<f64>,
    pub pilot_steps: usize,
    pub target_wpcn: f64,
    pub target_wmala: f64,
}

impl ConvolutionSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let c = &cfg.values;
        let s = Self {
            n_modes: c.get_or("conv.n_modes", 1024)?,
            truth_n: c.get_or("conv.truth_n", 4096)?,
            mean: c.get_or("conv.mean", 2.0)?,
            obs_counts: c.list_or("conv.obs_counts", &[8, 32])?,
            relative_noise: c.get_or("conv.relative_noise", 0.04)?,
            chain: ChainSettings::read(c, "conv", 20_000, 2_000, 1)?,
            max_lag: c.get_or("conv.max_lag", 100)?,
            pilot_betas: c.list_or(
                "conv.pilot_betas",
                &[
                    0.004, 0.005, 0.006, 0.007, 0.008, 0.009, 0.01, 0.011, 0.012, 0.014, 0.016, 0.018, 0.02, 0.025,
                    0.03, 0.04, 0.06, 0.1, 0.2,
                ],
            )?,
            pilot_steps: c.get_or("conv.pilot_steps", 2_000)?,
            target_wpcn: c.get_or("conv.target_wpcn", 0.3)?,
            target_wmala: c.get_or("conv.target_wmala", 0.6)?,
        };
        if s.n_modes > s.truth_n || s.n_modes == 0 || s.obs_counts.is_empty() || s.pilot_betas.is_empty() {
            return Err(Error::Config("conv: need 0 < n_modes <= truth_n, observations and pilot steps".into()));
        }
        if s.max_lag >= s.chain.steps - s.chain.burn_in {
            return Err(Error::Config("conv.max_lag must be shorter than the post burn-in chain".into()));
        }
        Ok(s)
    }
}

fn weights(n: usize) -> Vec<f64> {
    (1..=n).map(|i| 1.0 / (i * i) as f64).collect()
}

fn points(j: usize) -> Vec<f64> {
    (1..=j).map(|i| i as f64 / (j + 1) as f64).collect()
}

fn build<'a>(name: &str, m: &'a ConvolutionModel, beta: f64) -> Result<Box<dyn Kernel + 'a>> {
    Ok(match name {
        "wpcn" => Box::new(Wpcn::new(m, beta)?),
        _ => Box::new(Wmala::from_beta(m, beta)?),
    })
}

type PilotCurve = Vec<(f64, f64)>;

/// Pilot runs over the beta grid; returns the beta whose acceptance is
/// closest to `target` (lower beta on ties), that acceptance, and the whole
/// pilot curve.
fn tune(
    name: &str,
    m: &ConvolutionModel,
    start: &[f64],
    s: &ConvolutionSettings,
    target: f64,
    seed: u64,
) -> Result<(f64, f64, PilotCurve)> {
    let mut best = (s.pilot_betas[0], f64::NAN, f64::INFINITY);
    let mut curve = Vec::with_capacity(s.pilot_betas.len());
    for (i, &b) in s.pilot_betas.iter().enumerate() {
        let mut k = build(name, m, b)?;
        let init = k.init(start.to_vec(), Vec::new())?;
        let rec = run_chain(k.as_mut(), init, &RunOptions::new(s.pilot_steps), &mut chain_rng(derive_seed(seed, i as u64)))?;
        let a = rec.acceptance_rate();
        curve.push((b, a));
        if (a - target).abs() < best.2 {
            best = (b, a, (a - target).abs());
        }
    }
    Ok((best.0, best.1, curve))
}

pub fn run_convolution_acf(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let s = ConvolutionSettings::from_config(cfg)?;
    let truth_xi = standard_normal_vec(&mut chain_rng(derive_seed(cfg.seed, 0)), s.truth_n);
    let truth_coeffs: Vec<f64> = truth_xi
        .iter()
        .zip(weights(s.truth_n))
        .map(|(&x, w)| Ok(w * lambda_uniform(x)?))
        .collect::<Result<_>>()?;
    let start = truth_xi[..s.n_modes].to_vec();
    let out = Artifacts::new(cfg)?;
    let mut summary = RunSummary::new(cfg.experiment);
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    let mut pilots = String::from("kernel,observations,beta,acceptance\n");
    let mut tuning = String::from("kernel,observations,beta,pilot_acceptance,acceptance,ess\n");
    for (oi, &j) in s.obs_counts.iter().enumerate() {
        let pts = points(j);
        let clean = ConvolutionModel::forward(&truth_coeffs, &pts)?;
        let rms = (clean.iter().map(|v| v * v).sum::<f64>() / j as f64).sqrt();
        let noise_std = s.relative_noise * rms.max(1e-12);
        let mut rng = chain_rng(derive_seed(cfg.seed, 1 + oi as u64));
        let y: Vec<f64> = clean.iter().map(|v| v + noise_std * rng.sample::<f64, _>(StandardNormal)).collect();
        let model = ConvolutionModel::new(weights(s.n_modes), s.mean, &pts, y, noise_std)?;
        for (ki, (name, target)) in [("wpcn", s.target_wpcn), ("wmala", s.target_wmala)].into_iter().enumerate() {
            let stream = 100 * (oi as u64 + 1) + 10 * ki as u64;
            let (beta, pilot, curve) = tune(name, &model, &start, &s, target, derive_seed(cfg.seed, stream))?;
            for (b, a) in curve {
                pilots.push_str(&format!("{name},{j},{b},{a}\n"));
            }
            let mut k = build(name, &model, beta)?;
            let init = k.init(start.clone(), Vec::new())?;
            let opts = RunOptions { steps: s.chain.steps, thin: 1, burn_in: s.chain.burn_in, keep_samples: false };
            let norm = |st: &ChainState| model.l2_norm(&st.x).unwrap_or(f64::NAN);
            let rec = run_chain_observed(
                k.as_mut(),
                init,
                &opts,
                &mut chain_rng(derive_seed(cfg.seed, stream + 1)),
                Some(&norm),
                &mut |_, _| {},
            )?;
            let series: Vec<f64> = rec.post_burn_in().map(|i| rec.summaries[i]).collect();
            let acf = autocorrelation(&series, s.max_lag)?;
            let e = ess(&series, s.max_lag)?;
            tuning.push_str(&format!("{name},{j},{beta},{pilot},{},{}\n", rec.acceptance_rate(), e.value));
            let lag = 50.min(s.max_lag);
            summary.push(format!("acf{lag}_{name}_obs{j}"), acf.values[lag]);
            summary.push(format!("beta_{name}_obs{j}"), beta);
            summary.push(format!("acceptance_{name}_obs{j}"), rec.acceptance_rate());
            summary.push(format!("ess_{name}_obs{j}"), e.value);
            columns.push((format!("{name}_obs{j}"), acf.values));
        }
    }
    let mut acf_csv = String::from("lag");
    for (n, _) in &columns {
        acf_csv.push(',');
        acf_csv.push_str(n);
    }
    acf_csv.push('\n');
    for lag in 0..=s.max_lag {
        let row: Vec<f64> = columns.iter().map(|(_, v)| v[lag]).collect();
        acf_csv.push_str(&format!("{lag},{}\n", csv_row(&row)));
    }
    out.write(&mut summary, "convolution_acf.csv", &acf_csv)?;
    out.write(&mut summary, "convolution_tuning.csv", &tuning)?;
    out.write(&mut summary, "convolution_pilot.csv", &pilots)?;
    out.finish(summary)
}
