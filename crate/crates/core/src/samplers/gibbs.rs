//! Non-centred pCN-within-Gibbs for `(xi, theta)`.

use rand::Rng;

use super::hyper::HyperParams;
use super::kernels::pcn_proposal;
use super::{metropolis, ChainState, HierarchicalPotential, Kernel, KernelStats, Potential, StepFlags};
use crate::error::{domain, Error, Result};
use crate::rng::ChainRng;

/// Each step makes one whitened pCN move on `xi` given `theta`, then one
/// Metropolis-Hastings move on `theta` given the updated `xi`. The target is
/// `exp(-Phi(T(xi, theta))) N(0, I)(dxi) pi_0(theta) dtheta`.
pub struct NcGibbs<'a, H: ?Sized> {
    potential: &'a H,
    hyper: HyperParams,
    beta: f64,
    scratch: Vec<f64>,
    theta_hat: Vec<f64>,
    xi_stats: KernelStats,
    theta_stats: KernelStats,
}

impl<'a, H: HierarchicalPotential + ?Sized> NcGibbs<'a, H> {
    pub fn new(potential: &'a H, hyper: HyperParams, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return domain(format!("step size beta must lie in (0, 1], got {beta}"));
        }
        let n = potential.dim();
        let m = hyper.len();
        Ok(Self {
            potential,
            hyper,
            beta,
            scratch: vec![0.0; n],
            theta_hat: vec![0.0; m],
            xi_stats: KernelStats::default(),
            theta_stats: KernelStats::default(),
        })
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn theta_stats(&self) -> KernelStats {
        self.theta_stats
    }
}

impl<H: HierarchicalPotential + ?Sized> Kernel for NcGibbs<'_, H> {
    fn name(&self) -> &'static str {
        "ncgibbs"
    }

    fn init(&self, x: Vec<f64>, theta: Vec<f64>) -> Result<ChainState> {
        if x.len() != self.potential.dim() {
            return domain("initial latent state has the wrong dimension");
        }
        if !self.hyper.in_support(&theta) {
            return domain(format!("initial hyperparameters {theta:?} lie outside the prior support"));
        }
        let phi = self.potential.value(&x, &theta)?;
        if !phi.is_finite() {
            return Err(Error::Numeric("potential at the initial state is not finite".into()));
        }
        Ok(ChainState { x, theta, phi, grad: Vec::new() })
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> StepFlags {
        pcn_proposal(&state.x, self.beta, rng, &mut self.scratch);
        let u: f64 = rng.random();
        self.xi_stats.proposals += 1;
        let xi_ok = match self.potential.value(&self.scratch, &state.theta).ok().filter(|v| v.is_finite()) {
            Some(phi_hat) if metropolis(state.phi - phi_hat, u) => {
                std::mem::swap(&mut state.x, &mut self.scratch);
                state.phi = phi_hat;
                true
            }
            Some(_) => false,
            None => {
                self.xi_stats.failures += 1;
                false
            }
        };
        self.xi_stats.accepted += xi_ok as u64;

        let log_q = self.hyper.propose(&state.theta, rng, &mut self.theta_hat);
        let u: f64 = rng.random();
        self.theta_stats.proposals += 1;
        let theta_ok = if !self.hyper.in_support(&self.theta_hat) {
            false
        } else {
            match self.potential.value(&state.x, &self.theta_hat).ok().filter(|v| v.is_finite()) {
                Some(phi_hat) => {
                    let log_alpha = state.phi - phi_hat + log_q + self.hyper.ln_prior(&self.theta_hat)
                        - self.hyper.ln_prior(&state.theta);
                    if metropolis(log_alpha, u) {
                        state.theta.copy_from_slice(&self.theta_hat);
                        state.phi = phi_hat;
                        true
                    } else {
                        false
                    }
                }
                None => {
                    self.theta_stats.failures += 1;
                    false
                }
            }
        };
        self.theta_stats.accepted += theta_ok as u64;
        StepFlags { latent: xi_ok, theta: Some(theta_ok) }
    }

    fn has_theta_block(&self) -> bool {
        true
    }

    fn theta_names(&self) -> Vec<String> {
        self.hyper.names()
    }

    fn stats(&self) -> KernelStats {
        self.xi_stats
    }
}

/// A hierarchical potential with `theta` frozen, for running the latent
/// kernels alone.
pub struct FixedTheta<'a, H: ?Sized> {
    pub potential: &'a H,
    pub theta: Vec<f64>,
}

impl<H: HierarchicalPotential + ?Sized> Potential for FixedTheta<'_, H> {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.potential.value(x, &self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;
    use crate::samplers::HyperParam;

    struct Flat;
    impl HierarchicalPotential for Flat {
        fn dim(&self) -> usize {
            3
        }
        fn value(&self, _: &[f64], _: &[f64]) -> Result<f64> {
            Ok(0.0)
        }
    }

    #[test]
    fn flat_potential_accepts_in_support_moves() {
        let hyper = HyperParams::new(vec![
            HyperParam::continuous("tau", 1.0, 100.0, 0.2).unwrap(),
            HyperParam::integer("M", 1, 100).unwrap(),
        ])
        .unwrap();
        let mut k = NcGibbs::new(&Flat, hyper.clone(), 0.5).unwrap();
        let mut s = k.init(vec![0.0; 3], vec![10.0, 50.0]).unwrap();
        let mut rng = chain_rng(8);
        for _ in 0..2000 {
            let before = s.theta.clone();
            let f = k.step(&mut s, &mut rng);
            assert!(f.latent);
            assert!(hyper.in_support(&s.theta));
            assert!((s.theta[1] - before[1]).abs() <= 1.0);
        }
    }

    #[test]
    fn integer_walk_respects_bounds() {
        let hyper = HyperParams::new(vec![HyperParam::integer("M", 1, 3).unwrap()]).unwrap();
        let mut k = NcGibbs::new(&Flat, hyper, 0.5).unwrap();
        let mut s = k.init(vec![0.0; 3], vec![1.0]).unwrap();
        let mut rng = chain_rng(9);
        let mut seen = [0usize; 3];
        for _ in 0..3000 {
            k.step(&mut s, &mut rng);
            seen[s.theta[0] as usize - 1] += 1;
        }
        assert!(seen.iter().all(|&c| c > 700));
        assert!(k.init(vec![0.0; 3], vec![0.0]).is_err());
    }
}
