//! MCMC kernels on white-noise coordinates and the chain driver.
//!
//! Every kernel consumes a fixed amount of randomness per block: one
//! standard normal per latent coordinate for the proposal, then exactly one
//! uniform for the accept/reject decision, whether or not the proposal could
//! be evaluated. Two kernels built on the same seed therefore see the same
//! noise, which is what makes side-by-side comparisons (wpCN against pCN,
//! w-infinity-MALA with zero gradient against wpCN) exact.

mod chain;
mod gibbs;
mod hyper;
mod kernels;

pub use chain::{run_chain, run_chain_observed, ChainRecord, RunOptions};
pub use gibbs::{FixedTheta, NcGibbs};
pub use hyper::{HyperParam, HyperParams};
pub use kernels::{mala_beta, mala_h_from_beta, DiagonalGaussian, GaussianSampler, Pcn, Rwm, RwmVariant, Wmala, Wpcn};

use crate::error::Result;
use crate::rng::ChainRng;

/// A potential on the sampler's state space: `Psi(xi) = Phi(T(xi))` for the
/// whitened kernels, `Phi(u)` for pCN and the random-walk baselines.
pub trait Potential {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
}

/// A potential with gradient.
pub trait Differentiable: Potential {
    /// Returns the value and writes the gradient into `grad`.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64>;
}

/// `Phi(T(xi, theta); y)` for the non-centred hierarchical kernel.
pub trait HierarchicalPotential {
    fn dim(&self) -> usize;
    fn value(&self, xi: &[f64], theta: &[f64]) -> Result<f64>;
}

impl<P: Potential + ?Sized> Potential for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
}

impl<P: Differentiable + ?Sized> Differentiable for &P {
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        (**self).value_and_gradient(x, grad)
    }
}

/// Current position of a chain with its cached potential (and gradient,
/// for gradient-based kernels).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    /// Hyperparameter values; empty when the kernel has none.
    pub theta: Vec<f64>,
    pub phi: f64,
    /// Gradient at `x`; empty unless the kernel uses one.
    pub grad: Vec<f64>,
}

/// Accept decisions of one kernel step, per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepFlags {
    pub latent: bool,
    /// `None` for kernels without a hyperparameter block.
    pub theta: Option<bool>,
}

/// Proposal/accept counters kept by each kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelStats {
    pub proposals: u64,
    pub accepted: u64,
    /// Proposals rejected because the potential (or its gradient) could not
    /// be evaluated or was not finite.
    pub failures: u64,
}

pub trait Kernel {
    fn name(&self) -> &'static str;

    /// Builds the starting state, evaluating the cached potential.
    fn init(&self, x: Vec<f64>, theta: Vec<f64>) -> Result<ChainState>;

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> StepFlags;

    fn has_theta_block(&self) -> bool {
        false
    }

    fn theta_names(&self) -> Vec<String> {
        Vec::new()
    }

    fn stats(&self) -> KernelStats;
}

/// Metropolis decision from a log acceptance ratio and a uniform draw.
pub(crate) fn metropolis(log_alpha: f64, u: f64) -> bool {
    log_alpha >= 0.0 || u.ln() < log_alpha
}
