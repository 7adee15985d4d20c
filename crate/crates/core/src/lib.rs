//! White-noise MCMC for Bayesian inverse problems.
//!
//! Every prior handled here is written as a deterministic map `T` applied to
//! a vector `xi` of i.i.d. standard normals. Samplers then run in `xi`-space,
//! where the prior is `N(0, I)` regardless of how the field itself is
//! distributed, so proposals such as preconditioned Crank-Nicolson keep their
//! acceptance rates as the truncation grows.
//!
//! Layout:
//!
//! * [`prior_transforms`] coefficient maps (uniform, Besov, stable), series
//!   priors, their adjoint gradients, and level-set maps.
//! * [`gaussian_field`] Whittle-Matern covariance, Karhunen-Loeve spectra on
//!   rectangles, Cholesky whitening and graph-Laplacian priors.
//! * [`forward`] likelihood potentials: regression, convolution, Darcy flow,
//!   graph classification and probit.
//! * [`samplers`] pCN, whitened pCN, whitened infinity-MALA, random-walk
//!   baselines and the non-centred Metropolis-within-Gibbs kernel.
//! * [`diagnostics`] acceptance sweeps, autocorrelation, ESS and
//!   classification uncertainty.
//! * [`experiments`] config-driven runners behind the `wnmcmc` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod gaussian_field;
pub mod prior_transforms;
pub mod rng;
pub mod samplers;
pub mod special;

pub use error::{Error, Result};
