//! Gaussian fields: Whittle-Matern covariances, Karhunen-Loeve spectra on
//! rectangles, Cholesky whitening on point sets and graph-Laplacian priors.

mod cache;
mod cholesky;
mod graph;
mod kl;
mod matern;

pub use cache::{features_digest, load_or_compute_spectrum, read_spectrum, write_spectrum};
pub use cholesky::{cholesky_whiten, LowerFactor, DEFAULT_CHOLESKY_CAP};
pub use graph::{graph_laplacian, spectral_prior_transform, GraphLaplacian, GraphPrior, GraphSpectrum};
pub use kl::{kl_eigenpairs_rectangle, kl_eigenvalue, kl_weights, SpectralRep};
pub use matern::{matern_covariance, MaternParams};
