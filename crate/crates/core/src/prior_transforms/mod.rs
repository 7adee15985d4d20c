//! White-noise representations of non-Gaussian priors.
//!
//! A prior is represented by a map `T` from a vector of i.i.d. standard
//! normals to the field. For series priors
//!
//! ```text
//! T(xi) = m + sum_j rho_j Lambda_j(xi_j) phi_j
//! ```
//!
//! where each `Lambda_j` pushes `N(0, 1)` forward to the coefficient law.
//! Level-set priors compose such a map with a thresholding step.

mod lambda;
mod levelset;
mod noise;
mod series;

pub use lambda::{
    lambda_besov, lambda_stable, lambda_uniform, lambda_uniform_derivative, BesovValue,
    StableParams,
};
pub(crate) use levelset::argmax_lowest;
pub use levelset::{levelset_map, vector_levelset_map, LevelSetSpec, OneHotField};
pub use noise::WhiteNoiseVector;
pub use series::{
    besov_weights, series_transform, series_transform_grad, BasisEvaluator, CoefficientLaw,
    CosineBasis, EvaluationGrid, MeanField, Rectangle, SeriesPrior, SeriesTransform,
};
