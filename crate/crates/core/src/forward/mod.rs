//! Forward models and the likelihood potentials `Phi(u; y)` built on them.

mod classification;
mod convolution;
mod darcy;
mod observations;
mod pointwise;

pub use classification::{levelset_classification_potential, misclassified_count, LabelledNode};
pub use convolution::{convolution_damping, convolution_forward, ConvolutionOperator};
pub use darcy::{darcy_potential, darcy_solve, DarcyProblem, DarcySolver};
pub use observations::ObservationSet;
pub use pointwise::{gaussian_misfit, probit_potential, regression_potential};
