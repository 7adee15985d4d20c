//! Karhunen-Loeve expansions of Whittle-Matern fields on rectangles with
//! Neumann boundary conditions.

use std::f64::consts::PI;

use super::matern::MaternParams;
use crate::error::{domain, Result};
use crate::prior_transforms::{CoefficientLaw, CosineBasis, MeanField, Rectangle, SeriesPrior};
use crate::special::ln_gamma;

/// Eigenvalues (non-increasing) and the cosine basis they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRep {
    pub eigenvalues: Vec<f64>,
    pub basis: CosineBasis,
}

impl SpectralRep {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Gaussian series prior `m + sum_j sqrt(lambda_j) xi_j phi_j`.
    pub fn series_prior(&self, mean: MeanField) -> Result<SeriesPrior> {
        let w = self.eigenvalues.iter().map(|l| l.sqrt()).collect();
        SeriesPrior::new(mean, w, self.basis.clone(), CoefficientLaw::Gaussian)
    }
}

/// `sigma^2 tau^{2 nu} q(nu) (tau^2 + |k|^2)^{-(nu + d/2)}` with
/// `q(nu) = 2^d pi^{d/2} Gamma(nu + d/2) / Gamma(nu)`, for a mode with
/// Laplacian eigenvalue `wavenumber_sq`.
pub fn kl_eigenvalue(p: &MaternParams, wavenumber_sq: f64) -> f64 {
    let d = p.dim as f64;
    let nu = p.regularity;
    let ln_q = d * std::f64::consts::LN_2 + 0.5 * d * PI.ln() + ln_gamma(nu + 0.5 * d) - ln_gamma(nu);
    let ln = 2.0 * p.sigma.ln() + 2.0 * nu * p.tau.ln() + ln_q
        - (nu + 0.5 * d) * (p.tau * p.tau + wavenumber_sq).ln();
    ln.exp()
}

/// `sqrt(lambda_j)` for every mode of `basis`, the series weights of the KL prior.
pub fn kl_weights(basis: &CosineBasis, p: &MaternParams) -> Vec<f64> {
    (0..basis.len()).map(|j| kl_eigenvalue(p, basis.wavenumber_sq(j)).sqrt()).collect()
}

/// The first `n` KL eigenpairs of a Matern field on `domain`.
///
/// With `extension > 1` the basis lives on the concentric box enlarged by
/// that factor, which pushes boundary distortion of the covariance away
/// from `domain`.
pub fn kl_eigenpairs_rectangle(domain_box: &Rectangle, p: &MaternParams, n: usize, extension: f64) -> Result<SpectralRep> {
    p.validate()?;
    if n == 0 {
        return domain("KL truncation must be positive");
    }
    if domain_box.dim() != p.dim {
        return domain(format!(
            "Matern dimension {} does not match the domain dimension {}",
            p.dim,
            domain_box.dim()
        ));
    }
    let support = domain_box.extended(extension)?;
    let basis = CosineBasis::enumerate(support, n, 0)?;
    let eigenvalues = (0..n).map(|j| kl_eigenvalue(p, basis.wavenumber_sq(j))).collect();
    Ok(SpectralRep { eigenvalues, basis })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_eigenvalue_unit_params() {
        let p = MaternParams::new(1.0, 1.0, 1.0, 1).unwrap();
        let rep = kl_eigenpairs_rectangle(&Rectangle::unit(1), &p, 5, 1.0).unwrap();
        assert!((rep.eigenvalues[1] - 0.087_665_611_261_177_83).abs() < 1e-15);
        // j = 0 mode: sigma^2 tau^{2nu} q tau^{-2nu-d} = pi for these params.
        assert!((rep.eigenvalues[0] - PI).abs() < 1e-13);
        assert!(rep.eigenvalues.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn eigenvalues_non_increasing_in_2d() {
        let p = MaternParams::new(1.0, 10.0, 1.5, 2).unwrap();
        let rep = kl_eigenpairs_rectangle(&Rectangle::unit(2), &p, 200, 1.0).unwrap();
        assert!(rep.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_zero_truncation_and_dim_mismatch() {
        let p = MaternParams::new(1.0, 1.0, 1.0, 1).unwrap();
        assert!(kl_eigenpairs_rectangle(&Rectangle::unit(1), &p, 0, 1.0).is_err());
        assert!(kl_eigenpairs_rectangle(&Rectangle::unit(2), &p, 4, 1.0).is_err());
    }
}
