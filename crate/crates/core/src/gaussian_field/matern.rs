use crate::error::{domain, Result};
use crate::special::{bessel_k, ln_gamma};

/// Whittle-Matern parameters: standard deviation, inverse length-scale,
/// regularity and spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternParams {
    pub sigma: f64,
    pub tau: f64,
    pub regularity: f64,
    pub dim: usize,
}

impl MaternParams {
    pub fn new(sigma: f64, tau: f64, regularity: f64, dim: usize) -> Result<Self> {
        let p = Self { sigma, tau, regularity, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.sigma) || !ok(self.tau) || !ok(self.regularity) || self.dim == 0 {
            return domain(format!("Matern parameters must be positive: {self:?}"));
        }
        Ok(())
    }
}

/// `sigma^2 2^{1-nu} / Gamma(nu) (tau r)^nu K_nu(tau r)` with `r = |x - x2|`.
pub fn matern_covariance(x: &[f64], x2: &[f64], p: &MaternParams) -> f64 {
    debug_assert_eq!(x.len(), x2.len());
    let r = x.iter().zip(x2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let s2 = p.sigma * p.sigma;
    if r == 0.0 {
        return s2;
    }
    let z = p.tau * r;
    let nu = p.regularity;
    // Infinite separation is the only input bessel_k rejects; its limit is 0.
    let k = bessel_k(nu, z).unwrap_or(0.0);
    if k == 0.0 {
        return 0.0;
    }
    let ln = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu) + nu * z.ln() + k.ln();
    (s2 * ln.exp()).min(s2)
}
