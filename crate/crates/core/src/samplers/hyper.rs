//! Hyperparameters with uniform priors and their random-walk proposals.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::rng::ChainRng;

/// One hyperparameter with a uniform prior on `[lower, upper]`
/// (on `{lower, .., upper}` when `integer`).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    /// Standard deviation of the log-scale step for continuous entries;
    /// ignored for integer entries, which move by one.
    pub proposal_scale: f64,
}

impl HyperParam {
    pub fn continuous(name: &str, lower: f64, upper: f64, proposal_scale: f64) -> Result<Self> {
        if !(lower > 0.0 && upper > lower && upper.is_finite()) {
            return domain(format!("{name}: continuous hyperparameters need 0 < lower < upper < inf"));
        }
        if !(proposal_scale > 0.0) || !proposal_scale.is_finite() {
            return domain(format!("{name}: proposal scale must be positive"));
        }
        Ok(Self { name: name.into(), lower, upper, integer: false, proposal_scale })
    }

    pub fn integer(name: &str, lower: i64, upper: i64) -> Result<Self> {
        if upper <= lower {
            return domain(format!("{name}: integer hyperparameters need lower < upper"));
        }
        Ok(Self { name: name.into(), lower: lower as f64, upper: upper as f64, integer: true, proposal_scale: 1.0 })
    }

    pub fn in_support(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper && (!self.integer || v.fract() == 0.0)
    }

    /// `ln pi_0(v)`, `-inf` outside the support.
    pub fn ln_prior(&self, v: f64) -> f64 {
        if !self.in_support(v) {
            f64::NEG_INFINITY
        } else if self.integer {
            -(self.upper - self.lower + 1.0).ln()
        } else {
            -(self.upper - self.lower).ln()
        }
    }

    /// Inverse-CDF draw from the prior given `u ~ U(0, 1)`.
    pub fn prior_quantile(&self, u: f64) -> f64 {
        if self.integer {
            let count = self.upper - self.lower + 1.0;
            (self.lower + (u * count).floor()).min(self.upper)
        } else {
            self.lower + u * (self.upper - self.lower)
        }
    }
}

/// Hyperparameter block `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub entries: Vec<HyperParam>,
}

impl HyperParams {
    pub fn new(entries: Vec<HyperParam>) -> Result<Self> {
        if entries.is_empty() {
            return domain("a hyperparameter block needs at least one entry");
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == self.len() && self.entries.iter().zip(theta).all(|(e, &v)| e.in_support(v))
    }

    pub fn ln_prior(&self, theta: &[f64]) -> f64 {
        self.entries.iter().zip(theta).map(|(e, &v)| e.ln_prior(v)).sum()
    }

    /// Joint proposal `theta_hat ~ q(theta, .)` and `ln q(theta_hat, theta) - ln q(theta, theta_hat)`.
    ///
    /// Continuous entries move as `theta exp(s z)`, `z ~ N(0, 1)`, whose
    /// density ratio is the Jacobian `theta_hat / theta`; integer entries move
    /// by `+1` or `-1` with equal probability. One draw is made per entry.
    pub fn propose(&self, theta: &[f64], rng: &mut ChainRng, out: &mut [f64]) -> f64 {
        let mut log_ratio = 0.0;
        for ((e, &v), o) in self.entries.iter().zip(theta).zip(out.iter_mut()) {
            if e.integer {
                let up: bool = rng.random();
                *o = if up { v + 1.0 } else { v - 1.0 };
            } else {
                let z: f64 = rng.sample(StandardNormal);
                *o = v * (e.proposal_scale * z).exp();
                log_ratio += o.ln() - v.ln();
            }
        }
        log_ratio
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;

    #[test]
    fn integer_moves_by_one_and_support() {
        let h = HyperParams::new(vec![HyperParam::integer("M", 1, 100).unwrap()]).unwrap();
        let mut rng = chain_rng(1);
        let mut out = [0.0];
        for _ in 0..100 {
            let r = h.propose(&[50.0], &mut rng, &mut out);
            assert_eq!(r, 0.0);
            assert!(out[0] == 49.0 || out[0] == 51.0);
        }
        assert!(!h.in_support(&[0.0]) && !h.in_support(&[101.0]) && h.in_support(&[100.0]));
        assert!(!h.in_support(&[2.5]));
        assert_eq!(h.entries[0].ln_prior(7.0), -(100f64).ln());
    }

    #[test]
    fn log_walk_ratio_is_jacobian() {
        let h = HyperParams::new(vec![HyperParam::continuous("tau", 1.0, 100.0, 0.3).unwrap()]).unwrap();
        let mut rng = chain_rng(2);
        let mut out = [0.0];
        let r = h.propose(&[10.0], &mut rng, &mut out);
        assert!((r - (out[0] / 10.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn quantile_covers_support() {
        let m = HyperParam::integer("M", 1, 100).unwrap();
        assert_eq!(m.prior_quantile(0.0), 1.0);
        assert_eq!(m.prior_quantile(0.999_999), 100.0);
        let t = HyperParam::continuous("alpha", 1.0, 100.0, 0.1).unwrap();
        assert_eq!(t.prior_quantile(0.5), 50.5);
        assert!(HyperParam::continuous("bad", 0.0, 1.0, 0.1).is_err());
    }
}
