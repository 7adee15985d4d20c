//! Scalar maps `Lambda` taking a standard normal to a coefficient law.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, LN_2, PI};

use crate::error::{domain, Result};
use crate::special::{
    erf, erfc, inverse_regularized_gamma_pq, ln_erfc, ln_gamma, ln_norm_pdf, norm_pdf,
};

/// `Lambda(xi) = 2 F(xi) - 1`, a `U(-1, 1)` variable when `xi ~ N(0, 1)`.
pub fn lambda_uniform(xi: f64) -> Result<f64> {
    if !xi.is_finite() {
        return domain(format!("lambda_uniform needs a finite input, got {xi}"));
    }
    // 2F(x) - 1 = erf(x / sqrt 2), without the cancellation near zero.
    Ok(erf(xi * FRAC_1_SQRT_2))
}

pub fn lambda_uniform_derivative(xi: f64) -> f64 {
    2.0 * norm_pdf(xi)
}

/// Output of [`lambda_besov`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovValue {
    pub value: f64,
    /// `d Lambda / d xi`.
    pub derivative: f64,
    /// Set when `xi == 0` and `q < 2`: `derivative` then holds the one-sided
    /// limit rather than a derivative computed at a regular point.
    pub non_smooth: bool,
}

/// Map to the law with density proportional to `exp(-|x|^q / 2)`.
///
/// `Lambda(xi) = 2^{1/q} sgn(xi) (P^{-1}_{1/q}(2F(|xi|) - 1))^{1/q}` where
/// `P_{1/q}` is the normalised lower incomplete gamma function. Writing `G`
/// for the inner inverse, the derivative simplifies to
/// `2^{1/q + 1} Gamma(1 + 1/q) e^G f(xi)`, evaluated in log form.
pub fn lambda_besov(xi: f64, q: f64) -> Result<BesovValue> {
    if !xi.is_finite() {
        return domain(format!("lambda_besov needs a finite input, got {xi}"));
    }
    if !(q >= 1.0) || !q.is_finite() {
        return domain(format!("Besov exponent must satisfy q >= 1, got {q}"));
    }
    let a = 1.0 / q;
    let g = besov_inner(xi, q)?;
    let value = besov_from_inner(xi, g, a);
    let ln_scale = if a == 1.0 { 2.0 * LN_2 } else { (a + 1.0) * LN_2 + ln_gamma(1.0 + a) };
    let derivative = (ln_scale + g + ln_norm_pdf(xi)).exp();
    Ok(BesovValue {
        value,
        derivative,
        non_smooth: xi == 0.0 && q < 2.0,
    })
}

/// `Lambda(xi)` of [`lambda_besov`] without the derivative.
pub(crate) fn lambda_besov_value(xi: f64, q: f64) -> Result<f64> {
    if !xi.is_finite() {
        return domain(format!("lambda_besov needs a finite input, got {xi}"));
    }
    if !(q >= 1.0) || !q.is_finite() {
        return domain(format!("Besov exponent must satisfy q >= 1, got {q}"));
    }
    Ok(besov_from_inner(xi, besov_inner(xi, q)?, 1.0 / q))
}

/// `G = P^{-1}_{1/q}(2F(|xi|) - 1)`.
fn besov_inner(xi: f64, q: f64) -> Result<f64> {
    let r = xi.abs() * FRAC_1_SQRT_2;
    if r == 0.0 {
        Ok(0.0)
    } else if q == 1.0 {
        // a = 1 has the closed form G = -ln(1 - p) with 1 - p = erfc(r).
        Ok(-ln_erfc(r))
    } else {
        inverse_regularized_gamma_pq(erf(r), erfc(r), 1.0 / q)
    }
}

fn besov_from_inner(xi: f64, g: f64, a: f64) -> f64 {
    let magnitude = if a == 1.0 { 2.0 * g } else { (a * LN_2).exp() * g.powf(a) };
    if xi < 0.0 {
        -magnitude
    } else if xi > 0.0 {
        magnitude
    } else {
        0.0
    }
}

/// Parameters of a stable law `S(alpha, skew, scale, loc)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub alpha: f64,
    pub skew: f64,
    pub scale: f64,
    pub loc: f64,
}

impl StableParams {
    pub fn new(alpha: f64, skew: f64, scale: f64, loc: f64) -> Result<Self> {
        let p = Self { alpha, skew, scale, loc };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return domain(format!("stable alpha must lie in (0, 2], got {}", self.alpha));
        }
        if !(-1.0..=1.0).contains(&self.skew) {
            return domain(format!("stable skewness must lie in [-1, 1], got {}", self.skew));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return domain(format!("stable scale must be positive, got {}", self.scale));
        }
        if !self.loc.is_finite() {
            return domain("stable location must be finite");
        }
        Ok(())
    }
}

/// Chambers-Mallows-Stuck map from two independent standard normals to
/// `S(alpha, skew, scale, loc)`.
///
/// The normals are first turned into `U = pi (F(xi) - 1/2) ~ U(-pi/2, pi/2)`
/// and `W = -ln(1 - F(xi2)) ~ Exp(1)`.
pub fn lambda_stable(xi: f64, xi2: f64, p: &StableParams) -> Result<f64> {
    p.validate()?;
    if !xi.is_finite() || !xi2.is_finite() {
        return domain("lambda_stable needs finite inputs");
    }
    let u = FRAC_PI_2 * erf(xi * FRAC_1_SQRT_2);
    let w = LN_2 - ln_erfc(xi2 * FRAC_1_SQRT_2);
    let StableParams { alpha, skew, scale, loc } = *p;
    if alpha != 1.0 {
        let tau = -skew * (FRAC_PI_2 * alpha).tan();
        let theta = (-tau).atan() / alpha;
        let factor = (1.0 + tau * tau).powf(1.0 / (2.0 * alpha));
        let cos_u = u.cos();
        let core = (alpha * (u + theta)).sin() / cos_u.powf(1.0 / alpha)
            * ((u - alpha * (u + theta)).cos() / w).powf((1.0 - alpha) / alpha);
        Ok(loc + scale * factor * core)
    } else {
        let tau = 2.0 / PI * skew * scale * scale.ln();
        let theta = FRAC_PI_2;
        let bracket = (FRAC_PI_2 + skew * u) * u.tan()
            - skew * ((PI * w * u.cos()) / (PI + 2.0 * skew * u)).ln();
        Ok(loc + tau + scale / theta * bracket)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chain_rng, fill_standard_normal};

    #[test]
    fn uniform_reference_values() {
        assert_eq!(lambda_uniform(0.0).unwrap(), 0.0);
        assert!((lambda_uniform(1.0).unwrap() - 0.682_689_492_137_085_9).abs() < 1e-15);
        assert!((lambda_uniform(-1.0).unwrap() + 0.682_689_492_137_085_9).abs() < 1e-15);
        assert!(lambda_uniform(f64::INFINITY).is_err());
        assert!(lambda_uniform(40.0).unwrap() <= 1.0);
    }

    #[test]
    fn uniform_is_strictly_increasing() {
        let xs: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.1).collect();
        for w in xs.windows(2) {
            assert!(lambda_uniform(w[0]).unwrap() < lambda_uniform(w[1]).unwrap());
        }
    }

    #[test]
    fn besov_reference_values() {
        let cases = [
            (0.674_49, 1.0, 1.386_294_996_174_602),
            (1.3, 1.5, 1.716_681_917_404_922_4),
            (-0.7, 3.0, -0.595_924_183_419_868_9),
            (2.0, 1.0, 6.180_074_306_244_173),
            (2.5, 4.0, 1.458_152_752_719_718_3),
        ];
        for (xi, q, want) in cases {
            let got = lambda_besov(xi, q).unwrap().value;
            assert!(((got - want) / want).abs() < 1e-12, "xi={xi} q={q}: {got} vs {want}");
        }
        assert!((lambda_besov(1.3, 2.0).unwrap().value - 1.3).abs() < 1e-12);
    }

    #[test]
    fn besov_zero_and_errors() {
        let v = lambda_besov(0.0, 1.0).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.non_smooth);
        // The limit 2^{1/q+1} Gamma(1+1/q) f(0) equals 4 f(0) for q = 1.
        assert!((v.derivative - 4.0 * norm_pdf(0.0)).abs() < 1e-14);
        assert!(!lambda_besov(0.0, 2.0).unwrap().non_smooth);
        assert!((lambda_besov(0.0, 2.0).unwrap().derivative - 1.0).abs() < 1e-14);
        assert!(lambda_besov(0.3, 0.5).is_err());
        assert!(lambda_besov(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn besov_derivative_matches_central_differences() {
        for &q in &[1.0, 1.5, 2.0, 3.0] {
            for &xi in &[-2.2, -0.4, 0.3, 1.1, 3.5] {
                let h = 1e-6;
                let fd = (lambda_besov(xi + h, q).unwrap().value
                    - lambda_besov(xi - h, q).unwrap().value)
                    / (2.0 * h);
                let d = lambda_besov(xi, q).unwrap().derivative;
                assert!(((fd - d) / d).abs() < 1e-7, "q={q} xi={xi}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn stable_location_shift_is_exact() {
        for &alpha in &[0.5, 1.0, 1.5, 2.0] {
            let base = StableParams::new(alpha, 0.3, 1.7, 0.0).unwrap();
            let shifted = StableParams { loc: 2.5, ..base };
            let a = lambda_stable(0.4, -0.9, &base).unwrap();
            let b = lambda_stable(0.4, -0.9, &shifted).unwrap();
            assert!((b - a - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn stable_parameter_validation() {
        assert!(StableParams::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(StableParams::new(2.1, 0.0, 1.0, 0.0).is_err());
        assert!(StableParams::new(1.0, 1.5, 1.0, 0.0).is_err());
        assert!(StableParams::new(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn stable_alpha_two_is_gaussian_with_variance_two_scale_sq() {
        let p = StableParams::new(2.0, 0.0, 1.0, 0.0).unwrap();
        let mut rng = chain_rng(11);
        let n = 200_000;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        fill_standard_normal(&mut rng, &mut a);
        fill_standard_normal(&mut rng, &mut b);
        let xs: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| lambda_stable(x, y, &p).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 2.0).abs() < 0.04, "variance {var}");
    }

    #[test]
    fn stable_cauchy_is_symmetric() {
        let p = StableParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let mut rng = chain_rng(5);
        let n = 100_000;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        fill_standard_normal(&mut rng, &mut a);
        fill_standard_normal(&mut rng, &mut b);
        let below = a
            .iter()
            .zip(&b)
            .filter(|(&x, &y)| lambda_stable(x, y, &p).unwrap() <= 0.0)
            .count();
        let frac = below as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }
}
