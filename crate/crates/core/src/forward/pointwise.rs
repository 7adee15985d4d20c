//! Potentials that depend on the field only through its values at the observation sites.

use super::observations::ObservationSet;
use crate::error::{domain, Result};
use crate::special::{ln_norm_cdf, norm_pdf_over_cdf};

/// `Phi = sum_j (u_j - y_j)^2 / (2 gamma^2)` and `dPhi_j = (u_j - y_j) / gamma^2`.
pub fn gaussian_misfit(u_at_obs: &[f64], y: &[f64], gamma: f64, dphi: Option<&mut [f64]>) -> f64 {
    debug_assert_eq!(u_at_obs.len(), y.len());
    let inv = 1.0 / (gamma * gamma);
    let mut phi = 0.0;
    match dphi {
        Some(d) => {
            for ((di, &u), &yi) in d.iter_mut().zip(u_at_obs).zip(y) {
                let r = u - yi;
                *di = r * inv;
                phi += r * r;
            }
        }
        None => {
            for (&u, &yi) in u_at_obs.iter().zip(y) {
                phi += (u - yi) * (u - yi);
            }
        }
    }
    0.5 * phi * inv
}

/// Gaussian regression misfit against scalar observations.
pub fn regression_potential(u_at_obs: &[f64], obs: &ObservationSet) -> Result<(f64, Vec<f64>)> {
    if u_at_obs.len() != obs.len() || obs.width() > 1 {
        return domain("regression needs one field value per scalar observation");
    }
    let y = obs.scalar_values();
    let mut d = vec![0.0; y.len()];
    let phi = gaussian_misfit(u_at_obs, &y, obs.noise_std, Some(&mut d));
    Ok((phi, d))
}

/// Probit potential `-sum_j ln F(v_j y_j / gamma)` and its gradient, with
/// `y_j` in `{-1, +1}`.
pub fn probit_potential(v_at_obs: &[f64], y: &[f64], gamma: f64) -> Result<(f64, Vec<f64>)> {
    if v_at_obs.len() != y.len() {
        return domain("probit needs one latent value per label");
    }
    if !(gamma > 0.0) {
        return domain(format!("probit noise level must be positive, got {gamma}"));
    }
    if y.iter().any(|&s| s != 1.0 && s != -1.0) {
        return domain("probit labels must be -1 or +1");
    }
    let mut phi = 0.0;
    let mut d = vec![0.0; y.len()];
    for ((di, &v), &s) in d.iter_mut().zip(v_at_obs).zip(y) {
        let z = v * s / gamma;
        phi -= ln_norm_cdf(z);
        *di = -s / gamma * norm_pdf_over_cdf(z);
    }
    Ok((phi, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_examples() {
        let obs = ObservationSet::scalar(vec![vec![0.0], vec![1.0]], vec![1.0, 2.0], 0.1).unwrap();
        assert_eq!(regression_potential(&[1.0, 2.0], &obs).unwrap().0, 0.0);
        let one = ObservationSet::scalar(vec![vec![0.5]], vec![3.0], 0.2).unwrap();
        assert!((regression_potential(&[3.2], &one).unwrap().0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn regression_gradient_matches_differences() {
        let obs = ObservationSet::scalar(vec![vec![0.0]; 3], vec![0.3, -1.0, 2.0], 0.3).unwrap();
        let u = [0.1, 0.4, 1.1];
        let (_, d) = regression_potential(&u, &obs).unwrap();
        for j in 0..3 {
            let h = 1e-6;
            let mut up = u;
            let mut dn = u;
            up[j] += h;
            dn[j] -= h;
            let fd = (regression_potential(&up, &obs).unwrap().0 - regression_potential(&dn, &obs).unwrap().0) / (2.0 * h);
            assert!(((fd - d[j]) / d[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn probit_examples() {
        let (phi, _) = probit_potential(&[0.0, 0.0], &[1.0, -1.0], 0.5).unwrap();
        assert!((phi - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        let (phi, d) = probit_potential(&[1e3], &[1.0], 1.0).unwrap();
        assert!((0.0..1e-300).contains(&phi) && d[0].abs() < 1e-300);
        let (phi, d) = probit_potential(&[-50.0], &[1.0], 1.0).unwrap();
        assert!(phi.is_finite() && d[0].is_finite() && d[0] < -49.0);
        assert!(probit_potential(&[0.0], &[0.5], 1.0).is_err());
    }

    #[test]
    fn probit_gradient_matches_differences() {
        let v = [0.3, -2.0, -40.0, 5.0];
        let y = [1.0, 1.0, 1.0, -1.0];
        let (_, d) = probit_potential(&v, &y, 0.7).unwrap();
        for j in 0..4 {
            let h = 1e-5 * v[j].abs().max(1.0);
            let mut up = v;
            let mut dn = v;
            up[j] += h;
            dn[j] -= h;
            let fd = (probit_potential(&up, &y, 0.7).unwrap().0 - probit_potential(&dn, &y, 0.7).unwrap().0) / (2.0 * h);
            assert!(((fd - d[j]) / d[j]).abs() < 1e-6, "{j}: {fd} vs {}", d[j]);
        }
    }
}
