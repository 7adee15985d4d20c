use nalgebra::{Cholesky, DMatrix};

use crate::error::{domain, Error, Result};

/// Largest point set [`cholesky_whiten`] accepts unless told otherwise.
pub const DEFAULT_CHOLESKY_CAP: usize = 4000;

/// Lower-triangular `Q` with `Q Q^T = C_n (+ jitter I)`.
#[derive(Debug, Clone)]
pub struct LowerFactor {
    factor: DMatrix<f64>,
    /// Diagonal jitter that had to be added for the factorisation to succeed.
    pub jitter: f64,
}

impl LowerFactor {
    pub fn n(&self) -> usize {
        self.factor.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// `Q xi`, a draw from `N(0, C_n)` when `xi` is white.
    pub fn apply(&self, xi: &[f64], out: &mut [f64]) {
        let n = self.n();
        debug_assert!(xi.len() == n && out.len() == n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..=i).map(|j| self.factor[(i, j)] * xi[j]).sum();
        }
    }
}

/// Cholesky factor of the kernel matrix on `points`.
///
/// When the plain factorisation fails a diagonal jitter `1e-12 trace / n`
/// is added and multiplied by ten on each of at most four retries.
pub fn cholesky_whiten<K>(points: &[Vec<f64>], kernel: K, cap: usize) -> Result<LowerFactor>
where
    K: Fn(&[f64], &[f64]) -> f64,
{
    let n = points.len();
    if n == 0 {
        return domain("cholesky whitening needs at least one point");
    }
    if n > cap {
        return domain(format!("{n} points exceed the Cholesky cap of {cap}"));
    }
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel(&points[i], &points[j]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let trace = c.trace();
    let mut jitter = 0.0;
    for attempt in 0..=4 {
        let mut m = c.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            if jitter > 0.0 {
                log::warn!("kernel matrix needed diagonal jitter {jitter:e} to factorise");
            }
            return Ok(LowerFactor { factor: ch.l(), jitter });
        }
        jitter = if attempt == 0 { 1e-12 * trace / n as f64 } else { jitter * 10.0 };
    }
    Err(Error::Numeric(format!(
        "kernel matrix on {n} points is not positive definite even with jitter {jitter:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_field::{matern_covariance, MaternParams};

    #[test]
    fn single_point() {
        let q = cholesky_whiten(&[vec![0.3]], |_, _| 4.0, 10).unwrap();
        assert_eq!(q.matrix()[(0, 0)], 2.0);
    }

    #[test]
    fn diagonal_kernel_is_elementwise_sqrt() {
        let pts: Vec<Vec<f64>> = (1..=4).map(|i| vec![i as f64]).collect();
        let q = cholesky_whiten(&pts, |a, b| if a == b { a[0] } else { 0.0 }, 10).unwrap();
        for i in 0..4 {
            assert!((q.matrix()[(i, i)] - ((i + 1) as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn reconstructs_matern_kernel() {
        let p = MaternParams::new(1.0, 3.0, 1.5, 2).unwrap();
        let pts = vec![vec![0.1, 0.2], vec![0.5, 0.5], vec![0.9, 0.3], vec![0.2, 0.8], vec![0.6, 0.1]];
        let q = cholesky_whiten(&pts, |a, b| matern_covariance(a, b, &p), 10).unwrap();
        let rec = q.matrix() * q.matrix().transpose();
        let mut c = DMatrix::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                c[(i, j)] = matern_covariance(&pts[i], &pts[j], &p);
            }
        }
        assert!((rec - &c).norm() / c.norm() < 1e-8);
    }

    #[test]
    fn duplicate_points_use_jitter_and_cap_is_enforced() {
        let pts = vec![vec![0.5], vec![0.5]];
        let q = cholesky_whiten(&pts, |_, _| 1.0, 10).unwrap();
        assert!(q.jitter > 0.0);
        assert!(cholesky_whiten(&pts, |_, _| 1.0, 1).is_err());
    }
}
