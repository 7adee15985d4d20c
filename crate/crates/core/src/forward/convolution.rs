//! Diagonal smoothing operator `K(u) = sum_i e^{-0.1 i} c_i phi_i` on the
//! cosine basis `phi_i(x) = sqrt 2 cos(i pi x)`, `i >= 1`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{domain, Result};

pub fn convolution_damping(i: usize) -> f64 {
    (-0.1 * i as f64).exp()
}

/// `K(u)` at `points` for coefficients `c_i = rho_i zeta_i`, `i = 1..=c.len()`.
pub fn convolution_forward(coeffs: &[f64], points: &[f64]) -> Result<Vec<f64>> {
    let op = ConvolutionOperator::new(coeffs.len(), points)?;
    let mut out = vec![0.0; points.len()];
    op.apply(coeffs, &mut out);
    Ok(out)
}

/// `K` restricted to a fixed set of points, stored as a dense matrix.
#[derive(Debug, Clone)]
pub struct ConvolutionOperator {
    n_modes: usize,
    n_points: usize,
    /// Row-major `n_points x n_modes`.
    matrix: Vec<f64>,
}

impl ConvolutionOperator {
    pub fn new(n_modes: usize, points: &[f64]) -> Result<Self> {
        if n_modes == 0 {
            return domain("convolution needs at least one mode");
        }
        if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return domain("convolution points must lie in [0, 1]");
        }
        let mut matrix = Vec::with_capacity(points.len() * n_modes);
        for &x in points {
            for i in 1..=n_modes {
                matrix.push(convolution_damping(i) * SQRT_2 * (i as f64 * PI * x).cos());
            }
        }
        Ok(Self { n_modes, n_points: points.len(), matrix })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn apply(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.n_modes);
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.matrix[j * self.n_modes..(j + 1) * self.n_modes];
            *o = row.iter().zip(coeffs).map(|(a, b)| a * b).sum();
        }
    }

    /// `out_i = sum_j K_{ji} r_j`.
    pub fn adjoint(&self, r: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &rj) in r.iter().enumerate() {
            let row = &self.matrix[j * self.n_modes..(j + 1) * self.n_modes];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * rj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_single_mode() {
        let pts = [0.0, 0.3, 0.77, 1.0];
        assert!(convolution_forward(&[0.0; 5], &pts).unwrap().iter().all(|&v| v == 0.0));
        let mut c = vec![0.0; 5];
        c[2] = 1.3; // mode i = 3
        let out = convolution_forward(&c, &pts).unwrap();
        for (o, &x) in out.iter().zip(&pts) {
            let field = 1.3 * SQRT_2 * (3.0 * PI * x).cos();
            assert!((o - (-0.3f64).exp() * field).abs() < 1e-14);
        }
    }

    #[test]
    fn largest_damping_is_first_mode() {
        let m = (1..=64).map(convolution_damping).fold(0.0, f64::max);
        assert_eq!(m, (-0.1f64).exp());
    }

    #[test]
    fn adjoint_identity() {
        let op = ConvolutionOperator::new(7, &[0.1, 0.4, 0.9]).unwrap();
        let c: Vec<f64> = (0..7).map(|i| (i as f64 * 0.7).sin()).collect();
        let r = [0.3, -1.2, 0.8];
        let mut kc = [0.0; 3];
        op.apply(&c, &mut kc);
        let mut ktr = [0.0; 7];
        op.adjoint(&r, &mut ktr);
        let lhs: f64 = kc.iter().zip(&r).map(|(a, b)| a * b).sum();
        let rhs: f64 = c.iter().zip(&ktr).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-13);
    }
}
