//! Normalised graph Laplacians and the spectral priors built on them.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Result};
use crate::prior_transforms::WhiteNoiseVector;

/// Weight matrix `W`, degrees `D` and `L = I - D^{-1/2} W D^{-1/2}`.
#[derive(Debug, Clone)]
pub struct GraphLaplacian {
    pub weights: DMatrix<f64>,
    pub degrees: Vec<f64>,
    pub laplacian: DMatrix<f64>,
}

impl GraphLaplacian {
    /// Builds the Laplacian from a symmetric, non-negative weight matrix
    /// with zero diagonal.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n < 2 || weights.ncols() != n {
            return domain("graph weights must be a square matrix with at least two nodes");
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !(w >= 0.0) || !w.is_finite() || w != weights[(j, i)] {
                    return domain("graph weights must be finite, non-negative and symmetric");
                }
            }
        }
        let degrees: Vec<f64> = (0..n).map(|i| weights.row(i).sum()).collect();
        if degrees.iter().any(|&d| d <= 0.0) {
            return domain("every node needs positive degree");
        }
        let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut laplacian = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j { 1.0 } else { 0.0 } - inv_sqrt[i] * weights[(i, j)] * inv_sqrt[j];
                laplacian[(i, j)] = v;
                laplacian[(j, i)] = v;
            }
        }
        Ok(Self { weights, degrees, laplacian })
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Full eigendecomposition, eigenvalues ascending.
    pub fn spectrum(&self) -> GraphSpectrum {
        GraphSpectrum::of_symmetric(&self.laplacian)
    }
}

/// Self-tuning weights `w_ij = exp(-|x_i - x_j|^2 / (2 s_i s_j))` on the
/// fully connected graph, where `s_i` is the distance from `x_i` to its
/// `knn_k`-th nearest neighbour.
pub fn graph_laplacian(features: &[Vec<f64>], knn_k: usize) -> Result<GraphLaplacian> {
    let n = features.len();
    if n < 2 {
        return domain("a graph needs at least two nodes");
    }
    if knn_k == 0 || knn_k >= n {
        return domain(format!("knn_k must lie in 1..{n}, got {knn_k}"));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return domain("all feature vectors must have the same length");
    }
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v: f64 = features[i].iter().zip(&features[j]).map(|(a, b)| (a - b).powi(2)).sum();
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    let mut scale = vec![0.0; n];
    let mut floored = 0usize;
    for i in 0..n {
        let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d2[(i, j)]).collect();
        row.select_nth_unstable_by(knn_k - 1, |a, b| a.total_cmp(b));
        let s = row[knn_k - 1].sqrt();
        scale[i] = if s < 1e-12 {
            floored += 1;
            1e-12
        } else {
            s
        };
    }
    if floored > 0 {
        log::warn!("{floored} nodes had a zero nearest-neighbour scale (duplicate points); floored at 1e-12");
    }
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = (-d2[(i, j)] / (2.0 * scale[i] * scale[j])).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    GraphLaplacian::from_weights(w)
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, each
/// eigenvector signed so its largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector for `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
}

impl GraphSpectrum {
    pub fn of_symmetric(m: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(m.clone());
        let n = m.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let mut vectors = DMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (c, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            let pivot = col.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
            if pivot < 0.0 {
                col.neg_mut();
            }
            vectors.set_column(c, &col);
            values.push(eig.eigenvalues[src]);
        }
        Self { eigenvalues: values, eigenvectors: vectors }
    }

    /// Keeps the first `count` eigenpairs.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.min(self.eigenvalues.len());
        Self {
            eigenvalues: self.eigenvalues[..count].to_vec(),
            eigenvectors: self.eigenvectors.columns(0, count).into_owned(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn n_pairs(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Spectral prior `N(0, C(alpha, M))`, `C(alpha, M) = P_M (I + L)^{-alpha} P_M^*`,
/// sampled as `sum_{j=0}^{M} (1 + lambda_j)^{-alpha/2} xi_j q_j`.
#[derive(Debug, Clone)]
pub struct GraphPrior {
    pub spectrum: GraphSpectrum,
    pub alpha: f64,
    pub m: usize,
}

impl GraphPrior {
    pub fn new(spectrum: GraphSpectrum, alpha: f64, m: usize) -> Result<Self> {
        check_alpha_m(&spectrum, alpha, m)?;
        Ok(Self { spectrum, alpha, m })
    }

    /// Writes `sum_{j <= m} (1 + lambda_j)^{-alpha/2} xi_j q_j` into `out`.
    /// `xi` may be longer than `m + 1`; the extra coordinates are ignored.
    pub fn transform_with(spectrum: &GraphSpectrum, alpha: f64, m: usize, xi: &[f64], out: &mut [f64]) -> Result<()> {
        check_alpha_m(spectrum, alpha, m)?;
        if xi.len() < m + 1 || out.len() != spectrum.n_nodes() {
            return domain(format!(
                "spectral transform needs at least {} latent coordinates and {} outputs",
                m + 1,
                spectrum.n_nodes()
            ));
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for j in 0..=m {
            let c = (1.0 + spectrum.eigenvalues[j]).powf(-0.5 * alpha) * xi[j];
            if c == 0.0 {
                continue;
            }
            for (o, q) in out.iter_mut().zip(spectrum.eigenvectors.column(j).iter()) {
                *o += c * q;
            }
        }
        Ok(())
    }

    /// The covariance matrix `C(alpha, M)`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.spectrum.n_nodes();
        let mut c = DMatrix::zeros(n, n);
        for j in 0..=self.m {
            let lam = (1.0 + self.spectrum.eigenvalues[j]).powf(-self.alpha);
            let q = self.spectrum.eigenvectors.column(j);
            c += lam * q * q.transpose();
        }
        c
    }
}

fn check_alpha_m(spectrum: &GraphSpectrum, alpha: f64, m: usize) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("spectral prior needs alpha > 0, got {alpha}"));
    }
    if m >= spectrum.n_pairs() {
        return domain(format!(
            "truncation M = {m} needs {} eigenpairs but only {} are available",
            m + 1,
            spectrum.n_pairs()
        ));
    }
    Ok(())
}

/// Spectral-prior sample driven by `xi`, which must have `M + 1` coordinates.
pub fn spectral_prior_transform(gp: &GraphPrior, xi: &WhiteNoiseVector) -> Result<Vec<f64>> {
    if xi.len() != gp.m + 1 {
        return domain(format!("white noise must have M + 1 = {} coordinates, got {}", gp.m + 1, xi.len()));
    }
    let mut out = vec![0.0; gp.spectrum.n_nodes()];
    GraphPrior::transform_with(&gp.spectrum, gp.alpha, gp.m, &xi.coords, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chain_rng, standard_normal_vec};

    fn random_features(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = chain_rng(seed);
        (0..n).map(|_| standard_normal_vec(&mut rng, d)).collect()
    }

    #[test]
    fn two_node_graph() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let g = GraphLaplacian::from_weights(w).unwrap();
        assert_eq!(g.laplacian, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let s = g.spectrum();
        assert!(s.eigenvalues[0].abs() < 1e-14 && (s.eigenvalues[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn null_vector_and_spectrum_bounds() {
        let g = graph_laplacian(&random_features(40, 3, 2), 7).unwrap();
        let v = nalgebra::DVector::from_iterator(40, g.degrees.iter().map(|d| d.sqrt()));
        assert!((&g.laplacian * v).amax() < 1e-10);
        assert_eq!(g.laplacian, g.laplacian.transpose());
        let s = g.spectrum();
        assert!(s.eigenvalues[0].abs() < 1e-10);
        assert!(s.eigenvalues.iter().all(|&l| l > -1e-10 && l < 2.0 + 1e-10));
        let qtq = s.eigenvectors.transpose() * &s.eigenvectors;
        assert!((qtq - DMatrix::identity(40, 40)).amax() < 1e-8);
    }

    #[test]
    fn duplicate_points_are_floored() {
        let mut f = random_features(10, 2, 3);
        f[1] = f[0].clone();
        let g = graph_laplacian(&f, 1).unwrap();
        assert!(g.laplacian.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn spectral_transform_basics() {
        let g = graph_laplacian(&random_features(12, 2, 4), 3).unwrap();
        let gp = GraphPrior::new(g.spectrum(), 2.0, 0).unwrap();
        let xi = WhiteNoiseVector::new(vec![1.7]).unwrap();
        let u = spectral_prior_transform(&gp, &xi).unwrap();
        for (a, q) in u.iter().zip(gp.spectrum.eigenvectors.column(0).iter()) {
            let lam0 = gp.spectrum.eigenvalues[0];
            assert!((a - (1.0 + lam0).powf(-1.0) * 1.7 * q).abs() < 1e-12);
        }
        assert!(GraphPrior::new(g.spectrum(), 0.0, 1).is_err());
        assert!(GraphPrior::new(g.spectrum(), 1.0, 12).is_err());
        let zero = WhiteNoiseVector::zeros(5, false).unwrap();
        let gp4 = GraphPrior::new(g.spectrum(), 1.0, 4).unwrap();
        assert!(spectral_prior_transform(&gp4, &zero).unwrap().iter().all(|&v| v == 0.0));
    }
}
