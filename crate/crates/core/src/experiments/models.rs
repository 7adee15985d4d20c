//! Potentials behind the experiments, written against the sampler traits.

use crate::error::{domain, Result};
use crate::forward::{gaussian_misfit, levelset_classification_potential, ConvolutionOperator, DarcySolver, LabelledNode};
use crate::gaussian_field::{kl_weights, GraphPrior, GraphSpectrum, MaternParams};
use crate::prior_transforms::{
    lambda_uniform, lambda_uniform_derivative, BasisEvaluator, CosineBasis, EvaluationGrid,
    LevelSetSpec, SeriesPrior, SeriesTransform,
};
use crate::samplers::{Differentiable, HierarchicalPotential, Potential};

/// `Psi(xi) = Phi(T(xi))` for a series prior observed pointwise with
/// Gaussian noise.
#[derive(Debug, Clone)]
pub struct SeriesRegression {
    transform: SeriesTransform,
    y: Vec<f64>,
    noise_std: f64,
}

impl SeriesRegression {
    pub fn new(prior: SeriesPrior, locations: &[Vec<f64>], y: Vec<f64>, noise_std: f64) -> Result<Self> {
        if locations.len() != y.len() {
            return domain("one observation value per location is needed");
        }
        let dim = prior.basis().dim();
        let grid = EvaluationGrid::from_points(dim, locations)?;
        Ok(Self { transform: SeriesTransform::new(prior, &grid)?, y, noise_std })
    }

    pub fn transform(&self) -> &SeriesTransform {
        &self.transform
    }
}

impl Potential for SeriesRegression {
    fn dim(&self) -> usize {
        self.transform.prior().latent_len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let mut u = vec![0.0; self.y.len()];
        self.transform.apply(x, &mut u)?;
        Ok(gaussian_misfit(&u, &self.y, self.noise_std, None))
    }
}

impl Differentiable for SeriesRegression {
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let mut u = vec![0.0; self.y.len()];
        self.transform.apply(x, &mut u)?;
        let mut d = vec![0.0; self.y.len()];
        let phi = gaussian_misfit(&u, &self.y, self.noise_std, Some(&mut d));
        self.transform.gradient(x, &d, grad)?;
        Ok(phi)
    }
}

/// The same regression with the coefficients `zeta` (rather than `xi`) as
/// state: `u = m + sum_j rho_j zeta_j phi_j`.
#[derive(Debug, Clone)]
pub struct CoefficientRegression {
    evaluator: BasisEvaluator,
    weights: Vec<f64>,
    mean: f64,
    y: Vec<f64>,
    noise_std: f64,
}

impl CoefficientRegression {
    pub fn new(
        basis: &CosineBasis,
        weights: Vec<f64>,
        mean: f64,
        locations: &[Vec<f64>],
        y: Vec<f64>,
        noise_std: f64,
    ) -> Result<Self> {
        if weights.len() != basis.len() || locations.len() != y.len() {
            return domain("coefficient regression dimensions do not match");
        }
        let grid = EvaluationGrid::from_points(basis.dim(), locations)?;
        Ok(Self { evaluator: BasisEvaluator::new(basis, &grid)?, weights, mean, y, noise_std })
    }
}

impl Potential for CoefficientRegression {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let c: Vec<f64> = x.iter().zip(&self.weights).map(|(z, w)| z * w).collect();
        let mut u = vec![0.0; self.y.len()];
        self.evaluator.synthesize(&c, &mut u);
        u.iter_mut().for_each(|v| *v += self.mean);
        Ok(gaussian_misfit(&u, &self.y, self.noise_std, None))
    }
}

/// Uniform series prior `u = m + sum_i rho_i Lambda(xi_i) sqrt(2) cos(i pi x)`
/// observed through the damped convolution at fixed points.
#[derive(Debug, Clone)]
pub struct ConvolutionModel {
    op: ConvolutionOperator,
    weights: Vec<f64>,
    pub mean: f64,
    y: Vec<f64>,
    noise_std: f64,
}

impl ConvolutionModel {
    pub fn new(weights: Vec<f64>, mean: f64, points: &[f64], y: Vec<f64>, noise_std: f64) -> Result<Self> {
        if points.len() != y.len() {
            return domain("one observation value per point is needed");
        }
        Ok(Self { op: ConvolutionOperator::new(weights.len(), points)?, weights, mean, y, noise_std })
    }

    pub fn coefficients(&self, xi: &[f64]) -> Result<Vec<f64>> {
        xi.iter().zip(&self.weights).map(|(&x, w)| Ok(w * lambda_uniform(x)?)).collect()
    }

    /// `||u||_{L^2(0, 1)}` by Parseval.
    pub fn l2_norm(&self, xi: &[f64]) -> Result<f64> {
        let c = self.coefficients(xi)?;
        Ok((self.mean * self.mean + c.iter().map(|v| v * v).sum::<f64>()).sqrt())
    }

    /// Noise-free data `K(u)(x_j)` for coefficients `coeffs` (any length up to
    /// the truncation of the truth).
    pub fn forward(coeffs: &[f64], points: &[f64]) -> Result<Vec<f64>> {
        crate::forward::convolution_forward(coeffs, points)
    }
}

impl Potential for ConvolutionModel {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let c = self.coefficients(x)?;
        let mut k = vec![0.0; self.y.len()];
        self.op.apply(&c, &mut k);
        Ok(gaussian_misfit(&k, &self.y, self.noise_std, None))
    }
}

impl Differentiable for ConvolutionModel {
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let c = self.coefficients(x)?;
        let mut k = vec![0.0; self.y.len()];
        self.op.apply(&c, &mut k);
        let mut d = vec![0.0; self.y.len()];
        let phi = gaussian_misfit(&k, &self.y, self.noise_std, Some(&mut d));
        self.op.adjoint(&d, grad);
        for ((g, &xi), w) in grad.iter_mut().zip(x).zip(&self.weights) {
            *g *= w * lambda_uniform_derivative(xi);
        }
        Ok(phi)
    }
}

/// Darcy flow with a level-set permeability built on a Whittle-Matern KL
/// field: `theta = (tau)`, `v = sum_j sqrt(lambda_j(tau)) xi_j phi_j`,
/// permeability `S(v)`, pressure observed at fixed nodes.
#[derive(Debug, Clone)]
pub struct DarcyLevelSet {
    evaluator: BasisEvaluator,
    basis: CosineBasis,
    sigma: f64,
    regularity: f64,
    levels: LevelSetSpec,
    solver: DarcySolver,
    obs_nodes: Vec<usize>,
    y: Vec<f64>,
    noise_std: f64,
}

impl DarcyLevelSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        basis: CosineBasis,
        sigma: f64,
        regularity: f64,
        levels: LevelSetSpec,
        solver: DarcySolver,
        obs_nodes: Vec<usize>,
        y: Vec<f64>,
        noise_std: f64,
    ) -> Result<Self> {
        let grid = solver.problem().grid();
        MaternParams::new(sigma, 1.0, regularity, basis.dim())?;
        if obs_nodes.len() != y.len() || obs_nodes.iter().any(|&i| i >= grid.len()) {
            return domain("observation nodes do not match the data or the grid");
        }
        Ok(Self {
            evaluator: BasisEvaluator::new(&basis, &grid)?,
            basis,
            sigma,
            regularity,
            levels,
            solver,
            obs_nodes,
            y,
            noise_std,
        })
    }

    pub fn weights(&self, tau: f64) -> Result<Vec<f64>> {
        let p = MaternParams::new(self.sigma, tau, self.regularity, self.basis.dim())?;
        Ok(kl_weights(&self.basis, &p))
    }

    /// Continuous field `v` at every node.
    pub fn field(&self, xi: &[f64], tau: f64) -> Result<Vec<f64>> {
        let c: Vec<f64> = self.weights(tau)?.iter().zip(xi).map(|(w, x)| w * x).collect();
        let mut v = vec![0.0; self.evaluator.n_points()];
        self.evaluator.synthesize(&c, &mut v);
        Ok(v)
    }

    pub fn levels(&self) -> &LevelSetSpec {
        &self.levels
    }

    pub fn pressure(&self, perm: &[f64]) -> Result<Vec<f64>> {
        self.solver.solve(perm)
    }

    pub fn potential_of_field(&self, v: &[f64]) -> Result<f64> {
        let perm: Vec<f64> = v.iter().map(|&x| self.levels.value(x)).collect();
        let p = self.solver.solve(&perm)?;
        let at: Vec<f64> = self.obs_nodes.iter().map(|&i| p[i]).collect();
        Ok(gaussian_misfit(&at, &self.y, self.noise_std, None))
    }
}

impl HierarchicalPotential for DarcyLevelSet {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn value(&self, xi: &[f64], theta: &[f64]) -> Result<f64> {
        self.potential_of_field(&self.field(xi, theta[0])?)
    }
}

/// Multi-class graph classification: `k` latent fields drawn from the
/// spectral graph prior with `theta = (alpha, M)`, mapped to one-hot labels
/// by argmax, with the level-set likelihood on the labelled nodes.
///
/// The latent vector holds `k` blocks of `m_max + 1` coordinates; block `r`
/// drives field `r`, and coordinates past `M` are ignored by the likelihood
/// (so they stay at their prior).
#[derive(Debug, Clone)]
pub struct GraphClassification {
    spectrum: GraphSpectrum,
    labelled_rows: GraphSpectrum,
    k: usize,
    m_max: usize,
    labels: Vec<LabelledNode>,
    gamma: f64,
}

impl GraphClassification {
    pub fn new(spectrum: GraphSpectrum, k: usize, m_max: usize, labels: Vec<LabelledNode>, gamma: f64) -> Result<Self> {
        if spectrum.n_pairs() < m_max + 1 {
            return domain(format!("M_max = {m_max} needs {} eigenpairs", m_max + 1));
        }
        if k < 2 {
            return domain("classification needs at least two classes");
        }
        if labels.iter().any(|l| l.node >= spectrum.n_nodes() || l.class >= k) {
            return domain("a labelled node or class is out of range");
        }
        let rows = nalgebra::DMatrix::from_fn(labels.len(), spectrum.n_pairs(), |i, j| {
            spectrum.eigenvectors[(labels[i].node, j)]
        });
        let labelled_rows = GraphSpectrum { eigenvalues: spectrum.eigenvalues.clone(), eigenvectors: rows };
        Ok(Self { spectrum, labelled_rows, k, m_max, labels, gamma })
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn block_len(&self) -> usize {
        self.m_max + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.spectrum.n_nodes()
    }

    fn fields_with(&self, spectrum: &GraphSpectrum, xi: &[f64], theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (alpha, m) = (theta[0], theta[1] as usize);
        let b = self.block_len();
        (0..self.k)
            .map(|r| {
                let mut v = vec![0.0; spectrum.n_nodes()];
                GraphPrior::transform_with(spectrum, alpha, m, &xi[r * b..(r + 1) * b], &mut v)?;
                Ok(v)
            })
            .collect()
    }

    /// All `k` latent fields at every node.
    pub fn fields(&self, xi: &[f64], theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.fields_with(&self.spectrum, xi, theta)
    }
}

impl HierarchicalPotential for GraphClassification {
    fn dim(&self) -> usize {
        self.k * self.block_len()
    }

    fn value(&self, xi: &[f64], theta: &[f64]) -> Result<f64> {
        let fields = self.fields_with(&self.labelled_rows, xi, theta)?;
        let local: Vec<LabelledNode> =
            self.labels.iter().enumerate().map(|(i, l)| LabelledNode { node: i, class: l.class }).collect();
        levelset_classification_potential(&fields, &local, self.gamma)
    }
}
