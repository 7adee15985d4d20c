//! Series priors `u = m + sum_j rho_j Lambda_j(xi_j) phi_j` on cosine bases.

use std::cmp::Ordering;
use std::f64::consts::PI;

use super::lambda::{lambda_besov, lambda_besov_value, lambda_stable, lambda_uniform, lambda_uniform_derivative, StableParams};
use super::noise::WhiteNoiseVector;
use crate::error::{domain, Error, Result};

/// Axis-aligned box `prod_i (lower_i, upper_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Rectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return domain("rectangle bounds must be non-empty and of equal dimension");
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l) || !l.is_finite() || !u.is_finite()) {
            return domain("rectangle needs finite lower < upper on every axis");
        }
        Ok(Self { lower, upper })
    }

    /// `(0, 1)^d`.
    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
    }

    /// The concentric box scaled by `factor >= 1` along every axis.
    pub fn extended(&self, factor: f64) -> Result<Self> {
        if !(factor >= 1.0) || !factor.is_finite() {
            return domain(format!("domain extension factor must be >= 1, got {factor}"));
        }
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| {
                let c = 0.5 * (l + u);
                let half = 0.5 * (u - l) * factor;
                (c - half, c + half)
            })
            .unzip();
        Ok(Self { lower, upper })
    }
}

/// Tensor-product Neumann cosine basis on a rectangle.
///
/// Mode `k = (k_1, .., k_d)` is `prod_i c_{k_i}(x_i)` with
/// `c_0 = 1/sqrt(L)` and `c_k = sqrt(2/L) cos(k pi (x - a)/L)`, which on
/// `(0, 1)` gives `sqrt 2 cos(k pi x)` and, in 2D, `2 cos(k_1 pi x) cos(k_2 pi y)`.
/// Modes are enumerated by `sum_i (k_i / L_i)^2` ascending with
/// lexicographic tie-breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineBasis {
    domain: Rectangle,
    modes: Vec<Vec<usize>>,
}

impl CosineBasis {
    /// The first `n` modes with every index `>= min_index`.
    pub fn enumerate(domain: Rectangle, n: usize, min_index: usize) -> Result<Self> {
        if n == 0 {
            return domain_err("basis must have at least one mode");
        }
        let d = domain.dim();
        let lengths = domain.lengths();
        let key = |k: &[usize]| -> f64 {
            k.iter().zip(&lengths).map(|(&ki, &l)| (ki as f64 / l).powi(2)).sum()
        };
        let mut kmax = min_index + (n as f64).powf(1.0 / d as f64).ceil() as usize + 1;
        loop {
            let side = kmax - min_index + 1;
            let total = side.pow(d as u32);
            let mut all = Vec::with_capacity(total);
            for flat in 0..total {
                let mut rest = flat;
                let mut idx = vec![0; d];
                for axis in (0..d).rev() {
                    idx[axis] = min_index + rest % side;
                    rest /= side;
                }
                all.push(idx);
            }
            all.sort_by(|a, b| match key(a).partial_cmp(&key(b)) {
                Some(Ordering::Equal) | None => a.cmp(b),
                Some(o) => o,
            });
            if all.len() >= n {
                // Anything with an index above kmax has key above this bound.
                let bound = lengths
                    .iter()
                    .map(|&l| ((kmax + 1) as f64 / l).powi(2))
                    .fold(f64::INFINITY, f64::min);
                if key(&all[n - 1]) < bound {
                    all.truncate(n);
                    return Ok(Self { domain, modes: all });
                }
            }
            kmax *= 2;
        }
    }

    pub fn from_modes(domain: Rectangle, modes: Vec<Vec<usize>>) -> Result<Self> {
        if modes.is_empty() || modes.iter().any(|m| m.len() != domain.dim()) {
            return domain_err("every mode needs one index per axis");
        }
        Ok(Self { domain, modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Rectangle {
        &self.domain
    }

    pub fn modes(&self) -> &[Vec<usize>] {
        &self.modes
    }

    /// `sum_i (pi k_i / L_i)^2`, the Laplacian eigenvalue of mode `j`.
    pub fn wavenumber_sq(&self, j: usize) -> f64 {
        let s: f64 = self.modes[j]
            .iter()
            .zip(self.domain.lengths())
            .map(|(&k, l)| (k as f64 / l).powi(2))
            .sum();
        PI * PI * s
    }

    fn axis_factor(&self, axis: usize, k: usize, x: f64) -> f64 {
        let l = self.domain.upper[axis] - self.domain.lower[axis];
        if k == 0 {
            1.0 / l.sqrt()
        } else {
            (2.0 / l).sqrt() * (k as f64 * PI * (x - self.domain.lower[axis]) / l).cos()
        }
    }

    pub fn eval(&self, j: usize, x: &[f64]) -> f64 {
        self.modes[j]
            .iter()
            .enumerate()
            .map(|(axis, &k)| self.axis_factor(axis, k, x[axis]))
            .product()
    }
}

fn domain_err<T>(msg: &str) -> Result<T> {
    domain(msg.to_string())
}

/// Points at which fields are evaluated, with quadrature weights for inner
/// products `<f, g> = sum_i w_i f(x_i) g(x_i)`.
///
/// Point-observation models use unit weights, so the inner product is the
/// plain dot product over observation sites.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    axes: Option<Vec<Vec<f64>>>,
}

impl EvaluationGrid {
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return domain("grid needs a positive dimension and at least one point");
        }
        if points.iter().any(|p| p.len() != dim) {
            return domain("all grid points must share the grid dimension");
        }
        Ok(Self {
            dim,
            points: points.iter().flatten().copied().collect(),
            weights: vec![1.0; points.len()],
            axes: None,
        })
    }

    /// Tensor product of `axes`; point `(i_0, .., i_{d-1})` is stored with the
    /// last axis varying fastest.
    pub fn tensor(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return domain("tensor grid needs non-empty axes");
        }
        let dim = axes.len();
        let total: usize = axes.iter().map(Vec::len).product();
        let mut points = Vec::with_capacity(total * dim);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            for (axis, &i) in idx.iter().enumerate() {
                points.push(axes[axis][i]);
            }
            for axis in (0..dim).rev() {
                idx[axis] += 1;
                if idx[axis] < axes[axis].len() {
                    break;
                }
                idx[axis] = 0;
            }
        }
        Ok(Self { dim, points, weights: vec![1.0; total], axes: Some(axes) })
    }

    /// `n` equispaced nodes per axis on `[0, 1]^dim`, boundary included.
    pub fn unit_nodes(dim: usize, n: usize) -> Result<Self> {
        if n < 2 {
            return domain("node grid needs at least two nodes per axis");
        }
        let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Self::tensor(vec![axis; dim])
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() || weights.iter().any(|w| !w.is_finite()) {
            return domain("quadrature weights must be finite, one per point");
        }
        self.weights = weights;
        Ok(self)
    }

    /// Trapezoidal weights for a tensor grid.
    pub fn with_trapezoid_weights(self) -> Result<Self> {
        let Some(axes) = self.axes.clone() else {
            return domain("trapezoid weights need a tensor grid");
        };
        let axis_w: Vec<Vec<f64>> = axes
            .iter()
            .map(|a| {
                let n = a.len();
                (0..n)
                    .map(|i| {
                        let left = if i > 0 { a[i] - a[i - 1] } else { 0.0 };
                        let right = if i + 1 < n { a[i + 1] - a[i] } else { 0.0 };
                        0.5 * (left + right)
                    })
                    .collect()
            })
            .collect();
        let total = self.len();
        let mut w = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim];
        for _ in 0..total {
            w.push(idx.iter().enumerate().map(|(axis, &i)| axis_w[axis][i]).product());
            for axis in (0..self.dim).rev() {
                idx[axis] += 1;
                if idx[axis] < axes[axis].len() {
                    break;
                }
                idx[axis] = 0;
            }
        }
        self.with_weights(w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn axes(&self) -> Option<&[Vec<f64>]> {
        self.axes.as_deref()
    }
}

/// Dot product with four independent accumulators, which lets the compiler
/// vectorise the loop.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Precomputed basis values on a grid.
///
/// `synthesize` evaluates `sum_j c_j phi_j(x_i)`; `analyze` is its adjoint
/// under the grid inner product, `out_j = sum_i w_i f_i phi_j(x_i)`.
/// Two-dimensional tensor grids use a separable path that never forms the
/// full points-by-modes matrix.
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    n_modes: usize,
    n_points: usize,
    weights: Vec<f64>,
    kind: EvalKind,
}

#[derive(Debug, Clone)]
enum EvalKind {
    Dense {
        /// Row-major, `n_points x n_modes`.
        matrix: Vec<f64>,
    },
    Tensor2 {
        nx: usize,
        ny: usize,
        kx: usize,
        ky: usize,
        /// `nx x kx`
        bx: Vec<f64>,
        /// `ny x ky`
        by: Vec<f64>,
        modes: Vec<(usize, usize)>,
    },
}

impl BasisEvaluator {
    pub fn new(basis: &CosineBasis, grid: &EvaluationGrid) -> Result<Self> {
        if basis.dim() != grid.dim() {
            return domain(format!(
                "basis dimension {} does not match grid dimension {}",
                basis.dim(),
                grid.dim()
            ));
        }
        let tol = 1e-12;
        for i in 0..grid.len() {
            if !basis.domain().contains(grid.point(i), tol) {
                return domain(format!("grid point {:?} lies outside the basis domain", grid.point(i)));
            }
        }
        let n_modes = basis.len();
        let n_points = grid.len();
        let kind = match grid.axes() {
            Some(axes) if axes.len() == 2 && n_points > 64 => {
                let kx = basis.modes().iter().map(|m| m[0]).max().unwrap_or(0) + 1;
                let ky = basis.modes().iter().map(|m| m[1]).max().unwrap_or(0) + 1;
                let (nx, ny) = (axes[0].len(), axes[1].len());
                let mut bx = vec![0.0; nx * kx];
                for (i, &x) in axes[0].iter().enumerate() {
                    for k in 0..kx {
                        bx[i * kx + k] = basis.axis_factor(0, k, x);
                    }
                }
                let mut by = vec![0.0; ny * ky];
                for (i, &y) in axes[1].iter().enumerate() {
                    for k in 0..ky {
                        by[i * ky + k] = basis.axis_factor(1, k, y);
                    }
                }
                let modes = basis.modes().iter().map(|m| (m[0], m[1])).collect();
                EvalKind::Tensor2 { nx, ny, kx, ky, bx, by, modes }
            }
            _ => {
                let mut matrix = vec![0.0; n_points * n_modes];
                for i in 0..n_points {
                    let x = grid.point(i);
                    for j in 0..n_modes {
                        matrix[i * n_modes + j] = basis.eval(j, x);
                    }
                }
                EvalKind::Dense { matrix }
            }
        };
        Ok(Self { n_modes, n_points, weights: grid.weights().to_vec(), kind })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.n_modes);
        debug_assert_eq!(out.len(), self.n_points);
        match &self.kind {
            EvalKind::Dense { matrix } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = dot(&matrix[i * self.n_modes..(i + 1) * self.n_modes], coeffs);
                }
            }
            EvalKind::Tensor2 { nx, ny, kx, ky, bx, by, modes } => {
                let mut a = vec![0.0; kx * ky];
                for (&(k1, k2), &c) in modes.iter().zip(coeffs) {
                    a[k1 * ky + k2] += c;
                }
                // t = bx * a  (nx x ky)
                let mut t = vec![0.0; nx * ky];
                for i in 0..*nx {
                    let brow = &bx[i * kx..(i + 1) * kx];
                    let trow = &mut t[i * ky..(i + 1) * ky];
                    for (k1, &b) in brow.iter().enumerate() {
                        if b == 0.0 {
                            continue;
                        }
                        let arow = &a[k1 * ky..(k1 + 1) * ky];
                        for (tv, &av) in trow.iter_mut().zip(arow) {
                            *tv += b * av;
                        }
                    }
                }
                // out = t * by^T  (nx x ny)
                for i in 0..*nx {
                    let trow = &t[i * ky..(i + 1) * ky];
                    for j in 0..*ny {
                        let brow = &by[j * ky..(j + 1) * ky];
                        out[i * ny + j] = trow.iter().zip(brow).map(|(a, b)| a * b).sum();
                    }
                }
            }
        }
    }

    pub fn analyze(&self, field: &[f64], out: &mut [f64]) {
        debug_assert_eq!(field.len(), self.n_points);
        debug_assert_eq!(out.len(), self.n_modes);
        match &self.kind {
            EvalKind::Dense { matrix } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (i, (&f, &w)) in field.iter().zip(&self.weights).enumerate() {
                    let g = f * w;
                    if g == 0.0 {
                        continue;
                    }
                    let row = &matrix[i * self.n_modes..(i + 1) * self.n_modes];
                    for (o, &m) in out.iter_mut().zip(row) {
                        *o += g * m;
                    }
                }
            }
            EvalKind::Tensor2 { nx, ny, kx, ky, bx, by, modes } => {
                // s = g * by  (nx x ky), then r = bx^T * s (kx x ky)
                let mut s = vec![0.0; nx * ky];
                for i in 0..*nx {
                    let srow = &mut s[i * ky..(i + 1) * ky];
                    for j in 0..*ny {
                        let g = field[i * ny + j] * self.weights[i * ny + j];
                        if g == 0.0 {
                            continue;
                        }
                        let brow = &by[j * ky..(j + 1) * ky];
                        for (sv, &b) in srow.iter_mut().zip(brow) {
                            *sv += g * b;
                        }
                    }
                }
                let mut r = vec![0.0; kx * ky];
                for i in 0..*nx {
                    let srow = &s[i * ky..(i + 1) * ky];
                    for k1 in 0..*kx {
                        let b = bx[i * kx + k1];
                        let rrow = &mut r[k1 * ky..(k1 + 1) * ky];
                        for (rv, &sv) in rrow.iter_mut().zip(srow) {
                            *rv += b * sv;
                        }
                    }
                }
                for (o, &(k1, k2)) in out.iter_mut().zip(modes) {
                    *o = r[k1 * ky + k2];
                }
            }
        }
    }
}

/// The mean function `m` of a series prior.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanField {
    Constant(f64),
    /// Values at the points of the grid the transform is evaluated on.
    Values(Vec<f64>),
}

/// Law of the coefficients `zeta_j`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientLaw {
    Gaussian,
    Uniform,
    /// Density proportional to `exp(-|x|^q / 2)`.
    Besov { q: f64 },
    /// Independent `S(alpha, skew_j, scale_j, loc_j)`; each sequence has
    /// length one (broadcast) or one entry per mode.
    Stable { alpha: f64, skew: Vec<f64>, scale: Vec<f64>, loc: Vec<f64> },
}

impl CoefficientLaw {
    pub fn is_paired(&self) -> bool {
        matches!(self, CoefficientLaw::Stable { .. })
    }

    fn stable_params(&self, j: usize) -> Option<StableParams> {
        match self {
            CoefficientLaw::Stable { alpha, skew, scale, loc } => {
                let pick = |v: &Vec<f64>| if v.len() == 1 { v[0] } else { v[j] };
                Some(StableParams { alpha: *alpha, skew: pick(skew), scale: pick(scale), loc: pick(loc) })
            }
            _ => None,
        }
    }

    /// `Lambda_j(xi)`; `xi2` is only read by the stable law.
    pub fn apply(&self, j: usize, xi: f64, xi2: f64) -> Result<f64> {
        match self {
            CoefficientLaw::Gaussian => Ok(xi),
            CoefficientLaw::Uniform => lambda_uniform(xi),
            CoefficientLaw::Besov { q } => lambda_besov_value(xi, *q),
            CoefficientLaw::Stable { .. } => lambda_stable(xi, xi2, &self.stable_params(j).unwrap()),
        }
    }

    /// `(Lambda_j(xi), Lambda_j'(xi))`.
    pub fn apply_with_derivative(&self, xi: f64) -> Result<(f64, f64)> {
        match self {
            CoefficientLaw::Gaussian => Ok((xi, 1.0)),
            CoefficientLaw::Uniform => Ok((lambda_uniform(xi)?, lambda_uniform_derivative(xi))),
            CoefficientLaw::Besov { q } => {
                let b = lambda_besov(xi, *q)?;
                Ok((b.value, b.derivative))
            }
            CoefficientLaw::Stable { .. } => Err(Error::Unsupported(
                "gradients are not provided for stable coefficient laws".into(),
            )),
        }
    }

    /// Log-density (up to a constant) of a coefficient value, where one exists in closed form.
    pub fn ln_density(&self, zeta: f64) -> Result<f64> {
        match self {
            CoefficientLaw::Gaussian => Ok(-0.5 * zeta * zeta),
            CoefficientLaw::Uniform => Ok(if zeta.abs() < 1.0 { 0.0 } else { f64::NEG_INFINITY }),
            CoefficientLaw::Besov { q } => Ok(match *q {
                1.0 => -0.5 * zeta.abs(),
                2.0 => -0.5 * zeta * zeta,
                q => -0.5 * zeta.abs().powf(q),
            }),
            CoefficientLaw::Stable { .. } => Err(Error::Unsupported(
                "stable laws have no closed-form density".into(),
            )),
        }
    }
}

/// Besov weights `rho_j = kappa^{-1/q} j^{-(s/d + 1/2 - 1/q)}`, `j = 1..=n`.
pub fn besov_weights(n: usize, kappa: f64, s: f64, q: f64, d: usize) -> Result<Vec<f64>> {
    if !(kappa > 0.0) || !(s > 0.0) || !(q >= 1.0) || d == 0 {
        return domain("Besov weights need kappa > 0, s > 0, q >= 1 and d >= 1");
    }
    let expo = s / d as f64 + 0.5 - 1.0 / q;
    let scale = kappa.powf(-1.0 / q);
    Ok((1..=n).map(|j| scale * (j as f64).powf(-expo)).collect())
}

/// Mean `m`, weights `rho`, basis `phi` and coefficient law of a series prior.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPrior {
    mean: MeanField,
    weights: Vec<f64>,
    basis: CosineBasis,
    law: CoefficientLaw,
}

impl SeriesPrior {
    pub fn new(mean: MeanField, weights: Vec<f64>, basis: CosineBasis, law: CoefficientLaw) -> Result<Self> {
        if weights.len() != basis.len() {
            return domain(format!(
                "{} weights given for a basis with {} modes",
                weights.len(),
                basis.len()
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return domain("series weights must be finite and non-negative");
        }
        match &law {
            CoefficientLaw::Besov { q } if !(*q >= 1.0) => {
                return domain(format!("Besov exponent must satisfy q >= 1, got {q}"));
            }
            CoefficientLaw::Stable { skew, scale, loc, .. } => {
                let n = weights.len();
                for seq in [skew, scale, loc] {
                    if seq.len() != 1 && seq.len() != n {
                        return domain("stable parameter sequences need length 1 or one per mode");
                    }
                }
                for j in 0..n {
                    law.stable_params(j).unwrap().validate()?;
                }
                if weights.iter().any(|&w| w != 1.0) {
                    return domain("stable series priors use unit weights; put scales in the law");
                }
            }
            _ => {}
        }
        if let MeanField::Constant(c) = mean {
            if !c.is_finite() {
                return domain("mean must be finite");
            }
        }
        Ok(Self { mean, weights, basis, law })
    }

    pub fn mean(&self) -> &MeanField {
        &self.mean
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn basis(&self) -> &CosineBasis {
        &self.basis
    }

    pub fn law(&self) -> &CoefficientLaw {
        &self.law
    }

    pub fn n_modes(&self) -> usize {
        self.weights.len()
    }

    /// Length of the flat latent vector the samplers move: `N`, or `2N` for stable laws.
    pub fn latent_len(&self) -> usize {
        if self.law.is_paired() {
            2 * self.n_modes()
        } else {
            self.n_modes()
        }
    }

    /// Replaces the weights, e.g. after a hyperparameter update.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.basis.len() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return domain("replacement weights must be finite, non-negative, one per mode");
        }
        self.weights = weights;
        Ok(())
    }

    /// `rho_j Lambda_j(xi_j)` for every mode; `latent` uses the flat layout.
    pub fn coefficients(&self, latent: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n_modes();
        if latent.len() != self.latent_len() || out.len() != n {
            return domain(format!(
                "latent length {} does not match the prior's {}",
                latent.len(),
                self.latent_len()
            ));
        }
        let paired = self.law.is_paired();
        for j in 0..n {
            let xi2 = if paired { latent[n + j] } else { 0.0 };
            out[j] = self.weights[j] * self.law.apply(j, latent[j], xi2)?;
        }
        Ok(())
    }
}

/// A series prior bound to an evaluation grid.
#[derive(Debug, Clone)]
pub struct SeriesTransform {
    prior: SeriesPrior,
    evaluator: BasisEvaluator,
    mean_values: Vec<f64>,
}

impl SeriesTransform {
    pub fn new(prior: SeriesPrior, grid: &EvaluationGrid) -> Result<Self> {
        let evaluator = BasisEvaluator::new(prior.basis(), grid)?;
        let mean_values = match prior.mean() {
            MeanField::Constant(c) => vec![*c; grid.len()],
            MeanField::Values(v) => {
                if v.len() != grid.len() {
                    return domain("mean values must have one entry per grid point");
                }
                v.clone()
            }
        };
        Ok(Self { prior, evaluator, mean_values })
    }

    pub fn prior(&self) -> &SeriesPrior {
        &self.prior
    }

    pub fn evaluator(&self) -> &BasisEvaluator {
        &self.evaluator
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        self.prior.set_weights(weights)
    }

    pub fn n_points(&self) -> usize {
        self.evaluator.n_points()
    }

    /// `T(xi)` on the grid.
    pub fn apply(&self, latent: &[f64], out: &mut [f64]) -> Result<()> {
        let mut coeffs = vec![0.0; self.prior.n_modes()];
        self.prior.coefficients(latent, &mut coeffs)?;
        self.evaluator.synthesize(&coeffs, out);
        for (o, m) in out.iter_mut().zip(&self.mean_values) {
            *o += m;
        }
        Ok(())
    }

    /// `T'(xi) h` on the grid.
    pub fn apply_derivative(&self, latent: &[f64], h: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.prior.n_modes();
        if latent.len() != n || h.len() != n {
            return domain("directional derivative needs latent and direction of length N");
        }
        let mut coeffs = vec![0.0; n];
        for j in 0..n {
            let (_, d) = self.prior.law().apply_with_derivative(latent[j])?;
            coeffs[j] = self.prior.weights()[j] * d * h[j];
        }
        self.evaluator.synthesize(&coeffs, out);
        Ok(())
    }

    /// `T'(xi)^* g`: `out_j = rho_j Lambda_j'(xi_j) <g, phi_j>`.
    pub fn gradient(&self, latent: &[f64], dphi: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.prior.n_modes();
        if self.prior.law().is_paired() {
            return Err(Error::Unsupported(
                "gradients are not provided for stable coefficient laws".into(),
            ));
        }
        if latent.len() != n || out.len() != n || dphi.len() != self.n_points() {
            return domain("gradient buffers do not match the transform dimensions");
        }
        self.evaluator.analyze(dphi, out);
        for j in 0..n {
            let (_, d) = self.prior.law().apply_with_derivative(latent[j])?;
            out[j] *= self.prior.weights()[j] * d;
        }
        Ok(())
    }
}

/// `T(xi) = m + sum_j rho_j Lambda_j(xi_j) phi_j` evaluated on `grid`.
pub fn series_transform(xi: &WhiteNoiseVector, prior: &SeriesPrior, grid: &EvaluationGrid) -> Result<Vec<f64>> {
    check_latent(xi, prior)?;
    let t = SeriesTransform::new(prior.clone(), grid)?;
    let mut out = vec![0.0; grid.len()];
    t.apply(&xi.to_flat(), &mut out)?;
    Ok(out)
}

/// Gradient of `xi -> Phi(T(xi))` given `dphi`, the gradient of `Phi` with
/// respect to the field values on `grid` under the grid inner product.
pub fn series_transform_grad(
    xi: &WhiteNoiseVector,
    prior: &SeriesPrior,
    grid: &EvaluationGrid,
    dphi: &[f64],
) -> Result<Vec<f64>> {
    check_latent(xi, prior)?;
    if prior.law().is_paired() {
        return Err(Error::Unsupported(
            "gradients are not provided for stable coefficient laws".into(),
        ));
    }
    let t = SeriesTransform::new(prior.clone(), grid)?;
    let mut out = vec![0.0; prior.n_modes()];
    t.gradient(&xi.coords, dphi, &mut out)?;
    Ok(out)
}

fn check_latent(xi: &WhiteNoiseVector, prior: &SeriesPrior) -> Result<()> {
    if xi.len() != prior.n_modes() {
        return domain(format!(
            "white noise has {} coordinates but the prior has {} modes",
            xi.len(),
            prior.n_modes()
        ));
    }
    if xi.paired.is_some() != prior.law().is_paired() {
        return domain("paired white noise must be supplied exactly for stable laws");
    }
    Ok(())
}
