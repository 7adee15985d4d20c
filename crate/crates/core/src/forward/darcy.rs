//! `-div(u grad p) = f` on `(0, 1)^d`, `p = 0` on the boundary, `d` in {1, 2}.
//!
//! Nodes sit at `i h`, `h = 1 / (n - 1)`, boundary included; 2D node
//! `(i, j)` (x index `i`) is stored at `i n + j`. Each interior node
//! carries the flux balance `sum_faces k_face (p_node - p_nb) / h^2 = f_node`
//! with `k_face` the harmonic mean of the two node permeabilities.

use super::observations::ObservationSet;
use super::pointwise::gaussian_misfit;
use crate::error::{domain, Error, Result};
use crate::prior_transforms::EvaluationGrid;

/// Interior-unknown count up to which 2D systems use banded Cholesky.
const DIRECT_LIMIT: usize = 4096;
const CG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DarcyProblem {
    dim: usize,
    n: usize,
    source: Vec<f64>,
}

impl DarcyProblem {
    /// `source` holds `f` at every node (boundary values are ignored).
    pub fn new(dim: usize, n: usize, source: Vec<f64>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return domain(format!("Darcy problems are 1D or 2D, got dimension {dim}"));
        }
        if n < 3 {
            return domain("Darcy grids need at least three nodes per axis");
        }
        if source.len() != n.pow(dim as u32) || source.iter().any(|v| !v.is_finite()) {
            return domain("source must be finite with one value per node");
        }
        Ok(Self { dim, n, source })
    }

    pub fn constant_source(dim: usize, n: usize, f: f64) -> Result<Self> {
        Self::new(dim, n, vec![f; n.pow(dim as u32)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        self.source.len()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    /// Node grid, in storage order.
    pub fn grid(&self) -> EvaluationGrid {
        EvaluationGrid::unit_nodes(self.dim, self.n).expect("n >= 3")
    }

    pub fn node_position(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        match self.dim {
            1 => vec![idx as f64 * h],
            _ => vec![(idx / self.n) as f64 * h, (idx % self.n) as f64 * h],
        }
    }

    /// Nearest node to `x` and its distance.
    pub fn nearest_node(&self, x: &[f64]) -> Result<(usize, f64)> {
        if x.len() != self.dim || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return domain(format!("location {x:?} is outside the unit domain"));
        }
        let h = self.spacing();
        let snap = |v: f64| ((v / h).round() as usize).min(self.n - 1);
        let idx = match self.dim {
            1 => snap(x[0]),
            _ => snap(x[0]) * self.n + snap(x[1]),
        };
        let p = self.node_position(idx);
        let dist = p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Ok((idx, dist))
    }

    /// Node indices of the observation locations, snapping to the nearest
    /// node (with a warning) when a location is off the grid.
    pub fn observation_nodes(&self, obs: &ObservationSet) -> Result<Vec<usize>> {
        let mut snapped = 0;
        let nodes = obs
            .locations
            .iter()
            .map(|x| {
                let (i, d) = self.nearest_node(x)?;
                if d > 1e-9 {
                    snapped += 1;
                }
                Ok(i)
            })
            .collect::<Result<Vec<_>>>()?;
        if snapped > 0 {
            log::warn!("{snapped} observation locations were snapped to the nearest grid node");
        }
        Ok(nodes)
    }

    fn is_boundary(&self, idx: usize) -> bool {
        let edge = |i: usize| i == 0 || i == self.n - 1;
        match self.dim {
            1 => edge(idx),
            _ => edge(idx / self.n) || edge(idx % self.n),
        }
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Solver bound to one problem, picking a method from the grid size.
#[derive(Debug, Clone)]
pub struct DarcySolver {
    problem: DarcyProblem,
}

impl DarcySolver {
    pub fn new(problem: DarcyProblem) -> Self {
        Self { problem }
    }

    pub fn problem(&self) -> &DarcyProblem {
        &self.problem
    }

    /// Pressure at every node.
    pub fn solve(&self, perm: &[f64]) -> Result<Vec<f64>> {
        let prob = &self.problem;
        if perm.len() != prob.n_nodes() {
            return domain(format!("permeability has {} values for {} nodes", perm.len(), prob.n_nodes()));
        }
        if perm.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
            return domain("permeability must be finite and strictly positive");
        }
        match prob.dim {
            1 => Ok(self.solve_1d(perm)),
            _ => {
                let m = prob.n - 2;
                if m * m <= DIRECT_LIMIT {
                    self.solve_2d_banded(perm)
                } else {
                    self.solve_2d_cg(perm)
                }
            }
        }
    }

    fn solve_1d(&self, perm: &[f64]) -> Vec<f64> {
        let n = self.problem.n;
        let h2 = self.problem.spacing().powi(2);
        let m = n - 2;
        // Tridiagonal rows for nodes 1..=n-2: -kl p_{i-1} + (kl + kr) p_i - kr p_{i+1} = h^2 f_i.
        let k: Vec<f64> = (0..n - 1).map(|i| harmonic(perm[i], perm[i + 1])).collect();
        let mut diag: Vec<f64> = (0..m).map(|r| k[r] + k[r + 1]).collect();
        let mut rhs: Vec<f64> = (0..m).map(|r| h2 * self.problem.source[r + 1]).collect();
        for r in 1..m {
            let w = -k[r] / diag[r - 1];
            diag[r] += w * k[r];
            rhs[r] -= w * rhs[r - 1];
        }
        let mut p = vec![0.0; n];
        p[m] = rhs[m - 1] / diag[m - 1];
        for r in (0..m - 1).rev() {
            p[r + 1] = (rhs[r] + k[r + 1] * p[r + 2]) / diag[r];
        }
        p
    }

    /// Face coefficients for interior unknown `(a, b)` (zero-based interior
    /// indices): west, east, south, north as seen from node `(a+1, b+1)`.
    fn faces_2d(&self, perm: &[f64], a: usize, b: usize) -> [f64; 4] {
        let n = self.problem.n;
        let c = (a + 1) * n + (b + 1);
        [
            harmonic(perm[c], perm[c - n]),
            harmonic(perm[c], perm[c + n]),
            harmonic(perm[c], perm[c - 1]),
            harmonic(perm[c], perm[c + 1]),
        ]
    }

    fn rhs_2d(&self) -> Vec<f64> {
        let n = self.problem.n;
        let m = n - 2;
        let h2 = self.problem.spacing().powi(2);
        let mut rhs = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                rhs.push(h2 * self.problem.source[(a + 1) * n + b + 1]);
            }
        }
        rhs
    }

    fn scatter_2d(&self, interior: &[f64]) -> Vec<f64> {
        let n = self.problem.n;
        let m = n - 2;
        let mut p = vec![0.0; n * n];
        for a in 0..m {
            for b in 0..m {
                p[(a + 1) * n + b + 1] = interior[a * m + b];
            }
        }
        p
    }

    fn solve_2d_banded(&self, perm: &[f64]) -> Result<Vec<f64>> {
        let m = self.problem.n - 2;
        let size = m * m;
        let bw = m;
        let w = bw + 1;
        // band[i * w + d] holds the entry (i, i - d).
        let mut band = vec![0.0; size * w];
        for a in 0..m {
            for b in 0..m {
                let i = a * m + b;
                let [kw, ke, ks, kn] = self.faces_2d(perm, a, b);
                band[i * w] = kw + ke + ks + kn;
                if b > 0 {
                    band[i * w + 1] = -ks;
                }
                if a > 0 {
                    band[i * w + bw] = -kw;
                }
            }
        }
        for i in 0..size {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = band[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= band[i * w + (i - k)] * band[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Numeric("Darcy matrix lost positive definiteness".into()));
                    }
                    band[i * w] = s.sqrt();
                } else {
                    band[i * w + (i - j)] = s / band[j * w];
                }
            }
        }
        let mut x = self.rhs_2d();
        for i in 0..size {
            let j0 = i.saturating_sub(bw);
            let mut s = x[i];
            for j in j0..i {
                s -= band[i * w + (i - j)] * x[j];
            }
            x[i] = s / band[i * w];
        }
        for i in (0..size).rev() {
            let mut s = x[i];
            for j in i + 1..(i + bw + 1).min(size) {
                s -= band[j * w + (j - i)] * x[j];
            }
            x[i] = s / band[i * w];
        }
        Ok(self.scatter_2d(&x))
    }

    fn solve_2d_cg(&self, perm: &[f64]) -> Result<Vec<f64>> {
        let m = self.problem.n - 2;
        let size = m * m;
        let faces: Vec<[f64; 4]> = (0..size).map(|i| self.faces_2d(perm, i / m, i % m)).collect();
        let diag: Vec<f64> = faces.iter().map(|f| f.iter().sum()).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..size {
                let (a, b) = (i / m, i % m);
                let [kw, ke, ks, kn] = faces[i];
                let mut v = diag[i] * x[i];
                if a > 0 {
                    v -= kw * x[i - m];
                }
                if a + 1 < m {
                    v -= ke * x[i + m];
                }
                if b > 0 {
                    v -= ks * x[i - 1];
                }
                if b + 1 < m {
                    v -= kn * x[i + 1];
                }
                y[i] = v;
            }
        };
        let rhs = self.rhs_2d();
        let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![0.0; size];
        if bnorm == 0.0 {
            return Ok(self.scatter_2d(&x));
        }
        let mut r = rhs.clone();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; size];
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        for _ in 0..10 * size {
            apply(&p, &mut ap);
            let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..size {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= CG_TOL * bnorm {
                return Ok(self.scatter_2d(&x));
            }
            for i in 0..size {
                z[i] = r[i] / diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..size {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Numeric(format!("conjugate gradient did not converge on {size} unknowns")))
    }

    /// `A p - h^2 f` restricted to interior nodes, for checking solutions.
    pub fn residual(&self, perm: &[f64], p: &[f64]) -> Vec<f64> {
        let prob = &self.problem;
        let n = prob.n;
        let h2 = prob.spacing().powi(2);
        let mut out = Vec::new();
        for idx in 0..prob.n_nodes() {
            if prob.is_boundary(idx) {
                continue;
            }
            let nbs: Vec<usize> = match prob.dim {
                1 => vec![idx - 1, idx + 1],
                _ => vec![idx - n, idx + n, idx - 1, idx + 1],
            };
            let mut v = 0.0;
            for nb in nbs {
                v += harmonic(perm[idx], perm[nb]) * (p[idx] - p[nb]);
            }
            out.push(v - h2 * prob.source[idx]);
        }
        out
    }
}

/// Pressure at every node for permeability `perm` given at every node.
pub fn darcy_solve(perm: &[f64], prob: &DarcyProblem) -> Result<Vec<f64>> {
    DarcySolver::new(prob.clone()).solve(perm)
}

/// Gaussian misfit of the pressure at the observation locations.
pub fn darcy_potential(perm: &[f64], prob: &DarcyProblem, obs: &ObservationSet) -> Result<f64> {
    let nodes = prob.observation_nodes(obs)?;
    let p = darcy_solve(perm, prob)?;
    let at: Vec<f64> = nodes.iter().map(|&i| p[i]).collect();
    Ok(gaussian_misfit(&at, &obs.scalar_values(), obs.noise_std, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chain_rng, standard_normal_vec};

    #[test]
    fn uniform_1d_matches_parabola() {
        let n = 21;
        let prob = DarcyProblem::constant_source(1, n, 1.0).unwrap();
        let p = darcy_solve(&vec![1.0; n], &prob).unwrap();
        for (i, v) in p.iter().enumerate() {
            let x = i as f64 / (n - 1) as f64;
            assert!((v - x * (1.0 - x) / 2.0).abs() < 1e-13);
        }
        assert!((p[10] - 0.125).abs() < 1e-13);
    }

    #[test]
    fn zero_source_gives_zero_pressure() {
        let prob = DarcyProblem::constant_source(2, 9, 0.0).unwrap();
        let p = darcy_solve(&vec![2.0; 81], &prob).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn banded_and_cg_agree() {
        let n = 14;
        let prob = DarcyProblem::constant_source(2, n, 1.0).unwrap();
        let mut rng = chain_rng(3);
        let perm: Vec<f64> = standard_normal_vec(&mut rng, n * n).iter().map(|z| z.exp()).collect();
        let s = DarcySolver::new(prob);
        let a = s.solve_2d_banded(&perm).unwrap();
        let b = s.solve_2d_cg(&perm).unwrap();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8 * scale);
        }
        let res = s.residual(&perm, &a);
        let h2 = s.problem().spacing().powi(2);
        let rel = res.iter().map(|v| v * v).sum::<f64>().sqrt() / (h2 * ((n - 2) as f64));
        assert!(rel < 1e-10);
    }

    #[test]
    fn rejects_non_positive_permeability() {
        let prob = DarcyProblem::constant_source(1, 5, 1.0).unwrap();
        assert!(matches!(darcy_solve(&[1.0, 1.0, 0.0, 1.0, 1.0], &prob), Err(Error::Domain(_))));
    }

    #[test]
    fn potential_examples() {
        let prob = DarcyProblem::constant_source(2, 11, 1.0).unwrap();
        let perm = vec![1.5; 121];
        let p = darcy_solve(&perm, &prob).unwrap();
        let locs = vec![vec![0.3, 0.4], vec![0.5, 0.5], vec![0.8, 0.1]];
        let nodes: Vec<usize> = locs.iter().map(|x| prob.nearest_node(x).unwrap().0).collect();
        let y: Vec<f64> = nodes.iter().map(|&i| p[i]).collect();
        let obs = ObservationSet::scalar(locs.clone(), y.clone(), 0.05).unwrap();
        assert!(darcy_potential(&perm, &prob, &obs).unwrap() < 1e-20);
        let mut y2 = y.clone();
        y2[1] += 0.05;
        let obs2 = ObservationSet::scalar(locs.clone(), y2.clone(), 0.05).unwrap();
        assert!((darcy_potential(&perm, &prob, &obs2).unwrap() - 0.5).abs() < 1e-10);
        let rev = ObservationSet::scalar(locs.into_iter().rev().collect(), y2.into_iter().rev().collect(), 0.05).unwrap();
        let a = darcy_potential(&perm, &prob, &rev).unwrap();
        assert!((a - darcy_potential(&perm, &prob, &obs2).unwrap()).abs() < 1e-12);
    }
}
