use proptest::prelude::*;

use wnmcmc::diagnostics::{select_active_batch, uncertainty_measure, SelectionMode};
use wnmcmc::error::Result;
use wnmcmc::experiments::{Config, ExperimentConfig, ExperimentId};
use wnmcmc::prior_transforms::{
    lambda_besov, lambda_uniform, levelset_map, CoefficientLaw, CosineBasis, EvaluationGrid, LevelSetSpec, MeanField,
    Rectangle, SeriesPrior, SeriesTransform,
};
use wnmcmc::rng::{chain_rng, standard_normal_vec};
use wnmcmc::samplers::{run_chain, DiagonalGaussian, Differentiable, Kernel, Pcn, Potential, RunOptions, Wmala, Wpcn};

/// Quadratic misfit `c/2 |x - 1|^2`.
struct Shifted {
    c: f64,
    n: usize,
}

impl Potential for Shifted {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(0.5 * self.c * x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>())
    }
}

/// Same value as [`Shifted`] but reports a zero gradient.
struct ZeroGradient(Shifted);

impl Potential for ZeroGradient {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.0.value(x)
    }
}

impl Differentiable for ZeroGradient {
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        grad.fill(0.0);
        self.0.value(x)
    }
}

fn flags(k: &mut dyn Kernel, n: usize, steps: usize, seed: u64) -> Vec<bool> {
    let init = k.init(vec![0.0; n], Vec::new()).unwrap();
    run_chain(k, init, &RunOptions::new(steps), &mut chain_rng(seed)).unwrap().latent_flags
}

#[test]
fn pcn_with_identity_prior_matches_whitened_pcn() {
    let p = Shifted { c: 3.0, n: 12 };
    let mut a = Pcn::new(&p, DiagonalGaussian { std: vec![1.0; 12] }, 0.3).unwrap();
    let mut b = Wpcn::new(&p, 0.3).unwrap();
    assert_eq!(flags(&mut a, 12, 3000, 7), flags(&mut b, 12, 3000, 7));
}

#[test]
fn mala_without_gradient_matches_whitened_pcn() {
    let p = ZeroGradient(Shifted { c: 2.0, n: 8 });
    for &beta in &[0.05, 0.4, 0.9] {
        let mut a = Wmala::from_beta(&p, beta).unwrap();
        let mut b = Wpcn::new(&p, beta).unwrap();
        let fa = flags(&mut a, 8, 2000, 11);
        assert_eq!(fa, flags(&mut b, 8, 2000, 11));
        assert!(fa.iter().any(|&f| f) && fa.iter().any(|&f| !f));
    }
}

#[test]
fn experiment_config_hash_ignores_output_directory() {
    let a = ExperimentConfig::new(ExperimentId::GraphSsl, 5, "/tmp/a");
    let b = ExperimentConfig::new(ExperimentId::GraphSsl, 5, "/tmp/b");
    assert_eq!(a.hash(), b.hash());
    let mut c = a.clone();
    c.set("graph.n", 50).unwrap();
    assert_ne!(a.hash(), c.hash());
    let parsed = Config::parse("experiment = graph_ssl # inline\nseed = 5\n").unwrap();
    assert_eq!(ExperimentConfig::from_config(parsed).unwrap().seed, 5);
}

fn simplex_rows(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, k), 1..20).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn levelset_is_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let spec = LevelSetSpec::new(vec![1.0, 5.0, 25.0], vec![-0.4, 0.4]).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(spec.class_index(lo) <= spec.class_index(hi));
        let m = levelset_map(&[lo, hi], &spec);
        prop_assert!(m[0] <= m[1]);
        prop_assert!(spec.classes().contains(&m[0]));
    }

    #[test]
    fn uncertainty_ignores_class_order(rows in simplex_rows(4), shift in 0usize..4) {
        let rotated: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| (0..4).map(|i| r[(i + shift) % 4]).collect())
            .collect();
        let a = uncertainty_measure(&rows).unwrap();
        let b = uncertainty_measure(&rotated).unwrap();
        for (x, y) in a.uncertainty.iter().zip(&b.uncertainty) {
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn active_batch_is_fresh_and_distinct(
        rows in simplex_rows(3),
        labelled_mask in prop::collection::vec(any::<bool>(), 20),
        batch in 0usize..5,
        certain in any::<bool>(),
    ) {
        let report = uncertainty_measure(&rows).unwrap();
        let labelled: Vec<usize> = (0..rows.len()).filter(|&i| labelled_mask[i]).collect();
        let mode = if certain { SelectionMode::MostCertain } else { SelectionMode::MostUncertain };
        match select_active_batch(&report, &labelled, batch, mode) {
            Ok(picked) => {
                prop_assert_eq!(picked.len(), batch);
                let mut sorted = picked.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), batch);
                prop_assert!(picked.iter().all(|i| !labelled.contains(i) && *i < rows.len()));
            }
            Err(_) => prop_assert!(batch > rows.len() - labelled.len()),
        }
    }

    #[test]
    fn uniform_map_is_increasing_and_bounded(a in -8.0f64..8.0, b in -8.0f64..8.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (lambda_uniform(lo).unwrap(), lambda_uniform(hi).unwrap());
        prop_assert!(x <= y && x > -1.0 && y < 1.0);
    }

    #[test]
    fn besov_map_is_odd_and_increasing(xi in -6.0f64..6.0, q in 1.0f64..3.0) {
        let v = lambda_besov(xi, q).unwrap().value;
        let w = lambda_besov(-xi, q).unwrap().value;
        prop_assert!((v + w).abs() <= 1e-9 * (1.0 + v.abs()));
        let up = lambda_besov(xi + 0.01, q).unwrap().value;
        prop_assert!(up >= v);
    }

    #[test]
    fn series_transform_is_affine_for_gaussian_law(seed in 0u64..1000, scale in -3.0f64..3.0) {
        let basis = CosineBasis::enumerate(Rectangle::unit(1), 16, 1).unwrap();
        let w: Vec<f64> = (1..=16).map(|i| 1.0 / i as f64).collect();
        let prior = SeriesPrior::new(MeanField::Constant(0.0), w, basis, CoefficientLaw::Gaussian).unwrap();
        let grid = EvaluationGrid::unit_nodes(1, 9).unwrap();
        let t = SeriesTransform::new(prior, &grid).unwrap();
        let xi = standard_normal_vec(&mut chain_rng(seed), 16);
        let scaled: Vec<f64> = xi.iter().map(|v| v * scale).collect();
        let (mut a, mut b) = (vec![0.0; 9], vec![0.0; 9]);
        t.apply(&xi, &mut a).unwrap();
        t.apply(&scaled, &mut b).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x * scale - y).abs() < 1e-10);
        }
    }
}
