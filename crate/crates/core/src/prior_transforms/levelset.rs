//! Thresholding of continuous fields into piecewise-constant classes.

use crate::error::{domain, Result};

/// Class values `kappa_1..kappa_k` and strictly increasing thresholds `c_1..c_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetSpec {
    classes: Vec<f64>,
    thresholds: Vec<f64>,
}

impl LevelSetSpec {
    pub fn new(classes: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if classes.len() < 2 {
            return domain("a level-set map needs at least two classes");
        }
        if thresholds.len() + 1 != classes.len() {
            return domain(format!(
                "{} classes need {} thresholds, got {}",
                classes.len(),
                classes.len() - 1,
                thresholds.len()
            ));
        }
        if thresholds.iter().any(|c| !c.is_finite()) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return domain("thresholds must be finite and strictly increasing");
        }
        Ok(Self { classes, thresholds })
    }

    pub fn classes(&self) -> &[f64] {
        &self.classes
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Zero-based class index: `v <= c_1` gives 0, `c_{i-1} < v <= c_i` gives `i - 1`.
    pub fn class_index(&self, v: f64) -> usize {
        self.thresholds.partition_point(|&c| c < v)
    }

    pub fn value(&self, v: f64) -> f64 {
        self.classes[self.class_index(v)]
    }
}

pub fn levelset_map(v: &[f64], spec: &LevelSetSpec) -> Vec<f64> {
    v.iter().map(|&x| spec.value(x)).collect()
}

/// Per-point class labels of a vector level-set map, stored as indices;
/// [`OneHotField::one_hot`] expands a point to its standard-basis vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotField {
    k: usize,
    labels: Vec<usize>,
}

impl OneHotField {
    pub fn from_labels(k: usize, labels: Vec<usize>) -> Result<Self> {
        if k < 2 || labels.iter().any(|&l| l >= k) {
            return domain("labels must lie in 0..k with k >= 2");
        }
        Ok(Self { k, labels })
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn one_hot(&self, point: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.k];
        e[self.labels[point]] = 1.0;
        e
    }
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax_lowest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (r, v) in values.enumerate() {
        if v > best_v || (r == 0 && v.is_nan()) {
            best = r;
            best_v = v;
        }
    }
    best
}

/// One-hot of `argmax_r v_r(x)` at every point, ties broken by lowest index.
pub fn vector_levelset_map(fields: &[Vec<f64>]) -> Result<OneHotField> {
    let k = fields.len();
    if k < 2 {
        return domain("a vector level-set map needs at least two fields");
    }
    let n = fields[0].len();
    if fields.iter().any(|f| f.len() != n) {
        return domain("all fields must be given on the same points");
    }
    let labels = (0..n).map(|i| argmax_lowest(fields.iter().map(|f| f[i]))).collect();
    Ok(OneHotField { k, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_class_map() {
        let spec = LevelSetSpec::new(vec![-1.0, 1.0], vec![0.0]).unwrap();
        assert_eq!(levelset_map(&[-0.3, -0.3], &spec), vec![-1.0, -1.0]);
        assert_eq!(levelset_map(&[0.0], &spec), vec![-1.0]);
        assert_eq!(levelset_map(&[1e-300], &spec), vec![1.0]);
    }

    #[test]
    fn three_class_branch_table() {
        let spec = LevelSetSpec::new(vec![10.0, 20.0, 30.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(levelset_map(&[-1.0, 0.5, 2.0, 1.0, 0.0], &spec), vec![10.0, 20.0, 30.0, 20.0, 10.0]);
    }

    #[test]
    fn invalid_specs() {
        assert!(LevelSetSpec::new(vec![1.0], vec![]).is_err());
        assert!(LevelSetSpec::new(vec![1.0, 2.0, 3.0], vec![1.0, 1.0]).is_err());
        assert!(LevelSetSpec::new(vec![1.0, 2.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn argmax_and_ties() {
        let f = vector_levelset_map(&[vec![0.1, 0.5], vec![0.9, 0.5], vec![0.3, 0.5]]).unwrap();
        assert_eq!(f.labels(), &[1, 0]);
        assert_eq!(f.one_hot(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(f.one_hot(1), vec![1.0, 0.0, 0.0]);
        assert!(vector_levelset_map(&[vec![0.0], vec![0.0, 1.0]]).is_err());
    }
}
