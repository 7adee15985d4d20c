use std::f64::consts::SQRT_2;

use crate::error::{domain, Result};
use crate::prior_transforms::vector_levelset_map;

/// A labelled graph node and its class (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelledNode {
    pub node: usize,
    pub class: usize,
}

/// Number of labelled nodes whose argmax class differs from their label.
/// `fields[r][i]` is latent field `r` at node `i`.
pub fn misclassified_count(fields: &[Vec<f64>], labels: &[LabelledNode]) -> Result<usize> {
    let k = fields.len();
    let n = fields.first().map_or(0, Vec::len);
    let mut wrong = 0;
    for l in labels {
        if l.node >= n {
            return domain(format!("labelled node {} is outside a graph of {n} nodes", l.node));
        }
        if l.class >= k {
            return domain(format!("label {} is outside {k} classes", l.class));
        }
        let pred = crate::prior_transforms::argmax_lowest(fields.iter().map(|f| f[l.node]));
        if pred != l.class {
            wrong += 1;
        }
    }
    Ok(wrong)
}

/// `(1 / 2 gamma) sum_j |S(v)(x_j) - y_j|` with `S` the vector level-set map
/// and `|.|` the Euclidean norm; each misclassified node contributes `sqrt 2`.
pub fn levelset_classification_potential(fields: &[Vec<f64>], labels: &[LabelledNode], gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return domain(format!("classification noise level must be positive, got {gamma}"));
    }
    vector_levelset_map(fields)?;
    let wrong = misclassified_count(fields, labels)?;
    Ok(wrong as f64 * SQRT_2 / (2.0 * gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_misclassified_points() {
        let fields = vec![vec![1.0, 0.0, 0.2], vec![0.0, 1.0, 0.1]];
        let good = [LabelledNode { node: 0, class: 0 }, LabelledNode { node: 1, class: 1 }];
        assert_eq!(levelset_classification_potential(&fields, &good, 1e-4).unwrap(), 0.0);
        let bad = [LabelledNode { node: 0, class: 0 }, LabelledNode { node: 1, class: 0 }];
        let v = levelset_classification_potential(&fields, &bad, 1e-4).unwrap();
        assert!((v - 7_071.067_811_865_475).abs() < 1e-8);
        assert!(levelset_classification_potential(&fields, &[LabelledNode { node: 3, class: 0 }], 1.0).is_err());
    }
}
