use rand::Rng;

use crate::error::{domain, Result};
use crate::rng::{chain_rng, fill_standard_normal};

/// A finite truncation of the latent white noise `xi`.
///
/// `paired` holds the second normal stream used by the stable transform and
/// is present exactly when the coefficient law needs two inputs per mode.
/// `seed` records where the draw came from (0 when built from raw values).
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteNoiseVector {
    pub coords: Vec<f64>,
    pub paired: Option<Vec<f64>>,
    pub seed: u64,
}

impl WhiteNoiseVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::with_pair(coords, None)
    }

    pub fn with_pair(coords: Vec<f64>, paired: Option<Vec<f64>>) -> Result<Self> {
        if coords.is_empty() {
            return domain("white noise vector must have at least one coordinate");
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return domain("white noise coordinates must be finite");
        }
        if let Some(p) = &paired {
            if p.len() != coords.len() {
                return domain(format!(
                    "paired stream has length {} but coords has {}",
                    p.len(),
                    coords.len()
                ));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return domain("paired white noise coordinates must be finite");
            }
        }
        Ok(Self { coords, paired, seed: 0 })
    }

    /// Draws `n` coordinates (and a second stream when `paired`) from a ChaCha8 stream.
    pub fn sample(n: usize, paired: bool, seed: u64) -> Result<Self> {
        let mut rng = chain_rng(seed);
        let mut v = Self::sample_with(&mut rng, n, paired)?;
        v.seed = seed;
        Ok(v)
    }

    pub fn sample_with<R: Rng + ?Sized>(rng: &mut R, n: usize, paired: bool) -> Result<Self> {
        if n == 0 {
            return domain("white noise vector must have at least one coordinate");
        }
        let mut coords = vec![0.0; n];
        fill_standard_normal(rng, &mut coords);
        let paired = paired.then(|| {
            let mut p = vec![0.0; n];
            fill_standard_normal(rng, &mut p);
            p
        });
        Ok(Self { coords, paired, seed: 0 })
    }

    pub fn zeros(n: usize, paired: bool) -> Result<Self> {
        Self::with_pair(vec![0.0; n], paired.then(|| vec![0.0; n]))
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Layout used by the samplers: `coords` followed by `paired`, if any.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.coords.clone();
        if let Some(p) = &self.paired {
            flat.extend_from_slice(p);
        }
        flat
    }

    pub fn from_flat(flat: &[f64], paired: bool) -> Result<Self> {
        if paired {
            if !flat.len().is_multiple_of(2) {
                return domain("paired flat latent must have even length");
            }
            let n = flat.len() / 2;
            Self::with_pair(flat[..n].to_vec(), Some(flat[n..].to_vec()))
        } else {
            Self::new(flat.to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(WhiteNoiseVector::new(vec![]).is_err());
        assert!(WhiteNoiseVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(WhiteNoiseVector::with_pair(vec![1.0], Some(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn flat_layout_round_trips() {
        let v = WhiteNoiseVector::sample(5, true, 3).unwrap();
        assert_eq!(v.seed, 3);
        let back = WhiteNoiseVector::from_flat(&v.to_flat(), true).unwrap();
        assert_eq!(back.coords, v.coords);
        assert_eq!(back.paired, v.paired);
    }
}
