use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{domain, Error, Result};

/// Observation locations, values and noise level.
///
/// Locations are points in `R^dim` (graph nodes use `dim = 1` with the node
/// index as coordinate). Each value is a vector of `width` entries: one for
/// scalar data, `k` for one-hot class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub locations: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub noise_std: f64,
}

impl ObservationSet {
    pub fn new(locations: Vec<Vec<f64>>, values: Vec<Vec<f64>>, noise_std: f64) -> Result<Self> {
        if locations.len() != values.len() {
            return domain("one value per observation location is required");
        }
        if !(noise_std > 0.0) || !noise_std.is_finite() {
            return domain(format!("noise level must be positive, got {noise_std}"));
        }
        if let (Some(l), Some(v)) = (locations.first(), values.first()) {
            if locations.iter().any(|x| x.len() != l.len()) || values.iter().any(|y| y.len() != v.len()) {
                return domain("observation rows must have consistent widths");
            }
        }
        if locations.iter().chain(&values).flatten().any(|v| !v.is_finite()) {
            return domain("observation data must be finite");
        }
        Ok(Self { locations, values, noise_std })
    }

    /// Scalar observations `y_j` at `locations`.
    pub fn scalar(locations: Vec<Vec<f64>>, values: Vec<f64>, noise_std: f64) -> Result<Self> {
        Self::new(locations, values.into_iter().map(|v| vec![v]).collect(), noise_std)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.locations.first().map_or(0, Vec::len)
    }

    pub fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// First component of every value.
    pub fn scalar_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[0]).collect()
    }

    /// CSV with header `x0,..,y0,..,noise_std`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let mut cols: Vec<String> = (0..self.dim()).map(|i| format!("x{i}")).collect();
        cols.extend((0..self.width()).map(|i| format!("y{i}")));
        cols.push("noise_std".into());
        s.push_str(&cols.join(","));
        s.push('\n');
        for (x, y) in self.locations.iter().zip(&self.values) {
            let row: Vec<String> = x.iter().chain(y).chain(std::iter::once(&self.noise_std)).map(|v| format!("{v:e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Format("empty observation CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let dim = cols.iter().filter(|c| c.starts_with('x')).count();
        let width = cols.iter().filter(|c| c.starts_with('y')).count();
        if cols.len() != dim + width + 1 || cols.last() != Some(&"noise_std") {
            return Err(Error::Format(format!("unexpected observation CSV header: {header}")));
        }
        let mut locations = Vec::new();
        let mut values = Vec::new();
        let mut noise = None;
        for (i, line) in lines.enumerate() {
            let nums: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("observation row {}: {e}", i + 1)))?;
            if nums.len() != cols.len() {
                return Err(Error::Format(format!("observation row {} has {} fields", i + 1, nums.len())));
            }
            let g = nums[dim + width];
            match noise {
                None => noise = Some(g),
                Some(prev) if prev != g => {
                    return Err(Error::Format("noise_std must be the same on every row".into()));
                }
                _ => {}
            }
            locations.push(nums[..dim].to_vec());
            values.push(nums[dim..dim + width].to_vec());
        }
        let noise = noise.ok_or_else(|| Error::Format("observation CSV has no rows".into()))?;
        Self::new(locations, values, noise)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let obs = ObservationSet::new(
            vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            vec![vec![1.5, 0.0], vec![-2.25, 1.0]],
            0.05,
        )
        .unwrap();
        let text = obs.to_csv();
        assert!(text.starts_with("x0,x1,y0,y1,noise_std\n"));
        assert_eq!(ObservationSet::from_csv(&text).unwrap(), obs);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ObservationSet::scalar(vec![vec![0.0]], vec![1.0], 0.0).is_err());
        assert!(ObservationSet::scalar(vec![vec![0.0]], vec![1.0, 2.0], 1.0).is_err());
        assert!(ObservationSet::from_csv("x0,y0\n1,2\n").is_err());
        assert!(ObservationSet::from_csv("x0,y0,noise_std\n1,2,0.1\n1,2,0.2\n").is_err());
    }
}
