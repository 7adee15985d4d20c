//! Input data: MNIST IDX files, labelled feature CSVs, PCA and synthetic clusters.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::rng::chain_rng;

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

/// Raw IDX image file contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<Vec<u8>>,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_err("truncated IDX header"))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = read_u32(bytes, 0)?;
    if magic != IDX_IMAGES {
        return Err(format_err(format!("bad IDX image magic {magic:#010x}")));
    }
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * size {
        return Err(format_err(format!(
            "IDX image file declares {count} images of {rows}x{cols} but holds {} bytes of pixels",
            body.len()
        )));
    }
    let pixels = if size == 0 { vec![Vec::new(); count] } else { body.chunks_exact(size).map(<[u8]>::to_vec).collect() };
    Ok(IdxImages { rows, cols, pixels })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0)?;
    if magic != IDX_LABELS {
        return Err(format_err(format!("bad IDX label magic {magic:#010x}")));
    }
    let count = read_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(format_err(format!("IDX label file declares {count} labels but holds {}", body.len())));
    }
    Ok(body.to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len() * images.rows * images.cols);
    for v in [IDX_IMAGES, images.pixels.len() as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for p in &images.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Features scaled to `[0, 1]` and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledFeatures {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabelledFeatures {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// CSV with columns `f0, .., f{p-1}, label`.
    pub fn to_csv(&self) -> String {
        let p = self.features.first().map_or(0, Vec::len);
        let mut s = String::new();
        for i in 0..p {
            let _ = write!(s, "f{i},");
        }
        s.push_str("label\n");
        for (f, l) in self.features.iter().zip(&self.labels) {
            for v in f {
                let _ = write!(s, "{v},");
            }
            let _ = writeln!(s, "{l}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| format_err("empty feature file"))?;
        let width = header.split(',').count();
        if width < 2 || header.split(',').next_back().map(str::trim) != Some("label") {
            return Err(format_err("feature CSV needs feature columns followed by 'label'"));
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != width {
                return Err(format_err(format!("feature row {} has {} cells, expected {width}", i + 1, cells.len())));
            }
            let row = cells[..width - 1]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| format_err(format!("feature row {}: bad number '{c}'", i + 1))))
                .collect::<Result<Vec<_>>>()?;
            let label = cells[width - 1]
                .parse::<usize>()
                .map_err(|_| format_err(format!("feature row {}: bad label", i + 1)))?;
            features.push(row);
            labels.push(label);
        }
        Ok(Self { features, labels })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Reads an IDX image/label pair, scaling pixels by `1/255`.
pub fn ingest_mnist_idx(images: &Path, labels: &Path) -> Result<LabelledFeatures> {
    let img = parse_idx_images(&std::fs::read(images)?)?;
    let lab = parse_idx_labels(&std::fs::read(labels)?)?;
    if img.pixels.len() != lab.len() {
        return Err(format_err(format!("{} images but {} labels", img.pixels.len(), lab.len())));
    }
    if let Some(bad) = lab.iter().find(|&&l| l > 9) {
        return Err(format_err(format!("label {bad} is not a digit")));
    }
    Ok(LabelledFeatures {
        features: img.pixels.iter().map(|p| p.iter().map(|&v| v as f64 / 255.0).collect()).collect(),
        labels: lab.iter().map(|&l| l as usize).collect(),
    })
}

/// Projection of the rows of `features` onto the top `d` principal
/// components of their mean-centred covariance. Components are ordered by
/// decreasing eigenvalue and signed so that each one's largest-magnitude
/// loading is positive.
pub fn pca_project(features: &[Vec<f64>], d: usize) -> Result<Vec<Vec<f64>>> {
    let n = features.len();
    let p = features.first().map_or(0, Vec::len);
    if d == 0 || d > n.min(p) {
        return domain(format!("cannot take {d} components of {n} points in {p} dimensions"));
    }
    if features.iter().any(|f| f.len() != p) {
        return domain("feature rows differ in length");
    }
    let mut mean = vec![0.0; p];
    for f in features {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v / n as f64;
        }
    }
    let x = DMatrix::from_fn(n, p, |i, j| features[i][j] - mean[j]);
    let cov = x.transpose() * &x / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut comps = DMatrix::zeros(p, d);
    for (c, &k) in order.iter().take(d).enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        let lead = v.iter().copied().fold(0.0f64, |acc, e| if e.abs() > acc.abs() { e } else { acc });
        if lead < 0.0 {
            v = -v;
        }
        comps.set_column(c, &v);
    }
    let proj = x * comps;
    Ok((0..n).map(|i| proj.row(i).iter().copied().collect()).collect())
}

/// `n` points in `k` Gaussian clusters in `dim` dimensions. Cluster centres
/// sit at `separation` times the first `k` unit vectors (cyclically if
/// `k > dim`, shifted along the next axis); points scatter with standard
/// deviation `spread`. Labels are the cluster indices, assigned round-robin.
pub fn synthetic_clusters(n: usize, k: usize, dim: usize, separation: f64, spread: f64, seed: u64) -> Result<LabelledFeatures> {
    if k < 2 || dim < 2 || n < k {
        return domain("synthetic clusters need k >= 2, dim >= 2 and n >= k");
    }
    let mut rng = chain_rng(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        let mut x: Vec<f64> = (0..dim).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect();
        x[c % dim] += separation;
        if c >= dim {
            x[(c / dim) % dim] += separation;
        }
        features.push(x);
        labels.push(c);
    }
    Ok(LabelledFeatures { features, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idx_round_trip_is_lossless() {
        let img = IdxImages { rows: 2, cols: 3, pixels: vec![vec![0, 255, 7, 8, 9, 10], vec![1; 6], vec![200; 6]] };
        let bytes = encode_idx_images(&img);
        assert_eq!(parse_idx_images(&bytes).unwrap(), img);
        assert_eq!(encode_idx_images(&parse_idx_images(&bytes).unwrap()), bytes);
        let labels = vec![3u8, 1, 9];
        assert_eq!(parse_idx_labels(&encode_idx_labels(&labels)).unwrap(), labels);
    }

    #[test]
    fn idx_errors() {
        let mut labels = encode_idx_labels(&[1; 10]);
        labels.pop();
        assert!(matches!(parse_idx_labels(&labels), Err(Error::Format(_))));
        let img = encode_idx_images(&IdxImages { rows: 1, cols: 1, pixels: vec![vec![0]] });
        assert!(parse_idx_labels(&img).is_err());
        assert!(parse_idx_images(&img[..10]).is_err());
    }

    #[test]
    fn ingest_scales_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("i");
        let lp = dir.path().join("l");
        std::fs::write(&ip, encode_idx_images(&IdxImages { rows: 1, cols: 2, pixels: vec![vec![0, 255]] })).unwrap();
        std::fs::write(&lp, encode_idx_labels(&[4])).unwrap();
        let f = ingest_mnist_idx(&ip, &lp).unwrap();
        assert_eq!(f.features, vec![vec![0.0, 1.0]]);
        assert_eq!(f.labels, vec![4]);
        std::fs::write(&lp, encode_idx_labels(&[4, 5])).unwrap();
        assert!(ingest_mnist_idx(&ip, &lp).is_err());
    }

    #[test]
    fn pca_rank_one_and_errors() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let p = pca_project(&pts, 2).unwrap();
        let v1: f64 = p.iter().map(|r| r[0] * r[0]).sum();
        let v2: f64 = p.iter().map(|r| r[1] * r[1]).sum();
        assert!(v1 / (v1 + v2) > 0.9999);
        assert!(pca_project(&pts, 4).is_err());
        assert!(pca_project(&pts, 0).is_err());
    }

    #[test]
    fn feature_csv_round_trip() {
        let f = synthetic_clusters(9, 3, 2, 4.0, 0.5, 1).unwrap();
        assert_eq!(LabelledFeatures::from_csv(&f.to_csv()).unwrap(), f);
        assert_eq!(f.n_classes(), 3);
    }
}
