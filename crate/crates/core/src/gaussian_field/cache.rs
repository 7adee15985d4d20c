//! On-disk cache of graph spectra.
//!
//! A cache file `graph-<digest>.bin` holds, little-endian:
//!
//! ```text
//! magic  b"WNGS"        4 bytes
//! version u32           currently 1
//! knn_k   u64
//! nodes   u64
//! pairs   u64
//! digest  [u8; 32]      SHA-256 of the features and knn_k
//! eigenvalues  f64 x pairs
//! eigenvectors f64 x (nodes * pairs), column-major
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::graph::{graph_laplacian, GraphSpectrum};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WNGS";
const VERSION: u32 = 1;

/// SHA-256 over the feature matrix (row count, column count, values as
/// little-endian `f64`) followed by `knn_k`.
pub fn features_digest(features: &[Vec<f64>], knn_k: usize) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((features.len() as u64).to_le_bytes());
    h.update((features.first().map_or(0, Vec::len) as u64).to_le_bytes());
    for row in features {
        for v in row {
            h.update(v.to_le_bytes());
        }
    }
    h.update((knn_k as u64).to_le_bytes());
    let mut out = [0u8; 32];
    out.copy_from_slice(&h.finalize());
    out
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_spectrum(path: &Path, spectrum: &GraphSpectrum, knn_k: usize, digest: &[u8; 32]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(knn_k as u64).to_le_bytes());
    buf.extend_from_slice(&(spectrum.n_nodes() as u64).to_le_bytes());
    buf.extend_from_slice(&(spectrum.n_pairs() as u64).to_le_bytes());
    buf.extend_from_slice(digest);
    for v in &spectrum.eigenvalues {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in spectrum.eigenvectors.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&buf)?;
    f.sync_all()?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Reads a cache file, returning `(spectrum, knn_k, digest)`.
pub fn read_spectrum(path: &Path) -> Result<(GraphSpectrum, usize, [u8; 32])> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let fmt = |m: &str| Error::Format(format!("{}: {m}", path.display()));
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| fmt("truncated spectrum cache"))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(fmt("bad magic in spectrum cache"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(fmt("unsupported spectrum cache version"));
    }
    let mut u64_at = || -> Result<usize> { Ok(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize) };
    let knn_k = u64_at()?;
    let nodes = u64_at()?;
    let pairs = u64_at()?;
    let mut digest = [0u8; 32];
    digest.copy_from_slice(take(32)?);
    let mut f64s = |n: usize| -> Result<Vec<f64>> {
        let raw = take(n.checked_mul(8).ok_or_else(|| fmt("size overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let eigenvalues = f64s(pairs)?;
    let vecs = f64s(nodes * pairs)?;
    if pos != bytes.len() {
        return Err(fmt("trailing bytes in spectrum cache"));
    }
    let eigenvectors = DMatrix::from_vec(nodes, pairs, vecs);
    Ok((GraphSpectrum { eigenvalues, eigenvectors }, knn_k, digest))
}

fn cache_path(dir: &Path, digest: &[u8; 32]) -> PathBuf {
    dir.join(format!("graph-{}.bin", hex(digest)))
}

/// The first `pairs` Laplacian eigenpairs of the self-tuning graph on
/// `features`, read from `dir` when a matching cache file exists and
/// computed (then stored) otherwise. `dir = None` disables caching.
pub fn load_or_compute_spectrum(
    dir: Option<&Path>,
    features: &[Vec<f64>],
    knn_k: usize,
    pairs: usize,
) -> Result<GraphSpectrum> {
    let digest = features_digest(features, knn_k);
    if let Some(dir) = dir {
        let path = cache_path(dir, &digest);
        if path.exists() {
            match read_spectrum(&path) {
                Ok((s, k, d)) if k == knn_k && d == digest && s.n_pairs() >= pairs => {
                    log::info!("loaded graph spectrum from {}", path.display());
                    return Ok(s.truncated(pairs));
                }
                Ok(_) => log::warn!("ignoring stale spectrum cache {}", path.display()),
                Err(e) => log::warn!("ignoring unreadable spectrum cache: {e}"),
            }
        }
    }
    let spectrum = graph_laplacian(features, knn_k)?.spectrum().truncated(pairs);
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        write_spectrum(&cache_path(dir, &digest), &spectrum, knn_k, &digest)?;
    }
    Ok(spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_reuse() {
        let dir = tempfile::tempdir().unwrap();
        let features: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 * 0.1, (i * i) as f64 * 0.01]).collect();
        let a = load_or_compute_spectrum(Some(dir.path()), &features, 3, 6).unwrap();
        let b = load_or_compute_spectrum(Some(dir.path()), &features, 3, 4).unwrap();
        assert_eq!(a.truncated(4), b);
        let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        fs::write(&p, b"WNGS\x01\x00").unwrap();
        assert!(matches!(read_spectrum(&p), Err(Error::Format(_))));
    }

    #[test]
    fn digest_depends_on_knn() {
        let f = vec![vec![0.0], vec![1.0]];
        assert_ne!(features_digest(&f, 1), features_digest(&f, 2));
    }
}
