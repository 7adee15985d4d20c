//! Post-processing of chain output: acceptance sweeps, autocorrelation and
//! effective sample size, and the classification summaries used by the graph
//! experiments.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{domain, Result};

/// Mean of `values` and its Monte Carlo standard error by non-overlapping
/// batch means (`batches` batches; the tail that does not fill a batch is
/// dropped from the error estimate only).
pub fn batch_means(values: &[f64], batches: usize) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let b = batches.min(n);
    let size = n / b;
    if b < 2 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(b)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// One cell of an acceptance sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceCell {
    pub kernel: String,
    pub n: usize,
    pub beta: f64,
    pub steps: usize,
    pub rate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AcceptanceTable {
    pub cells: Vec<AcceptanceCell>,
}

impl AcceptanceTable {
    pub fn get(&self, kernel: &str, n: usize, beta: f64) -> Option<&AcceptanceCell> {
        self.cells.iter().find(|c| c.kernel == kernel && c.n == n && c.beta == beta)
    }

    /// Acceptance rates of `kernel` at truncation `n`, in the sweep's beta order.
    pub fn curve(&self, kernel: &str, n: usize) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter(|c| c.kernel == kernel && c.n == n)
            .map(|c| (c.beta, c.rate))
            .collect()
    }

    /// Largest difference between any two truncations at a common beta.
    pub fn spread(&self, kernel: &str) -> f64 {
        let mut betas: Vec<f64> = self.cells.iter().filter(|c| c.kernel == kernel).map(|c| c.beta).collect();
        betas.sort_by(f64::total_cmp);
        betas.dedup();
        betas
            .iter()
            .map(|&b| {
                let rates = self.cells.iter().filter(|c| c.kernel == kernel && c.beta == b).map(|c| c.rate);
                let (lo, hi) = rates.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kernel,N,beta,steps,acceptance,std_error\n");
        for c in &self.cells {
            let _ = writeln!(s, "{},{},{},{},{},{}", c.kernel, c.n, c.beta, c.steps, c.rate, c.std_error);
        }
        s
    }
}

/// Runs `run(kernel, n, beta, cell_index)` for every cell of the sweep, in
/// parallel, and tabulates the mean accept flag of each. `run` returns the
/// per-step accept flags of one chain; `cell_index` is the position of the
/// cell in kernel-major, then `n`, then beta order and is meant for seeding.
pub fn acceptance_curve<F>(
    kernels: &[&str],
    betas: &[f64],
    n_values: &[usize],
    steps: usize,
    run: F,
) -> Result<AcceptanceTable>
where
    F: Fn(&str, usize, f64, u64) -> Result<Vec<bool>> + Sync,
{
    if steps < 1000 {
        return domain(format!("acceptance sweeps need at least 1000 steps per cell, got {steps}"));
    }
    let mut jobs = Vec::with_capacity(kernels.len() * betas.len() * n_values.len());
    for &k in kernels {
        for &n in n_values {
            for &b in betas {
                jobs.push((k, n, b));
            }
        }
    }
    let cells = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(k, n, b))| {
            let flags = run(k, n, b, i as u64)?;
            let values: Vec<f64> = flags.iter().map(|&f| f as u8 as f64).collect();
            let (rate, std_error) = batch_means(&values, 50);
            Ok(AcceptanceCell { kernel: k.to_string(), n, beta: b, steps: flags.len(), rate, std_error })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AcceptanceTable { cells })
}

/// Sample autocorrelation of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    /// `values[l]` for lags `0..=max_lag`.
    pub values: Vec<f64>,
    /// Set when the series has zero variance; `values` is then `1, 0, 0, ..`.
    pub constant: bool,
}

/// Biased, mean-centred autocorrelation estimator
/// `r(l) = sum_t (x_t - m)(x_{t+l} - m) / sum_t (x_t - m)^2`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Autocorrelation> {
    let n = series.len();
    if n <= max_lag {
        return domain(format!("series of length {n} is too short for lag {max_lag}"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    let mut values = vec![0.0; max_lag + 1];
    values[0] = 1.0;
    if !(c0 > 0.0) || !c0.is_finite() {
        return Ok(Autocorrelation { values, constant: true });
    }
    values[1..].par_iter_mut().enumerate().for_each(|(i, r)| {
        let l = i + 1;
        *r = c[..n - l].iter().zip(&c[l..]).map(|(a, b)| a * b).sum::<f64>() / c0;
    });
    Ok(Autocorrelation { values, constant: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSampleSize {
    pub value: f64,
    /// Integrated autocorrelation time `1 + 2 sum_l r(l)` after truncation.
    pub iact: f64,
    /// Set for a constant series, whose ESS is reported as 0.
    pub constant: bool,
}

/// `K / (1 + 2 sum_{l >= 1} r(l))`, truncating the sum with Geyer's initial
/// positive sequence: pairs `r(2m) + r(2m+1)` are summed while positive.
pub fn ess(series: &[f64], max_lag: usize) -> Result<EffectiveSampleSize> {
    let acf = autocorrelation(series, max_lag)?;
    if acf.constant {
        return Ok(EffectiveSampleSize { value: 0.0, iact: f64::INFINITY, constant: true });
    }
    let r = &acf.values;
    let mut sum_pairs = 0.0;
    let mut m = 0;
    while 2 * m < max_lag {
        let g = r[2 * m] + r[2 * m + 1];
        if g <= 0.0 {
            break;
        }
        sum_pairs += g;
        m += 1;
    }
    let iact = (2.0 * sum_pairs - 1.0).max(f64::MIN_POSITIVE);
    Ok(EffectiveSampleSize { value: series.len() as f64 / iact, iact, constant: false })
}

/// Per-node posterior mean one-hot vectors and their uncertainty
/// `U = 1 - k/(k-1) |m - c|^2`, `c = (1/k, .., 1/k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyReport {
    pub mean_onehots: Vec<Vec<f64>>,
    pub uncertainty: Vec<f64>,
    pub mean_uncertainty: f64,
}

impl UncertaintyReport {
    pub fn n_classes(&self) -> usize {
        self.mean_onehots.first().map_or(0, Vec::len)
    }

    /// Most probable class per node, lowest index on ties.
    pub fn predicted(&self) -> Vec<usize> {
        self.mean_onehots
            .iter()
            .map(|m| crate::prior_transforms::argmax_lowest(m.iter().copied()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let k = self.n_classes();
        let mut s = String::from("node");
        for c in 0..k {
            let _ = write!(s, ",class{c}");
        }
        s.push_str(",uncertainty\n");
        for (j, (m, u)) in self.mean_onehots.iter().zip(&self.uncertainty).enumerate() {
            let _ = write!(s, "{j}");
            for v in m {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{u}");
        }
        s
    }
}

pub fn uncertainty_measure(mean_onehots: &[Vec<f64>]) -> Result<UncertaintyReport> {
    let k = mean_onehots.first().map_or(0, Vec::len);
    if k < 2 {
        return domain("uncertainty needs at least two classes");
    }
    let kf = k as f64;
    let mut uncertainty = Vec::with_capacity(mean_onehots.len());
    for (j, m) in mean_onehots.iter().enumerate() {
        if m.len() != k {
            return domain(format!("row {j} has {} entries, expected {k}", m.len()));
        }
        let sum: f64 = m.iter().sum();
        if (sum - 1.0).abs() > 1e-8 || m.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return domain(format!("row {j} is not a convex combination of one-hot vectors"));
        }
        let d2: f64 = m.iter().map(|&v| (v - 1.0 / kf).powi(2)).sum();
        uncertainty.push((1.0 - kf / (kf - 1.0) * d2).clamp(0.0, 1.0));
    }
    let mean_uncertainty = if uncertainty.is_empty() {
        f64::NAN
    } else {
        uncertainty.iter().sum::<f64>() / uncertainty.len() as f64
    };
    Ok(UncertaintyReport { mean_onehots: mean_onehots.to_vec(), uncertainty, mean_uncertainty })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    MostUncertain,
    MostCertain,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::MostUncertain => "most_uncertain",
            SelectionMode::MostCertain => "most_certain",
        }
    }
}

/// The `batch` unlabelled nodes with the largest (`MostUncertain`) or
/// smallest (`MostCertain`) uncertainty, ties broken by lower index.
pub fn select_active_batch(
    report: &UncertaintyReport,
    labelled: &[usize],
    batch: usize,
    mode: SelectionMode,
) -> Result<Vec<usize>> {
    let taken: HashSet<usize> = labelled.iter().copied().collect();
    let mut pool: Vec<usize> = (0..report.uncertainty.len()).filter(|i| !taken.contains(i)).collect();
    if batch > pool.len() {
        return domain(format!("batch of {batch} exceeds the {} unlabelled nodes", pool.len()));
    }
    let u = &report.uncertainty;
    pool.sort_by(|&a, &b| {
        let ord = match mode {
            SelectionMode::MostUncertain => u[b].total_cmp(&u[a]),
            SelectionMode::MostCertain => u[a].total_cmp(&u[b]),
        };
        ord.then(a.cmp(&b))
    });
    pool.truncate(batch);
    Ok(pool)
}

/// Row-percentage confusion matrix: entry `(i, j)` is the percentage of
/// nodes of true class `i` predicted as `j`. The diagonal is set to zero so
/// that only errors remain. Classes with no members give a zero row.
pub fn confusion_matrix(predicted: &[usize], truth: &[usize], k: usize) -> Result<Vec<Vec<f64>>> {
    if predicted.len() != truth.len() {
        return domain("predicted and true label vectors differ in length");
    }
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p >= k || t >= k {
            return domain(format!("class index {} out of range for {k} classes", p.max(t)));
        }
        counts[t][p] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: usize = row.iter().sum();
            row.iter()
                .enumerate()
                .map(|(j, &c)| if i == j || total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                .collect()
        })
        .collect())
}

/// Fraction of nodes whose predicted class matches the truth.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / predicted.len().max(1) as f64
}

/// Streaming mean of equal-length vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningMean {
    sum: Vec<f64>,
    count: usize,
}

impl RunningMean {
    pub fn new(len: usize) -> Self {
        Self { sum: vec![0.0; len], count: 0 }
    }

    pub fn push(&mut self, v: &[f64]) {
        for (s, x) in self.sum.iter_mut().zip(v) {
            *s += x;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let c = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / c).collect()
    }
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chain_rng, standard_normal_vec};
    use approx::assert_abs_diff_eq;

    fn ar1(rho: f64, n: usize, seed: u64) -> Vec<f64> {
        let z = standard_normal_vec(&mut chain_rng(seed), n);
        let s = (1.0 - rho * rho).sqrt();
        let mut out = Vec::with_capacity(n);
        let mut x = z[0];
        for &e in &z {
            x = rho * x + s * e;
            out.push(x);
        }
        out
    }

    #[test]
    fn acf_of_white_noise_and_ar1() {
        let w = ar1(0.0, 100_000, 1);
        let a = autocorrelation(&w, 5).unwrap();
        assert_eq!(a.values[0], 1.0);
        assert!(a.values[1].abs() < 0.01);
        let r = ar1(0.9, 100_000, 2);
        let a = autocorrelation(&r, 2).unwrap();
        assert_abs_diff_eq!(a.values[1], 0.9, epsilon = 0.02);
    }

    #[test]
    fn constant_series_is_flagged() {
        let a = autocorrelation(&[3.0; 10], 4).unwrap();
        assert!(a.constant);
        assert_eq!(a.values, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let e = ess(&[3.0; 10], 4).unwrap();
        assert!(e.constant && e.value == 0.0);
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn ess_matches_analytic_iact() {
        let k = 100_000;
        let e = ess(&ar1(0.0, k, 3), 200).unwrap();
        assert!(e.value > 0.9 * k as f64 && e.value < 1.1 * k as f64, "{}", e.value);
        let e = ess(&ar1(0.9, k, 4), 500).unwrap();
        let expect = k as f64 * 0.1 / 1.9;
        assert!((e.value / expect - 1.0).abs() < 0.15, "{} vs {expect}", e.value);
    }

    #[test]
    fn uncertainty_values() {
        let r = uncertainty_measure(&[vec![1.0, 0.0, 0.0], vec![1.0 / 3.0; 3]]).unwrap();
        assert_abs_diff_eq!(r.uncertainty[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.uncertainty[1], 1.0, epsilon = 1e-12);
        let mut m = vec![0.0; 10];
        m[0] = 0.55;
        m[1] = 0.45;
        let r = uncertainty_measure(&[m]).unwrap();
        // sum of squared deviations from c: 0.45^2 + 0.35^2 + 8 * 0.01 = 0.405
        assert_abs_diff_eq!(r.uncertainty[0], 0.55, epsilon = 1e-12);
        assert!(uncertainty_measure(&[vec![0.5, 0.4]]).is_err());
    }

    #[test]
    fn batch_selection_tie_rule() {
        let rep = uncertainty_measure(&vec![vec![0.5, 0.5]; 6]).unwrap();
        assert_eq!(select_active_batch(&rep, &[1], 3, SelectionMode::MostUncertain).unwrap(), vec![0, 2, 3]);
        assert_eq!(select_active_batch(&rep, &[], 0, SelectionMode::MostCertain).unwrap(), Vec::<usize>::new());
        assert!(select_active_batch(&rep, &[0], 6, SelectionMode::MostCertain).is_err());
    }

    #[test]
    fn confusion_examples() {
        let c = confusion_matrix(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert!(c.iter().flatten().all(|&v| v == 0.0));
        let c = confusion_matrix(&[2, 2], &[1, 1], 3).unwrap();
        assert_eq!(c[1][2], 100.0);
        assert!(confusion_matrix(&[3], &[0], 3).is_err());
    }

    #[test]
    fn sweep_small_step_limit() {
        let t = acceptance_curve(&["always"], &[0.01, 0.5], &[4, 8], 1000, |_, _, b, _| {
            Ok((0..1000).map(|i| b < 0.1 || i % 2 == 0).collect())
        })
        .unwrap();
        assert_eq!(t.cells.len(), 4);
        assert_eq!(t.get("always", 8, 0.01).unwrap().rate, 1.0);
        assert_eq!(t.get("always", 4, 0.5).unwrap().rate, 0.5);
        assert_eq!(t.spread("always"), 0.0);
        assert!(acceptance_curve(&["x"], &[0.1], &[1], 10, |_, _, _, _| Ok(vec![])).is_err());
    }
}
