//! Chain driver and the record it produces.

use std::fmt::Write as _;

use super::{ChainState, Kernel, KernelStats};
use crate::error::{domain, Result};
use crate::rng::ChainRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Number of kernel steps `K`.
    pub steps: usize,
    /// States `k` with `k % thin == 0` are recorded, `k = 0..=K`.
    pub thin: usize,
    /// Steps excluded from acceptance rates and summary statistics.
    pub burn_in: usize,
    /// Whether recorded states keep the full latent vector.
    pub keep_samples: bool,
}

impl RunOptions {
    pub fn new(steps: usize) -> Self {
        Self { steps, thin: 1, burn_in: 0, keep_samples: false }
    }
}

/// Output of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub kernel: String,
    pub options: RunOptions,
    /// Latent-block accept flag of steps `1..=K`.
    pub latent_flags: Vec<bool>,
    /// Hyperparameter-block flags, for kernels with such a block.
    pub theta_flags: Option<Vec<bool>>,
    pub theta_names: Vec<String>,
    /// Indices `k` of the recorded states.
    pub recorded: Vec<usize>,
    pub samples: Vec<Vec<f64>>,
    pub theta_trace: Vec<Vec<f64>>,
    pub phi_trace: Vec<f64>,
    /// Scalar summary of each recorded state (e.g. a field norm), if requested.
    pub summaries: Vec<f64>,
    pub final_state: ChainState,
    pub stats: KernelStats,
}

fn mean_flag(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return f64::NAN;
    }
    flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

impl ChainRecord {
    /// Mean latent accept flag over the steps after burn-in.
    pub fn acceptance_rate(&self) -> f64 {
        mean_flag(&self.latent_flags[self.options.burn_in.min(self.latent_flags.len())..])
    }

    pub fn theta_acceptance_rate(&self) -> Option<f64> {
        self.theta_flags
            .as_ref()
            .map(|f| mean_flag(&f[self.options.burn_in.min(f.len())..]))
    }

    /// Positions in the recorded arrays whose step is past burn-in.
    pub fn post_burn_in(&self) -> impl Iterator<Item = usize> + '_ {
        self.recorded
            .iter()
            .enumerate()
            .filter(move |(_, &k)| k >= self.options.burn_in)
            .map(|(i, _)| i)
    }

    /// CSV with one row per recorded state: step, cumulative accepted moves
    /// per block, hyperparameters, potential and summary. The first line is a
    /// `#` comment carrying the configuration hash and seed.
    pub fn to_csv(&self, config_hash: &str, seed: u64) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config_hash={config_hash},seed={seed},kernel={}", self.kernel);
        let mut cols = vec!["step".to_string(), "accepted_latent".to_string()];
        if self.theta_flags.is_some() {
            cols.push("accepted_theta".into());
        }
        cols.extend(self.theta_names.iter().cloned());
        cols.push("phi".into());
        if !self.summaries.is_empty() {
            cols.push("summary".into());
        }
        let _ = writeln!(s, "{}", cols.join(","));
        let mut acc_l = 0usize;
        let mut acc_t = 0usize;
        let mut last = 0usize;
        for (row, &k) in self.recorded.iter().enumerate() {
            for step in last..k {
                acc_l += self.latent_flags[step] as usize;
                if let Some(t) = &self.theta_flags {
                    acc_t += t[step] as usize;
                }
            }
            last = k;
            let _ = write!(s, "{k},{acc_l}");
            if self.theta_flags.is_some() {
                let _ = write!(s, ",{acc_t}");
            }
            if let Some(th) = self.theta_trace.get(row) {
                for v in th {
                    let _ = write!(s, ",{v}");
                }
            }
            let _ = write!(s, ",{}", self.phi_trace[row]);
            if let Some(v) = self.summaries.get(row) {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Runs `kernel` for `opts.steps` steps from `initial`.
pub fn run_chain<K: Kernel + ?Sized>(
    kernel: &mut K,
    initial: ChainState,
    opts: &RunOptions,
    rng: &mut ChainRng,
) -> Result<ChainRecord> {
    run_chain_observed(kernel, initial, opts, rng, None, &mut |_, _| {})
}

/// As [`run_chain`], also recording `summary` of each recorded state and
/// calling `visit(k, state)` on every state `k = 0..=K`.
pub fn run_chain_observed<K: Kernel + ?Sized>(
    kernel: &mut K,
    initial: ChainState,
    opts: &RunOptions,
    rng: &mut ChainRng,
    summary: Option<&dyn Fn(&ChainState) -> f64>,
    visit: &mut dyn FnMut(usize, &ChainState),
) -> Result<ChainRecord> {
    if opts.steps == 0 || opts.thin == 0 {
        return domain("a chain needs at least one step and a positive thinning interval");
    }
    if !initial.phi.is_finite() {
        return domain("initial potential is not finite");
    }
    let has_theta = kernel.has_theta_block();
    let capacity = opts.steps / opts.thin + 1;
    let mut rec = ChainRecord {
        kernel: kernel.name().to_string(),
        options: *opts,
        latent_flags: Vec::with_capacity(opts.steps),
        theta_flags: has_theta.then(|| Vec::with_capacity(opts.steps)),
        theta_names: kernel.theta_names(),
        recorded: Vec::with_capacity(capacity),
        samples: Vec::new(),
        theta_trace: Vec::new(),
        phi_trace: Vec::with_capacity(capacity),
        summaries: Vec::new(),
        final_state: initial.clone(),
        stats: KernelStats::default(),
    };
    let mut state = initial;
    let record = |k: usize, st: &ChainState, rec: &mut ChainRecord| {
        rec.recorded.push(k);
        rec.phi_trace.push(st.phi);
        if opts.keep_samples {
            rec.samples.push(st.x.clone());
        }
        if !st.theta.is_empty() {
            rec.theta_trace.push(st.theta.clone());
        }
        if let Some(f) = summary {
            rec.summaries.push(f(st));
        }
    };
    record(0, &state, &mut rec);
    visit(0, &state);
    for k in 1..=opts.steps {
        let flags = kernel.step(&mut state, rng);
        rec.latent_flags.push(flags.latent);
        if let (Some(t), Some(f)) = (rec.theta_flags.as_mut(), flags.theta) {
            t.push(f);
        }
        if k % opts.thin == 0 {
            record(k, &state, &mut rec);
        }
        visit(k, &state);
    }
    rec.stats = kernel.stats();
    rec.final_state = state;
    Ok(rec)
}
