//! Single-block kernels: pCN, whitened pCN, whitened infinity-MALA and
//! random-walk Metropolis.

use rand::Rng;

use super::{metropolis, ChainState, Differentiable, Kernel, KernelStats, Potential, StepFlags};
use crate::error::{domain, Error, Result};
use crate::gaussian_field::LowerFactor;
use crate::prior_transforms::CoefficientLaw;
use crate::rng::{fill_standard_normal, ChainRng};

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return domain(format!("step size beta must lie in (0, 1], got {beta}"));
    }
    Ok(())
}

fn finite_value<P: Potential + ?Sized>(p: &P, x: &[f64]) -> Option<f64> {
    p.value(x).ok().filter(|v| v.is_finite())
}

fn initial_value<P: Potential + ?Sized>(p: &P, x: &[f64]) -> Result<f64> {
    if x.len() != p.dim() {
        return domain(format!("initial state has {} coordinates, potential expects {}", x.len(), p.dim()));
    }
    let v = p.value(x)?;
    if !v.is_finite() {
        return Err(Error::Numeric(format!("potential at the initial state is not finite ({v})")));
    }
    Ok(v)
}

/// Sampler for `N(0, C)` used by pCN in `u`-space.
pub trait GaussianSampler {
    fn dim(&self) -> usize;
    /// Writes one draw into `out`, consuming `dim()` standard normals.
    fn sample(&self, rng: &mut ChainRng, out: &mut [f64]);
}

/// `N(0, diag(std^2))`.
#[derive(Debug, Clone)]
pub struct DiagonalGaussian {
    pub std: Vec<f64>,
}

impl GaussianSampler for DiagonalGaussian {
    fn dim(&self) -> usize {
        self.std.len()
    }

    fn sample(&self, rng: &mut ChainRng, out: &mut [f64]) {
        fill_standard_normal(rng, out);
        for (o, s) in out.iter_mut().zip(&self.std) {
            *o *= s;
        }
    }
}

impl GaussianSampler for LowerFactor {
    fn dim(&self) -> usize {
        self.n()
    }

    fn sample(&self, rng: &mut ChainRng, out: &mut [f64]) {
        let mut z = vec![0.0; self.n()];
        fill_standard_normal(rng, &mut z);
        self.apply(&z, out);
    }
}

/// Preconditioned Crank-Nicolson on `u` with Gaussian prior `N(0, C)`:
/// propose `sqrt(1 - beta^2) u + beta zeta`, `zeta ~ N(0, C)`, accept with
/// `min(1, exp(Phi(u) - Phi(u_hat)))`.
pub struct Pcn<'a, P: ?Sized, G> {
    potential: &'a P,
    prior: G,
    beta: f64,
    scratch: Vec<f64>,
    stats: KernelStats,
}

impl<'a, P: Potential + ?Sized, G: GaussianSampler> Pcn<'a, P, G> {
    pub fn new(potential: &'a P, prior: G, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if prior.dim() != potential.dim() {
            return domain("prior sampler and potential dimensions differ");
        }
        let n = potential.dim();
        Ok(Self { potential, prior, beta, scratch: vec![0.0; n], stats: KernelStats::default() })
    }
}

impl<P: Potential + ?Sized, G: GaussianSampler> Kernel for Pcn<'_, P, G> {
    fn name(&self) -> &'static str {
        "pcn"
    }

    fn init(&self, x: Vec<f64>, theta: Vec<f64>) -> Result<ChainState> {
        let phi = initial_value(self.potential, &x)?;
        Ok(ChainState { x, theta, phi, grad: Vec::new() })
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> StepFlags {
        let a = (1.0 - self.beta * self.beta).sqrt();
        self.prior.sample(rng, &mut self.scratch);
        for (p, &x) in self.scratch.iter_mut().zip(&state.x) {
            *p = a * x + self.beta * *p;
        }
        let u: f64 = rng.random();
        self.stats.proposals += 1;
        let accepted = match finite_value(self.potential, &self.scratch) {
            Some(phi_hat) if metropolis(state.phi - phi_hat, u) => {
                std::mem::swap(&mut state.x, &mut self.scratch);
                state.phi = phi_hat;
                true
            }
            Some(_) => false,
            None => {
                self.stats.failures += 1;
                false
            }
        };
        self.stats.accepted += accepted as u64;
        StepFlags { latent: accepted, theta: None }
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}

/// pCN in white-noise coordinates, where the prior is `N(0, I)` and the
/// potential is `Psi = Phi o T`.
pub struct Wpcn<'a, P: ?Sized> {
    potential: &'a P,
    beta: f64,
    scratch: Vec<f64>,
    stats: KernelStats,
}

impl<'a, P: Potential + ?Sized> Wpcn<'a, P> {
    pub fn new(potential: &'a P, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { potential, beta, scratch: vec![0.0; potential.dim()], stats: KernelStats::default() })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Writes the pCN proposal `sqrt(1 - beta^2) x + beta zeta` into `out`,
/// drawing `zeta` from `rng`.
pub(crate) fn pcn_proposal(x: &[f64], beta: f64, rng: &mut ChainRng, out: &mut [f64]) {
    fill_standard_normal(rng, out);
    let a = (1.0 - beta * beta).sqrt();
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = a * xi + beta * *o;
    }
}

impl<P: Potential + ?Sized> Kernel for Wpcn<'_, P> {
    fn name(&self) -> &'static str {
        "wpcn"
    }

    fn init(&self, x: Vec<f64>, theta: Vec<f64>) -> Result<ChainState> {
        let phi = initial_value(self.potential, &x)?;
        Ok(ChainState { x, theta, phi, grad: Vec::new() })
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> StepFlags {
        pcn_proposal(&state.x, self.beta, rng, &mut self.scratch);
        let u: f64 = rng.random();
        self.stats.proposals += 1;
        let accepted = match finite_value(self.potential, &self.scratch) {
            Some(phi_hat) if metropolis(state.phi - phi_hat, u) => {
                std::mem::swap(&mut state.x, &mut self.scratch);
                state.phi = phi_hat;
                true
            }
            Some(_) => false,
            None => {
                self.stats.failures += 1;
                false
            }
        };
        self.stats.accepted += accepted as u64;
        StepFlags { latent: accepted, theta: None }
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}

/// `beta = 4 sqrt(h) / (4 + h)`.
pub fn mala_beta(h: f64) -> f64 {
    4.0 * h.sqrt() / (4.0 + h)
}

/// The `h` in `(0, 4]` with `mala_beta(h) = beta`.
pub fn mala_h_from_beta(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let s = 2.0 * (1.0 - (1.0 - beta * beta).sqrt()) / beta;
    Ok(s * s)
}

/// Whitened infinity-MALA: propose
/// `sqrt(1 - beta^2) xi + beta (zeta - sqrt(h)/2 DPsi(xi))` and accept with
/// `min(1, exp(I(xi, xi_hat) - I(xi_hat, xi)))` where
/// `I(a, b) = Psi(a) + h/8 |DPsi(a)|^2 + sqrt(h)/2 <DPsi(a), (b - sqrt(1 - beta^2) a) / beta>`.
pub struct Wmala<'a, P: ?Sized> {
    potential: &'a P,
    h: f64,
    beta: f64,
    scratch: Vec<f64>,
    grad_hat: Vec<f64>,
    stats: KernelStats,
}

impl<'a, P: Differentiable + ?Sized> Wmala<'a, P> {
    pub fn new(potential: &'a P, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 4.0) {
            return domain(format!("MALA step h must lie in (0, 4], got {h}"));
        }
        Ok(Self::build(potential, h, mala_beta(h)))
    }

    /// Parameterised by the pCN step size; the stored `beta` is exactly the
    /// one given, so proposals coincide with [`Wpcn`] when the gradient vanishes.
    pub fn from_beta(potential: &'a P, beta: f64) -> Result<Self> {
        let h = mala_h_from_beta(beta)?;
        Ok(Self::build(potential, h, beta))
    }

    fn build(potential: &'a P, h: f64, beta: f64) -> Self {
        let n = potential.dim();
        Self { potential, h, beta, scratch: vec![0.0; n], grad_hat: vec![0.0; n], stats: KernelStats::default() }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn i_term(&self, phi: f64, grad: &[f64], from: &[f64], to: &[f64]) -> f64 {
        let a = (1.0 - self.beta * self.beta).sqrt();
        let sh = self.h.sqrt();
        let mut g2 = 0.0;
        let mut inner = 0.0;
        for ((&g, &f), &t) in grad.iter().zip(from).zip(to) {
            g2 += g * g;
            inner += g * (t - a * f) / self.beta;
        }
        phi + self.h / 8.0 * g2 + sh / 2.0 * inner
    }
}

impl<P: Differentiable + ?Sized> Kernel for Wmala<'_, P> {
    fn name(&self) -> &'static str {
        "wmala"
    }

    fn init(&self, x: Vec<f64>, theta: Vec<f64>) -> Result<ChainState> {
        if x.len() != self.potential.dim() {
            return domain("initial state has the wrong dimension");
        }
        let mut grad = vec![0.0; x.len()];
        let phi = self.potential.value_and_gradient(&x, &mut grad)?;
        if !phi.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("potential or gradient at the initial state is not finite".into()));
        }
        Ok(ChainState { x, theta, phi, grad })
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> StepFlags {
        fill_standard_normal(rng, &mut self.scratch);
        let a = (1.0 - self.beta * self.beta).sqrt();
        let half_sh = self.h.sqrt() / 2.0;
        for ((o, &x), &g) in self.scratch.iter_mut().zip(&state.x).zip(&state.grad) {
            *o = a * x + self.beta * (*o - half_sh * g);
        }
        let u: f64 = rng.random();
        self.stats.proposals += 1;
        let evaluated = self
            .potential
            .value_and_gradient(&self.scratch, &mut self.grad_hat)
            .ok()
            .filter(|v| v.is_finite() && self.grad_hat.iter().all(|g| g.is_finite()));
        let accepted = match evaluated {
            Some(phi_hat) => {
                let fwd = self.i_term(state.phi, &state.grad, &state.x, &self.scratch);
                let bwd = self.i_term(phi_hat, &self.grad_hat, &self.scratch, &state.x);
                if metropolis(fwd - bwd, u) {
                    std::mem::swap(&mut state.x, &mut self.scratch);
                    std::mem::swap(&mut state.grad, &mut self.grad_hat);
                    state.phi = phi_hat;
                    true
                } else {
                    false
                }
            }
            None => {
                self.stats.failures += 1;
                false
            }
        };
        self.stats.accepted += accepted as u64;
        StepFlags { latent: accepted, theta: None }
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}

/// Proposal families for [`Rwm`].
#[derive(Debug, Clone, PartialEq)]
pub enum RwmVariant {
    /// State is `xi`, increments `beta zeta` with `zeta ~ N(0, I)`, prior
    /// density `exp(-|xi|^2 / 2)`.
    White,
    /// State is the coefficient vector, increments `beta zeta` with `zeta`
    /// drawn from the coefficient law, prior density that law's product density.
    Prior(CoefficientLaw),
}

/// Random-walk Metropolis `x -> x + beta zeta` targeting
/// `exp(-Phi(x)) prior(x)`.
pub struct Rwm<'a, P: ?Sized> {
    potential: &'a P,
    beta: f64,
    variant: RwmVariant,
    scratch: Vec<f64>,
    stats: KernelStats,
}

impl<'a, P: Potential + ?Sized> Rwm<'a, P> {
    pub fn new(potential: &'a P, beta: f64, variant: RwmVariant) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return domain(format!("random-walk step must be positive, got {beta}"));
        }
        if let RwmVariant::Prior(law) = &variant {
            if law.is_paired() {
                return Err(Error::Unsupported("prior random walk needs a coefficient law with a density".into()));
            }
        }
        Ok(Self { potential, beta, variant, scratch: vec![0.0; potential.dim()], stats: KernelStats::default() })
    }

    fn ln_prior(&self, x: &[f64]) -> f64 {
        match &self.variant {
            RwmVariant::White => -0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            RwmVariant::Prior(law) => x.iter().map(|&v| law.ln_density(v).unwrap_or(f64::NEG_INFINITY)).sum(),
        }
    }
}

impl<P: Potential + ?Sized> Kernel for Rwm<'_, P> {
    fn name(&self) -> &'static str {
        match self.variant {
            RwmVariant::White => "rwm_white",
            RwmVariant::Prior(_) => "rwm_prior",
        }
    }

    fn init(&self, x: Vec<f64>, theta: Vec<f64>) -> Result<ChainState> {
        let phi = initial_value(self.potential, &x)?;
        if !self.ln_prior(&x).is_finite() {
            return domain("initial state lies outside the prior support");
        }
        Ok(ChainState { x, theta, phi, grad: Vec::new() })
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> StepFlags {
        fill_standard_normal(rng, &mut self.scratch);
        if let RwmVariant::Prior(law) = &self.variant {
            for (j, z) in self.scratch.iter_mut().enumerate() {
                *z = law.apply(j, *z, 0.0).unwrap_or(f64::NAN);
            }
        }
        for (o, &x) in self.scratch.iter_mut().zip(&state.x) {
            *o = x + self.beta * *o;
        }
        let u: f64 = rng.random();
        self.stats.proposals += 1;
        let prior_hat = self.ln_prior(&self.scratch);
        let accepted = if prior_hat == f64::NEG_INFINITY {
            false
        } else {
            match finite_value(self.potential, &self.scratch) {
                Some(phi_hat) => {
                    let log_alpha = state.phi - phi_hat + prior_hat - self.ln_prior(&state.x);
                    if metropolis(log_alpha, u) {
                        std::mem::swap(&mut state.x, &mut self.scratch);
                        state.phi = phi_hat;
                        true
                    } else {
                        false
                    }
                }
                None => {
                    self.stats.failures += 1;
                    false
                }
            }
        };
        self.stats.accepted += accepted as u64;
        StepFlags { latent: accepted, theta: None }
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;

    pub(crate) struct Quadratic {
        pub c: f64,
        pub n: usize,
    }

    impl Potential for Quadratic {
        fn dim(&self) -> usize {
            self.n
        }
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok(0.5 * self.c * x.iter().map(|v| v * v).sum::<f64>())
        }
    }

    impl Differentiable for Quadratic {
        fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
            for (g, &v) in grad.iter_mut().zip(x) {
                *g = self.c * v;
            }
            self.value(x)
        }
    }

    #[test]
    fn zero_potential_always_accepts() {
        let p = Quadratic { c: 0.0, n: 5 };
        let mut rng = chain_rng(1);
        let mut k = Wpcn::new(&p, 0.7).unwrap();
        let mut s = k.init(vec![0.3; 5], vec![]).unwrap();
        for _ in 0..200 {
            assert!(k.step(&mut s, &mut rng).latent);
        }
        let mut m = Wmala::new(&p, 1.3).unwrap();
        let mut s = m.init(vec![0.3; 5], vec![]).unwrap();
        for _ in 0..200 {
            assert!(m.step(&mut s, &mut rng).latent);
        }
    }

    #[test]
    fn beta_one_is_independent_draw() {
        let p = Quadratic { c: 0.0, n: 3 };
        let mut k = Wpcn::new(&p, 1.0).unwrap();
        let mut s = k.init(vec![100.0; 3], vec![]).unwrap();
        let mut rng = chain_rng(4);
        let mut expect_rng = chain_rng(4);
        k.step(&mut s, &mut rng);
        let mut z = vec![0.0; 3];
        fill_standard_normal(&mut expect_rng, &mut z);
        assert_eq!(s.x, z);
    }

    #[test]
    fn mala_step_conversions() {
        assert_eq!(mala_beta(4.0), 1.0);
        for &b in &[0.01, 0.2, 0.7, 1.0] {
            let h = mala_h_from_beta(b).unwrap();
            assert!((mala_beta(h) - b).abs() < 1e-14);
            assert!(h > 0.0 && h <= 4.0 + 1e-12);
        }
        let p = Quadratic { c: 1.0, n: 1 };
        assert!(Wmala::new(&p, 4.5).is_err());
        assert!(Wpcn::new(&p, 0.0).is_err());
    }

    #[test]
    fn initial_state_must_be_finite() {
        struct Bad;
        impl Potential for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _: &[f64]) -> Result<f64> {
                Ok(f64::INFINITY)
            }
        }
        assert!(Wpcn::new(&Bad, 0.5).unwrap().init(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn rwm_tiny_steps_accept() {
        let p = Quadratic { c: 1.0, n: 10 };
        let mut k = Rwm::new(&p, 1e-6, RwmVariant::White).unwrap();
        let mut s = k.init(vec![0.5; 10], vec![]).unwrap();
        let mut rng = chain_rng(2);
        let acc = (0..500).filter(|_| k.step(&mut s, &mut rng).latent).count();
        assert!(acc >= 495);
    }
}
