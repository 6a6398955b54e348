//! Conditional law of the hidden signal given the observations.
//!
//! For a finite-state chain the conditional probabilities `e_k(t)` solve the
//! Wonham system
//!
//! ```text
//! de_k = [ Σ_i q_ik e_i − (g_k − ḡ(e)) ḡ(e) e_k ] dt + (g_k − ḡ(e)) e_k dy
//!      =   Σ_i q_ik e_i dt + (g_k − ḡ(e)) e_k dW̄,      dW̄ = dy − ḡ(e) dt
//! ```
//!
//! [`wonham_step`] integrates the observation-driven form, [`WonhamSystem`] the
//! innovation form. For general signals the filter is approximated by a
//! bootstrap particle filter ([`ParticleCloud`]) with a pluggable
//! [`TransitionSampler`].

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::sde::{ConstraintHits, SdeSystem};

const COLLAPSE_LEVEL: f64 = 1e-300;

/// Point of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    weights: Vec<f64>,
}

impl FilterState {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::param("weights", "empty"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("weights", "entries must be finite and nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param("weights", format!("sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, k: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[k] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.weights
    }

    /// `ḡ(e) = Σ g_k e_k`.
    pub fn g_bar(&self, spec: &ChainSpec) -> f64 {
        dot(spec.obs_map(), &self.weights)
    }

    /// Conditional mean of the signal, `Σ m_k e_k`.
    pub fn mean_signal(&self, spec: &ChainSpec) -> f64 {
        dot(spec.states(), &self.weights)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clamp negatives to zero and renormalise; uniform if nothing positive is left.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    project_in_place(&mut out);
    out
}

/// In-place [`project_simplex`]; reports which entries were clamped.
pub fn project_in_place(v: &mut [f64]) -> ConstraintHits {
    let mut hits = ConstraintHits::default();
    for (i, x) in v.iter_mut().enumerate() {
        if !(*x >= 0.0) {
            *x = 0.0;
            hits.mark(i);
        }
    }
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
        return hits;
    }
    // skip renormalising points already on the simplex so the map is idempotent
    if (sum - 1.0).abs() > 4.0 * f64::EPSILON * v.len() as f64 {
        v.iter_mut().for_each(|x| *x /= sum);
    }
    hits
}

/// `dW̄ = dy − ḡ(e)·dt`.
pub fn innovation_increment(e: &FilterState, spec: &ChainSpec, dy: f64, dt: f64) -> f64 {
    dy - e.g_bar(spec) * dt
}

/// One Euler step of the observation-driven Wonham system, before projection.
pub fn wonham_step_raw(e: &[f64], spec: &ChainSpec, dy: f64, dt: f64, out: &mut [f64]) {
    let g = spec.obs_map();
    let g_bar = dot(g, e);
    for k in 0..e.len() {
        let inflow: f64 = (0..e.len()).map(|i| spec.rate(i, k) * e[i]).sum();
        let gap = g[k] - g_bar;
        out[k] = e[k] + (inflow - gap * g_bar * e[k]) * dt + gap * e[k] * dy;
    }
}

/// One Euler step of the Wonham filter driven by the observation increment `dy`,
/// projected back onto the simplex.
pub fn wonham_step(e: &FilterState, spec: &ChainSpec, dy: f64, dt: f64) -> Result<FilterState> {
    if e.weights.len() != spec.len() {
        return Err(Error::param("e", "dimension does not match the chain"));
    }
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be > 0"));
    }
    let mut next = vec![0.0; e.weights.len()];
    wonham_step_raw(&e.weights, spec, dy, dt, &mut next);
    if next.iter().any(|v| !v.is_finite()) || next.iter().all(|&v| v < COLLAPSE_LEVEL) {
        return Err(Error::DegenerateFilter);
    }
    project_in_place(&mut next);
    Ok(FilterState { weights: next })
}

/// Innovation form of the Wonham filter as a stand-alone SDE on the simplex,
/// driven by one Brownian channel `W̄`. For two states this is
/// `de = [q2 − (q1 + q2) e] dt + (g1 − g2) e (1 − e) dW̄`.
#[derive(Debug, Clone)]
pub struct WonhamSystem {
    spec: ChainSpec,
}

impl WonhamSystem {
    pub fn new(spec: ChainSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }
}

impl SdeSystem for WonhamSystem {
    fn dimension(&self) -> usize {
        self.spec.len()
    }

    fn noise_channels(&self) -> usize {
        1
    }

    fn drift(&self, _t: f64, e: &[f64], out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = (0..e.len()).map(|i| self.spec.rate(i, k) * e[i]).sum();
        }
    }

    fn diffusion(&self, _t: f64, e: &[f64], out: &mut [f64]) {
        let g = self.spec.obs_map();
        let g_bar = dot(g, e);
        for k in 0..e.len() {
            out[k] = (g[k] - g_bar) * e[k];
        }
    }

    fn constrain(&self, e: &mut [f64]) -> ConstraintHits {
        project_in_place(e)
    }

    fn labels(&self) -> Vec<String> {
        (1..=self.spec.len()).map(|k| format!("e_{k}")).collect()
    }
}

/// Propagates one particle of the signal over `dt`.
pub trait TransitionSampler {
    fn sample(&self, x: f64, dt: f64, rng: &mut dyn RngCore) -> f64;
}

impl<F> TransitionSampler for F
where
    F: Fn(f64, f64, &mut dyn RngCore) -> f64,
{
    fn sample(&self, x: f64, dt: f64, rng: &mut dyn RngCore) -> f64 {
        self(x, dt, rng)
    }
}

/// Exact finite-state transitions using `exp(Q·dt)`, cached for one step size.
#[derive(Debug, Clone)]
pub struct ChainTransitionSampler {
    spec: ChainSpec,
    dt: f64,
    cumulative: Vec<Vec<f64>>,
}

impl ChainTransitionSampler {
    pub fn new(spec: ChainSpec, dt: f64) -> Self {
        let cumulative = transition_cdf(&spec, dt);
        Self { spec, dt, cumulative }
    }
}

fn transition_cdf(spec: &ChainSpec, dt: f64) -> Vec<Vec<f64>> {
    let n = spec.len();
    let p = DMatrix::from_fn(n, n, |i, k| spec.rate(i, k) * dt).exp();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            (0..n)
                .map(|k| {
                    acc += p[(i, k)].max(0.0);
                    acc
                })
                .collect()
        })
        .collect()
}

impl TransitionSampler for ChainTransitionSampler {
    fn sample(&self, x: f64, dt: f64, rng: &mut dyn RngCore) -> f64 {
        let i = self.spec.index_of(x).expect("particle outside the chain's state set");
        let owned;
        let cdf = if (dt - self.dt).abs() <= 1e-15 * self.dt {
            &self.cumulative[i]
        } else {
            owned = transition_cdf(&self.spec, dt);
            &owned[i]
        };
        let u = rng.random::<f64>() * cdf[cdf.len() - 1];
        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        self.spec.states()[k]
    }
}

/// Weighted empirical approximation of the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    particles: Vec<f64>,
    weights: Vec<f64>,
    ess: f64,
}

impl ParticleCloud {
    pub fn new(particles: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if particles.is_empty() || particles.len() != weights.len() {
            return Err(Error::param(
                "particles",
                "need equally many particles and weights, at least one",
            ));
        }
        if particles.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::param("particles", "positions must lie in [0, 1]"));
        }
        let state = FilterState::new(weights)?;
        let ess = effective_sample_size(state.weights());
        Ok(Self {
            particles,
            weights: state.into_inner(),
            ess,
        })
    }

    /// `n` equally weighted particles drawn from the discrete law `law` on `spec`.
    pub fn from_law(spec: &ChainSpec, law: &[f64], n: usize, rng: &mut dyn RngCore) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "need at least one particle"));
        }
        let law = FilterState::new(law.to_vec())?;
        let mut cdf = Vec::with_capacity(law.weights().len());
        let mut acc = 0.0;
        for w in law.weights() {
            acc += w;
            cdf.push(acc);
        }
        let particles = (0..n)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                spec.states()[cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)]
            })
            .collect();
        Ok(Self {
            particles,
            weights: vec![1.0 / n as f64; n],
            ess: n as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[f64] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    /// Mass the cloud puts on each chain state.
    pub fn state_masses(&self, spec: &ChainSpec) -> Result<Vec<f64>> {
        let mut mass = vec![0.0; spec.len()];
        for (&x, &w) in self.particles.iter().zip(&self.weights) {
            let k = spec.index_of(x).ok_or(Error::UnknownState(x))?;
            mass[k] += w;
        }
        Ok(mass)
    }

    /// Propagate, reweight with `exp(g(x)·dy − g(x)²·dt/2)`, and resample
    /// systematically when the ESS falls below `resample_threshold · N`.
    pub fn step<T, G>(
        &mut self,
        sampler: &T,
        g: G,
        dy: f64,
        dt: f64,
        resample_threshold: f64,
        rng: &mut dyn RngCore,
    ) -> Result<()>
    where
        T: TransitionSampler + ?Sized,
        G: Fn(f64) -> f64,
    {
        for x in self.particles.iter_mut() {
            *x = sampler.sample(*x, dt, rng).clamp(0.0, 1.0);
        }
        let log_w: Vec<f64> = self
            .particles
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| {
                let gx = g(x);
                w.ln() + gx * dy - 0.5 * gx * gx * dt
            })
            .collect();
        let max = log_w
            .iter()
            .copied()
            .filter(|v| !v.is_nan())
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegenerateFilter);
        }
        let mut total = 0.0;
        for (w, lw) in self.weights.iter_mut().zip(&log_w) {
            *w = if lw.is_nan() { 0.0 } else { (lw - max).exp() };
            total += *w;
        }
        self.weights.iter_mut().for_each(|w| *w /= total);
        self.ess = effective_sample_size(&self.weights);
        if self.ess < resample_threshold * self.len() as f64 {
            self.resample(rng);
        }
        Ok(())
    }

    fn resample(&mut self, rng: &mut dyn RngCore) {
        let n = self.len();
        let step = 1.0 / n as f64;
        let mut u = rng.random::<f64>() * step;
        let mut acc = self.weights[0];
        let mut j = 0;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            while u > acc && j + 1 < n {
                j += 1;
                acc += self.weights[j];
            }
            out.push(self.particles[j]);
            u += step;
        }
        self.particles = out;
        self.weights = vec![step; n];
        self.ess = n as f64;
    }
}

pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Functional form of [`ParticleCloud::step`].
pub fn particle_filter_step<T, G>(
    mut cloud: ParticleCloud,
    sampler: &T,
    g: G,
    dy: f64,
    dt: f64,
    resample_threshold: f64,
    rng: &mut dyn RngCore,
) -> Result<ParticleCloud>
where
    T: TransitionSampler + ?Sized,
    G: Fn(f64) -> f64,
{
    cloud.step(sampler, g, dy, dt, resample_threshold, rng)?;
    Ok(cloud)
}

/// `Σ_k |e_k − cloud mass at m_k|`.
pub fn filter_l1_distance(e: &FilterState, cloud: &ParticleCloud, spec: &ChainSpec) -> Result<f64> {
    let mass = cloud.state_masses(spec)?;
    Ok(e.weights().iter().zip(&mass).map(|(a, b)| (a - b).abs()).sum())
}
