//! Fixed-step Euler–Maruyama integration driven by seeded Brownian noise.
//!
//! Every stochastic system in the crate implements [`SdeSystem`] and is
//! advanced with the same scheme:
//!
//! ```text
//! x_{k+1} = constrain( x_k + drift(t_k, x_k)·dt + Σ_c diffusion_c(t_k, x_k)·ΔW_c )
//! ```
//!
//! # Noise layout
//!
//! Brownian channel `c` under seed `s` is drawn from a ChaCha8 generator seeded
//! with `s` on stream `c`. A [`NoiseBundle`] stores the increments channel-major
//! (`increments[c * n_steps + k]`). [`BrownianStream`] produces the very same
//! numbers lazily, so a long run can be streamed instead of materialised
//! without changing a single bit of the result. Streams at and above
//! [`RESERVED_STREAM_BASE`] are kept for non-Brownian randomness (chain jumps,
//! particle propagation).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// First RNG stream id that is never used for Brownian channels.
pub const RESERVED_STREAM_BASE: u64 = 1 << 32;
/// Stream used by continuous-time Markov chain simulation.
pub const CHAIN_STREAM: u64 = RESERVED_STREAM_BASE;
/// Stream used by the particle filter for propagation and resampling.
pub const PARTICLE_STREAM: u64 = RESERVED_STREAM_BASE + 1;

/// Default positivity floor for population compartments.
pub const DEFAULT_POSITIVITY_FLOOR: f64 = 1e-12;

/// Generator for one logical stream of a seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform time grid `t0 + k·dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t0 >= 0.0) {
            return Err(Error::param("t0", format!("must be finite and >= 0, got {t0}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::param("n_steps", "must be at least 1"));
        }
        Ok(Self { t0, dt, n_steps })
    }

    /// Grid on `[0, horizon]`; the step count is `horizon / dt` rounded.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param(
                "horizon",
                format!("must be finite and > 0, got {horizon}"),
            ));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
        }
        Self::new(0.0, dt, (horizon / dt).round().max(1.0) as usize)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_steps)
    }
}

/// Materialised Brownian increments, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBundle {
    seed: u64,
    dt: f64,
    n_channels: usize,
    n_steps: usize,
    increments: Vec<f64>,
}

impl NoiseBundle {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.increments[c * self.n_steps..(c + 1) * self.n_steps]
    }

    #[inline]
    pub fn increment(&self, c: usize, k: usize) -> f64 {
        self.increments[c * self.n_steps + k]
    }
}

/// `n_channels × grid.n_steps()` independent `Normal(0, dt)` increments.
pub fn brownian_increments(n_channels: usize, grid: &TimeGrid, seed: u64) -> Result<NoiseBundle> {
    if n_channels == 0 {
        return Err(Error::param("n_channels", "must be at least 1"));
    }
    let n_steps = grid.n_steps();
    let sqrt_dt = grid.dt().sqrt();
    let mut increments = Vec::with_capacity(n_channels * n_steps);
    for c in 0..n_channels {
        let mut rng = stream_rng(seed, c as u64);
        increments.extend((0..n_steps).map(|_| sqrt_dt * rng.sample::<f64, _>(StandardNormal)));
    }
    Ok(NoiseBundle {
        seed,
        dt: grid.dt(),
        n_channels,
        n_steps,
        increments,
    })
}

/// Supplies the Brownian increments for step `k`. The current state is passed
/// so that state-dependent drivers (e.g. an innovation computed from observed
/// data) can be plugged in.
pub trait NoiseSource {
    fn n_channels(&self) -> usize;

    /// Number of steps available, if bounded.
    fn available_steps(&self) -> Option<usize> {
        None
    }

    fn fill(&mut self, k: usize, state: &[f64], dw: &mut [f64]);
}

impl NoiseSource for &NoiseBundle {
    fn n_channels(&self) -> usize {
        self.n_channels
    }

    fn available_steps(&self) -> Option<usize> {
        Some(self.n_steps)
    }

    fn fill(&mut self, k: usize, _state: &[f64], dw: &mut [f64]) {
        for (c, slot) in dw.iter_mut().enumerate() {
            *slot = self.increment(c, k);
        }
    }
}

/// Lazily generated increments, bit-identical to [`brownian_increments`].
#[derive(Debug, Clone)]
pub struct BrownianStream {
    rngs: Vec<ChaCha8Rng>,
    sqrt_dt: f64,
}

impl BrownianStream {
    pub fn new(n_channels: usize, dt: f64, seed: u64) -> Self {
        Self {
            rngs: (0..n_channels as u64).map(|c| stream_rng(seed, c)).collect(),
            sqrt_dt: dt.sqrt(),
        }
    }

    pub fn next_into(&mut self, dw: &mut [f64]) {
        for (rng, slot) in self.rngs.iter_mut().zip(dw.iter_mut()) {
            *slot = self.sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

impl NoiseSource for BrownianStream {
    fn n_channels(&self) -> usize {
        self.rngs.len()
    }

    fn fill(&mut self, _k: usize, _state: &[f64], dw: &mut [f64]) {
        self.next_into(dw);
    }
}

/// Noise source backed by a closure `(k, state, dw)`.
pub struct FnNoise<F> {
    channels: usize,
    f: F,
}

impl<F: FnMut(usize, &[f64], &mut [f64])> FnNoise<F> {
    pub fn new(channels: usize, f: F) -> Self {
        Self { channels, f }
    }
}

impl<F: FnMut(usize, &[f64], &mut [f64])> NoiseSource for FnNoise<F> {
    fn n_channels(&self) -> usize {
        self.channels
    }

    fn fill(&mut self, k: usize, state: &[f64], dw: &mut [f64]) {
        (self.f)(k, state, dw)
    }
}

/// A system `dX = drift(t, X) dt + Σ_c diffusion_c(t, X) dW_c` with a
/// post-step projection onto its admissible region.
pub trait SdeSystem {
    fn dimension(&self) -> usize;

    fn noise_channels(&self) -> usize;

    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Fills `out[c * dimension + i]` with the coefficient of `dW_c` in
    /// component `i`. The buffer arrives zeroed.
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Projects `x` onto the admissible region and reports which components
    /// had to be moved. Must be idempotent.
    fn constrain(&self, _x: &mut [f64]) -> ConstraintHits {
        ConstraintHits::default()
    }

    fn labels(&self) -> Vec<String> {
        (0..self.dimension()).map(|i| format!("x{i}")).collect()
    }
}

/// Components moved by a [`SdeSystem::constrain`] call (at most 64 tracked).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConstraintHits(pub u64);

impl ConstraintHits {
    pub fn mark(&mut self, component: usize) {
        if component < 64 {
            self.0 |= 1 << component;
        }
    }

    pub fn contains(&self, component: usize) -> bool {
        component < 64 && self.0 & (1 << component) != 0
    }

    pub fn count(&self) -> usize {
        self.0.count_ones() as usize
    }
}

/// Clamps `*v` to `floor` when it went negative. Exact zeros are left alone:
/// the axis is invariant for the population systems.
#[inline]
pub fn clamp_positive(v: &mut f64, floor: f64) -> bool {
    if *v < 0.0 {
        *v = floor;
        true
    } else {
        false
    }
}

/// Reusable scratch buffers for repeated steps of one system.
#[derive(Debug, Clone)]
pub struct EulerMaruyama {
    drift: Vec<f64>,
    diffusion: Vec<f64>,
}

impl EulerMaruyama {
    pub fn for_system<S: SdeSystem + ?Sized>(system: &S) -> Self {
        let d = system.dimension();
        Self {
            drift: vec![0.0; d],
            diffusion: vec![0.0; d * system.noise_channels()],
        }
    }

    /// Advances `state` in place. On blow-up returns the offending component.
    pub fn advance<S: SdeSystem + ?Sized>(
        &mut self,
        system: &S,
        state: &mut [f64],
        t: f64,
        dt: f64,
        dw: &[f64],
    ) -> std::result::Result<ConstraintHits, usize> {
        let d = system.dimension();
        system.drift(t, state, &mut self.drift);
        self.diffusion.iter_mut().for_each(|v| *v = 0.0);
        system.diffusion(t, state, &mut self.diffusion);
        for i in 0..d {
            let mut noise = 0.0;
            for (c, w) in dw.iter().enumerate().take(system.noise_channels()) {
                noise += self.diffusion[c * d + i] * w;
            }
            state[i] += self.drift[i] * dt + noise;
        }
        if let Some(bad) = state.iter().position(|v| !v.is_finite()) {
            return Err(bad);
        }
        Ok(system.constrain(state))
    }
}

/// One Euler–Maruyama step from `state` at time `t`.
pub fn euler_maruyama_step<S: SdeSystem + ?Sized>(
    system: &S,
    state: &[f64],
    t: f64,
    dt: f64,
    dw: &[f64],
) -> Result<Vec<f64>> {
    check_dims(system, state, dw.len())?;
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be > 0"));
    }
    let mut next = state.to_vec();
    EulerMaruyama::for_system(system)
        .advance(system, &mut next, t, dt, dw)
        .map_err(|component| Error::NonFiniteState { step: 0, component })?;
    Ok(next)
}

fn check_dims<S: SdeSystem + ?Sized>(system: &S, state: &[f64], channels: usize) -> Result<()> {
    if state.len() != system.dimension() {
        return Err(Error::param(
            "state",
            format!("expected dimension {}, got {}", system.dimension(), state.len()),
        ));
    }
    if channels < system.noise_channels() {
        return Err(Error::param(
            "noise",
            format!("system needs {} channels, got {channels}", system.noise_channels()),
        ));
    }
    Ok(())
}

/// Constraint activity over a whole run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClampStats {
    /// Total number of (step, component) clamp events.
    pub count: usize,
    /// First step at which each component was clamped.
    pub first: Vec<Option<usize>>,
}

impl ClampStats {
    fn new(dimension: usize) -> Self {
        Self {
            count: 0,
            first: vec![None; dimension],
        }
    }

    fn record(&mut self, step: usize, hits: ConstraintHits) {
        if hits.0 == 0 {
            return;
        }
        self.count += hits.count();
        for (i, first) in self.first.iter_mut().enumerate() {
            if first.is_none() && hits.contains(i) {
                *first = Some(step);
            }
        }
    }
}

/// Integrates `system` over `grid`, handing every grid state to `observer`
/// as `(k, t_k, x_k)`, starting with the initial state at `k = 0`.
pub fn integrate<S, N, O>(
    system: &S,
    init: &[f64],
    grid: &TimeGrid,
    mut noise: N,
    mut observer: O,
) -> Result<ClampStats>
where
    S: SdeSystem + ?Sized,
    N: NoiseSource,
    O: FnMut(usize, f64, &[f64]),
{
    check_dims(system, init, noise.n_channels())?;
    if let Some(avail) = noise.available_steps() {
        if avail < grid.n_steps() {
            return Err(Error::param(
                "noise",
                format!("{avail} steps available, grid needs {}", grid.n_steps()),
            ));
        }
    }
    let mut stepper = EulerMaruyama::for_system(system);
    let mut state = init.to_vec();
    let mut dw = vec![0.0; noise.n_channels()];
    let mut clamps = ClampStats::new(system.dimension());
    let dt = grid.dt();
    observer(0, grid.time(0), &state);
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        noise.fill(k, &state, &mut dw);
        let hits = stepper
            .advance(system, &mut state, t, dt, &dw)
            .map_err(|component| Error::NonFiniteState { step: k + 1, component })?;
        clamps.record(k + 1, hits);
        observer(k + 1, grid.time(k + 1), &state);
    }
    Ok(clamps)
}

/// Recorded trajectory on (a thinning of) a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    grid: TimeGrid,
    stride: usize,
    labels: Vec<String>,
    data: Vec<f64>,
    clamps: ClampStats,
}

impl SimPath {
    pub fn from_rows(grid: TimeGrid, stride: usize, labels: Vec<String>, data: Vec<f64>, clamps: ClampStats) -> Self {
        debug_assert!(stride >= 1 && data.len().is_multiple_of(labels.len().max(1)));
        Self {
            grid,
            stride,
            labels,
            data,
            clamps,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dimension()
    }

    /// Grid step index of row `r`.
    pub fn step_of(&self, r: usize) -> usize {
        r * self.stride
    }

    pub fn time(&self, r: usize) -> f64 {
        self.grid.time(self.step_of(r))
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows()).map(|r| self.time(r))
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let d = self.dimension();
        &self.data[r * d..(r + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dimension())
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows().map(|row| row[index]).collect()
    }

    pub fn column_by_label(&self, label: &str) -> Option<Vec<f64>> {
        self.column_index(label).map(|i| self.column(i))
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.n_rows() - 1)
    }

    pub fn clamps(&self) -> &ClampStats {
        &self.clamps
    }

    /// Time of the first clamp of component `index`, if any.
    pub fn first_clamp_time(&self, index: usize) -> Option<f64> {
        self.clamps
            .first
            .get(index)
            .copied()
            .flatten()
            .map(|k| self.grid.time(k))
    }
}

/// Full-resolution path driven by a materialised noise bundle.
pub fn simulate_path<S: SdeSystem + ?Sized>(
    system: &S,
    init: &[f64],
    grid: &TimeGrid,
    noise: &NoiseBundle,
) -> Result<SimPath> {
    record_path(system, init, grid, noise, 1)
}

/// Path keeping every `stride`-th grid point (plus the initial one).
pub fn record_path<S, N>(system: &S, init: &[f64], grid: &TimeGrid, noise: N, stride: usize) -> Result<SimPath>
where
    S: SdeSystem + ?Sized,
    N: NoiseSource,
{
    let stride = stride.max(1);
    let d = system.dimension();
    let mut data = Vec::with_capacity((grid.n_steps() / stride + 1) * d);
    let clamps = integrate(system, init, grid, noise, |k, _, x| {
        if k % stride == 0 {
            data.extend_from_slice(x);
        }
    })?;
    Ok(SimPath::from_rows(*grid, stride, system.labels(), data, clamps))
}

/// Runs `job(seed)` for seeds `base_seed + i`, `i < count`, in parallel.
/// Results come back in seed order.
pub fn replicate<T, F>(base_seed: u64, count: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|i| job(base_seed.wrapping_add(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear {
        drift_coef: f64,
        noise_coef: f64,
    }

    impl SdeSystem for Linear {
        fn dimension(&self) -> usize {
            1
        }
        fn noise_channels(&self) -> usize {
            1
        }
        fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
            out[0] = self.drift_coef * x[0];
        }
        fn diffusion(&self, _t: f64, x: &[f64], out: &mut [f64]) {
            out[0] = self.noise_coef * x[0];
        }
    }

    #[test]
    fn grid_points_are_exact_multiples() {
        let g = TimeGrid::new(1.0, 0.1, 1000).unwrap();
        assert_eq!(g.time(0), 1.0);
        assert_eq!(g.time(1000), 1.0 + 1000.0 * 0.1);
        assert!(TimeGrid::new(0.0, 0.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 0).is_err());
        assert!(TimeGrid::new(-1.0, 0.1, 1).is_err());
        assert_eq!(TimeGrid::with_horizon(1e-3, 500.0).unwrap().n_steps(), 500_000);
    }

    #[test]
    fn increments_are_deterministic() {
        let g = TimeGrid::new(0.0, 0.01, 10).unwrap();
        let a = brownian_increments(2, &g, 42).unwrap();
        let b = brownian_increments(2, &g, 42).unwrap();
        assert_eq!(a, b);
        let c = brownian_increments(2, &g, 43).unwrap();
        assert_ne!(a, c);
        assert_ne!(a.channel(0), a.channel(1));
        assert!(brownian_increments(0, &g, 1).is_err());
    }

    #[test]
    fn stream_matches_bundle() {
        let g = TimeGrid::new(0.0, 0.01, 50).unwrap();
        let bundle = brownian_increments(3, &g, 9).unwrap();
        let mut stream = BrownianStream::new(3, 0.01, 9);
        let mut dw = [0.0; 3];
        for k in 0..50 {
            stream.next_into(&mut dw);
            for c in 0..3 {
                assert_eq!(dw[c].to_bits(), bundle.increment(c, k).to_bits());
            }
        }
    }

    #[test]
    fn increment_moments() {
        let n = 1_000_000;
        let g = TimeGrid::new(0.0, 0.01, n).unwrap();
        let b = brownian_increments(1, &g, 7).unwrap();
        let xs = b.channel(0);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // 3σ/√N with σ = 0.1
        assert!(mean.abs() < 3.0 * 0.1 / (n as f64).sqrt());
        assert!((var / 0.01 - 1.0).abs() < 0.01);
    }

    #[test]
    fn identity_dynamics() {
        let sys = Linear {
            drift_coef: 0.0,
            noise_coef: 0.0,
        };
        let next = euler_maruyama_step(&sys, &[3.5], 0.0, 0.1, &[0.7]).unwrap();
        assert_eq!(next, vec![3.5]);
    }

    #[test]
    fn gbm_single_step() {
        let sys = Linear {
            drift_coef: 0.0,
            noise_coef: 0.5,
        };
        let next = euler_maruyama_step(&sys, &[1.0], 0.0, 0.01, &[0.1]).unwrap();
        assert!((next[0] - 1.05).abs() < 1e-15);
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = Linear {
            drift_coef: 1e308,
            noise_coef: 0.0,
        };
        let g = TimeGrid::new(0.0, 10.0, 5).unwrap();
        let noise = brownian_increments(1, &g, 1).unwrap();
        let err = simulate_path(&sys, &[1e10], &g, &noise).unwrap_err();
        assert_eq!(err, Error::NonFiniteState { step: 1, component: 0 });
    }

    #[test]
    fn short_noise_is_rejected() {
        let sys = Linear {
            drift_coef: 0.0,
            noise_coef: 1.0,
        };
        let g = TimeGrid::new(0.0, 0.1, 5).unwrap();
        let noise = brownian_increments(1, &TimeGrid::new(0.0, 0.1, 4).unwrap(), 1).unwrap();
        assert!(simulate_path(&sys, &[1.0], &g, &noise).is_err());
    }

    #[test]
    fn thinning_keeps_every_stride() {
        let sys = Linear {
            drift_coef: -1.0,
            noise_coef: 0.3,
        };
        let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let noise = brownian_increments(1, &g, 3).unwrap();
        let full = simulate_path(&sys, &[1.0], &g, &noise).unwrap();
        let thin = record_path(&sys, &[1.0], &g, &noise, 10).unwrap();
        assert_eq!(full.n_rows(), 101);
        assert_eq!(thin.n_rows(), 11);
        for r in 0..thin.n_rows() {
            assert_eq!(thin.row(r), full.row(10 * r));
            assert_eq!(thin.time(r), full.time(10 * r));
        }
    }

    #[test]
    fn replicate_preserves_seed_order() {
        let out = replicate(100, 16, |s| Ok(s * 2)).unwrap();
        assert_eq!(out, (100..116).map(|s| s * 2).collect::<Vec<_>>());
    }
}
