//! SIR-type epidemic systems with a hidden-status class.
//!
//! All population systems share the drift skeleton
//!
//! ```text
//! dS = [a1 − b1 S − I f̄ − I h̄] dt + σ1 S dB1
//! dI = [−b2 I + I f̄ + I h̄] dt + σ2 I dB2
//! ```
//!
//! and differ only in how the incidence terms `f̄`, `h̄` see the signal:
//! the true chain value α(t) ([`HiddenSystem`]), a frozen guess
//! ([`make_predicted_system`]) or the Wonham weights ([`FilteredSystem`]).

use crate::chain::{simulate_ctmc, ChainPath, ChainSpec};
use crate::error::{Error, Result};
use crate::filter::{project_in_place, FilterState};
use crate::sde::{
    clamp_positive, record_path, stream_rng, BrownianStream, ConstraintHits, FnNoise, SdeSystem, SimPath, TimeGrid,
    DEFAULT_POSITIVITY_FLOOR,
};
use rand::Rng;

/// Scalar model coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    a1: f64,
    b1: f64,
    b2: f64,
    sigma1: f64,
    sigma2: f64,
}

impl EpidemicParams {
    pub fn new(a1: f64, b1: f64, b2: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        for (name, v) in [("a1", a1), ("b1", b1), ("b2", b2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("sigma1", sigma1), ("sigma2", sigma2)] {
            if !(v.is_finite() && v != 0.0) {
                return Err(Error::param(name, format!("must be finite and nonzero, got {v}")));
            }
        }
        Ok(Self {
            a1,
            b1,
            b2,
            sigma1,
            sigma2,
        })
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `b1 + σ1²/2`
    pub fn c1(&self) -> f64 {
        self.b1 + 0.5 * self.sigma1 * self.sigma1
    }

    /// `b2 + σ2²/2`
    pub fn c2(&self) -> f64 {
        self.b2 + 0.5 * self.sigma2 * self.sigma2
    }
}

/// A coefficient that may depend on the signal value `x ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// Values at increasing nodes, linearly interpolated and held flat
    /// outside the node range.
    Table {
        nodes: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Coefficient {
    pub fn table(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != values.len() {
            return Err(Error::param(
                "table",
                "nodes and values must be non-empty and of equal length",
            ));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("table", "nodes must be strictly increasing"));
        }
        Ok(Coefficient::Table { nodes, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Table { nodes, values } => {
                let j = nodes.partition_point(|&n| n <= x);
                if j == 0 {
                    values[0]
                } else if j == nodes.len() {
                    values[j - 1]
                } else {
                    let (x0, x1) = (nodes[j - 1], nodes[j]);
                    let w = (x - x0) / (x1 - x0);
                    values[j - 1] + w * (values[j] - values[j - 1])
                }
            }
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Coefficient::Constant(c) => std::slice::from_ref(c),
            Coefficient::Table { values, .. } => values,
        }
    }

    fn is_nonnegative(&self) -> bool {
        self.values().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Per-capita rate families `r(x, s, i)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFunction {
    Zero,
    /// `β(x)·s`
    Bilinear {
        beta: Coefficient,
    },
    /// `β(x)·s / (k(x) + s)`
    Holling {
        beta: Coefficient,
        half_saturation: Coefficient,
    },
    /// `β(x)·s / (1 + m1(x)·s + m2(x)·i)`
    BeddingtonDeAngelis {
        beta: Coefficient,
        m1: Coefficient,
        m2: Coefficient,
    },
    /// `c(x)·s / (1 + s + i)`
    Saturating {
        coef: Coefficient,
    },
}

impl RateFunction {
    #[inline]
    pub fn eval(&self, x: f64, s: f64, i: f64) -> f64 {
        match self {
            RateFunction::Zero => 0.0,
            RateFunction::Bilinear { beta } => beta.eval(x) * s,
            RateFunction::Holling { beta, half_saturation } => beta.eval(x) * s / (half_saturation.eval(x) + s),
            RateFunction::BeddingtonDeAngelis { beta, m1, m2 } => {
                beta.eval(x) * s / (1.0 + m1.eval(x) * s + m2.eval(x) * i)
            }
            RateFunction::Saturating { coef } => coef.eval(x) * s / (1.0 + s + i),
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let ok = match self {
            RateFunction::Zero => true,
            RateFunction::Bilinear { beta } => beta.is_nonnegative(),
            RateFunction::Holling { beta, half_saturation } => {
                beta.is_nonnegative() && half_saturation.values().iter().all(|k| k.is_finite() && *k > 0.0)
            }
            RateFunction::BeddingtonDeAngelis { beta, m1, m2 } => {
                beta.is_nonnegative() && m1.is_nonnegative() && m2.is_nonnegative()
            }
            RateFunction::Saturating { coef } => coef.is_nonnegative(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(
                name,
                "coefficients must be finite and nonnegative (half-saturation > 0)",
            ))
        }
    }
}

/// The pair `(f, h)`: infection rate per infected and the hidden-class rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceModel {
    f: RateFunction,
    h: RateFunction,
}

impl IncidenceModel {
    pub fn new(f: RateFunction, h: RateFunction) -> Result<Self> {
        f.validate("f")?;
        h.validate("h")?;
        Ok(Self { f, h })
    }

    /// `f = m1(x)·s`, `h = m2(x)·s/(1 + s + i)`.
    pub fn example_family(m1: Coefficient, m2: Coefficient) -> Result<Self> {
        Self::new(
            RateFunction::Bilinear { beta: m1 },
            RateFunction::Saturating { coef: m2 },
        )
    }

    pub fn f(&self) -> &RateFunction {
        &self.f
    }

    pub fn h(&self) -> &RateFunction {
        &self.h
    }

    /// `(f(x, s, i), h(x, s, i))` without domain checks.
    #[inline]
    pub fn rates(&self, x: f64, s: f64, i: f64) -> (f64, f64) {
        (self.f.eval(x, s, i), self.h.eval(x, s, i))
    }

    /// Sampled check of the standing assumptions on `[0,1] × [0, box]²`:
    /// vanishing at `s = 0`, nonnegativity, monotonicity in `s` at `i = 0`,
    /// and a finite Lipschitz estimate. Returns the estimated constants
    /// `(L_f, L_h)`.
    pub fn check_assumptions(&self, box_size: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
        let mut rng = stream_rng(seed, 0);
        let mut lf = 0.0_f64;
        let mut lh = 0.0_f64;
        for _ in 0..samples {
            let x = rng.random::<f64>();
            let s = box_size * rng.random::<f64>();
            let i = box_size * rng.random::<f64>();
            let (f0, h0) = self.rates(x, 0.0, i);
            if f0 != 0.0 || h0 != 0.0 {
                return Err(Error::AssumptionViolated(format!(
                    "rates do not vanish at s = 0 (x = {x}, i = {i})"
                )));
            }
            let (f, h) = self.rates(x, s, i);
            if !(f >= 0.0 && h >= 0.0) {
                return Err(Error::AssumptionViolated(format!("negative rate at ({x}, {s}, {i})")));
            }
            let ds = 1e-3 * box_size * rng.random::<f64>();
            let (f_lo, h_lo) = self.rates(x, s, 0.0);
            let (f_hi, h_hi) = self.rates(x, s + ds, 0.0);
            if f_hi < f_lo || h_hi < h_lo {
                return Err(Error::AssumptionViolated(format!(
                    "rates decrease in s at x = {x}, s = {s}"
                )));
            }
            let (x2, s2, i2) = (
                rng.random::<f64>(),
                box_size * rng.random::<f64>(),
                box_size * rng.random::<f64>(),
            );
            let (f2, h2) = self.rates(x2, s2, i2);
            let dist = (x - x2).abs() + (s - s2).abs() + (i - i2).abs();
            if dist > 0.0 {
                lf = lf.max((f - f2).abs() / dist);
                lh = lh.max((h - h2).abs() / dist);
            }
        }
        if !(lf.is_finite() && lh.is_finite()) {
            return Err(Error::AssumptionViolated("Lipschitz estimate is not finite".into()));
        }
        Ok((lf, lh))
    }

    /// Whether `f(x, y, 0)` and `h(x, y, 0)` are non-decreasing in `x`,
    /// checked on a grid of `x` values for each sampled `y`.
    pub fn is_monotone_in_signal(&self, ys: &[f64], x_nodes: usize) -> bool {
        let xs: Vec<f64> = (0..=x_nodes).map(|j| j as f64 / x_nodes as f64).collect();
        ys.iter().all(|&y| {
            xs.windows(2).all(|w| {
                let (f0, h0) = self.rates(w[0], y, 0.0);
                let (f1, h1) = self.rates(w[1], y, 0.0);
                f1 >= f0 && h1 >= h0
            })
        })
    }
}

/// Checked evaluation of `(f(x, s, i), h(x, s, i))`.
pub fn incidence_eval(model: &IncidenceModel, x: f64, s: f64, i: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(format!("signal value {x} outside [0, 1]")));
    }
    if !(s >= 0.0) || !(i >= 0.0) {
        return Err(Error::OutOfDomain(format!(
            "densities must be nonnegative, got s = {s}, i = {i}"
        )));
    }
    Ok(model.rates(x, s, i))
}

/// Population state `(S, I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicState {
    pub s: f64,
    pub i: f64,
}

impl EpidemicState {
    pub fn new(s: f64, i: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0 && i.is_finite() && i >= 0.0) {
            return Err(Error::param(
                "state",
                format!("(S, I) = ({s}, {i}) must be finite and nonnegative"),
            ));
        }
        Ok(Self { s, i })
    }
}

#[inline]
fn skeleton(p: &EpidemicParams, s: f64, i: f64, incidence: f64, out: &mut [f64]) {
    out[0] = p.a1 - p.b1 * s - incidence;
    out[1] = -p.b2 * i + incidence;
}

#[inline]
fn population_diffusion(p: &EpidemicParams, x: &[f64], dim: usize, out: &mut [f64]) {
    out[0] = p.sigma1 * x[0];
    out[dim + 1] = p.sigma2 * x[1];
}

fn clamp_population(x: &mut [f64], floor: f64) -> ConstraintHits {
    let mut hits = ConstraintHits::default();
    if clamp_positive(&mut x[0], floor) {
        hits.mark(0);
    }
    if clamp_positive(&mut x[1], floor) {
        hits.mark(1);
    }
    hits
}

#[derive(Debug, Clone)]
enum Signal {
    Path { path: ChainPath, values: Vec<f64> },
    Constant(f64),
}

impl Signal {
    #[inline]
    fn at(&self, t: f64) -> f64 {
        match self {
            Signal::Path { path, values } => values[path.state_at(t)],
            Signal::Constant(m) => *m,
        }
    }
}

/// `(S, I)` driven by a signal value: the realised chain or a fixed guess.
#[derive(Debug, Clone)]
pub struct HiddenSystem {
    params: EpidemicParams,
    model: IncidenceModel,
    signal: Signal,
    floor: f64,
}

impl HiddenSystem {
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn signal_at(&self, t: f64) -> f64 {
        self.signal.at(t)
    }
}

impl SdeSystem for HiddenSystem {
    fn dimension(&self) -> usize {
        2
    }

    fn noise_channels(&self) -> usize {
        2
    }

    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let alpha = self.signal.at(t);
        let (s, i) = (x[0], x[1]);
        let (f, h) = self.model.rates(alpha, s, i);
        skeleton(&self.params, s, i, i * f + alpha * i * h, out);
    }

    fn diffusion(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        population_diffusion(&self.params, x, 2, out);
    }

    fn constrain(&self, x: &mut [f64]) -> ConstraintHits {
        clamp_population(x, self.floor)
    }

    fn labels(&self) -> Vec<String> {
        vec!["S".into(), "I".into()]
    }
}

/// System driven by the realised hidden chain path.
pub fn make_hidden_system(
    params: &EpidemicParams,
    model: &IncidenceModel,
    spec: &ChainSpec,
    chain_path: &ChainPath,
) -> Result<HiddenSystem> {
    if chain_path.segment_states().iter().any(|&k| k >= spec.len()) {
        return Err(Error::param("chain_path", "state index outside the chain"));
    }
    Ok(HiddenSystem {
        params: *params,
        model: model.clone(),
        signal: Signal::Path {
            path: chain_path.clone(),
            values: spec.states().to_vec(),
        },
        floor: DEFAULT_POSITIVITY_FLOOR,
    })
}

/// System with the signal frozen at the guess `m`.
pub fn make_predicted_system(params: &EpidemicParams, model: &IncidenceModel, m: f64) -> Result<HiddenSystem> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::OutOfDomain(format!("predicted signal value {m} outside [0, 1]")));
    }
    Ok(HiddenSystem {
        params: *params,
        model: model.clone(),
        signal: Signal::Constant(m),
        floor: DEFAULT_POSITIVITY_FLOOR,
    })
}

/// `(S, I, e_1..e_n)` with incidence averaged over the filter weights and the
/// weights following the innovation form of the Wonham filter. Channels are
/// `B1`, `B2`, `W̄` in that order.
#[derive(Debug, Clone)]
pub struct FilteredSystem {
    params: EpidemicParams,
    model: IncidenceModel,
    spec: ChainSpec,
    floor: f64,
}

impl FilteredSystem {
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    /// `(Σ f(m_k,s,i) e_k, Σ m_k h(m_k,s,i) e_k)`
    pub fn averaged_rates(&self, s: f64, i: f64, e: &[f64]) -> (f64, f64) {
        let mut f_bar = 0.0;
        let mut h_bar = 0.0;
        for (&m, &w) in self.spec.states().iter().zip(e) {
            let (f, h) = self.model.rates(m, s, i);
            f_bar += f * w;
            h_bar += m * h * w;
        }
        (f_bar, h_bar)
    }
}

impl SdeSystem for FilteredSystem {
    fn dimension(&self) -> usize {
        2 + self.spec.len()
    }

    fn noise_channels(&self) -> usize {
        3
    }

    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let (s, i) = (x[0], x[1]);
        let e = &x[2..];
        let (f_bar, h_bar) = self.averaged_rates(s, i, e);
        skeleton(&self.params, s, i, i * f_bar + i * h_bar, out);
        for k in 0..e.len() {
            out[2 + k] = (0..e.len()).map(|j| self.spec.rate(j, k) * e[j]).sum();
        }
    }

    fn diffusion(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let dim = self.dimension();
        population_diffusion(&self.params, x, dim, out);
        let e = &x[2..];
        let g = self.spec.obs_map();
        let g_bar: f64 = g.iter().zip(e).map(|(a, b)| a * b).sum();
        for k in 0..e.len() {
            out[2 * dim + 2 + k] = (g[k] - g_bar) * e[k];
        }
    }

    fn constrain(&self, x: &mut [f64]) -> ConstraintHits {
        let mut hits = clamp_population(x, self.floor);
        let e_hits = project_in_place(&mut x[2..]);
        hits.0 |= e_hits.0 << 2;
        hits
    }

    fn labels(&self) -> Vec<String> {
        let mut l = vec!["S".to_string(), "I".to_string()];
        l.extend((1..=self.spec.len()).map(|k| format!("e_{k}")));
        l
    }
}

pub fn make_filtered_system(params: &EpidemicParams, model: &IncidenceModel, spec: &ChainSpec) -> FilteredSystem {
    FilteredSystem {
        params: *params,
        model: model.clone(),
        spec: spec.clone(),
        floor: DEFAULT_POSITIVITY_FLOOR,
    }
}

/// Susceptible dynamics with no infection: `dφ = (a1 − b1 φ) dt + σ1 φ dB1`.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySystem {
    a1: f64,
    b1: f64,
    sigma1: f64,
    floor: f64,
}

impl BoundarySystem {
    pub fn new(a1: f64, b1: f64, sigma1: f64) -> Self {
        Self {
            a1,
            b1,
            sigma1,
            floor: DEFAULT_POSITIVITY_FLOOR,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }
}

impl SdeSystem for BoundarySystem {
    fn dimension(&self) -> usize {
        1
    }

    fn noise_channels(&self) -> usize {
        1
    }

    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.a1 - self.b1 * x[0];
    }

    fn diffusion(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.sigma1 * x[0];
    }

    fn constrain(&self, x: &mut [f64]) -> ConstraintHits {
        let mut hits = ConstraintHits::default();
        if clamp_positive(&mut x[0], self.floor) {
            hits.mark(0);
        }
        hits
    }

    fn labels(&self) -> Vec<String> {
        vec!["phi".into()]
    }
}

pub fn make_boundary_system(params: &EpidemicParams) -> BoundarySystem {
    BoundarySystem::new(params.a1, params.b1, params.sigma1)
}

/// Initial condition for a joint hidden/filtered run.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub state: EpidemicState,
    pub chain_index: usize,
    pub filter: FilterState,
}

/// Hidden truth, its observations and the filter-driven system on one grid.
#[derive(Debug, Clone)]
pub struct CoSimulation {
    pub alpha: ChainPath,
    /// `Δy_k`, one per grid step.
    pub observation: Vec<f64>,
    pub hidden: SimPath,
    pub filtered: SimPath,
}

/// Runs the hidden system and the filtered system side by side. Both share
/// `B1`, `B2`; the filter is driven by the observations of the hidden chain
/// (`W̄` is recomputed each step as `Δy − ḡ(e)·dt`).
pub fn cosimulate(
    params: &EpidemicParams,
    model: &IncidenceModel,
    spec: &ChainSpec,
    init: &InitialCondition,
    grid: &TimeGrid,
    seed: u64,
    stride: usize,
    floor: f64,
) -> Result<CoSimulation> {
    if init.filter.weights().len() != spec.len() {
        return Err(Error::param("filter", "initial weights do not match the chain"));
    }
    let alpha = simulate_ctmc(spec, init.chain_index, grid, seed)?;
    let hidden_sys = make_hidden_system(params, model, spec, &alpha)?.with_floor(floor);
    let s0 = [init.state.s, init.state.i];
    let hidden = record_path(&hidden_sys, &s0, grid, BrownianStream::new(2, grid.dt(), seed), stride)?;

    let filtered_sys = make_filtered_system(params, model, spec).with_floor(floor);
    let alpha_grid = alpha.on_grid(grid);
    let g = spec.obs_map().to_vec();
    let dt = grid.dt();
    let mut stream = BrownianStream::new(3, dt, seed);
    let mut observation = Vec::with_capacity(grid.n_steps());
    let noise = FnNoise::new(3, |k: usize, x: &[f64], dw: &mut [f64]| {
        stream.next_into(dw);
        let dy = g[alpha_grid[k]] * dt + dw[2];
        let g_bar: f64 = g.iter().zip(&x[2..]).map(|(a, b)| a * b).sum();
        dw[2] = dy - g_bar * dt;
        observation.push(dy);
    });
    let mut x0 = s0.to_vec();
    x0.extend_from_slice(init.filter.weights());
    let filtered = record_path(&filtered_sys, &x0, grid, noise, stride)?;
    Ok(CoSimulation {
        alpha,
        observation,
        hidden,
        filtered,
    })
}
