//! Finite-state continuous-time Markov signal, its stationary law and the
//! noisy observation channel `dy = g(α) dt + dW`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::sde::{stream_rng, TimeGrid, CHAIN_STREAM};

const ROW_SUM_TOL: f64 = 1e-9;
const STATIONARY_RESIDUAL_TOL: f64 = 1e-12;

/// State values `m_k`, generator `Q` and observation values `g_k = g(m_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    states: Vec<f64>,
    generator: Vec<Vec<f64>>,
    obs_map: Vec<f64>,
}

impl ChainSpec {
    pub fn new(states: Vec<f64>, generator: Vec<Vec<f64>>, obs_map: Vec<f64>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidChain("at least one state is required".into()));
        }
        if generator.len() != n || generator.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidChain(format!("generator must be {n}x{n}")));
        }
        if obs_map.len() != n {
            return Err(Error::InvalidChain(format!("observation map needs {n} values")));
        }
        if states.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::InvalidChain("state values must lie in [0, 1]".into()));
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidChain("state values must be strictly increasing".into()));
        }
        if obs_map.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidChain("observation values must be finite".into()));
        }
        for (i, row) in generator.iter().enumerate() {
            let mut scale = 0.0_f64;
            for (k, &q) in row.iter().enumerate() {
                if !q.is_finite() {
                    return Err(Error::InvalidChain(format!("q[{i}][{k}] is not finite")));
                }
                if i != k && q < 0.0 {
                    return Err(Error::InvalidChain(format!(
                        "off-diagonal rate q[{i}][{k}] = {q} is negative"
                    )));
                }
                scale = scale.max(q.abs());
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > ROW_SUM_TOL * scale.max(1.0) {
                return Err(Error::InvalidChain(format!("row {i} sums to {sum}, not 0")));
            }
        }
        Ok(Self {
            states,
            generator,
            obs_map,
        })
    }

    /// Two states `{0, 1}` with `Q = [[-q1, q1], [q2, -q2]]` and `g(x) = x`.
    pub fn two_state(q1: f64, q2: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![vec![-q1, q1], vec![q2, -q2]], vec![0.0, 1.0])
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn generator(&self) -> &[Vec<f64>] {
        &self.generator
    }

    #[inline]
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.generator[from][to]
    }

    pub fn obs_map(&self) -> &[f64] {
        &self.obs_map
    }

    /// Index of the state whose value equals `x` (to 1e-12).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.states.iter().position(|&m| (m - x).abs() <= 1e-12)
    }

    /// True when the positive-rate graph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for k in 0..n {
                    let q = if forward {
                        self.generator[i][k]
                    } else {
                        self.generator[k][i]
                    };
                    if k != i && q > 0.0 && !seen[k] {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// Invariant law `μ*` with `μ* Q = 0`, `Σ μ*_k = 1`.
///
/// Solved directly from `Qᵀ μ = 0` augmented with the normalisation row, in
/// least-squares form so that the (n+1)×n system is used as is.
pub fn stationary_distribution(spec: &ChainSpec) -> Result<Vec<f64>> {
    if !spec.is_irreducible() {
        return Err(Error::ReducibleChain);
    }
    let n = spec.len();
    let a = DMatrix::from_fn(n + 1, n, |r, c| if r < n { spec.rate(c, r) } else { 1.0 });
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let normal = a.transpose() * &a;
    let b = a.transpose() * rhs;
    let mut mu = normal
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidChain("singular stationary system".into()))?;
    // one step of iterative refinement
    let resid = &b - &normal * &mu;
    if let Some(corr) = normal.lu().solve(&resid) {
        mu += corr;
    }
    let total: f64 = mu.iter().sum();
    let mu: Vec<f64> = mu.iter().map(|v| v / total).collect();
    if mu.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidChain("stationary law has non-positive mass".into()));
    }
    let residual = stationary_residual(spec, &mu);
    let scale = spec.generator.iter().flatten().fold(1.0_f64, |acc, q| acc.max(q.abs()));
    if residual > STATIONARY_RESIDUAL_TOL * scale {
        return Err(Error::InvalidChain(format!(
            "stationary residual {residual:e} too large"
        )));
    }
    Ok(mu)
}

/// `‖μ Q‖∞`.
pub fn stationary_residual(spec: &ChainSpec, mu: &[f64]) -> f64 {
    (0..spec.len())
        .map(|k| (0..spec.len()).map(|i| mu[i] * spec.rate(i, k)).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// Piecewise-constant chain trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    t_end: f64,
    /// Start time of each segment; the first equals the path's t0.
    jump_times: Vec<f64>,
    states: Vec<usize>,
}

impl ChainPath {
    /// A path that never leaves `index`.
    pub fn constant(index: usize, t0: f64, t_end: f64) -> Self {
        Self {
            t_end,
            jump_times: vec![t0],
            states: vec![index],
        }
    }

    pub fn t0(&self) -> f64 {
        self.jump_times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn segment_states(&self) -> &[usize] {
        &self.states
    }

    pub fn n_jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// State index in force at time `t` (right-continuous path).
    pub fn state_at(&self, t: f64) -> usize {
        let seg = self.jump_times.partition_point(|&s| s <= t);
        self.states[seg.saturating_sub(1)]
    }

    /// State index at every grid point (left endpoint of each step).
    pub fn on_grid(&self, grid: &TimeGrid) -> Vec<usize> {
        let mut out = Vec::with_capacity(grid.n_points());
        let mut seg = 0;
        for k in 0..grid.n_points() {
            let t = grid.time(k);
            while seg + 1 < self.jump_times.len() && self.jump_times[seg + 1] <= t {
                seg += 1;
            }
            out.push(self.states[seg]);
        }
        out
    }

    /// Fraction of `[t0, t_end]` spent in each state.
    pub fn occupation(&self, n_states: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n_states];
        for (i, &s) in self.states.iter().enumerate() {
            let start = self.jump_times[i];
            let end = self.jump_times.get(i + 1).copied().unwrap_or(self.t_end);
            occ[s] += end - start;
        }
        let total = self.t_end - self.t0();
        occ.iter_mut().for_each(|v| *v /= total);
        occ
    }
}

/// Exact (Gillespie) simulation of the chain over the grid's time span.
pub fn simulate_ctmc(spec: &ChainSpec, init_index: usize, grid: &TimeGrid, seed: u64) -> Result<ChainPath> {
    if init_index >= spec.len() {
        return Err(Error::param(
            "init_index",
            format!("{init_index} out of range for {} states", spec.len()),
        ));
    }
    if !spec.is_irreducible() {
        return Err(Error::ReducibleChain);
    }
    let mut rng = stream_rng(seed, CHAIN_STREAM);
    let t_end = grid.end();
    let mut t = grid.t0();
    let mut current = init_index;
    let mut jump_times = vec![t];
    let mut states = vec![current];
    loop {
        let exit_rate = -spec.rate(current, current);
        if exit_rate <= 0.0 {
            break;
        }
        t += Exp::new(exit_rate).expect("positive rate").sample(&mut rng);
        if t > t_end {
            break;
        }
        let mut u = rng.random::<f64>() * exit_rate;
        let mut next = current;
        for k in 0..spec.len() {
            let q = spec.rate(current, k);
            if k == current || q <= 0.0 {
                continue;
            }
            next = k;
            if u < q {
                break;
            }
            u -= q;
        }
        current = next;
        jump_times.push(t);
        states.push(current);
    }
    Ok(ChainPath {
        t_end,
        jump_times,
        states,
    })
}

/// Observation increments `Δy_k = g(α(t_k))·dt + ΔW_k` for `k < n_steps`.
pub fn observation_path(alpha: &ChainPath, spec: &ChainSpec, grid: &TimeGrid, dw: &[f64]) -> Result<Vec<f64>> {
    if dw.len() < grid.n_steps() {
        return Err(Error::param(
            "noise",
            format!("{} increments for {} steps", dw.len(), grid.n_steps()),
        ));
    }
    let dt = grid.dt();
    let on_grid = alpha.on_grid(grid);
    Ok((0..grid.n_steps())
        .map(|k| spec.obs_map[on_grid[k]] * dt + dw[k])
        .collect())
}

/// Cumulative observation `y(t_k)` from its increments, with `y(0) = 0`.
pub fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    y.push(acc);
    for d in increments {
        acc += d;
        y.push(acc);
    }
    y
}
