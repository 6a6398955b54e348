//! Statistics on simulated trajectories: growth rates of `I`, time averages,
//! moment stability, occupation histograms and filter ergodicity checks.

use crate::chain::{stationary_distribution, ChainSpec};
use crate::epidemic::EpidemicParams;
use crate::error::{Error, Result};
use crate::sde::SimPath;

/// Minimum number of grid points in a regression window.
pub const MIN_WINDOW_POINTS: usize = 100;

/// Number of batches used for the slope standard error.
const SLOPE_BATCHES: usize = 20;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

pub fn pairwise_mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// Sample mean and standard deviation (n − 1 denominator).
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = pairwise_mean(v);
    if v.len() < 2 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
    (m, (pairwise_sum(&sq) / (v.len() - 1) as f64).sqrt())
}

/// Fitted exponential rate of `I(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    /// Time at which the path was cut because `I` hit the positivity clamp
    /// or left the normal floating-point range.
    pub truncated_at: Option<f64>,
}

impl LyapunovEstimate {
    /// Across-path summary: mean slope with standard error `sd/√n`.
    pub fn pool(estimates: &[LyapunovEstimate]) -> Result<LyapunovEstimate> {
        if estimates.is_empty() {
            return Err(Error::InsufficientData("no estimates to pool".into()));
        }
        let slopes: Vec<f64> = estimates.iter().map(|e| e.slope).collect();
        let (mean, sd) = mean_sd(&slopes);
        let start = estimates.iter().map(|e| e.window.0).fold(f64::NEG_INFINITY, f64::max);
        let end = estimates.iter().map(|e| e.window.1).fold(f64::INFINITY, f64::min);
        Ok(LyapunovEstimate {
            slope: mean,
            stderr: sd / (estimates.len() as f64).sqrt(),
            window: (start, end),
            n_points: estimates.iter().map(|e| e.n_points).sum(),
            truncated_at: None,
        })
    }
}

fn infected_column(path: &SimPath) -> Result<usize> {
    path.column_index("I")
        .ok_or_else(|| Error::InsufficientData("path has no `I` column".into()))
}

/// Least-squares slope of `ln I(t)` on `[burn_in, T]`.
///
/// The window ends before the first clamp of `I` or the first value below
/// the smallest normal `f64`. The standard error comes from batch means of
/// the slope over consecutive sub-windows, which accounts for the strong
/// serial correlation of the residuals.
pub fn lyapunov_slope(path: &SimPath, burn_in: f64) -> Result<LyapunovEstimate> {
    lyapunov_slope_of(path, infected_column(path)?, burn_in)
}

pub fn lyapunov_slope_of(path: &SimPath, column: usize, burn_in: f64) -> Result<LyapunovEstimate> {
    let clamp_time = path.first_clamp_time(column);
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    let mut truncated_at = None;
    for r in 0..path.n_rows() {
        let t = path.time(r);
        let v = path.row(r)[column];
        if clamp_time.is_some_and(|c| t >= c) || !(v >= f64::MIN_POSITIVE) || !v.is_finite() {
            truncated_at = Some(t);
            break;
        }
        if t >= burn_in {
            ts.push(t);
            ys.push(v.ln());
        }
    }
    if ts.len() < MIN_WINDOW_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points in the regression window, need {MIN_WINDOW_POINTS}",
            ts.len()
        )));
    }
    let slope = ols_slope(&ts, &ys);
    let batch = ts.len() / SLOPE_BATCHES;
    let batch_slopes: Vec<f64> = (0..SLOPE_BATCHES)
        .map(|b| {
            let (i0, i1) = (b * batch, (b + 1) * batch - 1);
            (ys[i1] - ys[i0]) / (ts[i1] - ts[i0])
        })
        .collect();
    let (_, sd) = mean_sd(&batch_slopes);
    // An OLS slope of a random walk has 6/5 the variance of its endpoint slope.
    let stderr = (1.2f64).sqrt() * sd / (SLOPE_BATCHES as f64).sqrt();
    Ok(LyapunovEstimate {
        slope,
        stderr,
        window: (ts[0], *ts.last().unwrap()),
        n_points: ts.len(),
        truncated_at,
    })
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = pairwise_mean(x);
    let my = pairwise_mean(y);
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let sxx = pairwise_sum(&sxx);
    if sxx == 0.0 {
        0.0
    } else {
        pairwise_sum(&sxy) / sxx
    }
}

fn window_rows(path: &SimPath, burn_in: f64) -> Result<Vec<usize>> {
    let rows: Vec<usize> = (0..path.n_rows()).filter(|&r| path.time(r) >= burn_in).collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!(
            "path ends at {} before the burn-in {burn_in}",
            path.grid().end()
        )));
    }
    Ok(rows)
}

/// Time average of one column over `[burn_in, T]`.
pub fn time_average(path: &SimPath, column: usize, burn_in: f64) -> Result<f64> {
    let vals: Vec<f64> = window_rows(path, burn_in)?
        .into_iter()
        .map(|r| path.row(r)[column])
        .collect();
    Ok(pairwise_mean(&vals))
}

/// `(S̄, Ī)` over `[burn_in, T]`.
pub fn permanence_means(path: &SimPath, burn_in: f64) -> Result<(f64, f64)> {
    let s = path
        .column_index("S")
        .ok_or_else(|| Error::InsufficientData("path has no `S` column".into()))?;
    let i = infected_column(path)?;
    Ok((time_average(path, s, burn_in)?, time_average(path, i, burn_in)?))
}

/// Means of one column over the four quarters of `[burn_in, T]`.
pub fn quarter_means(path: &SimPath, column: usize, burn_in: f64) -> Result<[f64; 4]> {
    let rows = window_rows(path, burn_in)?;
    if rows.len() < 4 {
        return Err(Error::InsufficientData("fewer than four points after burn-in".into()));
    }
    let q = rows.len() / 4;
    let mut out = [0.0; 4];
    for (j, slot) in out.iter_mut().enumerate() {
        let end = if j == 3 { rows.len() } else { (j + 1) * q };
        let vals: Vec<f64> = rows[j * q..end].iter().map(|&r| path.row(r)[column]).collect();
        *slot = pairwise_mean(&vals);
    }
    Ok(out)
}

/// Pooled trend of quarter means across paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendReport {
    /// Pooled means per quarter.
    pub quarters: [f64; 4],
    /// Mean per-path slope of the quarter means against the quarter index.
    pub slope: f64,
    pub stderr: f64,
    /// Slope is negative by more than three standard errors.
    pub downward: bool,
}

pub fn quarter_trend(per_path: &[[f64; 4]]) -> Result<TrendReport> {
    if per_path.len() < 2 {
        return Err(Error::InsufficientData("need at least two paths for a trend".into()));
    }
    let xs = [0.0, 1.0, 2.0, 3.0];
    let slopes: Vec<f64> = per_path.iter().map(|q| ols_slope(&xs, q)).collect();
    let (slope, sd) = mean_sd(&slopes);
    let stderr = sd / (slopes.len() as f64).sqrt();
    let mut quarters = [0.0; 4];
    for (j, slot) in quarters.iter_mut().enumerate() {
        let col: Vec<f64> = per_path.iter().map(|q| q[j]).collect();
        *slot = pairwise_mean(&col);
    }
    Ok(TrendReport {
        quarters,
        slope,
        stderr,
        downward: slope + 3.0 * stderr < 0.0,
    })
}

/// Running estimate of `E (S + I)^{1+p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub p: f64,
    /// Averages over the four quarters of the horizon.
    pub quarters: [f64; 4],
    /// Relative change between the last two quarters.
    pub relative_drift: f64,
    pub bounded: bool,
}

/// Largest admissible exponent `2κ/σ*²` with `κ = min(b1, b2)` and
/// `σ*² = max(σ1², σ2²)`.
pub fn moment_exponent_limit(params: &EpidemicParams) -> f64 {
    let kappa = params.b1().min(params.b2());
    let s2 = (params.sigma1() * params.sigma1()).max(params.sigma2() * params.sigma2());
    2.0 * kappa / s2
}

/// Checks that the ensemble moment `E (S + I)^{1+p}` is not drifting at the
/// end of the horizon (relative change under 10% between the last quarters).
pub fn moment_check(paths: &[SimPath], p: f64, params: &EpidemicParams) -> Result<MomentCheck> {
    let limit = moment_exponent_limit(params);
    if !(p > 0.0 && p < limit) {
        return Err(Error::param("p", format!("must lie in (0, {limit}), got {p}")));
    }
    let first = paths
        .first()
        .ok_or_else(|| Error::InsufficientData("no paths".into()))?;
    let n_rows = first.n_rows();
    if n_rows < 5 || paths.iter().any(|q| q.n_rows() != n_rows) {
        return Err(Error::InsufficientData(
            "paths must share a grid with at least five points".into(),
        ));
    }
    let (si, ii) = (
        first.column_index("S").unwrap_or(0),
        first.column_index("I").unwrap_or(1),
    );
    let ensemble: Vec<f64> = (1..n_rows)
        .map(|r| {
            let vals: Vec<f64> = paths
                .iter()
                .map(|q| {
                    let row = q.row(r);
                    (row[si] + row[ii]).powf(1.0 + p)
                })
                .collect();
            pairwise_mean(&vals)
        })
        .collect();
    let q = ensemble.len() / 4;
    let mut quarters = [0.0; 4];
    for (j, slot) in quarters.iter_mut().enumerate() {
        let end = if j == 3 { ensemble.len() } else { (j + 1) * q };
        *slot = pairwise_mean(&ensemble[j * q..end]);
    }
    let relative_drift = (quarters[3] - quarters[2]).abs() / quarters[2].abs().max(f64::MIN_POSITIVE);
    Ok(MomentCheck {
        p,
        quarters,
        relative_drift,
        bounded: relative_drift < 0.1 && quarters.iter().all(|v| v.is_finite()),
    })
}

/// Equal-width bins on `[lo, hi]`; samples outside are counted in the edge
/// bins so the histogram always carries all the mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || bins == 0 {
            return Err(Error::param(
                "bins",
                format!("need lo < hi and bins > 0, got [{lo}, {hi}] x {bins}"),
            ));
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn index(&self, x: f64) -> usize {
        let j = ((x - self.lo) / self.width()).floor();
        if j.is_nan() || j < 0.0 {
            0
        } else {
            (j as usize).min(self.bins - 1)
        }
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins).map(|j| self.lo + j as f64 * self.width()).collect()
    }

    pub fn centres(&self) -> Vec<f64> {
        (0..self.bins)
            .map(|j| self.lo + (j as f64 + 0.5) * self.width())
            .collect()
    }

    /// Bin probabilities of a law given its CDF, with the tails folded into
    /// the edge bins.
    pub fn masses_from_cdf<F: Fn(f64) -> f64>(&self, cdf: F) -> Vec<f64> {
        let e = self.edges();
        (0..self.bins)
            .map(|j| {
                let lo = if j == 0 { 0.0 } else { cdf(e[j]) };
                let hi = if j + 1 == self.bins { 1.0 } else { cdf(e[j + 1]) };
                hi - lo
            })
            .collect()
    }
}

/// One-dimensional occupation histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram1d {
    spec: BinSpec,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram1d {
    pub fn new(spec: BinSpec) -> Self {
        Self {
            spec,
            counts: vec![0; spec.bins],
            total: 0,
        }
    }

    pub fn add(&mut self, x: f64) {
        self.counts[self.spec.index(x)] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &Histogram1d) {
        debug_assert_eq!(self.spec, other.spec);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn spec(&self) -> &BinSpec {
        &self.spec
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn masses(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total.max(1) as f64)
            .collect()
    }

    pub fn density(&self) -> Vec<f64> {
        let w = self.spec.width();
        self.masses().into_iter().map(|m| m / w).collect()
    }

    /// `Σ_j |p̂_j − p_j|` against reference bin probabilities.
    pub fn l1_distance(&self, reference: &[f64]) -> f64 {
        let d: Vec<f64> = self
            .masses()
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .collect();
        pairwise_sum(&d)
    }
}

/// Pooled 2-D histogram of `(S, I)`, normalised to a density.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationHistogram {
    pub s_bins: BinSpec,
    pub i_bins: BinSpec,
    /// Row-major `[s][i]` density values.
    pub density: Vec<f64>,
    pub samples: usize,
}

impl OccupationHistogram {
    pub fn at(&self, s: usize, i: usize) -> f64 {
        self.density[s * self.i_bins.bins + i]
    }

    pub fn cell_area(&self) -> f64 {
        self.s_bins.width() * self.i_bins.width()
    }

    /// Integral of the density, 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.density) * self.cell_area()
    }

    /// Marginal probabilities of the `S` bins.
    pub fn s_marginal(&self) -> Vec<f64> {
        let a = self.cell_area();
        (0..self.s_bins.bins)
            .map(|s| pairwise_sum(&self.density[s * self.i_bins.bins..(s + 1) * self.i_bins.bins]) * a)
            .collect()
    }

    /// Probability of the lowest `I` bin row.
    pub fn bottom_row_mass(&self) -> f64 {
        let a = self.cell_area();
        (0..self.s_bins.bins).map(|s| self.at(s, 0) * a).sum()
    }
}

pub fn occupation_histogram(
    paths: &[SimPath],
    s_bins: BinSpec,
    i_bins: BinSpec,
    burn_in: f64,
) -> Result<OccupationHistogram> {
    let mut counts = vec![0u64; s_bins.bins * i_bins.bins];
    let mut samples = 0usize;
    for path in paths {
        let (sc, ic) = (path.column_index("S").unwrap_or(0), path.column_index("I").unwrap_or(1));
        for r in 0..path.n_rows() {
            if path.time(r) < burn_in {
                continue;
            }
            let row = path.row(r);
            counts[s_bins.index(row[sc]) * i_bins.bins + i_bins.index(row[ic])] += 1;
            samples += 1;
        }
    }
    if samples == 0 {
        return Err(Error::InsufficientData("no samples after burn-in".into()));
    }
    let norm = samples as f64 * s_bins.width() * i_bins.width();
    Ok(OccupationHistogram {
        s_bins,
        i_bins,
        density: counts.into_iter().map(|c| c as f64 / norm).collect(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Extinction,
    Permanence,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Extinction => "Extinction",
            Verdict::Permanence => "Permanence",
            Verdict::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictRecord {
    pub verdict: Verdict,
    pub lambda: f64,
    pub slope: f64,
    pub stderr: f64,
    /// `(slope − λ)/stderr`
    pub z: f64,
}

/// Extinction when slope and λ are both negative and within three standard
/// errors; permanence when λ > 0 and the time-averaged `I` clears `floor`.
pub fn extinction_verdict(estimate: &LyapunovEstimate, lambda: f64, i_mean: Option<f64>, floor: f64) -> VerdictRecord {
    let z = if estimate.stderr > 0.0 {
        (estimate.slope - lambda) / estimate.stderr
    } else if estimate.slope == lambda {
        0.0
    } else {
        f64::INFINITY
    };
    let verdict = if estimate.slope < 0.0 && lambda < 0.0 && z.abs() <= 3.0 {
        Verdict::Extinction
    } else if lambda > 0.0 && i_mean.is_some_and(|m| m > floor) {
        Verdict::Permanence
    } else {
        Verdict::Indeterminate
    };
    VerdictRecord {
        verdict,
        lambda,
        slope: estimate.slope,
        stderr: estimate.stderr,
        z,
    }
}

fn filter_columns(path: &SimPath, n: usize) -> Result<usize> {
    let start = path
        .column_index("e_1")
        .ok_or_else(|| Error::InsufficientData("path has no filter columns".into()))?;
    if start + n > path.dimension() {
        return Err(Error::InsufficientData(
            "path has fewer filter columns than chain states".into(),
        ));
    }
    Ok(start)
}

/// `|time-average of Σ_k l(m_k) e_k(t) − Σ_k l(m_k) μ*_k|` for each test
/// function `l`, with μ* the chain's stationary law.
pub fn barycenter_deviation(
    filter_path: &SimPath,
    spec: &ChainSpec,
    test_fns: &[&dyn Fn(f64) -> f64],
    burn_in: f64,
) -> Result<Vec<f64>> {
    let mu = stationary_distribution(spec)?;
    barycenter_deviation_from(filter_path, spec, &mu, test_fns, burn_in)
}

/// As [`barycenter_deviation`] against an explicit reference law.
pub fn barycenter_deviation_from(
    filter_path: &SimPath,
    spec: &ChainSpec,
    reference: &[f64],
    test_fns: &[&dyn Fn(f64) -> f64],
    burn_in: f64,
) -> Result<Vec<f64>> {
    let n = spec.len();
    let start = filter_columns(filter_path, n)?;
    let rows = window_rows(filter_path, burn_in)?;
    let mut averages = vec![0.0; n];
    for (k, avg) in averages.iter_mut().enumerate() {
        let vals: Vec<f64> = rows.iter().map(|&r| filter_path.row(r)[start + k]).collect();
        *avg = pairwise_mean(&vals);
    }
    Ok(test_fns
        .iter()
        .map(|l| {
            let lv: Vec<f64> = spec.states().iter().map(|&m| l(m)).collect();
            let path_side: f64 = lv.iter().zip(&averages).map(|(a, b)| a * b).sum();
            let law_side: f64 = lv.iter().zip(reference).map(|(a, b)| a * b).sum();
            (path_side - law_side).abs()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{ClampStats, TimeGrid};

    fn path_from(grid: TimeGrid, labels: &[&str], rows: Vec<Vec<f64>>) -> SimPath {
        let data = rows.concat();
        SimPath::from_rows(
            grid,
            1,
            labels.iter().map(|s| s.to_string()).collect(),
            data,
            ClampStats {
                count: 0,
                first: vec![None; labels.len()],
            },
        )
    }

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|j| j as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), 249_750.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn pure_decay_slope() {
        let grid = TimeGrid::new(0.0, 0.01, 1000).unwrap();
        let rows = (0..=1000).map(|k| vec![1.0, (-2.0 * grid.time(k)).exp()]).collect();
        let p = path_from(grid, &["S", "I"], rows);
        let est = lyapunov_slope(&p, 1.0).unwrap();
        assert!((est.slope + 2.0).abs() < 1e-10);
        assert!(est.stderr < 1e-10);
        assert!(est.window.0 >= 1.0);
    }

    #[test]
    fn constant_path_slope_and_means() {
        let grid = TimeGrid::new(0.0, 0.1, 500).unwrap();
        let p = path_from(grid, &["S", "I"], vec![vec![0.4, 0.2]; 501]);
        assert!(lyapunov_slope(&p, 5.0).unwrap().slope.abs() < 1e-14);
        let (s, i) = permanence_means(&p, 5.0).unwrap();
        assert!((s - 0.4).abs() < 1e-15 && (i - 0.2).abs() < 1e-15);
    }

    #[test]
    fn short_window_is_insufficient() {
        let grid = TimeGrid::new(0.0, 0.1, 50).unwrap();
        let p = path_from(grid, &["S", "I"], vec![vec![0.4, 0.2]; 51]);
        assert!(matches!(lyapunov_slope(&p, 0.0), Err(Error::InsufficientData(_))));
        assert!(matches!(permanence_means(&p, 10.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn underflowed_path_truncated() {
        let grid = TimeGrid::new(0.0, 0.01, 2000).unwrap();
        let rows = (0..=2000)
            .map(|k| vec![1.0, if k < 1500 { (-grid.time(k)).exp() } else { 0.0 }])
            .collect();
        let p = path_from(grid, &["S", "I"], rows);
        let est = lyapunov_slope(&p, 0.0).unwrap();
        assert_eq!(est.truncated_at, Some(15.0));
        assert!((est.slope + 1.0).abs() < 1e-10);
    }

    #[test]
    fn slope_stderr_is_calibrated_for_brownian_logs() {
        // ln I = −t + 0.5 B(t): z-scores of the fitted slope should have unit spread.
        use crate::sde::brownian_increments;
        let grid = TimeGrid::new(0.0, 0.01, 20_000).unwrap();
        let z: Vec<f64> = (0..200)
            .map(|seed| {
                let dw = brownian_increments(1, &grid, seed).unwrap();
                let mut x = 0.0;
                let mut rows = vec![vec![1.0, 1.0]];
                for k in 0..grid.n_steps() {
                    x += -grid.dt() + 0.5 * dw.increment(0, k);
                    rows.push(vec![1.0, x.exp()]);
                }
                let est = lyapunov_slope(&path_from(grid, &["S", "I"], rows), 0.0).unwrap();
                (est.slope + 1.0) / est.stderr
            })
            .collect();
        let (m, sd) = mean_sd(&z);
        assert!(m.abs() < 0.3, "mean z {m}");
        assert!(sd > 0.75 && sd < 1.35, "sd z {sd}");
    }

    #[test]
    fn pooled_estimate() {
        let e = |s| LyapunovEstimate {
            slope: s,
            stderr: 0.1,
            window: (1.0, 10.0),
            n_points: 100,
            truncated_at: None,
        };
        let p = LyapunovEstimate::pool(&[e(-1.0), e(-2.0), e(-3.0)]).unwrap();
        assert_eq!(p.slope, -2.0);
        assert!((p.stderr - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(LyapunovEstimate::pool(&[]).is_err());
    }

    #[test]
    fn verdict_examples() {
        let est = |slope, stderr| LyapunovEstimate {
            slope,
            stderr,
            window: (0.0, 1.0),
            n_points: 100,
            truncated_at: None,
        };
        assert_eq!(
            extinction_verdict(&est(-1.7, 0.05), -1.745, None, 0.0).verdict,
            Verdict::Extinction
        );
        assert_eq!(
            extinction_verdict(&est(0.0, 0.01), 14.8522, Some(0.5), 0.01).verdict,
            Verdict::Permanence
        );
        assert_eq!(
            extinction_verdict(&est(-0.1, 0.5), 0.01, None, 0.01).verdict,
            Verdict::Indeterminate
        );
    }

    #[test]
    fn histogram_normalisation_and_single_cell() {
        let grid = TimeGrid::new(0.0, 0.1, 100).unwrap();
        let p = path_from(grid, &["S", "I"], vec![vec![0.45, 0.0]; 101]);
        let h = occupation_histogram(
            &[p],
            BinSpec::new(0.0, 1.0, 10).unwrap(),
            BinSpec::new(0.0, 1.0, 5).unwrap(),
            0.0,
        )
        .unwrap();
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
        assert!((h.at(4, 0) * h.cell_area() - 1.0).abs() < 1e-12);
        assert!((h.bottom_row_mass() - 1.0).abs() < 1e-12);
        assert!(occupation_histogram(&[], h.s_bins, h.i_bins, 0.0).is_err());
    }

    #[test]
    fn histogram_1d_and_cdf_masses() {
        let spec = BinSpec::new(0.0, 1.0, 4).unwrap();
        let mut h = Histogram1d::new(spec);
        for x in [-1.0, 0.1, 0.3, 0.6, 0.9, 5.0] {
            h.add(x);
        }
        assert_eq!(h.masses(), vec![2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0]);
        let m = spec.masses_from_cdf(|x| x.clamp(0.0, 1.0));
        assert_eq!(m, vec![0.25; 4]);
        assert!((h.l1_distance(&m) - (1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn barycenter_cases() {
        let grid = TimeGrid::new(0.0, 0.1, 100).unwrap();
        let p = path_from(grid, &["e_1", "e_2"], vec![vec![1.0, 0.0]; 101]);
        let frozen = ChainSpec::new(vec![0.0, 1.0], vec![vec![0.0; 2]; 2], vec![0.5, 0.5]).unwrap();
        let one = |_: f64| 1.0;
        let id = |x: f64| x;
        let d = barycenter_deviation_from(&p, &frozen, &[0.5, 0.5], &[&one, &id], 0.0).unwrap();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.5);
    }

    #[test]
    fn moment_check_constant_paths() {
        let params = EpidemicParams::new(0.5, 1.0, 2.0, 1.0, 0.5).unwrap();
        let grid = TimeGrid::new(0.0, 0.1, 100).unwrap();
        let p = path_from(grid, &["S", "I"], vec![vec![0.5, 0.0]; 101]);
        let m = moment_check(&[p.clone(), p], 0.5, &params).unwrap();
        assert!(m.bounded && m.relative_drift == 0.0);
        assert!((m.quarters[3] - 0.5f64.powf(1.5)).abs() < 1e-15);
        assert!(matches!(
            moment_check(&[], 0.5, &params),
            Err(Error::InsufficientData(_))
        ));
        assert!(moment_check(&[], 5.0, &params).is_err());
    }

    #[test]
    fn quarter_trend_flags_decay() {
        let down: Vec<[f64; 4]> = (0..10).map(|j| [4.0, 3.0, 2.0, 1.0 + 0.01 * j as f64]).collect();
        assert!(quarter_trend(&down).unwrap().downward);
        let flat: Vec<[f64; 4]> = (0..10).map(|j| [1.0, 1.0 + 0.01 * (-1f64).powi(j), 1.0, 1.0]).collect();
        assert!(!quarter_trend(&flat).unwrap().downward);
    }
}
