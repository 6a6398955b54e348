//! Extinction/permanence thresholds.
//!
//! The boundary process `dφ = (a1 − b1 φ) dt + σ1 φ dB1` has the stationary
//! law InvGamma(a, b) with `a = 2c1/σ1²`, `b = 2a1/σ1²`. The threshold is
//!
//! ```text
//! λ = −c2 + Σ_k μ*_k F_k + Σ_k m_k μ*_k H_k
//! F_k = E f(m_k, φ, 0),  H_k = E h(m_k, φ, 0)
//! ```
//!
//! and a prediction that freezes the signal at `m` gives
//! `λ_pre(m) = −c2 + F(m) + m H(m)`.

use crate::chain::ChainSpec;
use crate::epidemic::{EpidemicParams, IncidenceModel};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_half_line, QuadOptions, QuadResult};
use statrs::function::gamma::ln_gamma;
use std::fmt;

/// Inverse-gamma law with shape `a` and scale `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaLaw {
    a: f64,
    b: f64,
}

impl InvGammaLaw {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::param("a", format!("shape must be finite and > 0, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::param("b", format!("scale must be finite and > 0, got {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn shape(&self) -> f64 {
        self.a
    }

    pub fn scale(&self) -> f64 {
        self.b
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.a * self.b.ln() - ln_gamma(self.a) - (self.a + 1.0) * y.ln() - self.b / y
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    /// `b/(a − 1)`, infinite for `a ≤ 1`.
    pub fn mean(&self) -> f64 {
        if self.a > 1.0 {
            self.b / (self.a - 1.0)
        } else {
            f64::INFINITY
        }
    }
}

/// Stationary law of the boundary process for the given parameters.
pub fn invgamma_from_params(params: &EpidemicParams) -> InvGammaLaw {
    let s2 = params.sigma1() * params.sigma1();
    InvGammaLaw {
        a: 2.0 * params.c1() / s2,
        b: 2.0 * params.a1() / s2,
    }
}

/// `E g(Y)` for `Y ~ InvGamma(a, b)`, integrated in `z = 1/y` where the weight
/// becomes the Gamma(a, rate b) density.
pub fn expectation_under_invgamma<G: Fn(f64) -> f64>(g: G, law: &InvGammaLaw, tol: f64) -> Result<QuadResult> {
    let (a, b) = (law.a, law.b);
    let ln_norm = a * b.ln() - ln_gamma(a);
    let opts = QuadOptions {
        abs_tol: tol,
        ..QuadOptions::default()
    };
    integrate_half_line(
        |z: f64| {
            if z <= 0.0 {
                return 0.0;
            }
            let w = (ln_norm + (a - 1.0) * z.ln() - b * z).exp();
            if w == 0.0 {
                0.0
            } else {
                g(1.0 / z) * w
            }
        },
        a / b,
        opts,
    )
}

/// Absolute tolerance used for every boundary expectation.
pub const THRESHOLD_TOLERANCE: f64 = 1e-10;

/// Per-state boundary integrals `F = E f(m, φ, 0)` and `H = E h(m, φ, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateIntegrals {
    pub m: f64,
    pub f: f64,
    pub h: f64,
    pub error: f64,
}

impl StateIntegrals {
    /// `F + m·H`, the state's contribution to the threshold.
    pub fn gain(&self) -> f64 {
        self.f + self.m * self.h
    }
}

pub fn state_integrals(law: &InvGammaLaw, model: &IncidenceModel, m: f64) -> Result<StateIntegrals> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::OutOfDomain(format!("signal value {m} outside [0, 1]")));
    }
    let f = expectation_under_invgamma(|y| model.f().eval(m, y, 0.0), law, THRESHOLD_TOLERANCE)?;
    let h = expectation_under_invgamma(|y| model.h().eval(m, y, 0.0), law, THRESHOLD_TOLERANCE)?;
    Ok(StateIntegrals {
        m,
        f: f.value,
        h: h.value,
        error: f.error + m * h.error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Overcautious,
    Incautious,
    Exact,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Overcautious => "Overcautious",
            Classification::Incautious => "Incautious",
            Classification::Exact => "Exact",
        })
    }
}

/// Overcautious above `lambda + tol`, incautious below `lambda − tol`.
pub fn classify_prediction(lambda_pre: f64, lambda: f64, tol: f64) -> Classification {
    if lambda_pre > lambda + tol {
        Classification::Overcautious
    } else if lambda_pre < lambda - tol {
        Classification::Incautious
    } else {
        Classification::Exact
    }
}

/// The three additive terms of λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdComponents {
    pub minus_c2: f64,
    /// `Σ μ*_k F_k`
    pub infection: f64,
    /// `Σ m_k μ*_k H_k`
    pub hidden: f64,
}

impl ThresholdComponents {
    pub fn total(&self) -> f64 {
        self.minus_c2 + self.infection + self.hidden
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub lambda: f64,
    pub components: ThresholdComponents,
    pub stationary: Vec<f64>,
    pub states: Vec<StateIntegrals>,
    /// `λ_pre` for the signal frozen at each state value.
    pub lambda_pre: Vec<f64>,
    pub classifications: Vec<Classification>,
    /// Bound on the absolute quadrature error in `lambda`.
    pub quadrature_error: f64,
    pub tie_tolerance: f64,
}

impl ThresholdReport {
    /// Flat `key=value` record, one entry per line.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let mut put = |k: String, v: String| {
            out.push_str(&k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        put("lambda".into(), self.lambda.to_string());
        put("minus_c2".into(), self.components.minus_c2.to_string());
        put("infection_term".into(), self.components.infection.to_string());
        put("hidden_term".into(), self.components.hidden.to_string());
        put("quadrature_error".into(), self.quadrature_error.to_string());
        put("tie_tolerance".into(), self.tie_tolerance.to_string());
        for (k, s) in self.states.iter().enumerate() {
            put(format!("state.{k}"), s.m.to_string());
            put(format!("mu.{k}"), self.stationary[k].to_string());
            put(format!("F.{k}"), s.f.to_string());
            put(format!("H.{k}"), s.h.to_string());
            put(format!("lambda_pre.{k}"), self.lambda_pre[k].to_string());
            put(format!("classification.{k}"), self.classifications[k].to_string());
        }
        out
    }

    /// Header for [`ThresholdReport::csv_fields`] given the number of states.
    pub fn csv_header(n_states: usize) -> Vec<String> {
        let mut h = vec![
            "lambda".to_string(),
            "minus_c2".into(),
            "infection_term".into(),
            "hidden_term".into(),
            "quadrature_error".into(),
        ];
        for k in 0..n_states {
            h.push(format!("lambda_pre_{k}"));
            h.push(format!("classification_{k}"));
        }
        h
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let mut r = vec![
            self.lambda.to_string(),
            self.components.minus_c2.to_string(),
            self.components.infection.to_string(),
            self.components.hidden.to_string(),
            self.quadrature_error.to_string(),
        ];
        for (lp, c) in self.lambda_pre.iter().zip(&self.classifications) {
            r.push(lp.to_string());
            r.push(c.to_string());
        }
        r
    }
}

/// λ for a signal law supported on `states` with weights `law`. With the
/// chain's stationary distribution this is [`lambda_discrete`]; any other
/// discrete approximation of a signal's invariant measure may be supplied.
pub fn lambda_with_law(
    params: &EpidemicParams,
    model: &IncidenceModel,
    states: &[f64],
    law: &[f64],
) -> Result<ThresholdReport> {
    if states.is_empty() || states.len() != law.len() {
        return Err(Error::param(
            "law",
            "states and weights must be non-empty and of equal length",
        ));
    }
    if law.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (law.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param("law", "weights must be a probability vector"));
    }
    let ig = invgamma_from_params(params);
    let integrals = states
        .iter()
        .map(|&m| state_integrals(&ig, model, m))
        .collect::<Result<Vec<_>>>()?;
    let minus_c2 = -params.c2();
    let mut infection = 0.0;
    let mut hidden = 0.0;
    let mut error = 0.0;
    for (s, &mu) in integrals.iter().zip(law) {
        infection += mu * s.f;
        hidden += s.m * mu * s.h;
        error += mu * s.error;
    }
    let components = ThresholdComponents {
        minus_c2,
        infection,
        hidden,
    };
    let lambda = components.total();
    let lambda_pre: Vec<f64> = integrals.iter().map(|s| minus_c2 + s.gain()).collect();
    let tie_tolerance = integrals.iter().map(|s| 10.0 * (error + s.error)).fold(0.0, f64::max);
    let classifications = lambda_pre
        .iter()
        .zip(&integrals)
        .map(|(&lp, s)| classify_prediction(lp, lambda, 10.0 * (error + s.error)))
        .collect();
    Ok(ThresholdReport {
        lambda,
        components,
        stationary: law.to_vec(),
        states: integrals,
        lambda_pre,
        classifications,
        quadrature_error: error,
        tie_tolerance,
    })
}

pub fn lambda_discrete(params: &EpidemicParams, model: &IncidenceModel, spec: &ChainSpec) -> Result<ThresholdReport> {
    let mu = crate::chain::stationary_distribution(spec)?;
    lambda_with_law(params, model, spec.states(), &mu)
}

/// `λ_pre(m) = −c2 + F(m) + m·H(m)`.
pub fn lambda_predicted(params: &EpidemicParams, model: &IncidenceModel, m: f64) -> Result<f64> {
    let ig = invgamma_from_params(params);
    Ok(-params.c2() + state_integrals(&ig, model, m)?.gain())
}

/// Outcome of the monotone sandwich check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionBounds {
    /// `λ_pre` at the smallest state value.
    pub lower: f64,
    pub lambda: f64,
    /// `λ_pre` at the largest state value.
    pub upper: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Checks `λ_pre(m_1) ≤ λ ≤ λ_pre(m_n)` for a model whose rates are
/// non-decreasing in the signal value.
pub fn monotone_prediction_bounds(
    params: &EpidemicParams,
    model: &IncidenceModel,
    spec: &ChainSpec,
) -> Result<PredictionBounds> {
    let ig = invgamma_from_params(params);
    let centre = ig.scale() / ig.shape();
    let ys: Vec<f64> = (-30..=30).map(|j| centre * 10f64.powf(j as f64 / 10.0)).collect();
    if !model.is_monotone_in_signal(&ys, 64) {
        return Err(Error::AssumptionViolated(
            "incidence rates are not non-decreasing in the signal value".into(),
        ));
    }
    let report = lambda_discrete(params, model, spec)?;
    let n = report.lambda_pre.len();
    let lower = report.lambda_pre[0];
    let upper = report.lambda_pre[n - 1];
    let tolerance = report.tie_tolerance.max(1e-12 * report.lambda.abs());
    Ok(PredictionBounds {
        lower,
        lambda: report.lambda,
        upper,
        tolerance,
        holds: lower <= report.lambda + tolerance && report.lambda <= upper + tolerance,
    })
}

/// Sufficient conditions for the order of `λ_pre(m_k0)` against λ, written
/// in terms of the state gains `G_k = F_k + m_k H_k`:
/// incautious iff `G_k0 < Σ_{k≠k0} μ_k G_k / (1 − μ_k0)`, overcautious iff `>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionHypotheses {
    pub incautious: bool,
    pub overcautious: bool,
}

pub fn prediction_hypotheses(report: &ThresholdReport, k0: usize) -> Result<PredictionHypotheses> {
    let n = report.states.len();
    if k0 >= n {
        return Err(Error::param(
            "k0",
            format!("state index {k0} out of range for {n} states"),
        ));
    }
    let mu0 = report.stationary[k0];
    if mu0 >= 1.0 {
        return Ok(PredictionHypotheses {
            incautious: false,
            overcautious: false,
        });
    }
    let others: f64 = (0..n)
        .filter(|&k| k != k0)
        .map(|k| report.stationary[k] * report.states[k].gain())
        .sum::<f64>()
        / (1.0 - mu0);
    let g0 = report.states[k0].gain();
    Ok(PredictionHypotheses {
        incautious: g0 < others,
        overcautious: g0 > others,
    })
}

/// Invariant density of the two-state Wonham filter for the weight `x` on the
/// lower state:
///
/// ```text
/// φ*(x) = C exp(−2d1/(1−x)) (1−x)^{2(d1−d2−1)} exp(−2d2/x) x^{2(d2−d1−1)}
/// ```
///
/// with `d1 = q1/g²`, `d2 = q2/g²`, `q1` the rate out of the lower state and
/// `g` the gap between the observation values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateFilterDensity {
    d1: f64,
    d2: f64,
    ln_c: f64,
}

impl TwoStateFilterDensity {
    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn normalizer(&self) -> f64 {
        self.ln_c.exp()
    }

    fn ln_kernel(d1: f64, d2: f64, x: f64) -> f64 {
        let u = 1.0 - x;
        -2.0 * d1 / u + 2.0 * (d1 - d2 - 1.0) * u.ln() - 2.0 * d2 / x + 2.0 * (d2 - d1 - 1.0) * x.ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        (self.ln_c + Self::ln_kernel(self.d1, self.d2, x)).exp()
    }

    /// `∫ w(x) φ*(x) dx` on (0, 1).
    pub fn expectation<W: Fn(f64) -> f64>(&self, w: W) -> Result<QuadResult> {
        integrate(|x| w(x) * self.pdf(x), 0.0, 1.0, fine_opts())
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.expectation(|x| x)?.value)
    }

    /// Probability of `[lo, hi] ∩ (0, 1)`.
    pub fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        if hi <= lo {
            return Ok(0.0);
        }
        Ok(integrate(|x| self.pdf(x), lo, hi, fine_opts())?.value)
    }
}

fn fine_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 0.0,
        max_evals: 100_000,
    }
}

pub fn two_state_filter_density(q1: f64, q2: f64, g_gap: f64) -> Result<TwoStateFilterDensity> {
    if !(q1.is_finite() && q1 > 0.0 && q2.is_finite() && q2 > 0.0) {
        return Err(Error::param("q", "jump rates must be finite and > 0"));
    }
    if !(g_gap.is_finite() && g_gap != 0.0) {
        return Err(Error::param("g_gap", "observation gap must be finite and nonzero"));
    }
    let d1 = q1 / (g_gap * g_gap);
    let d2 = q2 / (g_gap * g_gap);
    // Shift by the log-kernel maximum so the integrand peaks at 1.
    let peak = (1..4096)
        .map(|j| TwoStateFilterDensity::ln_kernel(d1, d2, j as f64 / 4096.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let z = integrate(
        |x| {
            if x <= 0.0 || x >= 1.0 {
                0.0
            } else {
                (TwoStateFilterDensity::ln_kernel(d1, d2, x) - peak).exp()
            }
        },
        0.0,
        1.0,
        fine_opts(),
    )?;
    Ok(TwoStateFilterDensity {
        d1,
        d2,
        ln_c: -peak - z.value.ln(),
    })
}
