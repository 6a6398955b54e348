//! Experiment configuration: a TOML document, optionally layered over one of
//! the compiled-in presets.
//!
//! Layering order (later wins): preset, config file, command-line overrides.
//! Unknown keys are rejected at every level.

use hidden_sir_core::chain::ChainSpec;
use hidden_sir_core::epidemic::{
    Coefficient, EpidemicParams, EpidemicState, IncidenceModel, InitialCondition, RateFunction,
};
use hidden_sir_core::filter::FilterState;
use hidden_sir_core::sde::{TimeGrid, DEFAULT_POSITIVITY_FLOOR};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use toml::{Table, Value};

pub const EXAMPLE1: &str = include_str!("../presets/example1.toml");
pub const EXAMPLE2: &str = include_str!("../presets/example2.toml");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted key path, empty for document-level problems.
    pub path: String,
    pub reason: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config error: {}", self.reason)
        } else {
            write!(f, "config error at `{}`: {}", self.path, self.reason)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Simulate,
    Threshold,
    Compare,
    Sweep,
    Density,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Threshold => "threshold",
            Kind::Compare => "compare",
            Kind::Sweep => "sweep",
            Kind::Density => "density",
        }
    }
}

impl FromStr for Kind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulate" => Ok(Kind::Simulate),
            "threshold" => Ok(Kind::Threshold),
            "compare" => Ok(Kind::Compare),
            "sweep" => Ok(Kind::Sweep),
            "density" => Ok(Kind::Density),
            other => Err(ConfigError::new("kind", format!("unknown experiment kind `{other}`"))),
        }
    }
}

// ---- raw document -------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<String>,
    preset: Option<String>,
    params: RawParams,
    incidence: RawIncidence,
    chain: RawChain,
    initial: RawInitial,
    grid: RawGrid,
    #[serde(default)]
    seeds: RawSeeds,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    mode: RawMode,
    #[serde(default)]
    analysis: RawAnalysis,
    sweep: Option<RawSweep>,
    #[serde(default)]
    density: RawDensity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    a1: f64,
    b1: f64,
    b2: f64,
    sigma1: f64,
    sigma2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIncidence {
    f: RawRate,
    h: RawRate,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawCoefficient {
    Constant(f64),
    Table { nodes: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum RawRate {
    Zero,
    Bilinear {
        beta: RawCoefficient,
    },
    Holling {
        beta: RawCoefficient,
        half_saturation: RawCoefficient,
    },
    BeddingtonDeangelis {
        beta: RawCoefficient,
        m1: RawCoefficient,
        m2: RawCoefficient,
    },
    Saturating {
        coef: RawCoefficient,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    states: Vec<f64>,
    generator: Vec<Vec<f64>>,
    observation: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    s: f64,
    i: f64,
    #[serde(default)]
    chain_index: usize,
    filter: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dt: f64,
    horizon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeeds {
    count: usize,
    base: u64,
}

impl Default for RawSeeds {
    fn default() -> Self {
        Self { count: 1, base: 1 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: String,
    stride: usize,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            stride: 10,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMode {
    cosimulate: bool,
    predicted: Vec<f64>,
    positivity_floor: f64,
}

impl Default for RawMode {
    fn default() -> Self {
        Self {
            cosimulate: true,
            predicted: Vec::new(),
            positivity_floor: DEFAULT_POSITIVITY_FLOOR,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawAnalysis {
    burn_in_fraction: f64,
    permanence_floor: Option<f64>,
}

impl Default for RawAnalysis {
    fn default() -> Self {
        Self {
            burn_in_fraction: 0.1,
            permanence_floor: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDensity {
    system: String,
    s_max: f64,
    s_bins: usize,
    i_max: f64,
    i_bins: usize,
}

impl Default for RawDensity {
    fn default() -> Self {
        Self {
            system: "hidden".into(),
            s_max: 20.0,
            s_bins: 50,
            i_max: 10.0,
            i_bins: 50,
        }
    }
}

// ---- validated config ---------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    A1,
    B1,
    B2,
    Sigma1,
    Sigma2,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::A1 => "a1",
            SweepParameter::B1 => "b1",
            SweepParameter::B2 => "b2",
            SweepParameter::Sigma1 => "sigma1",
            SweepParameter::Sigma2 => "sigma2",
        }
    }

    /// `base` with this parameter replaced by `v`.
    pub fn apply(&self, base: &EpidemicParams, v: f64) -> hidden_sir_core::Result<EpidemicParams> {
        let (mut a1, mut b1, mut b2, mut s1, mut s2) = (base.a1(), base.b1(), base.b2(), base.sigma1(), base.sigma2());
        match self {
            SweepParameter::A1 => a1 = v,
            SweepParameter::B1 => b1 = v,
            SweepParameter::B2 => b2 = v,
            SweepParameter::Sigma1 => s1 = v,
            SweepParameter::Sigma2 => s2 = v,
        }
        EpidemicParams::new(a1, b1, b2, s1, s2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensitySystem {
    Hidden,
    Filtered,
    Predicted(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySpec {
    pub system: DensitySystem,
    pub s_max: f64,
    pub s_bins: usize,
    pub i_max: f64,
    pub i_bins: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub preset: Option<String>,
    pub params: EpidemicParams,
    pub model: IncidenceModel,
    pub spec: ChainSpec,
    pub init: InitialCondition,
    pub grid: TimeGrid,
    pub seed_count: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub stride: usize,
    pub cosimulate: bool,
    pub predicted: Vec<f64>,
    pub positivity_floor: f64,
    pub burn_in_fraction: f64,
    pub permanence_floor: Option<f64>,
    pub sweep: Option<SweepSpec>,
    pub density: DensitySpec,
    /// SHA-256 of the fully resolved document.
    pub hash: String,
}

impl ExperimentConfig {
    pub fn burn_in(&self) -> f64 {
        self.grid.t0() + self.burn_in_fraction * (self.grid.end() - self.grid.t0())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.seed_count as u64).map(move |i| self.base_seed.wrapping_add(i))
    }
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<Kind>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub seeds: Option<usize>,
    pub base_seed: Option<u64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
}

pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    match name {
        "example1" => Ok(EXAMPLE1),
        "example2" => Ok(EXAMPLE2),
        other => Err(ConfigError::new(
            "preset",
            format!("unknown preset `{other}` (expected example1 or example2)"),
        )),
    }
}

fn parse_table(text: &str, origin: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>()
        .map_err(|e| ConfigError::new("", format!("{origin}: {}", e.message())))
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn set(table: &mut Table, section: &str, key: &str, v: Value) {
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    if let Value::Table(t) = entry {
        t.insert(key.to_string(), v);
    }
}

/// Parses a document without overrides.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    resolve(Some(text), &Overrides::default())
}

/// Builds the layered document and validates it.
pub fn resolve(text: Option<&str>, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let user = match text {
        Some(t) => parse_table(t, "config file")?,
        None => Table::new(),
    };
    let preset = overrides
        .preset
        .clone()
        .or_else(|| user.get("preset").and_then(|v| v.as_str()).map(str::to_string));
    let mut doc = match &preset {
        Some(name) => parse_table(preset_text(name)?, name)?,
        None => Table::new(),
    };
    merge(&mut doc, user);
    if let Some(p) = &preset {
        doc.insert("preset".into(), Value::String(p.clone()));
    }
    if let Some(k) = overrides.kind {
        doc.insert("kind".into(), Value::String(k.as_str().into()));
    }
    if let Some(out) = &overrides.out {
        set(&mut doc, "output", "dir", Value::String(out.display().to_string()));
    }
    if let Some(n) = overrides.seeds {
        set(&mut doc, "seeds", "count", Value::Integer(n as i64));
    }
    if let Some(b) = overrides.base_seed {
        let b = i64::try_from(b).map_err(|_| ConfigError::new("seeds.base", "must fit in a signed 64-bit integer"))?;
        set(&mut doc, "seeds", "base", Value::Integer(b));
    }
    if let Some(dt) = overrides.dt {
        set(&mut doc, "grid", "dt", Value::Float(dt));
    }
    if let Some(h) = overrides.horizon {
        set(&mut doc, "grid", "horizon", Value::Float(h));
    }
    // Defaults are written out so equivalent documents hash alike.
    for (section, defaults) in [("seeds", ["count", "base"]), ("output", ["dir", "stride"])] {
        let entry = doc.entry(section).or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(t) = entry {
            let d: Table = match section {
                "seeds" => parse_table("count = 1\nbase = 1", "defaults")?,
                _ => parse_table("dir = \"out\"\nstride = 10", "defaults")?,
            };
            for key in defaults {
                if !t.contains_key(key) {
                    t.insert(key.into(), d[key].clone());
                }
            }
        }
    }
    // Where results land does not change them, so the output directory stays out of the hash.
    let mut hashed = doc.clone();
    if let Some(Value::Table(t)) = hashed.get_mut("output") {
        t.remove("dir");
    }
    let canonical = toml::to_string(&hashed).map_err(|e| ConfigError::new("", e.to_string()))?;
    let hash = Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    let raw: RawConfig = Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::new("", e.message().to_string()))?;
    validate(raw, hash)
}

fn coefficient(raw: RawCoefficient, path: &str) -> Result<Coefficient, ConfigError> {
    match raw {
        RawCoefficient::Constant(c) => Ok(Coefficient::Constant(c)),
        RawCoefficient::Table { nodes, values } => {
            Coefficient::table(nodes, values).map_err(|e| ConfigError::new(path, e.to_string()))
        }
    }
}

fn rate(raw: RawRate, path: &str) -> Result<RateFunction, ConfigError> {
    let c = |r, name: &str| coefficient(r, &format!("{path}.{name}"));
    Ok(match raw {
        RawRate::Zero => RateFunction::Zero,
        RawRate::Bilinear { beta } => RateFunction::Bilinear { beta: c(beta, "beta")? },
        RawRate::Holling { beta, half_saturation } => RateFunction::Holling {
            beta: c(beta, "beta")?,
            half_saturation: c(half_saturation, "half_saturation")?,
        },
        RawRate::BeddingtonDeangelis { beta, m1, m2 } => RateFunction::BeddingtonDeAngelis {
            beta: c(beta, "beta")?,
            m1: c(m1, "m1")?,
            m2: c(m2, "m2")?,
        },
        RawRate::Saturating { coef } => RateFunction::Saturating { coef: c(coef, "coef")? },
    })
}

fn core_err(section: &str) -> impl Fn(hidden_sir_core::Error) -> ConfigError + '_ {
    move |e| match e {
        hidden_sir_core::Error::InvalidParameter { name, reason } => {
            ConfigError::new(format!("{section}.{name}"), reason)
        }
        other => ConfigError::new(section, other.to_string()),
    }
}

fn validate(raw: RawConfig, hash: String) -> Result<ExperimentConfig, ConfigError> {
    let kind = raw.kind.as_deref().map(Kind::from_str).transpose()?;
    let p = &raw.params;
    let params = EpidemicParams::new(p.a1, p.b1, p.b2, p.sigma1, p.sigma2).map_err(core_err("params"))?;
    let model = IncidenceModel::new(
        rate(raw.incidence.f, "incidence.f")?,
        rate(raw.incidence.h, "incidence.h")?,
    )
    .map_err(core_err("incidence"))?;
    let spec =
        ChainSpec::new(raw.chain.states, raw.chain.generator, raw.chain.observation).map_err(core_err("chain"))?;
    let state =
        EpidemicState::new(raw.initial.s, raw.initial.i).map_err(|e| ConfigError::new("initial", e.to_string()))?;
    if raw.initial.chain_index >= spec.len() {
        return Err(ConfigError::new(
            "initial.chain_index",
            format!(
                "{} is not a state index (chain has {} states)",
                raw.initial.chain_index,
                spec.len()
            ),
        ));
    }
    let filter = match raw.initial.filter {
        Some(w) if w.len() != spec.len() => {
            return Err(ConfigError::new(
                "initial.filter",
                "length must equal the number of chain states",
            ))
        }
        Some(w) => FilterState::new(w).map_err(|e| ConfigError::new("initial.filter", e.to_string()))?,
        None => FilterState::uniform(spec.len()),
    };
    if !(raw.grid.horizon.is_finite() && raw.grid.horizon > 0.0) {
        return Err(ConfigError::new("grid.horizon", "must be finite and > 0"));
    }
    let grid = TimeGrid::with_horizon(raw.grid.dt, raw.grid.horizon).map_err(core_err("grid"))?;
    if raw.seeds.count == 0 {
        return Err(ConfigError::new("seeds.count", "need at least one seed"));
    }
    if raw.output.stride == 0 {
        return Err(ConfigError::new("output.stride", "must be at least 1"));
    }
    if let Some((j, m)) = raw
        .mode
        .predicted
        .iter()
        .enumerate()
        .find(|(_, m)| !(0.0..=1.0).contains(*m))
    {
        return Err(ConfigError::new(
            format!("mode.predicted[{j}]"),
            format!("{m} outside [0, 1]"),
        ));
    }
    if !(raw.mode.positivity_floor.is_finite() && raw.mode.positivity_floor >= 0.0) {
        return Err(ConfigError::new("mode.positivity_floor", "must be finite and >= 0"));
    }
    if !(0.0..1.0).contains(&raw.analysis.burn_in_fraction) {
        return Err(ConfigError::new("analysis.burn_in_fraction", "must lie in [0, 1)"));
    }
    if let Some(f) = raw.analysis.permanence_floor {
        if !(f.is_finite() && f >= 0.0) {
            return Err(ConfigError::new("analysis.permanence_floor", "must be finite and >= 0"));
        }
    }
    let sweep = raw
        .sweep
        .map(|s| {
            let parameter = match s.parameter.as_str() {
                "a1" => SweepParameter::A1,
                "b1" => SweepParameter::B1,
                "b2" => SweepParameter::B2,
                "sigma1" => SweepParameter::Sigma1,
                "sigma2" => SweepParameter::Sigma2,
                other => {
                    return Err(ConfigError::new(
                        "sweep.parameter",
                        format!("`{other}` is not one of a1, b1, b2, sigma1, sigma2"),
                    ))
                }
            };
            if s.values.is_empty() {
                return Err(ConfigError::new("sweep.values", "need at least one value"));
            }
            Ok(SweepSpec {
                parameter,
                values: s.values,
            })
        })
        .transpose()?;
    let d = raw.density;
    let system = match d.system.as_str() {
        "hidden" => DensitySystem::Hidden,
        "filtered" => DensitySystem::Filtered,
        other => match other.strip_prefix("predicted_").and_then(|j| j.parse::<usize>().ok()) {
            Some(j) if j < raw.mode.predicted.len() => DensitySystem::Predicted(j),
            _ => {
                return Err(ConfigError::new(
                    "density.system",
                    format!("`{other}` is not hidden, filtered or predicted_<j> for a listed mode.predicted entry"),
                ))
            }
        },
    };
    if !(d.s_max > 0.0 && d.i_max > 0.0 && d.s_bins > 0 && d.i_bins > 0) {
        return Err(ConfigError::new("density", "bin ranges and counts must be positive"));
    }
    Ok(ExperimentConfig {
        kind,
        preset: raw.preset,
        params,
        model,
        spec,
        init: InitialCondition {
            state,
            chain_index: raw.initial.chain_index,
            filter,
        },
        grid,
        seed_count: raw.seeds.count,
        base_seed: raw.seeds.base,
        out_dir: PathBuf::from(raw.output.dir),
        stride: raw.output.stride,
        cosimulate: raw.mode.cosimulate,
        predicted: raw.mode.predicted,
        positivity_floor: raw.mode.positivity_floor,
        burn_in_fraction: raw.analysis.burn_in_fraction,
        permanence_floor: raw.analysis.permanence_floor,
        sweep,
        density: DensitySpec {
            system,
            s_max: d.s_max,
            s_bins: d.s_bins,
            i_max: d.i_max,
            i_bins: d.i_bins,
        },
        hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hidden_sir_core::presets;

    fn preset(name: &str) -> ExperimentConfig {
        resolve(
            None,
            &Overrides {
                preset: Some(name.into()),
                ..Overrides::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn presets_match_core() {
        for (name, core) in [("example1", presets::example1()), ("example2", presets::example2())] {
            let c = preset(name);
            assert_eq!(c.params, core.params);
            assert_eq!(c.model, core.model);
            assert_eq!(c.spec, core.spec);
            assert_eq!(c.init, core.init);
            assert_eq!(c.grid.dt(), core.dt);
            assert_eq!(c.grid.end(), core.horizon);
            assert_eq!(c.permanence_floor, core.permanence_floor);
        }
    }

    #[test]
    fn example1_values() {
        let c = preset("example1");
        assert_eq!(
            (
                c.params.a1(),
                c.params.b1(),
                c.params.sigma1(),
                c.params.b2(),
                c.params.sigma2()
            ),
            (0.5, 1.0, 1.0, 2.0, 0.5)
        );
        assert_eq!((c.spec.rate(0, 1), c.spec.rate(1, 0)), (5.0, 25.0));
    }

    #[test]
    fn negative_a1_names_the_field() {
        let err = resolve(
            Some("preset = \"example1\"\n[params]\na1 = -0.5\n"),
            &Overrides::default(),
        )
        .unwrap_err();
        assert_eq!(err.path, "params.a1");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = resolve(
            Some("preset = \"example1\"\n[grid]\nstep = 0.1\n"),
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(err.reason.contains("step"), "{err}");
        assert!(resolve(Some("preset = \"example1\"\ncolour = 1\n"), &Overrides::default()).is_err());
    }

    #[test]
    fn overrides_take_precedence_and_change_hash() {
        let base = preset("example1");
        let o = resolve(
            Some("[grid]\ndt = 0.01\nhorizon = 5.0\n"),
            &Overrides {
                preset: Some("example1".into()),
                seeds: Some(3),
                horizon: Some(7.0),
                ..Overrides::default()
            },
        )
        .unwrap();
        assert_eq!(o.grid.dt(), 0.01);
        assert_eq!(o.grid.end(), 7.0);
        assert_eq!(o.seed_count, 3);
        assert_eq!(o.base_seed, 1);
        assert_ne!(o.hash, base.hash);
        assert_eq!(preset("example1").hash, base.hash);
        let moved = resolve(
            None,
            &Overrides {
                preset: Some("example1".into()),
                out: Some("elsewhere".into()),
                ..Overrides::default()
            },
        )
        .unwrap();
        assert_eq!(moved.out_dir, std::path::PathBuf::from("elsewhere"));
        assert_eq!(moved.hash, base.hash);
    }

    #[test]
    fn full_document_without_preset() {
        let text = r#"
            kind = "threshold"
            [params]
            a1 = 1.0
            b1 = 1.0
            b2 = 1.0
            sigma1 = 0.5
            sigma2 = 0.5
            [incidence.f]
            family = "holling"
            beta = 2.0
            half_saturation = 1.0
            [incidence.h]
            family = "zero"
            [chain]
            states = [0.0, 0.5, 1.0]
            generator = [[-1.0, 1.0, 0.0], [0.5, -1.0, 0.5], [0.0, 1.0, -1.0]]
            observation = [0.0, 0.5, 1.0]
            [initial]
            s = 1.0
            i = 0.1
            [grid]
            dt = 0.01
            horizon = 1.0
        "#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.kind, Some(Kind::Threshold));
        assert_eq!(c.spec.len(), 3);
        assert_eq!(c.init.filter, FilterState::uniform(3));
        assert_eq!(c.seed_count, 1);
    }

    #[test]
    fn bad_values_are_reported_with_paths() {
        let cases = [
            ("[mode]\npredicted = [1.5]\n", "mode.predicted[0]"),
            ("[initial]\nchain_index = 5\n", "initial.chain_index"),
            ("[sweep]\nparameter = \"q1\"\nvalues = [1.0]\n", "sweep.parameter"),
            ("[density]\nsystem = \"predicted_3\"\n", "density.system"),
        ];
        for (snippet, path) in cases {
            let err = resolve(
                Some(&format!("preset = \"example1\"\n{snippet}")),
                &Overrides::default(),
            )
            .unwrap_err();
            assert_eq!(err.path, path, "{snippet}");
        }
    }

    #[test]
    fn unknown_preset_rejected() {
        let err = resolve(Some("preset = \"example9\"\n"), &Overrides::default()).unwrap_err();
        assert_eq!(err.path, "preset");
    }
}
