//! The two worked parameter sets: a two-state hidden chain with bilinear
//! infection `f = m1(x)·s` and saturating hidden-class rate
//! `h = m2·s/(1 + s + i)`.

use crate::chain::ChainSpec;
use crate::epidemic::{Coefficient, EpidemicParams, EpidemicState, IncidenceModel, InitialCondition};
use crate::error::{Error, Result};
use crate::filter::FilterState;

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub params: EpidemicParams,
    pub model: IncidenceModel,
    pub spec: ChainSpec,
    pub init: InitialCondition,
    pub dt: f64,
    pub horizon: f64,
    /// Lower bound for the late time-average of `I` on permanent runs. Set
    /// from a pilot run (`cargo run --release --example permanence_pilot`),
    /// at half the smallest pilot average.
    pub permanence_floor: Option<f64>,
}

fn build(
    name: &'static str,
    (a1, b1, b2, sigma1, sigma2): (f64, f64, f64, f64, f64),
    m1: (f64, f64),
    m2: f64,
    (q1, q2): (f64, f64),
    (s0, i0): (f64, f64),
    permanence_floor: Option<f64>,
) -> Result<Preset> {
    Ok(Preset {
        name,
        params: EpidemicParams::new(a1, b1, b2, sigma1, sigma2)?,
        model: IncidenceModel::example_family(
            Coefficient::table(vec![0.0, 1.0], vec![m1.0, m1.1])?,
            Coefficient::Constant(m2),
        )?,
        spec: ChainSpec::two_state(q1, q2)?,
        init: InitialCondition {
            state: EpidemicState::new(s0, i0)?,
            chain_index: 0,
            filter: FilterState::uniform(2),
        },
        dt: 1e-3,
        horizon: 500.0,
        permanence_floor,
    })
}

/// Extinction case.
pub fn example1() -> Preset {
    build(
        "example1",
        (0.5, 1.0, 2.0, 1.0, 0.5),
        (0.1, 4.0),
        0.1,
        (5.0, 25.0),
        (0.5, 0.5),
        None,
    )
    .expect("preset parameters are valid")
}

/// Permanence case.
pub fn example2() -> Preset {
    build(
        "example2",
        (10.0, 1.0, 3.0, 1.0, 1.0),
        (0.1, 2.0),
        0.1,
        (10.0, 1.0),
        (5.0, 1.0),
        Some(PERMANENCE_FLOOR_EXAMPLE2),
    )
    .expect("preset parameters are valid")
}

/// Pilot result for [`example2`]: 20 seeds from 90_000, T = 500,
/// averages over [250, 500] ranged from 2.5715 to 2.8530.
pub const PERMANENCE_FLOOR_EXAMPLE2: f64 = 1.28576;

pub fn by_name(name: &str) -> Result<Preset> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        other => Err(Error::param("preset", format!("unknown preset `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load() {
        let p = example1();
        assert_eq!(p.params.a1(), 0.5);
        assert_eq!(p.spec.rate(0, 1), 5.0);
        assert_eq!(p.model.rates(1.0, 1.0, 0.0).0, 4.0);
        let p = example2();
        assert_eq!(p.params.a1(), 10.0);
        assert_eq!(p.spec.rate(1, 0), 1.0);
        assert!(by_name("example3").is_err());
    }
}
