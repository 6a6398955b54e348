//! Pilot run that fixes the permanence floor recorded in the `example2`
//! preset: half the smallest late time-average of `I` over 20 seeds.

use hidden_sir_core::analysis::permanence_means;
use hidden_sir_core::presets::example2;
use hidden_sir_core::sde::{record_path, replicate, BrownianStream, TimeGrid};
use hidden_sir_core::{make_hidden_system, simulate_ctmc};

fn main() -> hidden_sir_core::Result<()> {
    let p = example2();
    let grid = TimeGrid::with_horizon(p.dt, p.horizon)?;
    let means = replicate(90_000, 20, |seed| {
        let alpha = simulate_ctmc(&p.spec, p.init.chain_index, &grid, seed)?;
        let sys = make_hidden_system(&p.params, &p.model, &p.spec, &alpha)?;
        let init = [p.init.state.s, p.init.state.i];
        let path = record_path(&sys, &init, &grid, BrownianStream::new(2, grid.dt(), seed), 10)?;
        Ok(permanence_means(&path, 0.5 * p.horizon)?.1)
    })?;
    let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("late I averages: min {min} max {max}");
    println!("floor = {}", 0.5 * min);
    Ok(())
}
