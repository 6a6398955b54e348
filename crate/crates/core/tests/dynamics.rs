use hidden_sir_core::analysis::{
    lyapunov_slope, mean_sd, moment_check, occupation_histogram, BinSpec, MIN_WINDOW_POINTS,
};
use hidden_sir_core::epidemic::{make_boundary_system, make_hidden_system};
use hidden_sir_core::presets::{example1, example2, Preset};
use hidden_sir_core::sde::{integrate, record_path, replicate, BrownianStream, SimPath, TimeGrid};
use hidden_sir_core::simulate_ctmc;
use hidden_sir_core::threshold::{expectation_under_invgamma, invgamma_from_params, lambda_discrete};

type Named = (&'static str, fn(f64) -> f64);

fn hidden_path(p: &Preset, horizon: f64, seed: u64, stride: usize) -> SimPath {
    let grid = TimeGrid::with_horizon(p.dt, horizon).unwrap();
    let alpha = simulate_ctmc(&p.spec, p.init.chain_index, &grid, seed).unwrap();
    let sys = make_hidden_system(&p.params, &p.model, &p.spec, &alpha).unwrap();
    let init = [p.init.state.s, p.init.state.i];
    record_path(&sys, &init, &grid, BrownianStream::new(2, grid.dt(), seed), stride).unwrap()
}

#[test]
fn boundary_averages_match_quadrature() {
    let p = example1();
    let law = invgamma_from_params(&p.params);
    let sys = make_boundary_system(&p.params);
    let grid = TimeGrid::with_horizon(1e-3, 1e4).unwrap();
    let fns: [Named; 3] = [
        ("y", |y| y),
        ("y/(1+y)", |y| y / (1.0 + y)),
        ("y/(0.3+y)", |y| y / (0.3 + y)),
    ];
    // Batch means over 100 blocks of length 100 after a burn-in of 100.
    let mut batches = vec![[0.0f64; 3]; 100];
    let mut counts = [0usize; 100];
    integrate(
        &sys,
        &[law.mean()],
        &grid,
        BrownianStream::new(1, grid.dt(), 77),
        |_, t, x| {
            if t < 100.0 {
                return;
            }
            let b = (((t - 100.0) / 99.0) as usize).min(99);
            for (slot, (_, g)) in batches[b].iter_mut().zip(&fns) {
                *slot += g(x[0]);
            }
            counts[b] += 1;
        },
    )
    .unwrap();
    for (j, (name, g)) in fns.iter().enumerate() {
        let means: Vec<f64> = batches.iter().zip(&counts).map(|(b, &c)| b[j] / c as f64).collect();
        let (mc, sd) = mean_sd(&means);
        let se = sd / (means.len() as f64).sqrt();
        let exact = expectation_under_invgamma(g, &law, 1e-10).unwrap().value;
        assert!(
            (mc - exact).abs() <= 3.0 * se,
            "{name}: simulated {mc} ± {se}, quadrature {exact}"
        );
    }
}

#[test]
fn per_seed_slopes_cover_lambda() {
    let p = example1();
    let lambda = lambda_discrete(&p.params, &p.model, &p.spec).unwrap().lambda;
    let inside = replicate(500, 100, |seed| {
        let path = hidden_path(&p, 500.0, seed, 10);
        let est = lyapunov_slope(&path, 50.0)?;
        assert!(est.n_points >= MIN_WINDOW_POINTS);
        Ok((est.slope - lambda).abs() <= 3.0 * est.stderr)
    })
    .unwrap();
    let hits = inside.iter().filter(|&&b| b).count();
    assert!(hits >= 95, "{hits}/100 seeds within three standard errors");
}

#[test]
fn moments_stay_bounded() {
    let p = example1();
    let paths = replicate(700, 200, |seed| Ok(hidden_path(&p, 40.0, seed, 100))).unwrap();
    let check = moment_check(&paths, 0.5, &p.params).unwrap();
    assert!(check.bounded, "{check:?}");
}

#[test]
fn permanent_occupation_avoids_the_axis() {
    let p = example2();
    let paths = replicate(900, 4, |seed| Ok(hidden_path(&p, 200.0, seed, 10))).unwrap();
    let h = occupation_histogram(
        &paths,
        BinSpec::new(0.0, 20.0, 40).unwrap(),
        BinSpec::new(0.0, 10.0, 40).unwrap(),
        20.0,
    )
    .unwrap();
    assert!((h.total_mass() - 1.0).abs() < 1e-12);
    assert!(h.bottom_row_mass() < 0.01, "mass near I = 0: {}", h.bottom_row_mass());
}

#[test]
fn extinct_occupation_matches_boundary_law() {
    let p = example1();
    let law = invgamma_from_params(&p.params);
    let paths = replicate(950, 1, |seed| Ok(hidden_path(&p, 1e4, seed, 10))).unwrap();
    let s_bins = BinSpec::new(0.0, 2.0, 20).unwrap();
    let h = occupation_histogram(&paths, s_bins, BinSpec::new(0.0, 1.0, 10).unwrap(), 100.0).unwrap();
    assert!((h.bottom_row_mass() - 1.0).abs() < 1e-12);
    let cdf = |y: f64| {
        use statrs::distribution::{ContinuousCDF, InverseGamma};
        InverseGamma::new(law.shape(), law.scale()).unwrap().cdf(y)
    };
    let l1: f64 = h
        .s_marginal()
        .iter()
        .zip(s_bins.masses_from_cdf(cdf))
        .map(|(a, b)| (a - b).abs())
        .sum();
    assert!(l1 < 0.05, "L1 = {l1}");
}
