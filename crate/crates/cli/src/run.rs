//! Experiment runners, one per [`Kind`].

use crate::config::{ConfigError, DensitySystem, ExperimentConfig, Kind};
use crate::output::{num, provenance, seed_range, write_csv, write_text};
use hidden_sir_core::analysis::{
    extinction_verdict, lyapunov_slope, occupation_histogram, permanence_means, BinSpec, LyapunovEstimate, Verdict,
};
use hidden_sir_core::chain::{cumulative, simulate_ctmc, ChainPath};
use hidden_sir_core::epidemic::{cosimulate, make_filtered_system, make_hidden_system, make_predicted_system};
use hidden_sir_core::sde::{record_path, replicate, BrownianStream, FnNoise, SimPath};
use hidden_sir_core::threshold::{
    classify_prediction, lambda_discrete, lambda_predicted, Classification, ThresholdReport,
};
use std::fmt;
use std::path::PathBuf;

/// Final `I` below this counts as extinct in the comparison table.
const EXTINCT_LEVEL: f64 = 1e-6;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(hidden_sir_core::Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<hidden_sir_core::Error> for RunError {
    fn from(e: hidden_sir_core::Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Files written and a short human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let kind = cfg.kind.ok_or_else(|| ConfigError {
        path: "kind".into(),
        reason: "no experiment kind given".into(),
    })?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    match kind {
        Kind::Simulate => simulate(cfg),
        Kind::Threshold => threshold(cfg),
        Kind::Compare => compare(cfg),
        Kind::Sweep => sweep(cfg),
        Kind::Density => density(cfg),
    }
}

/// Everything simulated for one seed.
struct SeedRun {
    alpha: ChainPath,
    /// Cumulative observation of the hidden chain, one entry per grid point.
    y: Vec<f64>,
    hidden: SimPath,
    filtered: SimPath,
    /// Observation the filtered system saw (equal to `y` when co-simulated).
    filtered_y: Vec<f64>,
    predicted: Vec<SimPath>,
}

fn simulate_seed(cfg: &ExperimentConfig, seed: u64) -> hidden_sir_core::Result<SeedRun> {
    let grid = &cfg.grid;
    let (alpha, y, hidden, filtered, filtered_y) = if cfg.cosimulate {
        let run = cosimulate(
            &cfg.params,
            &cfg.model,
            &cfg.spec,
            &cfg.init,
            grid,
            seed,
            cfg.stride,
            cfg.positivity_floor,
        )?;
        let y = cumulative(&run.observation);
        (run.alpha, y.clone(), run.hidden, run.filtered, y)
    } else {
        // The filter runs on its own innovation noise, independent of the
        // hidden chain; its implied observation is ∫ḡ dt + W̄.
        let alpha = simulate_ctmc(&cfg.spec, cfg.init.chain_index, grid, seed)?;
        let sys = make_hidden_system(&cfg.params, &cfg.model, &cfg.spec, &alpha)?.with_floor(cfg.positivity_floor);
        let s0 = [cfg.init.state.s, cfg.init.state.i];
        let hidden = record_path(&sys, &s0, grid, BrownianStream::new(2, grid.dt(), seed), cfg.stride)?;
        let on_grid = alpha.on_grid(grid);
        let g = cfg.spec.obs_map();
        let dt = grid.dt();
        let mut stream = BrownianStream::new(3, dt, seed);
        let mut dy_hidden = Vec::with_capacity(grid.n_steps());
        let mut dy_filtered = Vec::with_capacity(grid.n_steps());
        let noise = FnNoise::new(3, |k: usize, x: &[f64], dw: &mut [f64]| {
            stream.next_into(dw);
            dy_hidden.push(g[on_grid[k]] * dt + dw[2]);
            let g_bar: f64 = g.iter().zip(&x[2..]).map(|(a, b)| a * b).sum();
            dy_filtered.push(g_bar * dt + dw[2]);
        });
        let fsys = make_filtered_system(&cfg.params, &cfg.model, &cfg.spec).with_floor(cfg.positivity_floor);
        let mut x0 = s0.to_vec();
        x0.extend_from_slice(cfg.init.filter.weights());
        let filtered = record_path(&fsys, &x0, grid, noise, cfg.stride)?;
        (
            alpha,
            cumulative(&dy_hidden),
            hidden,
            filtered,
            cumulative(&dy_filtered),
        )
    };
    let s0 = [cfg.init.state.s, cfg.init.state.i];
    let predicted = cfg
        .predicted
        .iter()
        .map(|&m| {
            let sys = make_predicted_system(&cfg.params, &cfg.model, m)?.with_floor(cfg.positivity_floor);
            record_path(&sys, &s0, grid, BrownianStream::new(2, grid.dt(), seed), cfg.stride)
        })
        .collect::<hidden_sir_core::Result<Vec<_>>>()?;
    Ok(SeedRun {
        alpha,
        y,
        hidden,
        filtered,
        filtered_y,
        predicted,
    })
}

fn path_rows<'a>(
    path: &'a SimPath,
    y: &'a [f64],
    signal: impl Fn(f64) -> Option<f64> + 'a,
) -> impl Iterator<Item = Vec<String>> + 'a {
    (0..path.n_rows()).map(move |r| {
        let t = path.time(r);
        let mut row = vec![num(t)];
        row.extend(path.row(r).iter().map(|&v| num(v)));
        if let Some(a) = signal(t) {
            row.push(num(a));
        }
        row.push(num(y[path.step_of(r)]));
        row
    })
}

fn simulate(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    // Each job writes its own files; i/o failures are kept apart from numerical ones.
    let per_seed = replicate(cfg.base_seed, cfg.seed_count, |seed| {
        let run = simulate_seed(cfg, seed)?;
        Ok(write_seed(cfg, seed, &run))
    })?;
    let mut files = Vec::new();
    for written in per_seed {
        files.extend(written?);
    }
    Ok(RunReport {
        summary: format!("wrote {} path files to {}\n", files.len(), cfg.out_dir.display()),
        files,
    })
}

fn write_seed(cfg: &ExperimentConfig, seed: u64, run: &SeedRun) -> std::io::Result<Vec<PathBuf>> {
    let prov = provenance(cfg, Kind::Simulate, &seed.to_string());
    let mut files = Vec::new();
    let states = cfg.spec.states();

    let path = cfg.out_dir.join(format!("paths_hidden_{seed}.csv"));
    let header: Vec<String> = ["t", "S", "I", "alpha", "y"].iter().map(|s| s.to_string()).collect();
    let alpha = &run.alpha;
    write_csv(
        &path,
        &prov,
        &header,
        path_rows(&run.hidden, &run.y, |t| Some(states[alpha.state_at(t)])),
    )?;
    files.push(path);

    let path = cfg.out_dir.join(format!("paths_filtered_{seed}.csv"));
    let mut header = vec!["t".to_string()];
    header.extend(run.filtered.labels().iter().cloned());
    header.push("y".into());
    write_csv(
        &path,
        &prov,
        &header,
        path_rows(&run.filtered, &run.filtered_y, |_| None),
    )?;
    files.push(path);

    for (j, (p, &m)) in run.predicted.iter().zip(&cfg.predicted).enumerate() {
        let path = cfg.out_dir.join(format!("paths_predicted{j}_{seed}.csv"));
        let header: Vec<String> = ["t", "S", "I", "alpha", "y"].iter().map(|s| s.to_string()).collect();
        write_csv(&path, &prov, &header, path_rows(p, &run.y, move |_| Some(m)))?;
        files.push(path);
    }
    Ok(files)
}

/// Threshold report plus the configured predicted values.
struct Thresholds {
    report: ThresholdReport,
    predicted: Vec<(f64, f64, Classification)>,
}

fn thresholds(cfg: &ExperimentConfig) -> Result<Thresholds, RunError> {
    let report = lambda_discrete(&cfg.params, &cfg.model, &cfg.spec)?;
    let predicted = cfg
        .predicted
        .iter()
        .map(|&m| {
            let lp = lambda_predicted(&cfg.params, &cfg.model, m)?;
            Ok((m, lp, classify_prediction(lp, report.lambda, report.tie_tolerance)))
        })
        .collect::<hidden_sir_core::Result<Vec<_>>>()?;
    Ok(Thresholds { report, predicted })
}

fn threshold(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let t = thresholds(cfg)?;
    let mut body = t.report.to_record();
    for (j, (m, lp, c)) in t.predicted.iter().enumerate() {
        body.push_str(&format!(
            "predicted.{j}.m={}\npredicted.{j}.lambda_pre={}\npredicted.{j}.classification={c}\n",
            num(*m),
            num(*lp)
        ));
    }
    let path = cfg.out_dir.join("threshold.txt");
    write_text(&path, &provenance(cfg, Kind::Threshold, "none"), &body)?;
    Ok(RunReport {
        files: vec![path],
        summary: body,
    })
}

/// Per-seed statistics of one system.
#[derive(Debug, Clone, Copy)]
struct PathStats {
    slope: Option<LyapunovEstimate>,
    i_mean: f64,
    final_i: f64,
}

fn path_stats(path: &SimPath, burn_in: f64) -> hidden_sir_core::Result<PathStats> {
    Ok(PathStats {
        slope: lyapunov_slope(path, burn_in).ok(),
        i_mean: permanence_means(path, burn_in)?.1,
        final_i: path.last()[path.column_index("I").unwrap_or(1)],
    })
}

fn compare(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let t = thresholds(cfg)?;
    let burn_in = cfg.burn_in();
    let stats = replicate(cfg.base_seed, cfg.seed_count, |seed| {
        let run = simulate_seed(cfg, seed)?;
        let mut s = vec![path_stats(&run.hidden, burn_in)?, path_stats(&run.filtered, burn_in)?];
        for p in &run.predicted {
            s.push(path_stats(p, burn_in)?);
        }
        Ok(s)
    })?;
    let floor = cfg.permanence_floor.unwrap_or(f64::INFINITY);
    let mut systems: Vec<(String, String, f64, String)> = vec![
        ("hidden".into(), String::new(), t.report.lambda, "reference".into()),
        ("filtered".into(), String::new(), t.report.lambda, "reference".into()),
    ];
    for (j, (m, lp, c)) in t.predicted.iter().enumerate() {
        systems.push((format!("predicted{j}"), num(*m), *lp, c.to_string()));
    }
    let header: Vec<String> = [
        "system",
        "m",
        "threshold",
        "classification",
        "verdict",
        "mean_slope",
        "slope_stderr",
        "z",
        "min_I_mean",
        "extinct_fraction",
        "seeds",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::new();
    for (col, (name, m, lambda, class)) in systems.into_iter().enumerate() {
        let per: Vec<PathStats> = stats.iter().map(|s| s[col]).collect();
        let estimates: Vec<LyapunovEstimate> = per.iter().filter_map(|p| p.slope).collect();
        let min_mean = per.iter().map(|p| p.i_mean).fold(f64::INFINITY, f64::min);
        let extinct = per.iter().filter(|p| p.final_i < EXTINCT_LEVEL).count() as f64 / per.len() as f64;
        let (verdict, slope, se, z) = match LyapunovEstimate::pool(&estimates) {
            Ok(pool) => {
                let v = extinction_verdict(&pool, lambda, Some(min_mean), floor);
                (v.verdict, num(pool.slope), num(pool.stderr), num(v.z))
            }
            Err(_) => {
                let v = if lambda > 0.0 && min_mean > floor {
                    Verdict::Permanence
                } else {
                    Verdict::Indeterminate
                };
                (v, String::new(), String::new(), String::new())
            }
        };
        rows.push(vec![
            name,
            m,
            num(lambda),
            class,
            verdict.to_string(),
            slope,
            se,
            z,
            num(min_mean),
            num(extinct),
            per.len().to_string(),
        ]);
    }
    let path = cfg.out_dir.join("compare.csv");
    write_csv(
        &path,
        &provenance(cfg, Kind::Compare, &seed_range(cfg)),
        &header,
        rows.clone(),
    )?;
    let mut summary = format!(
        "{:<12} {:>5} {:>12} {:>14} {:>14}\n",
        "system", "m", "threshold", "classification", "verdict"
    );
    for r in &rows {
        let lambda: f64 = r[2].parse().unwrap_or(f64::NAN);
        summary.push_str(&format!(
            "{:<12} {:>5} {:>12.4} {:>14} {:>14}\n",
            r[0], r[1], lambda, r[3], r[4]
        ));
    }
    Ok(RunReport {
        files: vec![path],
        summary,
    })
}

fn sweep(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| ConfigError {
        path: "sweep".into(),
        reason: "the sweep experiment needs a [sweep] section".into(),
    })?;
    let n = cfg.spec.len();
    let mut header = vec!["parameter".to_string(), "value".into()];
    header.extend(ThresholdReport::csv_header(n));
    let mut rows = Vec::with_capacity(spec.values.len());
    for (j, &v) in spec.values.iter().enumerate() {
        let params = spec.parameter.apply(&cfg.params, v).map_err(|e| ConfigError {
            path: format!("sweep.values[{j}]"),
            reason: e.to_string(),
        })?;
        let report = lambda_discrete(&params, &cfg.model, &cfg.spec)?;
        let mut row = vec![spec.parameter.name().to_string(), num(v)];
        row.extend(report.csv_fields());
        rows.push(row);
    }
    let path = cfg.out_dir.join("sweep.csv");
    write_csv(&path, &provenance(cfg, Kind::Sweep, "none"), &header, rows)?;
    Ok(RunReport {
        summary: format!("swept {} over {} values\n", spec.parameter.name(), spec.values.len()),
        files: vec![path],
    })
}

fn density(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let d = &cfg.density;
    let paths = replicate(cfg.base_seed, cfg.seed_count, |seed| {
        let run = simulate_seed(cfg, seed)?;
        Ok(match d.system {
            DensitySystem::Hidden => run.hidden,
            DensitySystem::Filtered => run.filtered,
            DensitySystem::Predicted(j) => run.predicted.into_iter().nth(j).expect("validated index"),
        })
    })?;
    let s_bins = BinSpec::new(0.0, d.s_max, d.s_bins)?;
    let i_bins = BinSpec::new(0.0, d.i_max, d.i_bins)?;
    let h = occupation_histogram(&paths, s_bins, i_bins, cfg.burn_in())?;
    let (sc, ic) = (s_bins.centres(), i_bins.centres());
    let rows = (0..s_bins.bins).flat_map(|s| {
        let (sc, ic, h) = (&sc, &ic, &h);
        (0..i_bins.bins).map(move |i| vec![num(sc[s]), num(ic[i]), num(h.at(s, i))])
    });
    let header: Vec<String> = ["S_bin", "I_bin", "density"].iter().map(|s| s.to_string()).collect();
    let path = cfg.out_dir.join("density.csv");
    write_csv(&path, &provenance(cfg, Kind::Density, &seed_range(cfg)), &header, rows)?;
    Ok(RunReport {
        summary: format!(
            "occupation density from {} samples; mass in the lowest I row {}\n",
            h.samples,
            num(h.bottom_row_mass())
        ),
        files: vec![path],
    })
}
