//! Stochastic SIR dynamics with a hidden-status class observed through a
//! Wonham filter: simulation, thresholds and trajectory statistics.

pub mod analysis;
pub mod chain;
pub mod epidemic;
pub mod error;
pub mod filter;
pub mod presets;
pub mod quadrature;
pub mod sde;
pub mod threshold;

pub use analysis::{
    barycenter_deviation, extinction_verdict, lyapunov_slope, moment_check, occupation_histogram, pairwise_sum,
    permanence_means, BinSpec, Histogram1d, LyapunovEstimate, OccupationHistogram, Verdict, VerdictRecord,
};
pub use chain::{observation_path, simulate_ctmc, stationary_distribution, ChainPath, ChainSpec};
pub use epidemic::{
    cosimulate, incidence_eval, make_boundary_system, make_filtered_system, make_hidden_system, make_predicted_system,
    BoundarySystem, CoSimulation, Coefficient, EpidemicParams, EpidemicState, FilteredSystem, HiddenSystem,
    IncidenceModel, InitialCondition, RateFunction,
};
pub use error::{Error, Result};
pub use filter::{
    filter_l1_distance, particle_filter_step, project_simplex, wonham_step, ChainTransitionSampler, FilterState,
    ParticleCloud, WonhamSystem,
};
pub use sde::{
    brownian_increments, euler_maruyama_step, record_path, replicate, simulate_path, BrownianStream, NoiseBundle,
    SdeSystem, SimPath, TimeGrid,
};
pub use threshold::{
    classify_prediction, expectation_under_invgamma, invgamma_from_params, lambda_discrete, lambda_predicted,
    monotone_prediction_bounds, two_state_filter_density, Classification, InvGammaLaw, ThresholdReport,
    TwoStateFilterDensity,
};
