//! Strong-order integration of scalar-noise SDEs with the stochastic Heun
//! (modified Runge-Kutta) scheme, Euler-Maruyama and Milstein baselines, a
//! catalogue of problems with closed-form solutions, and a Monte-Carlo
//! harness that measures strong convergence order.
//!
//! ```
//! use heun_sde::{integrate, lookup, Channel, RngStream, SchemeId, SignSequence, TimeGrid, WienerPath};
//!
//! let problem = lookup("autonomous").unwrap().problem;
//! let grid = TimeGrid::unit(256).unwrap();
//! let path = WienerPath::sample(grid, &mut RngStream::derive(1, 0, Channel::Wiener, 0));
//! let signs = SignSequence::rademacher(RngStream::derive(1, 0, Channel::Signs, 256));
//! let trajectory = integrate(&problem, &path, SchemeId::RkPaper, signs).unwrap();
//! let exact = (1.0 + path.total_displacement()).sinh();
//! assert!((trajectory.final_state()[0] - exact).abs() < 0.1);
//! ```

pub mod cli;
pub mod convergence;
pub mod error;
pub mod problems;
pub mod rng;
pub mod steppers;
pub mod wiener;

pub use convergence::{
    fit_slope, run_experiment, run_experiment_on, strong_error, ConvergenceReport, ExperimentConfig,
    LevelRecord, SignPolicy, SlopeFit,
};
pub use error::{Result, SdeError};
pub use problems::{
    auxiliary, catalogue, ito_residual, lookup, stratonovich_to_ito, CatalogueEntry, Domain,
    ExpectedOrder, Interpretation, SdeProblem,
};
pub use rng::{Channel, RngStream, StreamLabel};
pub use steppers::{
    euler_maruyama_step, integrate, integrate_final, milstein_step, rk_step, SchemeId, SignMode,
    SignSequence, Trajectory,
};
pub use wiener::{bridge_split, TimeGrid, WienerPath, INCREMENT_QUANTUM};

/// Shortest round-trip exponent form used in every CSV writer (`6.25e-2`).
pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}
