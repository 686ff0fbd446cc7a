//! Equilibrium solver and simulator for a frictional labor market with two
//! firm types (prejudiced and non-prejudiced) and workers heterogeneous in
//! race, productivity, wealth, and benefit eligibility.
//!
//! The crate solves the stationary equilibrium, computes calibration moments,
//! runs counterfactual experiments with consumption-equivalent welfare, and
//! simulates business-cycle dynamics from perfect-foresight transition paths.

pub mod bargain;
pub mod distribution;
pub mod economy;
pub mod equilibrium;
pub mod error;
pub mod field;
pub mod firm;
pub mod household;
pub mod markov;
pub mod matching;
pub mod params;
pub mod root;
pub mod state;

pub use economy::{Economy, Flows, Prices};
pub use equilibrium::{solve_steady_state, solve_steady_state_warm, SteadyState};
pub use error::{Result, SmeqError};
pub use params::{Config, LevelNorm, ModelParams, Numerics};
pub use state::{EmpState, Race, Sector, StateSpace};
