//! Peer-consistency elicitation: payment mechanisms, belief-updating agents,
//! a round-based simulator, and numeric checks of the mechanisms' incentive
//! and convergence properties.

pub mod agents;
pub mod analysis;
pub mod config;
pub mod error;
pub mod mechanism;
pub mod presets;
pub mod prob;
pub mod sampling;
pub mod sim;
pub mod text;
pub mod worked;

pub use error::{Error, Result};
pub use mechanism::{Payment, PaymentSpec, ScoringRule};
pub use prob::{AnswerSpace, BeliefState, DirichletParams, Distribution};
pub use sim::{run_simulation, SimConfig, SimTrace};
