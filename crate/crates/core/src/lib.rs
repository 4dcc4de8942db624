//! Multi-objective curriculum learning for velocity-command locomotion.
//!
//! Commands (vx, vy, wz) are normalized into an objective space on the unit
//! hypersphere, scored against the vertices of an inscribed simplex, and
//! selected for training by evolutionary multi-objective algorithms. A
//! deterministic surrogate environment and a from-scratch PPO learner close
//! the loop; the metrics module measures tracking accuracy and population
//! diversity.

pub mod command;
pub mod error;
pub mod metrics;
pub mod ppo;
pub mod reward;
pub mod rng;
pub mod selector;
pub mod surrogate;

pub use command::{Command, CommandBounds, ObjectiveSpace};
pub use error::{Error, Result};
pub use reward::{MoFitness, RewardConfig, StepOutcome};
pub use selector::{AnySelector, Individual, SelectorKind};
pub use surrogate::{Scenario, ScenarioSpec, SurrogateEnv, Trajectory};
