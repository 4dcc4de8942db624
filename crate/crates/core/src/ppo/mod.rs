//! From-scratch actor-critic PPO.

pub mod learner;
pub mod net;

pub use learner::{
    gradient_check, nstep_returns, ppo_gradient_check, ppo_loss_and_grads, value_network,
    ActionSample, GradCheckReport, PolicyNetwork, PpoLossStats, PpoTrainer, TrainerConfig,
    Transition, UpdateStats,
};
pub use net::{Adam, ForwardCache, Mlp};
