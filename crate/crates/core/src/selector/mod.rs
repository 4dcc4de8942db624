//! Curriculum selection: which commands the learner trains on each
//! generation.
//!
//! Four strategies share one interface: NSGA-II and MOEA/D drive selection
//! from the multi-objective fitness, while ADR and Random are baselines that
//! ignore fitness for sampling but keep a shadow NSGA-II archive so their
//! "population" can be evaluated on equal terms.
//!
//! A selector is single-writer: one curriculum loop owns it, submits one
//! evaluation batch per generation, and reads the next command batch back.
//! All state is serializable for checkpointing.

pub mod adr;
pub mod moead;
pub mod nsga2;
pub mod random;
pub mod schedule;
pub mod sorting;
pub mod variation;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::{Command, CommandBounds};
use crate::error::{Error, Result};
use crate::reward::MoFitness;

pub use adr::{AdrConfig, AdrSelector, AdrState, Edge};
pub use moead::{tchebycheff, weight_vectors, MoeadConfig, MoeadSelector};
pub use nsga2::{nsga2_next_generation, Nsga2Selector};
pub use random::{random_select, RandomSelector};
pub use schedule::{OperatorParams, OperatorSchedule};
pub use sorting::{crowding_distance, fast_non_dominated_sort, rank_and_crowding, select_survivors};
pub use variation::{gaussian_mutation, make_offspring, sample_command, uniform_crossover};

/// One command with its evaluation state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub command: Command,
    pub fitness: Option<MoFitness>,
    pub birth_generation: u32,
    /// Mean per-step positive reward of the final rollout; the scalar the
    /// fitness was derived from.
    pub mean_positive_reward: Option<f64>,
}

impl Individual {
    pub fn unevaluated(command: Command, birth_generation: u32) -> Self {
        Self { command, fitness: None, birth_generation, mean_positive_reward: None }
    }

    pub fn attach(&mut self, eval: CommandEvaluation) {
        self.fitness = Some(eval.fitness);
        self.mean_positive_reward = Some(eval.mean_positive_reward);
    }
}

/// Result of evaluating one command over its final rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEvaluation {
    pub fitness: MoFitness,
    pub mean_positive_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    Nsga2,
    Moead,
    Adr,
    Random,
}

impl SelectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            SelectorKind::Nsga2 => "nsga2",
            SelectorKind::Moead => "moead",
            SelectorKind::Adr => "adr",
            SelectorKind::Random => "random",
        }
    }
}

impl std::str::FromStr for SelectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nsga2" | "nsga-ii" => Ok(SelectorKind::Nsga2),
            "moead" | "moea/d" => Ok(SelectorKind::Moead),
            "adr" => Ok(SelectorKind::Adr),
            "random" => Ok(SelectorKind::Random),
            other => Err(Error::Config(format!("unknown selector '{other}'"))),
        }
    }
}

impl std::fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Constants shared by selector construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub population_size: usize,
    pub bounds: CommandBounds,
    pub schedule: OperatorSchedule,
    pub objectives: usize,
    #[serde(default)]
    pub moead: MoeadConfig,
    #[serde(default)]
    pub adr: AdrConfig,
}

/// The selector strategies behind one dispatch point, serializable as a
/// tagged enum for checkpointing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum AnySelector {
    Nsga2(Nsga2Selector),
    Moead(MoeadSelector),
    Adr(AdrSelector),
    Random(RandomSelector),
}

impl AnySelector {
    pub fn new(kind: SelectorKind, cfg: &SelectorConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(match kind {
            SelectorKind::Nsga2 => AnySelector::Nsga2(Nsga2Selector::new(
                cfg.population_size,
                cfg.bounds,
                cfg.schedule.clone(),
                rng,
            )?),
            SelectorKind::Moead => AnySelector::Moead(MoeadSelector::new(
                cfg.population_size,
                cfg.objectives,
                cfg.bounds,
                cfg.schedule.clone(),
                cfg.moead,
                rng,
            )?),
            SelectorKind::Adr => {
                AnySelector::Adr(AdrSelector::new(cfg.population_size, cfg.bounds, cfg.adr, rng)?)
            }
            SelectorKind::Random => {
                AnySelector::Random(RandomSelector::new(cfg.population_size, cfg.bounds, rng)?)
            }
        })
    }

    pub fn kind(&self) -> SelectorKind {
        match self {
            AnySelector::Nsga2(_) => SelectorKind::Nsga2,
            AnySelector::Moead(_) => SelectorKind::Moead,
            AnySelector::Adr(_) => SelectorKind::Adr,
            AnySelector::Random(_) => SelectorKind::Random,
        }
    }

    /// Commands to train on this generation.
    pub fn commands(&self) -> &[Individual] {
        match self {
            AnySelector::Nsga2(s) => s.commands(),
            AnySelector::Moead(s) => s.commands(),
            AnySelector::Adr(s) => s.commands(),
            AnySelector::Random(s) => s.commands(),
        }
    }

    /// Submit the evaluation batch for the current commands and advance one
    /// generation.
    pub fn submit(&mut self, evals: Vec<CommandEvaluation>, rng: &mut ChaCha8Rng) -> Result<()> {
        match self {
            AnySelector::Nsga2(s) => s.submit(evals, rng),
            AnySelector::Moead(s) => s.submit(evals, rng),
            AnySelector::Adr(s) => s.submit(evals, rng),
            AnySelector::Random(s) => s.submit(evals, rng),
        }
    }

    /// Retained trade-off population used for the population evaluation set.
    pub fn population(&self) -> &[Individual] {
        match self {
            AnySelector::Nsga2(s) => s.population(),
            AnySelector::Moead(s) => s.population(),
            AnySelector::Adr(s) => s.population(),
            AnySelector::Random(s) => s.population(),
        }
    }

    pub fn generation(&self) -> u32 {
        match self {
            AnySelector::Nsga2(s) => s.generation(),
            AnySelector::Moead(s) => s.generation(),
            AnySelector::Adr(s) => s.generation(),
            AnySelector::Random(s) => s.generation(),
        }
    }
}
