//! Experiment configuration: TOML sections with defaults, budget
//! resolution, and the config hash stamped on every artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mol_core::command::CommandBounds;
use mol_core::ppo::TrainerConfig;
use mol_core::reward::RewardConfig;
use mol_core::selector::{AdrConfig, MoeadConfig, OperatorSchedule, SelectorConfig, SelectorKind};
use mol_core::surrogate::Scenario;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub scenario: Scenario,
    pub selector: SelectorKind,
    /// Master seed; per-trial, per-generation and per-simulation streams are
    /// derived from it.
    pub seed: u64,
    pub trials: u32,
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            scenario: Scenario::Nominal,
            selector: SelectorKind::Nsga2,
            seed: 1,
            trials: 1,
            out_dir: PathBuf::from("results"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    /// Population size n: commands per generation.
    pub population: usize,
    /// Rollouts m per generation; every rollout simulates all n commands.
    pub rollouts_per_generation: u32,
    /// RL updates after each rollout.
    pub updates_per_rollout: u32,
    /// Generations k; derived from the total budget when omitted.
    pub generations: Option<u32>,
    pub episode_steps: usize,
    /// Total simulation budget; must equal n * m * k when all are given.
    pub total_simulations: Option<u64>,
}

/// Desk-scale generation count used when neither generations nor a total
/// budget is configured.
pub const DEFAULT_GENERATIONS: u32 = 40;

impl Default for BudgetSection {
    /// Desk-scale budget: a full trial completes in minutes on one core.
    fn default() -> Self {
        Self {
            population: 20,
            rollouts_per_generation: 6,
            updates_per_rollout: 2,
            generations: None,
            episode_steps: 200,
            total_simulations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoSection {
    pub hidden: Vec<usize>,
    pub nstep: usize,
    pub gamma: f64,
    pub clip: f64,
    pub exploration_std: f64,
    pub lr_initial: f64,
    pub lr_final: f64,
    /// Fraction of the simulation budget after which the learning rate
    /// drops to `lr_final`.
    pub lr_decay_fraction: f64,
    pub epochs: usize,
    pub minibatch: usize,
}

impl Default for PpoSection {
    fn default() -> Self {
        let t = TrainerConfig::default();
        Self {
            hidden: t.hidden,
            nstep: t.nstep,
            gamma: t.gamma,
            clip: t.clip,
            exploration_std: t.exploration_std,
            lr_initial: t.lr_initial,
            lr_final: t.lr_final,
            lr_decay_fraction: 2.0 / 3.0,
            epochs: t.epochs,
            minibatch: t.minibatch,
        }
    }
}

impl PpoSection {
    fn trainer_config(&self, total_simulations: u64) -> TrainerConfig {
        TrainerConfig {
            hidden: self.hidden.clone(),
            nstep: self.nstep,
            gamma: self.gamma,
            clip: self.clip,
            exploration_std: self.exploration_std,
            lr_initial: self.lr_initial,
            lr_final: self.lr_final,
            lr_decay_at_simulations: (total_simulations as f64 * self.lr_decay_fraction).round()
                as u64,
            epochs: self.epochs,
            minibatch: self.minibatch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub budget: BudgetSection,
    pub bounds: CommandBounds,
    pub schedule: OperatorSchedule,
    pub reward: Option<RewardConfig>,
    pub ppo: PpoSection,
    pub moead: MoeadConfig,
    pub adr: AdrConfig,
}

impl ExperimentConfig {
    /// Paper-scale preset: 50 commands, 6 rollouts, 150 generations of 400
    /// steps for the 45,000-simulation budget.
    pub fn paper_scale() -> Self {
        Self {
            budget: BudgetSection {
                population: 50,
                rollouts_per_generation: 6,
                updates_per_rollout: 2,
                generations: None,
                episode_steps: 400,
                total_simulations: Some(45_000),
            },
            ..Self::default()
        }
    }

    /// Tiny pipeline-liveness preset.
    pub fn smoke() -> Self {
        Self {
            budget: BudgetSection {
                population: 8,
                rollouts_per_generation: 2,
                updates_per_rollout: 2,
                generations: Some(3),
                episode_steps: 50,
                total_simulations: None,
            },
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Toml(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Toml(e.to_string()))
    }

    /// Validate, derive the budget identity (total = n * m * k) and freeze
    /// every derived quantity.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let mut config = self.clone();
        let n = config.budget.population as u64;
        let m = config.budget.rollouts_per_generation as u64;
        if n == 0 || m == 0 || config.budget.episode_steps == 0 {
            return Err(HarnessError::Config(
                "population, rollouts and episode steps must be positive".into(),
            ));
        }
        if config.budget.updates_per_rollout == 0 {
            return Err(HarnessError::Config("updates per rollout must be positive".into()));
        }
        let per_generation = n * m;
        let (generations, total) = match (config.budget.generations, config.budget.total_simulations)
        {
            (Some(k), Some(total)) => {
                if k as u64 * per_generation != total {
                    return Err(HarnessError::Config(format!(
                        "budget mismatch: population {n} x rollouts {m} x generations {k} != total {total}"
                    )));
                }
                (k, total)
            }
            (Some(k), None) => (k, k as u64 * per_generation),
            (None, Some(total)) => {
                if total == 0 || total % per_generation != 0 {
                    return Err(HarnessError::Config(format!(
                        "total budget {total} is not a whole number of generations of {per_generation} simulations"
                    )));
                }
                ((total / per_generation) as u32, total)
            }
            (None, None) => {
                (DEFAULT_GENERATIONS, DEFAULT_GENERATIONS as u64 * per_generation)
            }
        };
        if generations == 0 {
            return Err(HarnessError::Config("budget must allow at least one generation".into()));
        }
        config.budget.generations = Some(generations);
        config.budget.total_simulations = Some(total);

        CommandBounds::new(config.bounds.min, config.bounds.max)?;
        let schedule = config.schedule.scaled_to(generations);
        schedule.validate()?;
        let trainer = config.ppo.trainer_config(total);
        trainer.validate()?;
        let reward = config.reward.unwrap_or_else(|| RewardConfig::for_bounds(&config.bounds));

        let objectives = mol_core::command::COMMAND_DIMS + 1;
        let selector_cfg = SelectorConfig {
            population_size: config.budget.population,
            bounds: config.bounds,
            schedule: schedule.clone(),
            objectives,
            moead: config.moead,
            adr: config.adr,
        };

        let hash = hash_config(&config)?;
        Ok(ResolvedExperiment {
            config,
            generations,
            total_simulations: total,
            schedule,
            trainer,
            selector_cfg,
            reward,
            hash,
        })
    }
}

fn hash_config(config: &ExperimentConfig) -> Result<String> {
    let canonical = config.to_toml()?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// A validated configuration with every derived quantity pinned.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub generations: u32,
    pub total_simulations: u64,
    pub schedule: OperatorSchedule,
    pub trainer: TrainerConfig,
    pub selector_cfg: SelectorConfig,
    pub reward: RewardConfig,
    /// SHA-256 of the canonical TOML serialization.
    pub hash: String,
}

impl ResolvedExperiment {
    pub fn scenario(&self) -> Scenario {
        self.config.run.scenario
    }

    pub fn selector(&self) -> SelectorKind {
        self.config.run.selector
    }

    pub fn population(&self) -> usize {
        self.config.budget.population
    }

    pub fn rollouts(&self) -> u32 {
        self.config.budget.rollouts_per_generation
    }

    pub fn updates_per_rollout(&self) -> u32 {
        self.config.budget.updates_per_rollout
    }

    pub fn episode_steps(&self) -> usize {
        self.config.budget.episode_steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_resolves_to_desk_scale() {
        let resolved = ExperimentConfig::default().resolve().unwrap();
        assert_eq!(resolved.generations, 40);
        assert_eq!(resolved.total_simulations, 20 * 6 * 40);
        assert_eq!(resolved.trainer.lr_decay_at_simulations, 3200);
        assert_eq!(resolved.schedule.breakpoints, vec![0, 13, 26]);
    }

    #[test]
    fn paper_scale_derives_150_generations() {
        let resolved = ExperimentConfig::paper_scale().resolve().unwrap();
        assert_eq!(resolved.generations, 150);
        assert_eq!(resolved.total_simulations, 45_000);
        assert_eq!(resolved.schedule.breakpoints, vec![0, 50, 100]);
        assert_eq!(resolved.trainer.lr_decay_at_simulations, 30_000);
    }

    #[test]
    fn inconsistent_budget_is_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.budget.total_simulations = Some(999);
        assert!(cfg.resolve().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.budget.generations = None;
        cfg.budget.total_simulations = Some(20 * 6 * 10 + 1);
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn smoke_preset_resolves() {
        let resolved = ExperimentConfig::smoke().resolve().unwrap();
        assert_eq!(resolved.generations, 3);
        assert_eq!(resolved.total_simulations, 48);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default().resolve().unwrap();
        let b = ExperimentConfig::default().resolve().unwrap();
        assert_eq!(a.hash, b.hash);
        let mut cfg = ExperimentConfig::default();
        cfg.run.seed = 2;
        let c = cfg.resolve().unwrap();
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::paper_scale();
        let text = cfg.to_toml().unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[run]\nscenario = \"nominal\"\nnot_a_key = 3\n";
        assert!(toml::from_str::<ExperimentConfig>(text).is_err());
    }
}
