//! One trial: k generations of the curriculum loop, final evaluation on
//! both command sets, artifact persistence and checkpoint-resume.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mol_core::command::{Command, ObjectiveSpace};
use mol_core::metrics::{
    evaluate_controller, mean_reward, quadrant_density, EvaluationSet, MetricRecord,
};
use mol_core::ppo::PpoTrainer;
use mol_core::reward::mo_fitness;
use mol_core::rng;
use mol_core::selector::{AnySelector, CommandEvaluation};
use mol_core::surrogate::{simulate_command, ScenarioSpec, Trajectory, OBS_DIM};

use crate::config::ResolvedExperiment;
use crate::error::{HarnessError, Result};
use crate::persist::{
    read_json, write_json, write_metrics_csv, write_population_csv, Manifest, PopulationRow,
};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const POPULATION_FILE: &str = "population.csv";
pub const RESULT_FILE: &str = "result.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTIC_FILE: &str = "diagnostic.json";

/// Bookkeeping for one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub generation: u32,
    pub simulations: u64,
    pub updates: u32,
    pub per_rollout_mean_reward: Vec<f64>,
    pub mean_positive_reward: f64,
}

/// Summary persisted per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub version: u32,
    pub config_hash: String,
    pub scenario: String,
    pub selector: String,
    pub master_seed: u64,
    pub trial_index: u32,
    pub generations: u32,
    pub population_size: usize,
    pub episode_steps: usize,
    pub total_simulations: u64,
    pub simulations_run: u64,
    pub updates_run: u64,
    pub actor_parameters: usize,
    pub critic_parameters: usize,
    /// Rollout-level mean rewards in execution order (k * m values).
    pub per_rollout_mean_rewards: Vec<f64>,
    /// The same curve aggregated per generation.
    pub per_generation_mean_rewards: Vec<f64>,
    pub test_grid_mean_distance: f64,
    pub test_grid_excluded: usize,
    pub population_mean_distance: f64,
    pub quadrant_density: f64,
    pub artifacts: Vec<String>,
}

/// Serialized loop state; with the seed-derivation scheme this is all a
/// resumed run needs to reproduce the uninterrupted one bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub trial_index: u32,
    pub generation: u32,
    pub selector: AnySelector,
    pub trainer: PpoTrainer,
    pub seq: u64,
    pub records: Vec<MetricRecord>,
    pub population_log: Vec<PopulationRow>,
}

pub struct TrialRunner {
    resolved: ResolvedExperiment,
    trial_index: u32,
    trial_seed: u64,
    spec: ScenarioSpec,
    space: ObjectiveSpace,
    selector: AnySelector,
    trainer: PpoTrainer,
    generation: u32,
    seq: u64,
    records: Vec<MetricRecord>,
    population_log: Vec<PopulationRow>,
}

impl TrialRunner {
    pub fn new(resolved: ResolvedExperiment, trial_index: u32) -> Result<Self> {
        let trial_seed =
            rng::derive_seed(resolved.config.run.seed, &[rng::TAG_TRIAL, trial_index as u64]);
        let mut init_rng = rng::stream(trial_seed, &[rng::TAG_INIT, 0]);
        let selector =
            AnySelector::new(resolved.selector(), &resolved.selector_cfg, &mut init_rng)?;
        let mut net_rng = rng::stream(trial_seed, &[rng::TAG_INIT, 1]);
        let trainer = PpoTrainer::new(OBS_DIM, resolved.trainer.clone(), &mut net_rng)?;
        let spec = resolved.scenario().spec();
        let space = ObjectiveSpace::new(mol_core::command::COMMAND_DIMS)?;
        Ok(Self {
            resolved,
            trial_index,
            trial_seed,
            spec,
            space,
            selector,
            trainer,
            generation: 0,
            seq: 0,
            records: Vec::new(),
            population_log: Vec::new(),
        })
    }

    pub fn resume(resolved: ResolvedExperiment, checkpoint: Checkpoint) -> Result<Self> {
        if checkpoint.config_hash != resolved.hash {
            return Err(HarnessError::Config(format!(
                "checkpoint hash {} does not match config hash {}",
                checkpoint.config_hash, resolved.hash
            )));
        }
        let trial_seed = rng::derive_seed(
            resolved.config.run.seed,
            &[rng::TAG_TRIAL, checkpoint.trial_index as u64],
        );
        let spec = resolved.scenario().spec();
        let space = ObjectiveSpace::new(mol_core::command::COMMAND_DIMS)?;
        Ok(Self {
            resolved,
            trial_index: checkpoint.trial_index,
            trial_seed,
            spec,
            space,
            selector: checkpoint.selector,
            trainer: checkpoint.trainer,
            generation: checkpoint.generation,
            seq: checkpoint.seq,
            records: checkpoint.records,
            population_log: checkpoint.population_log,
        })
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn is_done(&self) -> bool {
        self.generation >= self.resolved.generations
    }

    pub fn trainer(&self) -> &PpoTrainer {
        &self.trainer
    }

    pub fn selector(&self) -> &AnySelector {
        &self.selector
    }

    fn push_record(&mut self, generation: u32, rollout: Option<u32>, metric: &str, value: f64) {
        self.records.push(MetricRecord {
            seq: self.seq,
            trial: self.trial_index,
            generation,
            rollout,
            metric: metric.to_string(),
            value,
            scenario: self.resolved.scenario().name().to_string(),
            selector: self.resolved.selector().name().to_string(),
        });
        self.seq += 1;
    }

    /// Simulate every population command for each rollout (workers draw
    /// from per-simulation streams, results fold in command order), update
    /// the learner after each rollout, and close the generation by scoring
    /// the final rollout and advancing the selector.
    pub fn step_generation(&mut self) -> Result<GenerationReport> {
        let g = self.generation;
        let commands: Vec<Command> =
            self.selector.commands().iter().map(|i| i.command).collect();
        let n = commands.len();
        let rollouts = self.resolved.rollouts();
        let updates_per_rollout = self.resolved.updates_per_rollout();
        let steps = self.resolved.episode_steps();

        let mut per_rollout_mean_reward = Vec::with_capacity(rollouts as usize);
        let mut final_mean_positive: Vec<f64> = Vec::new();
        let mut updates = 0u32;
        for rollout in 0..rollouts {
            let results: Vec<mol_core::Result<Trajectory>> = commands
                .par_iter()
                .enumerate()
                .map(|(i, &command)| {
                    let mut sim_rng = rng::stream(
                        self.trial_seed,
                        &[rng::TAG_SIMULATION, g as u64, rollout as u64, i as u64],
                    );
                    simulate_command(
                        &self.trainer.actor,
                        command,
                        &self.spec,
                        steps,
                        &self.resolved.reward,
                        true,
                        &mut sim_rng,
                    )
                })
                .collect();
            let mut trajectories = Vec::with_capacity(n);
            for result in results {
                let traj = result?;
                if let Some(fault) = &traj.fault {
                    return Err(HarnessError::TrialFault {
                        generation: g,
                        message: fault.clone(),
                    });
                }
                trajectories.push(traj);
            }
            self.trainer.record_simulations(n as u64);

            let rollout_mean = mean_reward(&trajectories)?;
            per_rollout_mean_reward.push(rollout_mean);
            self.push_record(g, Some(rollout), "mean_reward", rollout_mean);

            for update in 0..updates_per_rollout {
                let mut update_rng = rng::stream(
                    self.trial_seed,
                    &[rng::TAG_UPDATE, g as u64, rollout as u64, update as u64],
                );
                self.trainer.update(&trajectories, &mut update_rng)?;
                updates += 1;
            }

            if rollout + 1 == rollouts {
                final_mean_positive =
                    trajectories.iter().map(Trajectory::mean_positive_reward).collect();
            }
        }

        let evals: Vec<CommandEvaluation> = commands
            .iter()
            .zip(&final_mean_positive)
            .map(|(command, &reward)| {
                Ok(CommandEvaluation {
                    fitness: mo_fitness(
                        command,
                        reward,
                        &self.space,
                        &self.resolved.selector_cfg.bounds,
                    )?,
                    mean_positive_reward: reward,
                })
            })
            .collect::<mol_core::Result<_>>()?;
        let mean_positive_reward = final_mean_positive.iter().sum::<f64>() / n as f64;
        self.push_record(g, None, "mean_positive_reward", mean_positive_reward);

        let mut selector_rng =
            rng::stream(self.trial_seed, &[rng::TAG_SELECTOR, g as u64]);
        self.selector.submit(evals, &mut selector_rng)?;
        for individual in self.selector.population() {
            let fitness = individual.fitness.as_ref().map(|f| f.values.clone()).unwrap_or_default();
            let get = |i: usize| fitness.get(i).copied().unwrap_or(0.0);
            self.population_log.push(PopulationRow {
                generation: g,
                vx: individual.command.vx,
                vy: individual.command.vy,
                wz: individual.command.wz,
                f1: get(0),
                f2: get(1),
                f3: get(2),
                f4: get(3),
                mean_positive_reward: individual.mean_positive_reward.unwrap_or(0.0),
            });
        }
        self.generation += 1;

        Ok(GenerationReport {
            generation: g,
            simulations: n as u64 * rollouts as u64,
            updates,
            per_rollout_mean_reward,
            mean_positive_reward,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: 1,
            config_hash: self.resolved.hash.clone(),
            trial_index: self.trial_index,
            generation: self.generation,
            selector: self.selector.clone(),
            trainer: self.trainer.clone(),
            seq: self.seq,
            records: self.records.clone(),
            population_log: self.population_log.clone(),
        }
    }

    /// Final deterministic evaluation on the test grid and on the retained
    /// population.
    pub fn finalize(&mut self) -> Result<TrialResult> {
        let bounds = self.resolved.selector_cfg.bounds;
        let steps = self.resolved.episode_steps();
        let grid = EvaluationSet::test_grid(&bounds);
        let grid_eval = evaluate_controller(
            &self.trainer.actor,
            &grid,
            &self.spec,
            steps,
            &self.resolved.reward,
            rng::derive_seed(self.trial_seed, &[rng::TAG_EVAL, 1]),
        )?;
        let population_commands: Vec<Command> =
            self.selector.population().iter().map(|i| i.command).collect();
        let population_set = EvaluationSet::population(population_commands.clone());
        let population_eval = evaluate_controller(
            &self.trainer.actor,
            &population_set,
            &self.spec,
            steps,
            &self.resolved.reward,
            rng::derive_seed(self.trial_seed, &[rng::TAG_EVAL, 2]),
        )?;
        let density = quadrant_density(&population_commands, &bounds)?;

        let k = self.generation;
        self.push_record(k, None, "test_grid_mean_distance", grid_eval.mean_distance);
        self.push_record(k, None, "test_grid_excluded", grid_eval.excluded as f64);
        self.push_record(k, None, "population_mean_distance", population_eval.mean_distance);
        self.push_record(k, None, "quadrant_density", density);

        let per_rollout: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.metric == "mean_reward")
            .map(|r| r.value)
            .collect();
        let m = self.resolved.rollouts() as usize;
        let per_generation: Vec<f64> = per_rollout
            .chunks(m)
            .map(|chunk| chunk.iter().sum::<f64>() / chunk.len() as f64)
            .collect();

        Ok(TrialResult {
            version: 1,
            config_hash: self.resolved.hash.clone(),
            scenario: self.resolved.scenario().name().to_string(),
            selector: self.resolved.selector().name().to_string(),
            master_seed: self.resolved.config.run.seed,
            trial_index: self.trial_index,
            generations: self.generation,
            population_size: self.resolved.population(),
            episode_steps: steps,
            total_simulations: self.resolved.total_simulations,
            simulations_run: self.trainer.simulations_seen,
            updates_run: self.trainer.updates_done,
            actor_parameters: self.trainer.actor.param_count(),
            critic_parameters: self.trainer.critic.param_count(),
            per_rollout_mean_rewards: per_rollout,
            per_generation_mean_rewards: per_generation,
            test_grid_mean_distance: grid_eval.mean_distance,
            test_grid_excluded: grid_eval.excluded,
            population_mean_distance: population_eval.mean_distance,
            quadrant_density: density,
            artifacts: vec![
                CONFIG_FILE.to_string(),
                METRICS_FILE.to_string(),
                POPULATION_FILE.to_string(),
                CHECKPOINT_FILE.to_string(),
                RESULT_FILE.to_string(),
            ],
        })
    }

    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(CHECKPOINT_FILE), &self.checkpoint())?;
        write_metrics_csv(&dir.join(METRICS_FILE), &self.records)?;
        write_population_csv(&dir.join(POPULATION_FILE), &self.population_log)?;
        Ok(())
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.records
    }
}

/// Directory for one trial under the experiment output root.
pub fn trial_dir(out_dir: &Path, trial_index: u32) -> PathBuf {
    out_dir.join(format!("trial_{trial_index:03}"))
}

/// Run (or resume) one trial, persisting a checkpoint and the metric logs
/// after every generation and the full artifact set on completion.
pub fn run_trial(resolved: &ResolvedExperiment, trial_index: u32, dir: &Path) -> Result<TrialResult> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let checkpoint_path = dir.join(CHECKPOINT_FILE);
    let mut runner = if checkpoint_path.exists() {
        let checkpoint: Checkpoint = read_json(&checkpoint_path)?;
        TrialRunner::resume(resolved.clone(), checkpoint)?
    } else {
        TrialRunner::new(resolved.clone(), trial_index)?
    };

    std::fs::write(dir.join(CONFIG_FILE), resolved.config.to_toml()?)
        .map_err(|e| HarnessError::io(dir.join(CONFIG_FILE), e))?;

    while !runner.is_done() {
        match runner.step_generation() {
            Ok(_) => runner.write_artifacts(dir)?,
            Err(err) => {
                runner.write_artifacts(dir)?;
                let diagnostic = serde_json::json!({
                    "generation": runner.generation(),
                    "error": err.to_string(),
                });
                write_json(&dir.join(DIAGNOSTIC_FILE), &diagnostic)?;
                return Err(err);
            }
        }
    }

    let result = runner.finalize()?;
    runner.write_artifacts(dir)?;
    write_json(&dir.join(RESULT_FILE), &result)?;
    write_json(
        &dir.join(MANIFEST_FILE),
        &Manifest::new(&resolved.hash, result.artifacts.clone()),
    )?;
    Ok(result)
}
