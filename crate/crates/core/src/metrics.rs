//! Evaluation metrics: mean reward over rollouts, mean command-tracking
//! distance over an evaluation set, and octant occupancy density of a
//! command population.

use serde::{Deserialize, Serialize};

use crate::command::{Command, CommandBounds};
use crate::error::{Error, Result};
use crate::reward::RewardConfig;
use crate::rng;
use crate::surrogate::{simulate_command, Controller, ScenarioSpec, Trajectory};

/// Leading fraction of an episode discarded before averaging achieved
/// velocities; the lag dynamics make early steps uninformative.
pub const SETTLE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalSetKind {
    TestGrid,
    Population,
}

/// A fixed set of commands to assess a controller against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSet {
    pub kind: EvalSetKind,
    pub commands: Vec<Command>,
    /// Grid points skipped as degenerate (reported, never simulated).
    pub excluded: usize,
}

impl EvaluationSet {
    /// The regular 5x5x5 lattice over the command bounds, with degenerate
    /// points excluded and counted.
    pub fn test_grid(bounds: &CommandBounds) -> Self {
        const POINTS: usize = 5;
        let axis = |d: usize, i: usize| {
            bounds.min[d] + (bounds.max[d] - bounds.min[d]) * i as f64 / (POINTS - 1) as f64
        };
        let mut commands = Vec::with_capacity(POINTS * POINTS * POINTS);
        let mut excluded = 0;
        for i in 0..POINTS {
            for j in 0..POINTS {
                for k in 0..POINTS {
                    let c = Command::new(axis(0, i), axis(1, j), axis(2, k));
                    if c.is_degenerate(bounds) {
                        excluded += 1;
                    } else {
                        commands.push(c);
                    }
                }
            }
        }
        Self { kind: EvalSetKind::TestGrid, commands, excluded }
    }

    /// The retained commands of a selector population.
    pub fn population(commands: Vec<Command>) -> Self {
        Self { kind: EvalSetKind::Population, commands, excluded: 0 }
    }
}

/// Mean per-step reward over every step of every trajectory in a rollout.
pub fn mean_reward(trajectories: &[Trajectory]) -> Result<f64> {
    let steps: usize = trajectories.iter().map(Trajectory::len).sum();
    if steps == 0 {
        return Err(Error::Config("mean reward needs at least one recorded step".into()));
    }
    let total: f64 = trajectories.iter().flat_map(|t| &t.rewards).sum();
    Ok(total / steps as f64)
}

/// Average Euclidean distance between each expected command and the
/// corresponding achieved mean velocity.
pub fn mean_distance(expected: &[Command], achieved: &[[f64; 3]]) -> Result<f64> {
    if expected.len() != achieved.len() || expected.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} commands against {} outcomes",
            expected.len(),
            achieved.len()
        )));
    }
    let mut total = 0.0;
    for (e, a) in expected.iter().zip(achieved) {
        let ev = e.as_array();
        let mut sq = 0.0;
        for d in 0..3 {
            let diff = a[d] - ev[d];
            sq += diff * diff;
        }
        total += sq.sqrt();
    }
    Ok(total / expected.len() as f64)
}

/// Octant index of a command: each dimension splits at the midpoint of its
/// bounds, values on the divider join the upper half. For symmetric bounds
/// this is the component-sign rule.
pub fn octant_index(command: &Command, bounds: &CommandBounds) -> usize {
    let v = command.as_array();
    let mut idx = 0;
    for d in 0..3 {
        let mid = (bounds.min[d] + bounds.max[d]) / 2.0;
        if v[d] >= mid {
            idx |= 1 << d;
        }
    }
    idx
}

/// Capped, normalized octant occupancy in (0, 1]: each octant contributes
/// its command count, capped at the uniform share |C|/8, divided by that
/// share; equals 1 exactly when every octant holds at least |C|/8 commands.
pub fn quadrant_density(commands: &[Command], bounds: &CommandBounds) -> Result<f64> {
    if commands.is_empty() {
        return Err(Error::Config("quadrant density needs a non-empty command set".into()));
    }
    let mut counts = [0usize; 8];
    for c in commands {
        counts[octant_index(c, bounds)] += 1;
    }
    let share = commands.len() as f64 / 8.0;
    let sum: f64 = counts.iter().map(|&n| (n as f64).min(share) / share).sum();
    Ok(sum / 8.0)
}

/// Outcome of assessing one command deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandAssessment {
    pub command: Command,
    pub mean_achieved: [f64; 3],
    pub distance: f64,
    pub fault: Option<String>,
}

/// Evaluation-set result: the mean distance plus per-command records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerEvaluation {
    pub kind: EvalSetKind,
    pub mean_distance: f64,
    pub records: Vec<CommandAssessment>,
    pub excluded: usize,
}

/// Run every command of the set without exploration noise, average the
/// achieved velocities past the settling prefix, and fold the tracking
/// distances. Faulted commands count at their maximal possible distance and
/// stay flagged in the records.
pub fn evaluate_controller(
    controller: &dyn Controller,
    set: &EvaluationSet,
    spec: &ScenarioSpec,
    steps: usize,
    reward_cfg: &RewardConfig,
    seed: u64,
) -> Result<ControllerEvaluation> {
    if set.commands.is_empty() {
        return Err(Error::Config("evaluation set is empty".into()));
    }
    let mut records = Vec::with_capacity(set.commands.len());
    let mut expected = Vec::with_capacity(set.commands.len());
    let mut achieved = Vec::with_capacity(set.commands.len());
    for (i, &command) in set.commands.iter().enumerate() {
        let mut stream = rng::stream(seed, &[rng::TAG_EVAL, i as u64]);
        let traj =
            simulate_command(controller, command, spec, steps, reward_cfg, false, &mut stream)?;
        let record = if let Some(fault) = traj.fault {
            // Velocities stay inside the unit envelope, so this bounds the
            // achievable error for the command.
            let max_distance = command.magnitude() + 3.0f64.sqrt();
            CommandAssessment {
                command,
                mean_achieved: [0.0; 3],
                distance: max_distance,
                fault: Some(fault),
            }
        } else {
            let mean_achieved = traj.mean_achieved_velocity(SETTLE_FRACTION);
            let distance = mean_distance(&[command], &[mean_achieved])?;
            CommandAssessment { command, mean_achieved, distance, fault: None }
        };
        expected.push(command);
        achieved.push(record.mean_achieved);
        records.push(record);
    }
    let mean = records.iter().map(|r| r.distance).sum::<f64>() / records.len() as f64;
    Ok(ControllerEvaluation { kind: set.kind, mean_distance: mean, records, excluded: set.excluded })
}

/// One row of the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    /// Monotone sequence number within a trial.
    pub seq: u64,
    pub trial: u32,
    pub generation: u32,
    pub rollout: Option<u32>,
    pub metric: String,
    pub value: f64,
    pub scenario: String,
    pub selector: String,
}
