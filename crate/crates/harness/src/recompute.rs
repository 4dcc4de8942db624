//! Recompute metrics from persisted logs alone and compare against the
//! stored summary. All metric computations are pure, so a re-run over the
//! same records must reproduce the summary exactly.

use std::path::Path;

use mol_core::command::Command;
use mol_core::metrics::quadrant_density;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::persist::{read_json, read_metrics_csv, read_population_csv};
use crate::trial::{TrialResult, CONFIG_FILE, METRICS_FILE, POPULATION_FILE, RESULT_FILE};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCheck {
    pub name: String,
    pub stored: f64,
    pub recomputed: f64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecomputeReport {
    pub checks: Vec<MetricCheck>,
    pub all_match: bool,
}

fn check(name: &str, stored: f64, recomputed: f64) -> MetricCheck {
    MetricCheck {
        name: name.to_string(),
        stored,
        recomputed,
        matches: stored == recomputed || (stored.is_nan() && recomputed.is_nan()),
    }
}

pub fn recompute_trial(dir: &Path) -> Result<RecomputeReport> {
    let result: TrialResult = read_json(&dir.join(RESULT_FILE))?;
    let records = read_metrics_csv(&dir.join(METRICS_FILE))?;
    let rows = read_population_csv(&dir.join(POPULATION_FILE))?;
    let config = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
    let resolved = config.resolve()?;
    if resolved.hash != result.config_hash {
        return Err(HarnessError::MetricsMismatch(format!(
            "stored config hash {} differs from {}",
            result.config_hash, resolved.hash
        )));
    }

    let mut checks = Vec::new();

    let rollout_values: Vec<f64> =
        records.iter().filter(|r| r.metric == "mean_reward").map(|r| r.value).collect();
    checks.push(check(
        "per_rollout_mean_rewards_len",
        result.per_rollout_mean_rewards.len() as f64,
        rollout_values.len() as f64,
    ));
    let rollouts_equal = rollout_values == result.per_rollout_mean_rewards;
    checks.push(check("per_rollout_mean_rewards", 1.0, if rollouts_equal { 1.0 } else { 0.0 }));

    let m = resolved.rollouts() as usize;
    let regenerated: Vec<f64> = rollout_values
        .chunks(m)
        .map(|chunk| chunk.iter().sum::<f64>() / chunk.len() as f64)
        .collect();
    let generations_equal = regenerated == result.per_generation_mean_rewards;
    checks.push(check("per_generation_mean_rewards", 1.0, if generations_equal { 1.0 } else { 0.0 }));

    for (metric, stored) in [
        ("test_grid_mean_distance", result.test_grid_mean_distance),
        ("population_mean_distance", result.population_mean_distance),
        ("quadrant_density", result.quadrant_density),
        ("test_grid_excluded", result.test_grid_excluded as f64),
    ] {
        let logged = records
            .iter()
            .find(|r| r.metric == metric)
            .map(|r| r.value)
            .ok_or_else(|| HarnessError::MetricsMismatch(format!("missing record {metric}")))?;
        checks.push(check(metric, stored, logged));
    }

    let last_generation = rows.iter().map(|r| r.generation).max();
    if let Some(generation) = last_generation {
        let commands: Vec<Command> = rows
            .iter()
            .filter(|r| r.generation == generation)
            .map(|r| Command::new(r.vx, r.vy, r.wz))
            .collect();
        let density = quadrant_density(&commands, &resolved.selector_cfg.bounds)?;
        checks.push(check("quadrant_density_from_dump", result.quadrant_density, density));
    }

    checks.push(check(
        "simulation_accounting",
        result.total_simulations as f64,
        result.simulations_run as f64,
    ));

    let all_match = checks.iter().all(|c| c.matches);
    Ok(RecomputeReport { checks, all_match })
}
