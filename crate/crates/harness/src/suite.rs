//! Suite orchestration: a matrix of experiment arms run over several
//! trials, aggregated into summary and plot-data files.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mol_core::selector::{OperatorSchedule, SelectorKind};
use mol_core::surrogate::Scenario;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::persist::write_json;
use crate::trial::{run_trial, trial_dir, TrialResult};

/// One cell of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteArm {
    pub name: String,
    pub scenario: Scenario,
    pub selector: SelectorKind,
    /// Operator-schedule override for ablation arms.
    pub schedule: Option<OperatorSchedule>,
    /// Rollouts-per-generation override for ablation arms.
    pub rollouts: Option<u32>,
    /// Updates-per-rollout override for ablation arms.
    pub updates: Option<u32>,
}

impl SuiteArm {
    fn plain(scenario: Scenario, selector: SelectorKind) -> Self {
        Self {
            name: format!("{}_{}", scenario.name(), selector.name()),
            scenario,
            selector,
            schedule: None,
            rollouts: None,
            updates: None,
        }
    }

    fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        cfg.run.scenario = self.scenario;
        cfg.run.selector = self.selector;
        if let Some(schedule) = &self.schedule {
            cfg.schedule = schedule.clone();
        }
        if let Some(m) = self.rollouts {
            let k = cfg.budget.generations;
            cfg.budget.rollouts_per_generation = m;
            cfg.budget.generations = k;
            cfg.budget.total_simulations = None;
        }
        if let Some(u) = self.updates {
            cfg.budget.updates_per_rollout = u;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitePlan {
    pub arms: Vec<SuiteArm>,
    pub trials: u32,
    pub base: ExperimentConfig,
}

/// Full scenario x selector cross.
pub fn cross_plan(
    scenarios: &[Scenario],
    selectors: &[SelectorKind],
    trials: u32,
    base: ExperimentConfig,
) -> Result<SuitePlan> {
    if scenarios.is_empty() || selectors.is_empty() || trials == 0 {
        return Err(HarnessError::Config("suite matrix must not be empty".into()));
    }
    let mut arms = Vec::new();
    for &scenario in scenarios {
        for &selector in selectors {
            arms.push(SuiteArm::plain(scenario, selector));
        }
    }
    Ok(SuitePlan { arms, trials, base })
}

fn ablation_schedule(strength: [f64; 3], mutation: [f64; 3]) -> OperatorSchedule {
    OperatorSchedule {
        mutation: mutation.to_vec(),
        strength: strength.to_vec(),
        ..OperatorSchedule::default()
    }
}

/// Mutation ablation: probability schedules P-08 and P-1 crossed with
/// strength schedules S-05, S-10 and S-15, all NSGA-II on nominal.
pub fn mutation_ablation_plan(trials: u32, base: ExperimentConfig) -> SuitePlan {
    let probabilities: [(&str, [f64; 3]); 2] =
        [("p08", [0.8, 0.6, 0.4]), ("p1", [1.0, 0.8, 0.6])];
    let strengths: [(&str, [f64; 3]); 3] = [
        ("s05", [0.05, 0.025, 0.005]),
        ("s10", [0.1, 0.05, 0.01]),
        ("s15", [0.15, 0.075, 0.03]),
    ];
    let mut arms = Vec::new();
    for (p_name, p) in probabilities {
        for (s_name, s) in strengths {
            arms.push(SuiteArm {
                name: format!("{p_name}_{s_name}"),
                scenario: Scenario::Nominal,
                selector: SelectorKind::Nsga2,
                schedule: Some(ablation_schedule(s, p)),
                rollouts: None,
                updates: None,
            });
        }
    }
    SuitePlan { arms, trials, base }
}

/// Rollout/update ablation: R2, R4, R6 crossed with U1, U2 for NSGA-II and
/// both baselines, on nominal.
pub fn rollout_update_ablation_plan(trials: u32, base: ExperimentConfig) -> SuitePlan {
    let mut arms = Vec::new();
    for selector in [SelectorKind::Nsga2, SelectorKind::Adr, SelectorKind::Random] {
        for rollouts in [2u32, 4, 6] {
            for updates in [1u32, 2] {
                arms.push(SuiteArm {
                    name: format!("{}_r{rollouts}_u{updates}", selector.name()),
                    scenario: Scenario::Nominal,
                    selector,
                    schedule: None,
                    rollouts: Some(rollouts),
                    updates: Some(updates),
                });
            }
        }
    }
    SuitePlan { arms, trials, base }
}

/// Mean and sample standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub scenario: String,
    pub selector: String,
    pub trials: u32,
    pub failed_trials: u32,
    pub test_distance_mean: f64,
    pub test_distance_std: f64,
    pub population_distance_mean: f64,
    pub population_distance_std: f64,
    pub density_mean: f64,
    pub density_std: f64,
    pub final_reward_mean: f64,
    pub final_reward_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub version: u32,
    pub trials_per_arm: u32,
    pub arms: Vec<ArmSummary>,
    pub failures: Vec<String>,
}

/// Run every (arm, trial) cell concurrently, then aggregate per arm. Failed
/// trials are recorded and excluded from the aggregates with a warning.
pub fn run_suite(plan: &SuitePlan, out_dir: &Path) -> Result<SuiteSummary> {
    if plan.arms.is_empty() || plan.trials == 0 {
        return Err(HarnessError::Config("suite matrix must not be empty".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;

    let mut cells = Vec::new();
    for arm in &plan.arms {
        let resolved = arm.apply(&plan.base).resolve()?;
        for trial in 0..plan.trials {
            cells.push((arm.clone(), resolved.clone(), trial));
        }
    }

    let outcomes: Vec<(String, u32, Result<TrialResult>)> = cells
        .into_par_iter()
        .map(|(arm, resolved, trial)| {
            let dir = trial_dir(&out_dir.join(&arm.name), trial);
            let outcome = run_trial(&resolved, trial, &dir);
            (arm.name, trial, outcome)
        })
        .collect();

    let mut failures = Vec::new();
    let mut summaries = Vec::new();
    for arm in &plan.arms {
        let mut results = Vec::new();
        let mut failed = 0u32;
        for (name, trial, outcome) in &outcomes {
            if name != &arm.name {
                continue;
            }
            match outcome {
                Ok(result) => results.push(result.clone()),
                Err(err) => {
                    failed += 1;
                    let message = format!("{} trial {trial}: {err}", arm.name);
                    eprintln!("warning: excluding failed trial from aggregates: {message}");
                    failures.push(message);
                }
            }
        }
        if results.is_empty() {
            continue;
        }
        let collect = |f: &dyn Fn(&TrialResult) -> f64| -> Vec<f64> {
            results.iter().map(f).collect()
        };
        let (test_mean, test_std) = mean_std(&collect(&|r| r.test_grid_mean_distance));
        let (pop_mean, pop_std) = mean_std(&collect(&|r| r.population_mean_distance));
        let (density_mean, density_std) = mean_std(&collect(&|r| r.quadrant_density));
        let (reward_mean, reward_std) = mean_std(&collect(&|r| {
            *r.per_generation_mean_rewards.last().unwrap_or(&0.0)
        }));
        summaries.push(ArmSummary {
            arm: arm.name.clone(),
            scenario: arm.scenario.name().to_string(),
            selector: arm.selector.name().to_string(),
            trials: results.len() as u32,
            failed_trials: failed,
            test_distance_mean: test_mean,
            test_distance_std: test_std,
            population_distance_mean: pop_mean,
            population_distance_std: pop_std,
            density_mean,
            density_std,
            final_reward_mean: reward_mean,
            final_reward_std: reward_std,
        });
    }

    let summary = SuiteSummary {
        version: 1,
        trials_per_arm: plan.trials,
        arms: summaries,
        failures,
    };
    write_json(&out_dir.join("suite_summary.json"), &summary)?;
    emit_plot_data(&summary, &outcomes, out_dir)?;
    Ok(summary)
}

/// Bar values with error bars for the distance comparison (population and
/// test sets), the density comparison, and the per-generation reward curves.
fn emit_plot_data(
    summary: &SuiteSummary,
    outcomes: &[(String, u32, Result<TrialResult>)],
    out_dir: &Path,
) -> Result<()> {
    let distance_path = out_dir.join("suite_distance.csv");
    let mut writer = csv::Writer::from_path(&distance_path)?;
    writer.write_record(["arm", "scenario", "selector", "eval_set", "mean", "std", "trials"])?;
    for arm in &summary.arms {
        for (set, mean, std) in [
            ("population", arm.population_distance_mean, arm.population_distance_std),
            ("test-grid", arm.test_distance_mean, arm.test_distance_std),
        ] {
            writer.write_record([
                arm.arm.as_str(),
                arm.scenario.as_str(),
                arm.selector.as_str(),
                set,
                &mean.to_string(),
                &std.to_string(),
                &arm.trials.to_string(),
            ])?;
        }
    }
    writer.flush().map_err(|e| HarnessError::io(&distance_path, e))?;

    let density_path = out_dir.join("suite_density.csv");
    let mut writer = csv::Writer::from_path(&density_path)?;
    writer.write_record(["arm", "scenario", "selector", "mean", "std", "trials"])?;
    for arm in &summary.arms {
        writer.write_record([
            arm.arm.as_str(),
            arm.scenario.as_str(),
            arm.selector.as_str(),
            &arm.density_mean.to_string(),
            &arm.density_std.to_string(),
            &arm.trials.to_string(),
        ])?;
    }
    writer.flush().map_err(|e| HarnessError::io(&density_path, e))?;

    let curves_path = out_dir.join("suite_reward_curves.csv");
    let mut writer = csv::Writer::from_path(&curves_path)?;
    writer.write_record(["arm", "scenario", "selector", "generation", "mean", "std"])?;
    for arm in &summary.arms {
        let curves: Vec<&Vec<f64>> = outcomes
            .iter()
            .filter_map(|(name, _, outcome)| {
                (name == &arm.arm).then(|| outcome.as_ref().ok()).flatten()
            })
            .map(|r| &r.per_generation_mean_rewards)
            .collect();
        if curves.is_empty() {
            continue;
        }
        let generations = curves.iter().map(|c| c.len()).min().unwrap_or(0);
        for g in 0..generations {
            let values: Vec<f64> = curves.iter().map(|c| c[g]).collect();
            let (mean, std) = mean_std(&values);
            writer.write_record([
                arm.arm.as_str(),
                arm.scenario.as_str(),
                arm.selector.as_str(),
                &g.to_string(),
                &mean.to_string(),
                &std.to_string(),
            ])?;
        }
    }
    writer.flush().map_err(|e| HarnessError::io(&curves_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_plan_rejects_empty_matrices() {
        let base = ExperimentConfig::smoke();
        assert!(cross_plan(&[], &[SelectorKind::Random], 1, base.clone()).is_err());
        assert!(cross_plan(&[Scenario::Nominal], &[], 1, base.clone()).is_err());
        assert!(cross_plan(&[Scenario::Nominal], &[SelectorKind::Random], 0, base).is_err());
    }

    #[test]
    fn ablation_plans_cover_the_reported_grids() {
        let base = ExperimentConfig::smoke();
        let mutation = mutation_ablation_plan(5, base.clone());
        assert_eq!(mutation.arms.len(), 6);
        assert!(mutation.arms.iter().all(|a| a.selector == SelectorKind::Nsga2));
        let s10 = mutation.arms.iter().find(|a| a.name == "p08_s10").unwrap();
        let schedule = s10.schedule.as_ref().unwrap();
        assert_eq!(schedule.mutation, vec![0.8, 0.6, 0.4]);
        assert_eq!(schedule.strength, vec![0.1, 0.05, 0.01]);

        let rollup = rollout_update_ablation_plan(5, base);
        assert_eq!(rollup.arms.len(), 18);
        let r6u2 = rollup.arms.iter().find(|a| a.name == "nsga2_r6_u2").unwrap();
        assert_eq!(r6u2.rollouts, Some(6));
        assert_eq!(r6u2.updates, Some(2));
    }

    #[test]
    fn mean_std_uses_sample_std() {
        let (mean, std) = mean_std(&[1.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert!((std - 2.0f64.sqrt()).abs() < 1e-12);
        let (_, zero) = mean_std(&[5.0]);
        assert_eq!(zero, 0.0);
    }
}
