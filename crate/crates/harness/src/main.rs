use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mol_core::metrics::{evaluate_controller, EvaluationSet};
use mol_core::ppo::ppo_gradient_check;
use mol_core::selector::SelectorKind;
use mol_core::surrogate::Scenario;
use mol_harness::config::ExperimentConfig;
use mol_harness::persist::read_json;
use mol_harness::recompute::recompute_trial;
use mol_harness::suite::{cross_plan, mutation_ablation_plan, rollout_update_ablation_plan, run_suite, SuitePlan};
use mol_harness::trial::{run_trial, trial_dir, Checkpoint};
use mol_harness::HarnessError;

/// Multi-objective curriculum learning for velocity-command locomotion.
#[derive(Parser)]
#[command(name = "mol", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario preset: nominal, limited, back or run.
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Selector: nsga2, moead, adr or random.
    #[arg(long)]
    selector: Option<SelectorKind>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials to run.
    #[arg(long)]
    trials: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the paper-scale budget (50 commands, 150 generations, 400 steps).
    #[arg(long)]
    paper_scale: bool,
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None if self.paper_scale => ExperimentConfig::paper_scale(),
            None => ExperimentConfig::default(),
        };
        if self.config.is_some() && self.paper_scale {
            cfg.budget = ExperimentConfig::paper_scale().budget;
        }
        if let Some(s) = self.scenario {
            cfg.run.scenario = s;
        }
        if let Some(s) = self.selector {
            cfg.run.selector = s;
        }
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.run.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.run.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one experiment (all its trials, sequentially numbered).
    Run(ConfigArgs),
    /// Run a scenario x selector matrix (or an ablation preset) and
    /// aggregate the results.
    Suite {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated scenarios (default: all four).
        #[arg(long, value_delimiter = ',')]
        scenarios: Vec<Scenario>,
        /// Comma-separated selectors (default: all four).
        #[arg(long, value_delimiter = ',')]
        selectors: Vec<SelectorKind>,
        /// Named preset: mutation-ablation or rollout-update-ablation.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Re-evaluate a checkpointed controller on an evaluation set.
    Eval {
        /// Path to a checkpoint.json.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Evaluation set: test-grid or population.
        #[arg(long, default_value = "test-grid")]
        eval_set: String,
        /// Scenario override (defaults to the trial's scenario).
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Config that produced the checkpoint (defaults to config.toml
        /// next to it).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Episode steps override.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Recompute metrics from a trial directory's logs and verify them
    /// against the stored summary.
    Metrics {
        /// Trial directory holding metrics.csv, population.csv, result.json.
        #[arg(long)]
        trial: PathBuf,
    },
    /// Learner self-test: analytic gradients against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 50)]
        instances: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn configure_workers() {
    if let Ok(value) = std::env::var("MOL_WORKERS") {
        if let Ok(workers) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
        }
    }
}

fn cmd_run(args: &ConfigArgs) -> Result<(), HarnessError> {
    let cfg = args.build()?;
    let resolved = cfg.resolve()?;
    println!(
        "running {} x {} | n={} m={} u={} k={} steps={} | seed {} | {} trial(s)",
        resolved.scenario(),
        resolved.selector(),
        resolved.population(),
        resolved.rollouts(),
        resolved.updates_per_rollout(),
        resolved.generations,
        resolved.episode_steps(),
        resolved.config.run.seed,
        resolved.config.run.trials,
    );
    for trial in 0..resolved.config.run.trials {
        let dir = trial_dir(&resolved.config.run.out_dir, trial);
        let result = run_trial(&resolved, trial, &dir)?;
        println!(
            "trial {trial}: test-grid distance {:.4}, population distance {:.4}, density {:.3} -> {}",
            result.test_grid_mean_distance,
            result.population_mean_distance,
            result.quadrant_density,
            dir.display(),
        );
    }
    Ok(())
}

fn cmd_suite(
    config: &ConfigArgs,
    scenarios: &[Scenario],
    selectors: &[SelectorKind],
    preset: Option<&str>,
) -> Result<(), HarnessError> {
    let base = config.build()?;
    let trials = base.run.trials;
    let out_dir = base.run.out_dir.clone();
    let plan: SuitePlan = match preset {
        Some("mutation-ablation") => mutation_ablation_plan(trials, base),
        Some("rollout-update-ablation") => rollout_update_ablation_plan(trials, base),
        Some(other) => {
            return Err(HarnessError::Config(format!("unknown suite preset '{other}'")))
        }
        None => {
            let scenarios = if scenarios.is_empty() { Scenario::all().to_vec() } else { scenarios.to_vec() };
            let selectors = if selectors.is_empty() {
                vec![SelectorKind::Nsga2, SelectorKind::Moead, SelectorKind::Adr, SelectorKind::Random]
            } else {
                selectors.to_vec()
            };
            cross_plan(&scenarios, &selectors, trials, base)?
        }
    };
    println!("suite: {} arm(s) x {} trial(s) -> {}", plan.arms.len(), plan.trials, out_dir.display());
    let summary = run_suite(&plan, &out_dir)?;
    for arm in &summary.arms {
        println!(
            "{:24} test {:.4} +/- {:.4} | population {:.4} +/- {:.4} | density {:.3}",
            arm.arm,
            arm.test_distance_mean,
            arm.test_distance_std,
            arm.population_distance_mean,
            arm.population_distance_std,
            arm.density_mean,
        );
    }
    if !summary.failures.is_empty() {
        println!("{} failed trial(s) excluded; see suite_summary.json", summary.failures.len());
    }
    Ok(())
}

fn cmd_eval(
    checkpoint_path: &PathBuf,
    eval_set: &str,
    scenario: Option<Scenario>,
    config: Option<&PathBuf>,
    steps: Option<usize>,
) -> Result<(), HarnessError> {
    let checkpoint: Checkpoint = read_json(checkpoint_path)?;
    let config_path = match config {
        Some(path) => path.clone(),
        None => checkpoint_path
            .parent()
            .map(|dir| dir.join("config.toml"))
            .ok_or_else(|| HarnessError::Config("cannot locate config.toml".into()))?,
    };
    let resolved = ExperimentConfig::load(&config_path)?.resolve()?;
    if resolved.hash != checkpoint.config_hash {
        return Err(HarnessError::Config(format!(
            "checkpoint hash {} does not match config hash {}",
            checkpoint.config_hash, resolved.hash
        )));
    }
    let bounds = resolved.selector_cfg.bounds;
    let set = match eval_set {
        "test-grid" => EvaluationSet::test_grid(&bounds),
        "population" => EvaluationSet::population(
            checkpoint.selector.population().iter().map(|i| i.command).collect(),
        ),
        other => return Err(HarnessError::Config(format!("unknown eval set '{other}'"))),
    };
    let spec = scenario.unwrap_or(resolved.scenario()).spec();
    let steps = steps.unwrap_or(resolved.episode_steps());
    let eval = evaluate_controller(
        &checkpoint.trainer.actor,
        &set,
        &spec,
        steps,
        &resolved.reward,
        resolved.config.run.seed,
    )?;
    println!(
        "{eval_set} on {}: mean distance {:.4} over {} command(s) ({} excluded)",
        spec.name,
        eval.mean_distance,
        eval.records.len(),
        eval.excluded,
    );
    for record in &eval.records {
        if let Some(fault) = &record.fault {
            println!("  fault on {:?}: {fault}", record.command.as_array());
        }
    }
    Ok(())
}

fn cmd_metrics(dir: &PathBuf) -> Result<(), HarnessError> {
    let report = recompute_trial(dir)?;
    for check in &report.checks {
        println!(
            "{:32} stored {:>12.6} recomputed {:>12.6} {}",
            check.name,
            check.stored,
            check.recomputed,
            if check.matches { "ok" } else { "MISMATCH" },
        );
    }
    if report.all_match {
        println!("all metrics reproduce exactly from the persisted logs");
        Ok(())
    } else {
        Err(HarnessError::MetricsMismatch("see report above".into()))
    }
}

fn cmd_gradcheck(instances: u64, tolerance: f64) -> Result<(), HarnessError> {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for seed in 0..instances {
        let report = ppo_gradient_check(seed, tolerance);
        if !report.passed {
            failures += 1;
            println!(
                "instance {seed}: FAIL max relative error {:.3e} at parameter {}",
                report.max_relative_error, report.worst_index
            );
        }
        worst = worst.max(report.max_relative_error);
    }
    println!(
        "gradient check: {instances} instance(s), worst relative error {worst:.3e}, tolerance {tolerance:.1e}"
    );
    if failures == 0 {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("{failures} gradient-check instance(s) failed")))
    }
}

fn main() -> ExitCode {
    configure_workers();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Suite { config, scenarios, selectors, preset } => {
            cmd_suite(config, scenarios, selectors, preset.as_deref())
        }
        Command::Eval { checkpoint, eval_set, scenario, config, steps } => {
            cmd_eval(checkpoint, eval_set, *scenario, config.as_ref(), *steps)
        }
        Command::Metrics { trial } => cmd_metrics(trial),
        Command::Gradcheck { instances, tolerance } => cmd_gradcheck(*instances, *tolerance),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
