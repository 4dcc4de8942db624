//! NSGA-II curriculum selector.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::CommandBounds;
use crate::error::{Error, Result};
use crate::reward::MoFitness;
use crate::selector::schedule::OperatorSchedule;
use crate::selector::sorting::{rank_and_crowding, select_survivors};
use crate::selector::variation::{make_offspring, sample_command};
use crate::selector::{CommandEvaluation, Individual};

/// (mu + lambda) survival: combine parents and offspring, sort by front rank
/// then descending crowding, keep the best `n`. Both inputs must be
/// evaluated.
pub fn nsga2_next_generation(
    parents: &[Individual],
    offspring: &[Individual],
    n: usize,
) -> Result<Vec<Individual>> {
    let pool: Vec<&Individual> = parents.iter().chain(offspring).collect();
    let fitnesses: Vec<MoFitness> = pool
        .iter()
        .map(|ind| ind.fitness.clone().ok_or(Error::Unevaluated))
        .collect::<Result<_>>()?;
    let keep = select_survivors(&fitnesses, n)?;
    Ok(keep.into_iter().map(|i| pool[i].clone()).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Nsga2Selector {
    bounds: CommandBounds,
    schedule: OperatorSchedule,
    population_size: usize,
    /// Evaluated survivors; empty until the first generation completes.
    population: Vec<Individual>,
    /// Commands awaiting evaluation.
    pending: Vec<Individual>,
    generation: u32,
}

impl Nsga2Selector {
    pub fn new(
        population_size: usize,
        bounds: CommandBounds,
        schedule: OperatorSchedule,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        schedule.validate()?;
        if population_size == 0 {
            return Err(Error::Config("population size must be positive".into()));
        }
        let pending = (0..population_size)
            .map(|_| Individual::unevaluated(sample_command(&bounds, rng), 0))
            .collect();
        Ok(Self {
            bounds,
            schedule,
            population_size,
            population: Vec::new(),
            pending,
            generation: 0,
        })
    }

    pub fn commands(&self) -> &[Individual] {
        &self.pending
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    /// Attach the evaluation batch to the pending commands, run survival
    /// selection against the retained population, and breed the next batch
    /// with the schedule values of the just-completed generation.
    pub fn submit(&mut self, evals: Vec<CommandEvaluation>, rng: &mut ChaCha8Rng) -> Result<()> {
        if evals.len() != self.pending.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} evaluations for {} pending commands",
                evals.len(),
                self.pending.len()
            )));
        }
        let mut evaluated = std::mem::take(&mut self.pending);
        for (ind, eval) in evaluated.iter_mut().zip(evals) {
            ind.attach(eval);
        }
        self.population = if self.population.is_empty() {
            evaluated
        } else {
            nsga2_next_generation(&self.population, &evaluated, self.population_size)?
        };

        let params = self.schedule.lookup(self.generation);
        self.generation += 1;

        let fitnesses: Vec<MoFitness> =
            self.population.iter().map(|ind| ind.fitness.clone().unwrap()).collect();
        let (rank, crowding) = rank_and_crowding(&fitnesses)?;
        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let a = rng.random_range(0..self.population.len());
            let b = rng.random_range(0..self.population.len());
            // Lower rank wins; crowding breaks ties; `a` wins exact draws.
            if rank[b] < rank[a] || (rank[b] == rank[a] && crowding[b] > crowding[a]) {
                b
            } else {
                a
            }
        };
        self.pending = (0..self.population_size)
            .map(|_| {
                let pa = &self.population[tournament(rng)];
                let pb = &self.population[tournament(rng)];
                let child = make_offspring(&pa.command, &pb.command, &params, &self.bounds, rng);
                Individual::unevaluated(child, self.generation)
            })
            .collect();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::selector::sorting::fast_non_dominated_sort;
    use rand::Rng;

    fn ind(values: &[f64]) -> Individual {
        let mut i = Individual::unevaluated(crate::command::Command::new(0.5, 0.0, 0.0), 0);
        i.fitness = Some(MoFitness { values: values.to_vec() });
        i.mean_positive_reward = Some(0.0);
        i
    }

    #[test]
    fn dominated_offspring_are_rejected() {
        let parents: Vec<Individual> =
            (0..4).map(|i| ind(&[1.0 + i as f64 * 0.01, 1.0, 1.0, 1.0])).collect();
        let offspring: Vec<Individual> = (0..4).map(|_| ind(&[0.1, 0.1, 0.1, 0.1])).collect();
        let next = nsga2_next_generation(&parents, &offspring, 4).unwrap();
        for survivor in &next {
            assert!(survivor.fitness.as_ref().unwrap().values[0] >= 1.0);
        }
    }

    #[test]
    fn dominating_offspring_replace_parents() {
        let parents: Vec<Individual> = (0..4).map(|_| ind(&[0.1, 0.1, 0.1, 0.1])).collect();
        let offspring: Vec<Individual> =
            (0..4).map(|i| ind(&[1.0 + i as f64 * 0.01, 1.0, 1.0, 1.0])).collect();
        let next = nsga2_next_generation(&parents, &offspring, 4).unwrap();
        for survivor in &next {
            assert!(survivor.fitness.as_ref().unwrap().values[0] >= 1.0);
        }
    }

    #[test]
    fn unevaluated_individuals_are_a_state_error() {
        let parents = vec![Individual::unevaluated(crate::command::Command::new(0.5, 0.0, 0.0), 0)];
        let err = nsga2_next_generation(&parents, &[], 1).unwrap_err();
        assert!(matches!(err, Error::Unevaluated));
    }

    #[test]
    fn mixed_pool_matches_selection_oracle() {
        let mut rng = stream(9, &[1]);
        for _ in 0..10 {
            let parents: Vec<Individual> =
                (0..10).map(|_| ind(&[(); 4].map(|_| rng.random_range(0.0..1.0)))).collect();
            let offspring: Vec<Individual> =
                (0..10).map(|_| ind(&[(); 4].map(|_| rng.random_range(0.0..1.0)))).collect();
            let next = nsga2_next_generation(&parents, &offspring, 10).unwrap();

            let pool: Vec<MoFitness> = parents
                .iter()
                .chain(&offspring)
                .map(|i| i.fitness.clone().unwrap())
                .collect();
            let keep = select_survivors(&pool, 10).unwrap();
            let oracle: Vec<MoFitness> = keep.iter().map(|&i| pool[i].clone()).collect();
            let got: Vec<MoFitness> = next.iter().map(|i| i.fitness.clone().unwrap()).collect();
            assert_eq!(got, oracle);
        }
    }

    #[test]
    fn elitism_preserves_per_objective_maxima() {
        let mut rng = stream(9, &[2]);
        for _ in 0..25 {
            let pool: Vec<Individual> =
                (0..20).map(|_| ind(&[(); 4].map(|_| rng.random_range(0.0..2.0)))).collect();
            let next = nsga2_next_generation(&pool[..10], &pool[10..], 10).unwrap();
            for obj in 0..4 {
                let pool_max = pool
                    .iter()
                    .map(|i| i.fitness.as_ref().unwrap().values[obj])
                    .fold(f64::NEG_INFINITY, f64::max);
                let kept_max = next
                    .iter()
                    .map(|i| i.fitness.as_ref().unwrap().values[obj])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(kept_max, pool_max, "objective {obj} maximum lost");
            }
        }
    }

    #[test]
    fn selector_emits_constant_population_size() {
        let mut rng = stream(9, &[3]);
        let bounds = CommandBounds::default();
        let space = crate::command::ObjectiveSpace::new(3).unwrap();
        let mut sel =
            Nsga2Selector::new(12, bounds, OperatorSchedule::default(), &mut rng).unwrap();
        for gen in 0..6 {
            let batch = sel.commands().to_vec();
            assert_eq!(batch.len(), 12, "generation {gen}");
            let evals: Vec<CommandEvaluation> = batch
                .iter()
                .map(|i| {
                    let r = rng.random_range(0.0..2.0);
                    CommandEvaluation {
                        fitness: crate::reward::mo_fitness(&i.command, r, &space, &bounds).unwrap(),
                        mean_positive_reward: r,
                    }
                })
                .collect();
            sel.submit(evals, &mut rng).unwrap();
            assert_eq!(sel.population().len(), 12);
            assert_eq!(sel.generation(), gen + 1);
        }
        // The retained population is a proper Pareto archive: front ranks
        // exist and every member is evaluated.
        let fits: Vec<MoFitness> =
            sel.population().iter().map(|i| i.fitness.clone().unwrap()).collect();
        fast_non_dominated_sort(&fits).unwrap();
    }

    #[test]
    fn identical_seeds_give_identical_command_streams() {
        let bounds = CommandBounds::default();
        let space = crate::command::ObjectiveSpace::new(3).unwrap();
        let run = |seed: u64| -> Vec<[f64; 3]> {
            let mut rng = stream(seed, &[4]);
            let mut sel =
                Nsga2Selector::new(8, bounds, OperatorSchedule::default(), &mut rng).unwrap();
            let mut log = Vec::new();
            for _ in 0..4 {
                let evals: Vec<CommandEvaluation> = sel
                    .commands()
                    .iter()
                    .map(|i| {
                        log.push(i.command.as_array());
                        let r = i.command.magnitude().min(2.0);
                        CommandEvaluation {
                            fitness: crate::reward::mo_fitness(&i.command, r, &space, &bounds)
                                .unwrap(),
                            mean_positive_reward: r,
                        }
                    })
                    .collect();
                sel.submit(evals, &mut rng).unwrap();
            }
            log
        };
        assert_eq!(run(77), run(77));
        assert_ne!(run(77), run(78));
    }
}
