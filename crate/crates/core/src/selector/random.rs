//! Uniform-random command selection baseline.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::{Command, CommandBounds};
use crate::error::{Error, Result};
use crate::reward::MoFitness;
use crate::selector::sorting::select_survivors;
use crate::selector::variation::sample_command;
use crate::selector::{CommandEvaluation, Individual};

/// `n` i.i.d. uniform commands over the bounds, degenerate ones rejected.
pub fn random_select(bounds: &CommandBounds, n: usize, rng: &mut ChaCha8Rng) -> Vec<Command> {
    (0..n).map(|_| sample_command(bounds, rng)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomSelector {
    bounds: CommandBounds,
    population_size: usize,
    pending: Vec<Individual>,
    /// Shadow NSGA-II archive for population-set evaluation only.
    archive: Vec<Individual>,
    generation: u32,
}

impl RandomSelector {
    pub fn new(population_size: usize, bounds: CommandBounds, rng: &mut ChaCha8Rng) -> Result<Self> {
        if population_size == 0 {
            return Err(Error::Config("population size must be positive".into()));
        }
        let pending = random_select(&bounds, population_size, rng)
            .into_iter()
            .map(|c| Individual::unevaluated(c, 0))
            .collect();
        Ok(Self { bounds, population_size, pending, archive: Vec::new(), generation: 0 })
    }

    pub fn commands(&self) -> &[Individual] {
        &self.pending
    }

    pub fn population(&self) -> &[Individual] {
        &self.archive
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

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
        let pool: Vec<Individual> = self.archive.drain(..).chain(evaluated).collect();
        let fitnesses: Vec<MoFitness> = pool
            .iter()
            .map(|ind| ind.fitness.clone().ok_or(Error::Unevaluated))
            .collect::<Result<_>>()?;
        let keep = select_survivors(&fitnesses, self.population_size)?;
        self.archive = keep.into_iter().map(|i| pool[i].clone()).collect();
        self.generation += 1;
        self.pending = random_select(&self.bounds, self.population_size, rng)
            .into_iter()
            .map(|c| Individual::unevaluated(c, self.generation))
            .collect();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::EPSILON_MIN;
    use crate::rng::stream;

    #[test]
    fn samples_are_in_bounds_and_non_degenerate() {
        let bounds = CommandBounds::default();
        let mut rng = stream(21, &[1]);
        for c in random_select(&bounds, 2_000, &mut rng) {
            assert!(bounds.contains(&c));
            assert!(c.normalized_magnitude(&bounds).unwrap() >= EPSILON_MIN);
        }
    }

    #[test]
    fn octant_counts_are_multinomially_plausible() {
        let bounds = CommandBounds::default();
        let mut rng = stream(21, &[2]);
        let n = 8_000;
        let mut counts = [0usize; 8];
        for c in random_select(&bounds, n, &mut rng) {
            let v = c.as_array();
            let octant = (usize::from(v[0] >= 0.0) << 2)
                | (usize::from(v[1] >= 0.0) << 1)
                | usize::from(v[2] >= 0.0);
            counts[octant] += 1;
        }
        // Expected 1000 per octant, sigma = sqrt(n * p * (1 - p)) ~ 29.6.
        let sigma = (n as f64 * 0.125 * 0.875).sqrt();
        for (octant, &count) in counts.iter().enumerate() {
            assert!(
                (count as f64 - 1000.0).abs() <= 3.0 * sigma,
                "octant {octant} count {count} outside 3 sigma"
            );
        }
    }

    #[test]
    fn archive_is_maintained_but_sampling_stays_uniform() {
        let bounds = CommandBounds::default();
        let space = crate::command::ObjectiveSpace::new(3).unwrap();
        let mut rng = stream(21, &[3]);
        let mut sel = RandomSelector::new(10, bounds, &mut rng).unwrap();
        let first_batch: Vec<[f64; 3]> =
            sel.commands().iter().map(|i| i.command.as_array()).collect();
        for _ in 0..4 {
            let evals: Vec<CommandEvaluation> = sel
                .commands()
                .iter()
                .map(|i| {
                    let r = 1.0;
                    CommandEvaluation {
                        fitness: crate::reward::mo_fitness(&i.command, r, &space, &bounds).unwrap(),
                        mean_positive_reward: r,
                    }
                })
                .collect();
            sel.submit(evals, &mut rng).unwrap();
        }
        assert_eq!(sel.population().len(), 10);
        let later_batch: Vec<[f64; 3]> =
            sel.commands().iter().map(|i| i.command.as_array()).collect();
        assert_ne!(first_batch, later_batch);
    }
}
