//! MOEA/D curriculum selector with Tchebycheff decomposition.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::CommandBounds;
use crate::error::{Error, Result};
use crate::reward::MoFitness;
use crate::selector::schedule::OperatorSchedule;
use crate::selector::variation::{make_offspring, sample_command};
use crate::selector::{CommandEvaluation, Individual};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoeadConfig {
    /// Neighborhood size T.
    pub neighborhood_size: usize,
    /// Probability of mating within the neighborhood rather than the whole
    /// population.
    pub neighbor_mating_prob: f64,
    /// Maximum number of neighbors one offspring may replace.
    pub max_replacements: usize,
}

impl Default for MoeadConfig {
    fn default() -> Self {
        Self { neighborhood_size: 5, neighbor_mating_prob: 0.9, max_replacements: 2 }
    }
}

/// Tchebycheff aggregation for maximization: max_i lambda_i * |z_i - f_i|,
/// minimized. `ideal` must dominate (componentwise >=) the fitness values it
/// is compared against.
pub fn tchebycheff(fitness: &MoFitness, weights: &[f64], ideal: &[f64]) -> Result<f64> {
    if fitness.len() != weights.len() || fitness.len() != ideal.len() {
        return Err(Error::DimensionMismatch(format!(
            "tchebycheff over fitness {}, weights {}, ideal {}",
            fitness.len(),
            weights.len(),
            ideal.len()
        )));
    }
    Ok(fitness
        .values
        .iter()
        .zip(weights)
        .zip(ideal)
        .map(|((f, w), z)| w * (z - f).abs())
        .fold(0.0, f64::max))
}

/// All compositions of `h` into `m` non-negative parts, lexicographic,
/// scaled by 1/h: the simplex-lattice weight design.
fn simplex_lattice(h: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(h: usize, m: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 1 {
            prefix.push(h);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in (0..=h).rev() {
            prefix.push(i);
            rec(h - i, m - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(h, m, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|parts| parts.into_iter().map(|p| p as f64 / h as f64).collect())
        .collect()
}

fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exactly `n` weight vectors over `m` objectives: the smallest simplex
/// lattice covering `n`, thinned to size by farthest-point subsampling
/// seeded with the corner vectors. Deterministic.
pub fn weight_vectors(n: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    if n < m {
        return Err(Error::Config(format!(
            "population size {n} must be at least the objective count {m}"
        )));
    }
    let mut h = 1;
    while simplex_lattice_len(h, m) < n {
        h += 1;
    }
    let lattice = simplex_lattice(h, m);
    if lattice.len() == n {
        return Ok(lattice);
    }
    // Corners first, then grow by farthest point; ties keep the lowest index.
    let mut selected: Vec<usize> = Vec::with_capacity(n);
    for (i, w) in lattice.iter().enumerate() {
        if w.iter().any(|&x| x == 1.0) {
            selected.push(i);
        }
    }
    selected.truncate(n);
    let mut min_dist: Vec<f64> = lattice
        .iter()
        .map(|w| selected.iter().map(|&s| distance_sq(w, &lattice[s])).fold(f64::INFINITY, f64::min))
        .collect();
    while selected.len() < n {
        let mut best = usize::MAX;
        let mut best_dist = -1.0;
        for (i, &d) in min_dist.iter().enumerate() {
            if d > best_dist {
                best = i;
                best_dist = d;
            }
        }
        selected.push(best);
        for (i, d) in min_dist.iter_mut().enumerate() {
            let nd = distance_sq(&lattice[i], &lattice[best]);
            if nd < *d {
                *d = nd;
            }
        }
    }
    selected.sort_unstable();
    Ok(selected.into_iter().map(|i| lattice[i].clone()).collect())
}

fn simplex_lattice_len(h: usize, m: usize) -> usize {
    // C(h + m - 1, m - 1)
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 0..(m - 1) {
        num *= h + m - 1 - i;
        den *= i + 1;
    }
    num / den
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoeadSelector {
    bounds: CommandBounds,
    schedule: OperatorSchedule,
    cfg: MoeadConfig,
    population_size: usize,
    weights: Vec<Vec<f64>>,
    neighborhoods: Vec<Vec<usize>>,
    /// One retained individual per subproblem.
    population: Vec<Individual>,
    pending: Vec<Individual>,
    /// Componentwise maximum fitness observed; starts at the attainable
    /// minimum (all fitness components are non-negative).
    ideal: Vec<f64>,
    generation: u32,
}

impl MoeadSelector {
    pub fn new(
        population_size: usize,
        objectives: usize,
        bounds: CommandBounds,
        schedule: OperatorSchedule,
        cfg: MoeadConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        schedule.validate()?;
        let weights = weight_vectors(population_size, objectives)?;
        let t = cfg.neighborhood_size.min(population_size);
        let neighborhoods = (0..population_size)
            .map(|i| {
                let mut order: Vec<usize> = (0..population_size).collect();
                order.sort_by(|&a, &b| {
                    distance_sq(&weights[i], &weights[a])
                        .total_cmp(&distance_sq(&weights[i], &weights[b]))
                        .then_with(|| a.cmp(&b))
                });
                order.truncate(t);
                order
            })
            .collect();
        let pending = (0..population_size)
            .map(|_| Individual::unevaluated(sample_command(&bounds, rng), 0))
            .collect();
        Ok(Self {
            bounds,
            schedule,
            cfg,
            population_size,
            weights,
            neighborhoods,
            population: Vec::new(),
            pending,
            ideal: vec![0.0; objectives],
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

    pub fn ideal_point(&self) -> &[f64] {
        &self.ideal
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Update the ideal point, let each evaluated offspring replace up to
    /// `max_replacements` neighbors whose Tchebycheff value it improves,
    /// then breed the next batch (one offspring per subproblem).
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
        for ind in &evaluated {
            for (z, f) in self.ideal.iter_mut().zip(&ind.fitness.as_ref().unwrap().values) {
                if f > z {
                    *z = *f;
                }
            }
        }

        if self.population.is_empty() {
            self.population = evaluated;
        } else {
            for (i, child) in evaluated.iter().enumerate() {
                let child_fit = child.fitness.as_ref().unwrap();
                let mut replaced = 0;
                for &j in &self.neighborhoods[i] {
                    let incumbent = self.population[j].fitness.as_ref().ok_or(Error::Unevaluated)?;
                    let g_child = tchebycheff(child_fit, &self.weights[j], &self.ideal)?;
                    let g_incumbent = tchebycheff(incumbent, &self.weights[j], &self.ideal)?;
                    if g_child < g_incumbent {
                        self.population[j] = child.clone();
                        replaced += 1;
                        if replaced >= self.cfg.max_replacements {
                            break;
                        }
                    }
                }
            }
        }

        let params = self.schedule.lookup(self.generation);
        self.generation += 1;

        self.pending = (0..self.population_size)
            .map(|i| {
                let pool: &[usize] = if rng.random_bool(self.cfg.neighbor_mating_prob) {
                    &self.neighborhoods[i]
                } else {
                    &[]
                };
                let pick = |rng: &mut ChaCha8Rng| -> usize {
                    if pool.is_empty() {
                        rng.random_range(0..self.population_size)
                    } else {
                        pool[rng.random_range(0..pool.len())]
                    }
                };
                let pa = &self.population[pick(rng)];
                let pb = &self.population[pick(rng)];
                let child = make_offspring(&pa.command, &pb.command, &params, &self.bounds, rng);
                Individual::unevaluated(child, self.generation)
            })
            .collect();
        Ok(())
    }
}
