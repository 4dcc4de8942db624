//! Automatic domain randomization baseline: uniform command sampling over
//! per-dimension intervals that widen when performance at an interval edge
//! clears a success threshold.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::{Command, CommandBounds, COMMAND_DIMS};
use crate::error::{Error, Result};
use crate::reward::MoFitness;
use crate::selector::sorting::select_survivors;
use crate::selector::{CommandEvaluation, Individual};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdrConfig {
    /// Performance samples kept per interval edge before a decision.
    pub buffer_size: usize,
    /// Mean positive reward (of 2.0 max) required to widen an edge.
    pub success_threshold: f64,
    /// Widening step as a fraction of the full dimension range.
    pub expansion_step: f64,
    /// Probability of pinning one dimension to an interval edge.
    pub boundary_prob: f64,
    /// Initial interval width as a fraction of the full range, centered.
    pub initial_interval: f64,
}

impl Default for AdrConfig {
    fn default() -> Self {
        Self {
            buffer_size: 10,
            success_threshold: 1.4,
            expansion_step: 0.05,
            boundary_prob: 0.5,
            initial_interval: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Lower,
    Upper,
}

/// Sampling intervals plus the per-edge performance buffers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdrState {
    pub lo: [f64; COMMAND_DIMS],
    pub hi: [f64; COMMAND_DIMS],
    buffers: Vec<Vec<f64>>, // indexed dim * 2 + edge
}

impl AdrState {
    pub fn new(bounds: &CommandBounds, cfg: &AdrConfig) -> Self {
        let mut lo = [0.0; COMMAND_DIMS];
        let mut hi = [0.0; COMMAND_DIMS];
        for d in 0..COMMAND_DIMS {
            let center = (bounds.min[d] + bounds.max[d]) / 2.0;
            let half = cfg.initial_interval * (bounds.max[d] - bounds.min[d]) / 2.0;
            lo[d] = center - half;
            hi[d] = center + half;
        }
        Self { lo, hi, buffers: vec![Vec::new(); COMMAND_DIMS * 2] }
    }

    fn buffer_index(dim: usize, edge: Edge) -> usize {
        dim * 2 + match edge {
            Edge::Lower => 0,
            Edge::Upper => 1,
        }
    }

    pub fn buffer(&self, dim: usize, edge: Edge) -> &[f64] {
        &self.buffers[Self::buffer_index(dim, edge)]
    }

    /// Record one boundary performance sample. When the buffer fills, the
    /// edge widens by one step if the mean clears the threshold; either way
    /// the buffer resets. Intervals only ever grow and stay inside bounds.
    pub fn record(&mut self, dim: usize, edge: Edge, performance: f64, cfg: &AdrConfig, bounds: &CommandBounds) {
        let buf = &mut self.buffers[Self::buffer_index(dim, edge)];
        buf.push(performance);
        if buf.len() < cfg.buffer_size {
            return;
        }
        let mean = buf.iter().sum::<f64>() / buf.len() as f64;
        buf.clear();
        if mean < cfg.success_threshold {
            return;
        }
        let step = cfg.expansion_step * (bounds.max[dim] - bounds.min[dim]);
        match edge {
            Edge::Lower => self.lo[dim] = (self.lo[dim] - step).max(bounds.min[dim]),
            Edge::Upper => self.hi[dim] = (self.hi[dim] + step).min(bounds.max[dim]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdrSelector {
    bounds: CommandBounds,
    cfg: AdrConfig,
    population_size: usize,
    state: AdrState,
    pending: Vec<Individual>,
    /// Which pending commands were pinned to an interval edge.
    pins: Vec<Option<(usize, Edge)>>,
    /// Shadow NSGA-II archive kept only for population-set evaluation; it
    /// never influences command selection.
    archive: Vec<Individual>,
    generation: u32,
}

impl AdrSelector {
    pub fn new(
        population_size: usize,
        bounds: CommandBounds,
        cfg: AdrConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if population_size == 0 {
            return Err(Error::Config("population size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&cfg.boundary_prob) || cfg.buffer_size == 0 {
            return Err(Error::Config("invalid ADR constants".into()));
        }
        let mut sel = Self {
            bounds,
            cfg,
            population_size,
            state: AdrState::new(&bounds, &cfg),
            pending: Vec::new(),
            pins: Vec::new(),
            archive: Vec::new(),
            generation: 0,
        };
        sel.resample(rng);
        Ok(sel)
    }

    pub fn commands(&self) -> &[Individual] {
        &self.pending
    }

    /// The shadow archive; the trade-off set reported for evaluation.
    pub fn population(&self) -> &[Individual] {
        &self.archive
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn state(&self) -> &AdrState {
        &self.state
    }

    fn sample_one(&self, rng: &mut ChaCha8Rng) -> (Command, Option<(usize, Edge)>) {
        let pin = if rng.random_bool(self.cfg.boundary_prob) {
            let dim = rng.random_range(0..COMMAND_DIMS);
            let edge = if rng.random_bool(0.5) { Edge::Upper } else { Edge::Lower };
            Some((dim, edge))
        } else {
            None
        };
        loop {
            let mut v = [0.0; COMMAND_DIMS];
            for d in 0..COMMAND_DIMS {
                v[d] = rng.random_range(self.state.lo[d]..=self.state.hi[d]);
            }
            if let Some((dim, edge)) = pin {
                v[dim] = match edge {
                    Edge::Lower => self.state.lo[dim],
                    Edge::Upper => self.state.hi[dim],
                };
            }
            let c = Command::from_array(v);
            if !c.is_degenerate(&self.bounds) {
                return (c, pin);
            }
        }
    }

    fn resample(&mut self, rng: &mut ChaCha8Rng) {
        self.pending.clear();
        self.pins.clear();
        for _ in 0..self.population_size {
            let (c, pin) = self.sample_one(rng);
            self.pending.push(Individual::unevaluated(c, self.generation));
            self.pins.push(pin);
        }
    }

    /// Feed boundary performances into the edge buffers, fold the batch
    /// into the shadow archive, and draw the next command batch from the
    /// (possibly widened) intervals.
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
        for (ind, pin) in evaluated.iter().zip(&self.pins) {
            if let Some((dim, edge)) = pin {
                let perf = ind.mean_positive_reward.unwrap_or(0.0);
                self.state.record(*dim, *edge, perf, &self.cfg, &self.bounds);
            }
        }
        self.update_archive(evaluated)?;
        self.generation += 1;
        self.resample(rng);
        Ok(())
    }

    fn update_archive(&mut self, evaluated: Vec<Individual>) -> Result<()> {
        let pool: Vec<Individual> = self.archive.drain(..).chain(evaluated).collect();
        let fitnesses: Vec<MoFitness> = pool
            .iter()
            .map(|ind| ind.fitness.clone().ok_or(Error::Unevaluated))
            .collect::<Result<_>>()?;
        let keep = select_survivors(&fitnesses, self.population_size)?;
        self.archive = keep.into_iter().map(|i| pool[i].clone()).collect();
        Ok(())
    }
}
