//! Operator hyperparameter schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-generation values for crossover probability, mutation probability and
/// mutation strength. Defaults follow the three-phase schedule set at
/// generations 0, 50 and 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSchedule {
    pub breakpoints: Vec<u32>,
    pub crossover: Vec<f64>,
    pub mutation: Vec<f64>,
    pub strength: Vec<f64>,
    /// Step lookup by default; linear interpolation between breakpoints when
    /// set.
    #[serde(default)]
    pub interpolate: bool,
}

impl Default for OperatorSchedule {
    fn default() -> Self {
        Self {
            breakpoints: vec![0, 50, 100],
            crossover: vec![0.5, 0.3, 0.0],
            mutation: vec![0.8, 0.6, 0.4],
            strength: vec![0.1, 0.05, 0.01],
            interpolate: false,
        }
    }
}

/// Operator parameters active for one generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub mutation_strength: f64,
}

impl OperatorSchedule {
    pub fn validate(&self) -> Result<()> {
        let n = self.breakpoints.len();
        if n == 0 {
            return Err(Error::Config("schedule needs at least one breakpoint".into()));
        }
        if self.crossover.len() != n || self.mutation.len() != n || self.strength.len() != n {
            return Err(Error::Config("schedule value lists must match breakpoints".into()));
        }
        if !self.breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("schedule breakpoints must be strictly increasing".into()));
        }
        if self.breakpoints[0] != 0 {
            return Err(Error::Config("schedule must start at generation 0".into()));
        }
        for p in self.crossover.iter().chain(&self.mutation) {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Config(format!("schedule probability {p} outside [0, 1]")));
            }
        }
        if self.strength.iter().any(|s| *s <= 0.0) {
            return Err(Error::Config("mutation strengths must be positive".into()));
        }
        Ok(())
    }

    /// Rescale the default breakpoints [0, 50, 100] of a 150-generation run
    /// to [0, k/3, 2k/3], preserving the three-phase structure.
    pub fn scaled_to(&self, generations: u32) -> Self {
        let mut scaled = self.clone();
        if self.breakpoints == vec![0, 50, 100] && generations != 150 {
            scaled.breakpoints = vec![0, generations / 3, 2 * generations / 3];
        }
        scaled
    }

    /// Values in effect at `generation`: the entry of the largest breakpoint
    /// not exceeding it (or a linear blend when interpolation is enabled).
    pub fn lookup(&self, generation: u32) -> OperatorParams {
        let idx = match self.breakpoints.iter().rposition(|&b| b <= generation) {
            Some(i) => i,
            None => 0,
        };
        if !self.interpolate || idx + 1 >= self.breakpoints.len() {
            return OperatorParams {
                crossover_prob: self.crossover[idx],
                mutation_prob: self.mutation[idx],
                mutation_strength: self.strength[idx],
            };
        }
        let lo = self.breakpoints[idx] as f64;
        let hi = self.breakpoints[idx + 1] as f64;
        let t = (generation as f64 - lo) / (hi - lo);
        let blend = |a: f64, b: f64| a + t * (b - a);
        OperatorParams {
            crossover_prob: blend(self.crossover[idx], self.crossover[idx + 1]),
            mutation_prob: blend(self.mutation[idx], self.mutation[idx + 1]),
            mutation_strength: blend(self.strength[idx], self.strength[idx + 1]),
        }
    }
}
