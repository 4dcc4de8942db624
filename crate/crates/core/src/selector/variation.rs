//! Variation operators shared by the evolutionary selectors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::command::{Command, CommandBounds, COMMAND_DIMS};
use crate::selector::schedule::OperatorParams;

/// With probability `prob`, uniform-crossover `a` with `b` (each dimension
/// independently takes b's value with probability 0.5); otherwise return `a`
/// unchanged.
pub fn uniform_crossover(a: &Command, b: &Command, prob: f64, rng: &mut ChaCha8Rng) -> Command {
    if !rng.random_bool(prob.clamp(0.0, 1.0)) {
        return *a;
    }
    let av = a.as_array();
    let bv = b.as_array();
    let mut out = [0.0; COMMAND_DIMS];
    for d in 0..COMMAND_DIMS {
        out[d] = if rng.random_bool(0.5) { bv[d] } else { av[d] };
    }
    Command::from_array(out)
}

/// Per-dimension binomial mutation with Gaussian noise. The noise standard
/// deviation is `strength` times the dimension's half-range, and the result
/// is clamped into bounds. Degeneracy is the caller's concern: offspring
/// construction resamples until the child clears the minimum magnitude.
pub fn gaussian_mutation(
    c: &Command,
    prob: f64,
    strength: f64,
    bounds: &CommandBounds,
    rng: &mut ChaCha8Rng,
) -> Command {
    let mut out = c.as_array();
    for (d, value) in out.iter_mut().enumerate() {
        if rng.random_bool(prob.clamp(0.0, 1.0)) {
            let std = strength * bounds.half_range(d);
            let noise = Normal::new(0.0, std).expect("positive mutation std");
            *value = (*value + noise.sample(rng)).clamp(bounds.min[d], bounds.max[d]);
        }
    }
    Command::from_array(out)
}

/// One uniform command over the bounds, resampled until non-degenerate.
pub fn sample_command(bounds: &CommandBounds, rng: &mut ChaCha8Rng) -> Command {
    loop {
        let mut v = [0.0; COMMAND_DIMS];
        for (d, value) in v.iter_mut().enumerate() {
            *value = rng.random_range(bounds.min[d]..=bounds.max[d]);
        }
        let c = Command::from_array(v);
        if !c.is_degenerate(bounds) {
            return c;
        }
    }
}

/// Crossover + mutation producing a non-degenerate child. The pipeline is
/// retried on degenerate results; after `MAX_ATTEMPTS` it falls back to a
/// fresh uniform sample so the selector always emits a valid command.
pub fn make_offspring(
    a: &Command,
    b: &Command,
    params: &OperatorParams,
    bounds: &CommandBounds,
    rng: &mut ChaCha8Rng,
) -> Command {
    const MAX_ATTEMPTS: usize = 64;
    for _ in 0..MAX_ATTEMPTS {
        let crossed = uniform_crossover(a, b, params.crossover_prob, rng);
        let mutated =
            gaussian_mutation(&crossed, params.mutation_prob, params.mutation_strength, bounds, rng);
        if !mutated.is_degenerate(bounds) {
            return mutated;
        }
    }
    sample_command(bounds, rng)
}
