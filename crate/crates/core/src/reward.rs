//! Reward formulation.
//!
//! Every reward feature passes through the same min-max normalization with
//! an exponent that weights the last increment of the feature. The positive
//! part scores similarity to the active command (direction angle plus
//! magnitude error); the negative part sums posture, height and joint-speed
//! penalties. Their sum is the scalar RL reward, and the positive part alone
//! feeds the multi-objective fitness conversion.

use serde::{Deserialize, Serialize};

use crate::command::{angle_between, normalize_command, project_to_sphere, Command, CommandBounds, ObjectiveSpace};
use crate::error::{Error, Result};

/// A raw feature measurement with its normalization range.
///
/// `invert` marks features where smaller raw values are better (errors,
/// deviations): those map to `(1 - norm(v))^e` so a zero error scores 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardFeature {
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub invert: bool,
    pub exponent: f64,
}

impl RewardFeature {
    pub fn new(value: f64, min: f64, max: f64, invert: bool, exponent: f64) -> Self {
        Self { value, min, max, invert, exponent }
    }
}

/// Min-max normalize the feature value and apply the exponent, inverting
/// when smaller raw values are better. The value is clamped into
/// [min, max] first.
pub fn feature_reward(f: &RewardFeature) -> Result<f64> {
    if f.min >= f.max {
        return Err(Error::Config(format!(
            "feature bounds must satisfy min < max, got [{}, {}]",
            f.min, f.max
        )));
    }
    if f.exponent < 1.0 {
        return Err(Error::Config(format!("feature exponent must be >= 1, got {}", f.exponent)));
    }
    let clamped = f.value.clamp(f.min, f.max);
    let norm = (clamped - f.min) / (f.max - f.min);
    let base = if f.invert { 1.0 - norm } else { norm };
    Ok(base.powf(f.exponent))
}

/// What one simulation step achieved, as consumed by the reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Achieved body velocities (vx, vy, wz).
    pub achieved: [f64; 3],
    /// Posture deviation, unitless, >= 0.
    pub posture_deviation: f64,
    /// Height deviation, unitless, >= 0.
    pub height_deviation: f64,
    /// Joint-speed excess beyond the nominal rate, unitless, >= 0.
    pub joint_speed_excess: f64,
}

/// Feature ranges and exponents for the reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Exponent applied to every feature.
    pub exponent: f64,
    /// Upper bound of the command-magnitude error feature.
    pub max_magnitude_error: f64,
    /// Upper bounds of the three penalty channels.
    pub posture_max: f64,
    pub height_max: f64,
    pub joint_excess_max: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            exponent: 2.0,
            // Twice the largest per-axis velocity under the default bounds.
            max_magnitude_error: 2.0,
            posture_max: 1.0,
            height_max: 0.6,
            joint_excess_max: 2.0,
        }
    }
}

impl RewardConfig {
    /// Default config with the magnitude-error range derived from the
    /// actual command bounds.
    pub fn for_bounds(bounds: &CommandBounds) -> Self {
        Self { max_magnitude_error: 2.0 * bounds.max_axis_magnitude(), ..Self::default() }
    }
}

fn vec_norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Command-similarity reward in [0, 2]: one inverted feature for the angle
/// between expected and achieved velocity vectors, one for the magnitude
/// error. A zero achieved velocity has no direction and takes the worst-case
/// angle pi rather than producing NaN.
pub fn positive_reward(expected: &Command, outcome: &StepOutcome, cfg: &RewardConfig) -> Result<f64> {
    if outcome.achieved.iter().any(|v| !v.is_finite()) {
        return Err(Error::SimulationFault(format!(
            "non-finite achieved velocities {:?}",
            outcome.achieved
        )));
    }
    let expected_vec = expected.as_array();
    let expected_mag = vec_norm(&expected_vec);
    if expected_mag <= f64::EPSILON {
        return Err(Error::DegenerateCommand { magnitude: 0.0, minimum: f64::EPSILON });
    }
    let achieved_mag = vec_norm(&outcome.achieved);
    let angle = if achieved_mag <= f64::EPSILON {
        std::f64::consts::PI
    } else {
        let unit_e: Vec<f64> = expected_vec.iter().map(|v| v / expected_mag).collect();
        let unit_a: Vec<f64> = outcome.achieved.iter().map(|v| v / achieved_mag).collect();
        angle_between(&unit_e, &unit_a)?
    };
    let angle_term = feature_reward(&RewardFeature::new(
        angle,
        0.0,
        std::f64::consts::PI,
        true,
        cfg.exponent,
    ))?;
    let magnitude_term = feature_reward(&RewardFeature::new(
        (expected_mag - achieved_mag).abs(),
        0.0,
        cfg.max_magnitude_error,
        true,
        cfg.exponent,
    ))?;
    Ok(angle_term + magnitude_term)
}

/// Penalty sum in [-3, 0]: posture, height and joint-speed channels each
/// contribute the negated normalized deviation, so zero deviation costs
/// nothing and a saturated channel costs -1.
pub fn negative_reward(outcome: &StepOutcome, cfg: &RewardConfig) -> Result<f64> {
    let channels = [
        (outcome.posture_deviation, cfg.posture_max),
        (outcome.height_deviation, cfg.height_max),
        (outcome.joint_speed_excess, cfg.joint_excess_max),
    ];
    let mut total = 0.0;
    for (value, max) in channels {
        if !value.is_finite() {
            return Err(Error::SimulationFault(format!("non-finite penalty channel {value}")));
        }
        total -= feature_reward(&RewardFeature::new(value, 0.0, max, false, cfg.exponent))?;
    }
    Ok(total)
}

/// Scalar RL reward: positive plus negative part.
pub fn rl_reward(expected: &Command, outcome: &StepOutcome, cfg: &RewardConfig) -> Result<f64> {
    Ok(positive_reward(expected, outcome, cfg)? + negative_reward(outcome, cfg)?)
}

/// Multi-objective fitness: one non-negative score per simplex vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoFitness {
    pub values: Vec<f64>,
}

impl MoFitness {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pareto dominance under maximization: componentwise >= with at least
    /// one strict >.
    pub fn dominates(&self, other: &MoFitness) -> bool {
        debug_assert_eq!(self.values.len(), other.values.len());
        let mut strictly_better = false;
        for (a, b) in self.values.iter().zip(&other.values) {
            if a < b {
                return false;
            }
            if a > b {
                strictly_better = true;
            }
        }
        strictly_better
    }
}

/// Convert a command and its positive reward into objective-space fitness.
///
/// The command's sphere coordinate is scored against every simplex vertex:
/// the angle is normalized by the inter-vertex angle, subtracted from one,
/// and multiplied by the reward. Vertices further than the inter-vertex
/// angle score zero, keeping all components non-negative.
pub fn mo_fitness(
    expected: &Command,
    reward: f64,
    space: &ObjectiveSpace,
    bounds: &CommandBounds,
) -> Result<MoFitness> {
    if reward < 0.0 {
        return Err(Error::Config(format!("fitness requires a non-negative reward, got {reward}")));
    }
    let normalized = normalize_command(expected, bounds)?;
    let coord = project_to_sphere(&normalized)?;
    let max_angle = space.max_angle();
    let mut values = Vec::with_capacity(space.objective_count());
    for vertex in space.vertices() {
        let angle = angle_between(&coord, vertex)?;
        let factor = 1.0 - angle.min(max_angle) / max_angle;
        values.push(factor * reward);
    }
    Ok(MoFitness { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(achieved: [f64; 3]) -> StepOutcome {
        StepOutcome {
            achieved,
            posture_deviation: 0.0,
            height_deviation: 0.0,
            joint_speed_excess: 0.0,
        }
    }

    #[test]
    fn feature_reward_extremes() {
        let at_max = RewardFeature::new(4.0, 0.0, 4.0, false, 3.0);
        assert_eq!(feature_reward(&at_max).unwrap(), 1.0);
        let inverted_max = RewardFeature::new(4.0, 0.0, 4.0, true, 3.0);
        assert_eq!(feature_reward(&inverted_max).unwrap(), 0.0);
        let mid = RewardFeature::new(2.0, 0.0, 4.0, false, 2.0);
        assert_eq!(feature_reward(&mid).unwrap(), 0.25);
    }

    #[test]
    fn feature_reward_clamps_and_validates() {
        let above = RewardFeature::new(9.0, 0.0, 4.0, false, 2.0);
        assert_eq!(feature_reward(&above).unwrap(), 1.0);
        let bad = RewardFeature::new(0.0, 1.0, 1.0, false, 2.0);
        assert!(matches!(feature_reward(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn feature_reward_is_monotone() {
        let cfgs = [(false, 1.0), (false, 2.0), (true, 2.0)];
        for (invert, e) in cfgs {
            let mut prev = feature_reward(&RewardFeature::new(0.0, 0.0, 1.0, invert, e)).unwrap();
            for i in 1..=20 {
                let v = i as f64 / 20.0;
                let cur = feature_reward(&RewardFeature::new(v, 0.0, 1.0, invert, e)).unwrap();
                if invert {
                    assert!(cur <= prev);
                } else {
                    assert!(cur >= prev);
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn positive_reward_perfect_tracking() {
        let cfg = RewardConfig::default();
        let c = Command::new(0.4, -0.3, 0.2);
        let r = positive_reward(&c, &outcome(c.as_array()), &cfg).unwrap();
        // arccos near a unit dot product amplifies rounding to ~1e-8.
        assert!((r - 2.0).abs() < 1e-6);
    }

    #[test]
    fn positive_reward_opposite_direction() {
        let cfg = RewardConfig { exponent: 1.0, ..RewardConfig::default() };
        let c = Command::new(0.5, 0.0, 0.0);
        let r = positive_reward(&c, &outcome([-0.5, 0.0, 0.0]), &cfg).unwrap();
        // Angle term 0 at pi, magnitude term 1 at zero error.
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_reward_zero_achieved() {
        let cfg = RewardConfig::default();
        let c = Command::new(1.0, 0.0, 0.0);
        let r = positive_reward(&c, &outcome([0.0, 0.0, 0.0]), &cfg).unwrap();
        // Worst-case angle pi scores 0; magnitude error 1 of 2 scores 0.25.
        assert!((r - 0.25).abs() < 1e-12);
    }

    #[test]
    fn positive_reward_rejects_non_finite() {
        let cfg = RewardConfig::default();
        let c = Command::new(1.0, 0.0, 0.0);
        let err = positive_reward(&c, &outcome([f64::NAN, 0.0, 0.0]), &cfg).unwrap_err();
        assert!(matches!(err, Error::SimulationFault(_)));
    }

    #[test]
    fn negative_reward_extremes() {
        let cfg = RewardConfig::default();
        let zero = StepOutcome {
            achieved: [0.0; 3],
            posture_deviation: 0.0,
            height_deviation: 0.0,
            joint_speed_excess: 0.0,
        };
        assert_eq!(negative_reward(&zero, &cfg).unwrap(), 0.0);
        let maxed = StepOutcome {
            achieved: [0.0; 3],
            posture_deviation: cfg.posture_max,
            height_deviation: cfg.height_max,
            joint_speed_excess: cfg.joint_excess_max,
        };
        assert_eq!(negative_reward(&maxed, &cfg).unwrap(), -3.0);
    }

    #[test]
    fn negative_reward_single_channel_midrange() {
        let cfg = RewardConfig::default();
        let s = StepOutcome {
            achieved: [0.0; 3],
            posture_deviation: cfg.posture_max / 2.0,
            height_deviation: 0.0,
            joint_speed_excess: 0.0,
        };
        assert!((negative_reward(&s, &cfg).unwrap() - (-0.25)).abs() < 1e-12);
    }

    #[test]
    fn rl_reward_composition() {
        let cfg = RewardConfig::default();
        let c = Command::new(1.0, 0.0, 0.0);
        let perfect = outcome(c.as_array());
        assert!((rl_reward(&c, &perfect, &cfg).unwrap() - 2.0).abs() < 1e-12);

        let worst_posture = StepOutcome {
            achieved: c.as_array(),
            posture_deviation: cfg.posture_max,
            height_deviation: cfg.height_max,
            joint_speed_excess: cfg.joint_excess_max,
        };
        assert!((rl_reward(&c, &worst_posture, &cfg).unwrap() - (-1.0)).abs() < 1e-12);

        let zero = outcome([0.0; 3]);
        assert!((rl_reward(&c, &zero, &cfg).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rl_reward_bounds_on_random_outcomes() {
        use rand::Rng;
        let cfg = RewardConfig::default();
        let bounds = CommandBounds::default();
        let mut rng = crate::rng::stream(11, &[100]);
        for _ in 0..500 {
            let c = Command::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if c.is_degenerate(&bounds) || c.magnitude() == 0.0 {
                continue;
            }
            let s = StepOutcome {
                achieved: [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ],
                posture_deviation: rng.random_range(0.0..2.0),
                height_deviation: rng.random_range(0.0..2.0),
                joint_speed_excess: rng.random_range(0.0..4.0),
            };
            let r = rl_reward(&c, &s, &cfg).unwrap();
            assert!((-3.0..=2.0).contains(&r), "rl reward {r} out of range");
        }
    }

    #[test]
    fn mo_fitness_zero_reward_is_zero_vector() {
        let space = ObjectiveSpace::new(3).unwrap();
        let bounds = CommandBounds::default();
        let f = mo_fitness(&Command::new(0.5, 0.2, -0.1), 0.0, &space, &bounds).unwrap();
        assert_eq!(f.values, vec![0.0; 4]);
    }

    #[test]
    fn mo_fitness_vertex_alignment_is_one_hot() {
        let space = ObjectiveSpace::new(3).unwrap();
        let bounds = CommandBounds::default();
        for (i, vertex) in space.vertices().iter().enumerate() {
            let c = Command::new(0.8 * vertex[0], 0.8 * vertex[1], 0.8 * vertex[2]);
            let f = mo_fitness(&c, 1.0, &space, &bounds).unwrap();
            for (j, &v) in f.values.iter().enumerate() {
                if i == j {
                    // The aligned vertex sees arccos at dot = 1 where
                    // rounding amplifies to ~1e-8.
                    assert!((v - 1.0).abs() < 1e-7, "own vertex score {v}");
                } else {
                    assert!(v.abs() < 1e-9, "cross-vertex score {v}");
                }
            }
        }
    }

    #[test]
    fn mo_fitness_planar_midpoint_splits_evenly() {
        // d = 2: a direction halfway along the arc between two vertices
        // scores 0.5 on each and 0 on the third.
        let space = ObjectiveSpace::new(2).unwrap();
        let v0 = &space.vertices()[0];
        let v1 = &space.vertices()[1];
        let mid_raw = [v0[0] + v1[0], v0[1] + v1[1]];
        let mid = project_to_sphere(&mid_raw).unwrap();
        let max_angle = space.max_angle();
        let mut values = Vec::new();
        for vertex in space.vertices() {
            let a = angle_between(&mid, vertex).unwrap();
            values.push(1.0 - a.min(max_angle) / max_angle);
        }
        assert!((values[0] - 0.5).abs() < 1e-9);
        assert!((values[1] - 0.5).abs() < 1e-9);
        assert!(values[2].abs() < 1e-9);
    }

    #[test]
    fn mo_fitness_is_homogeneous_in_reward() {
        let space = ObjectiveSpace::new(3).unwrap();
        let bounds = CommandBounds::default();
        let c = Command::new(0.3, -0.6, 0.25);
        let f1 = mo_fitness(&c, 0.7, &space, &bounds).unwrap();
        let f2 = mo_fitness(&c, 1.4, &space, &bounds).unwrap();
        for (a, b) in f1.values.iter().zip(&f2.values) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mo_fitness_dominance_follows_reward() {
        let space = ObjectiveSpace::new(3).unwrap();
        let bounds = CommandBounds::default();
        let c = Command::new(0.4, 0.1, -0.2);
        let hi = mo_fitness(&c, 1.5, &space, &bounds).unwrap();
        let lo = mo_fitness(&c, 0.5, &space, &bounds).unwrap();
        assert!(hi.dominates(&lo));
        assert!(!lo.dominates(&hi));
    }

    #[test]
    fn mo_fitness_components_within_reward() {
        let space = ObjectiveSpace::new(3).unwrap();
        let bounds = CommandBounds::default();
        let r = 1.3;
        let f = mo_fitness(&Command::new(-0.5, 0.7, 0.1), r, &space, &bounds).unwrap();
        for &v in &f.values {
            assert!((0.0..=r).contains(&v));
        }
    }

    #[test]
    fn mo_fitness_rejects_negative_reward() {
        let space = ObjectiveSpace::new(3).unwrap();
        let bounds = CommandBounds::default();
        assert!(mo_fitness(&Command::new(0.5, 0.0, 0.0), -0.1, &space, &bounds).is_err());
    }
}
