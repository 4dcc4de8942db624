//! Deterministic locomotion surrogate.
//!
//! Eight abstract actuators drive body velocities through a fixed mixing map
//! with tanh saturation and a first-order lag. Forward thrust comes from the
//! leg group (actuators 0, 1, 4, 5), lateral motion from the antagonistic
//! hip pair (2, 3), yaw from the twist pair (6, 7). Co-moving the hips leaks
//! into yaw, so clean lateral motion needs the pair coordinated. Scenario
//! presets mask actuators or apply an action deadzone, reshaping the
//! achievable velocity set:
//!
//! * `nominal` - all actuators free.
//! * `limited` - hips disabled: no lateral mobility.
//! * `back`    - rear half disabled: reduced thrust, yaw only through the
//!   hip leak.
//! * `run`     - actions below 0.6 magnitude are zeroed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::Command;
use crate::error::{Error, Result};
use crate::reward::{positive_reward, rl_reward, RewardConfig, StepOutcome};

/// Number of abstract actuators.
pub const ACTUATORS: usize = 8;

/// Observation length: velocities (3) + posture + height + previous action
/// (8) + active command (3).
pub const OBS_DIM: usize = 16;

/// First-order velocity lag coefficient.
const LAG: f64 = 0.2;

/// Mean actuator magnitude the height channel treats as nominal.
const NOMINAL_ACTIVITY: f64 = 0.4;

/// Action change per step the joint-speed channel tolerates.
const NOMINAL_RATE: f64 = 0.5;

/// Exponential coefficient of the posture running average.
const POSTURE_SMOOTHING: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Nominal,
    Limited,
    Back,
    Run,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Nominal => "nominal",
            Scenario::Limited => "limited",
            Scenario::Back => "back",
            Scenario::Run => "run",
        }
    }

    pub fn all() -> [Scenario; 4] {
        [Scenario::Nominal, Scenario::Limited, Scenario::Back, Scenario::Run]
    }

    pub fn spec(&self) -> ScenarioSpec {
        match self {
            Scenario::Nominal => ScenarioSpec {
                name: self.name().to_string(),
                actuator_mask: [true; ACTUATORS],
                disable_lateral_coupling: false,
                deadzone: 0.0,
            },
            Scenario::Limited => {
                let mut mask = [true; ACTUATORS];
                mask[2] = false;
                mask[3] = false;
                ScenarioSpec {
                    name: self.name().to_string(),
                    actuator_mask: mask,
                    disable_lateral_coupling: true,
                    deadzone: 0.0,
                }
            }
            Scenario::Back => {
                let mut mask = [true; ACTUATORS];
                for m in mask.iter_mut().skip(4) {
                    *m = false;
                }
                ScenarioSpec {
                    name: self.name().to_string(),
                    actuator_mask: mask,
                    disable_lateral_coupling: false,
                    deadzone: 0.0,
                }
            }
            Scenario::Run => ScenarioSpec {
                name: self.name().to_string(),
                actuator_mask: [true; ACTUATORS],
                disable_lateral_coupling: false,
                deadzone: 0.6,
            },
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nominal" => Ok(Scenario::Nominal),
            "limited" => Ok(Scenario::Limited),
            "back" => Ok(Scenario::Back),
            "run" => Ok(Scenario::Run),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Actuation constraints of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub actuator_mask: [bool; ACTUATORS],
    pub disable_lateral_coupling: bool,
    pub deadzone: f64,
}

/// Fixed actuator-to-velocity mixing. Weights come from a seeded draw over
/// narrow ranges so the rows keep full rank and the leg/hip/twist structure
/// stays analytically invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingMap {
    /// Per-actuator thrust weight of the leg group (0, 1, 4, 5) into vx.
    pub thrust_weight: f64,
    /// Antagonistic hip weight (a2 - a3) into vy.
    pub hip_weight: f64,
    /// Antagonistic twist weight (a6 - a7) into wz.
    pub twist_weight: f64,
    /// Hip co-motion (a2 + a3) leak into wz.
    pub yaw_coupling: f64,
}

impl MixingMap {
    pub fn build() -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4C4F_434F);
        Self {
            thrust_weight: rng.random_range(0.70..0.80),
            hip_weight: rng.random_range(1.40..1.60),
            twist_weight: rng.random_range(1.40..1.60),
            yaw_coupling: rng.random_range(0.50..0.70),
        }
    }

    /// Pre-saturation mixing channels for an effective action.
    fn mix(&self, a: &[f64; ACTUATORS], disable_coupling: bool) -> [f64; 3] {
        let thrust = self.thrust_weight * (a[0] + a[1] + a[4] + a[5]);
        let lateral = self.hip_weight * (a[2] - a[3]);
        let mut yaw = self.twist_weight * (a[6] - a[7]);
        if !disable_coupling {
            yaw += self.yaw_coupling * (a[2] + a[3]);
        }
        [thrust, lateral, yaw]
    }
}

impl Default for MixingMap {
    fn default() -> Self {
        Self::build()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateState {
    pub velocities: [f64; 3],
    pub posture_deviation: f64,
    pub height_deviation: f64,
    pub prev_action: [f64; ACTUATORS],
    pub step_index: u32,
}

impl SurrogateState {
    fn initial() -> Self {
        Self {
            velocities: [0.0; 3],
            posture_deviation: 0.0,
            height_deviation: 0.0,
            prev_action: [0.0; ACTUATORS],
            step_index: 0,
        }
    }
}

/// One environment instance: a scenario, the active command, and the body
/// state. Instances are independent; run as many concurrently as you like.
#[derive(Debug, Clone)]
pub struct SurrogateEnv {
    spec: ScenarioSpec,
    map: MixingMap,
    command: Command,
    state: SurrogateState,
}

impl SurrogateEnv {
    pub fn new(spec: ScenarioSpec, command: Command) -> Self {
        Self { spec, map: MixingMap::build(), command, state: SurrogateState::initial() }
    }

    /// Zero velocities, zero deviations, step index 0.
    pub fn reset(&mut self) -> Vec<f64> {
        self.state = SurrogateState::initial();
        self.observation()
    }

    pub fn state(&self) -> &SurrogateState {
        &self.state
    }

    pub fn mixing_map(&self) -> &MixingMap {
        &self.map
    }

    /// State features concatenated with the active command.
    pub fn observation(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(OBS_DIM);
        obs.extend_from_slice(&self.state.velocities);
        obs.push(self.state.posture_deviation);
        obs.push(self.state.height_deviation);
        obs.extend_from_slice(&self.state.prev_action);
        obs.extend_from_slice(&self.command.as_array());
        obs
    }

    /// Advance one step. The action is clamped into [-1, 1], passed through
    /// the scenario deadzone and actuator mask, mixed into target velocities
    /// and tracked with a first-order lag.
    pub fn step(&mut self, action: &[f64; ACTUATORS]) -> Result<StepOutcome> {
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::SimulationFault(format!("non-finite action {action:?}")));
        }
        let mut effective = [0.0; ACTUATORS];
        for i in 0..ACTUATORS {
            let clamped = action[i].clamp(-1.0, 1.0);
            let gated = if clamped.abs() < self.spec.deadzone { 0.0 } else { clamped };
            effective[i] = if self.spec.actuator_mask[i] { gated } else { 0.0 };
        }

        let mixed = self.map.mix(&effective, self.spec.disable_lateral_coupling);
        for (v, u) in self.state.velocities.iter_mut().zip(mixed) {
            let target = u.tanh();
            *v += LAG * (target - *v);
        }

        let asymmetry = (0..ACTUATORS / 2)
            .map(|p| (effective[2 * p].abs() - effective[2 * p + 1].abs()).abs())
            .sum::<f64>()
            / (ACTUATORS / 2) as f64;
        self.state.posture_deviation =
            POSTURE_SMOOTHING * self.state.posture_deviation + (1.0 - POSTURE_SMOOTHING) * asymmetry;
        let mean_magnitude =
            effective.iter().map(|a| a.abs()).sum::<f64>() / ACTUATORS as f64;
        self.state.height_deviation = (mean_magnitude - NOMINAL_ACTIVITY).abs();
        let rate = effective
            .iter()
            .zip(&self.state.prev_action)
            .map(|(a, p)| (a - p) * (a - p))
            .sum::<f64>()
            .sqrt();
        let joint_speed_excess = (rate - NOMINAL_RATE).max(0.0);

        self.state.prev_action = effective;
        self.state.step_index += 1;

        Ok(StepOutcome {
            achieved: self.state.velocities,
            posture_deviation: self.state.posture_deviation,
            height_deviation: self.state.height_deviation,
            joint_speed_excess,
        })
    }
}

/// Anything that maps observations to raw actions: the learned policy or a
/// hand-built controller.
pub trait Controller {
    /// Raw (pre-clamp) action with its log-probability under the
    /// controller's action distribution.
    fn act(&self, obs: &[f64], explore: bool, rng: &mut ChaCha8Rng) -> ([f64; ACTUATORS], f64);
}

/// Per-simulation record consumed by learner updates and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub command: Command,
    pub observations: Vec<Vec<f64>>,
    /// Raw pre-clamp actions; log-probabilities refer to these.
    pub actions: Vec<[f64; ACTUATORS]>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub positive_rewards: Vec<f64>,
    pub achieved: Vec<[f64; 3]>,
    pub fault: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn mean_positive_reward(&self) -> f64 {
        if self.positive_rewards.is_empty() {
            return 0.0;
        }
        self.positive_rewards.iter().sum::<f64>() / self.positive_rewards.len() as f64
    }

    pub fn mean_rl_reward(&self) -> f64 {
        if self.rewards.is_empty() {
            return 0.0;
        }
        self.rewards.iter().sum::<f64>() / self.rewards.len() as f64
    }

    /// Mean achieved velocity after discarding the leading settling
    /// fraction of the episode.
    pub fn mean_achieved_velocity(&self, settle_fraction: f64) -> [f64; 3] {
        let skip = (self.achieved.len() as f64 * settle_fraction).floor() as usize;
        let tail = &self.achieved[skip.min(self.achieved.len().saturating_sub(1))..];
        let mut mean = [0.0; 3];
        for v in tail {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= tail.len() as f64;
        }
        mean
    }
}

/// Roll `controller` for `steps` steps on one command. Simulation faults do
/// not error out; they truncate the trajectory and set the fault marker.
pub fn simulate_command(
    controller: &dyn Controller,
    command: Command,
    spec: &ScenarioSpec,
    steps: usize,
    reward_cfg: &RewardConfig,
    explore: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::Config("simulation needs at least one step".into()));
    }
    let mut env = SurrogateEnv::new(spec.clone(), command);
    let mut traj = Trajectory {
        command,
        observations: Vec::with_capacity(steps),
        actions: Vec::with_capacity(steps),
        log_probs: Vec::with_capacity(steps),
        rewards: Vec::with_capacity(steps),
        positive_rewards: Vec::with_capacity(steps),
        achieved: Vec::with_capacity(steps),
        fault: None,
    };
    env.reset();
    for _ in 0..steps {
        let obs = env.observation();
        let (action, log_prob) = controller.act(&obs, explore, rng);
        let outcome = match env.step(&action) {
            Ok(o) => o,
            Err(e) => {
                traj.fault = Some(e.to_string());
                break;
            }
        };
        let r_pos = match positive_reward(&command, &outcome, reward_cfg) {
            Ok(r) => r,
            Err(e) => {
                traj.fault = Some(e.to_string());
                break;
            }
        };
        let r = rl_reward(&command, &outcome, reward_cfg)?;
        traj.observations.push(obs);
        traj.actions.push(action);
        traj.log_probs.push(log_prob);
        traj.rewards.push(r);
        traj.positive_rewards.push(r_pos);
        traj.achieved.push(outcome.achieved);
    }
    Ok(traj)
}

/// Constant action that tracks `cmd` under nominal actuation with zero
/// posture and height penalties in steady state, or None when the command
/// is outside the calm-tracking envelope. The leg group carries an
/// antagonistic offset that tunes mean actuator magnitude to the nominal
/// level without changing thrust.
pub fn calm_tracking_action(map: &MixingMap, cmd: &Command) -> Option<[f64; ACTUATORS]> {
    let invert = |v: f64| -> Option<f64> {
        if v.abs() >= 1.0 {
            None
        } else {
            Some(v.atanh())
        }
    };
    let x = invert(cmd.vx)? / (4.0 * map.thrust_weight);
    let hip = invert(cmd.vy)? / (2.0 * map.hip_weight);
    let twist = invert(cmd.wz)? / (2.0 * map.twist_weight);
    let offset = NOMINAL_ACTIVITY * 2.0 - (hip.abs() + twist.abs()) / 2.0;
    if offset < x.abs() || x.abs() + offset > 1.0 || hip.abs() > 1.0 || twist.abs() > 1.0 {
        return None;
    }
    Some([x + offset, x + offset, hip, -hip, x - offset, x - offset, twist, -twist])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn random_action(rng: &mut ChaCha8Rng) -> [f64; ACTUATORS] {
        let mut a = [0.0; ACTUATORS];
        for v in &mut a {
            *v = rng.random_range(-1.0..=1.0);
        }
        a
    }

    #[test]
    fn reset_gives_zero_state_and_command_in_observation() {
        let cmd = Command::new(0.3, -0.2, 0.5);
        let mut env = SurrogateEnv::new(Scenario::Nominal.spec(), cmd);
        let obs = env.reset();
        assert_eq!(obs.len(), OBS_DIM);
        assert_eq!(env.state().velocities, [0.0; 3]);
        assert_eq!(env.state().posture_deviation, 0.0);
        assert_eq!(env.state().step_index, 0);
        assert_eq!(&obs[OBS_DIM - 3..], &cmd.as_array());
    }

    #[test]
    fn zero_action_is_a_velocity_fixed_point() {
        let mut env = SurrogateEnv::new(Scenario::Nominal.spec(), Command::new(0.5, 0.0, 0.0));
        env.reset();
        for _ in 0..50 {
            let out = env.step(&[0.0; ACTUATORS]).unwrap();
            assert_eq!(out.achieved, [0.0; 3]);
        }
    }

    #[test]
    fn run_deadzone_zeroes_subthreshold_actions() {
        let cmd = Command::new(0.5, 0.0, 0.0);
        let mut gated = SurrogateEnv::new(Scenario::Run.spec(), cmd);
        let mut idle = SurrogateEnv::new(Scenario::Run.spec(), cmd);
        gated.reset();
        idle.reset();
        for _ in 0..20 {
            let a = gated.step(&[0.5; ACTUATORS]).unwrap();
            let b = idle.step(&[0.0; ACTUATORS]).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(gated.state(), idle.state());
    }

    #[test]
    fn run_passes_large_actions() {
        let mut env = SurrogateEnv::new(Scenario::Run.spec(), Command::new(0.5, 0.0, 0.0));
        env.reset();
        let mut a = [0.0; ACTUATORS];
        a[0] = 0.7;
        let out = env.step(&a).unwrap();
        assert!(out.achieved[0] > 0.0);
    }

    #[test]
    fn limited_scenario_kills_lateral_motion() {
        // Falsification search: no action sequence moves the body laterally
        // when the hips are masked.
        let mut rng = stream(41, &[1]);
        let spec = Scenario::Limited.spec();
        let mut max_abs_vy: f64 = 0.0;
        for _ in 0..100_000 {
            let mut env = SurrogateEnv::new(spec.clone(), Command::new(0.0, 0.9, 0.0));
            env.reset();
            // Short horizons dominate the search budget; a few long ones
            // catch slow drift.
            for _ in 0..20 {
                let out = env.step(&random_action(&mut rng)).unwrap();
                max_abs_vy = max_abs_vy.max(out.achieved[1].abs());
            }
        }
        let mut env = SurrogateEnv::new(spec, Command::new(0.0, 0.9, 0.0));
        env.reset();
        for _ in 0..100 {
            let out = env.step(&random_action(&mut rng)).unwrap();
            max_abs_vy = max_abs_vy.max(out.achieved[1].abs());
        }
        assert!(max_abs_vy <= 0.05, "lateral constraint violated: |vy| up to {max_abs_vy}");
    }

    #[test]
    fn nominal_envelope_strictly_contains_constrained_envelopes() {
        let mut hull = |scenario: Scenario| -> [f64; 3] {
            let mut rng = stream(41, &[2]);
            let mut max_abs = [0.0f64; 3];
            for _ in 0..2_000 {
                let mut env = SurrogateEnv::new(scenario.spec(), Command::new(0.5, 0.0, 0.0));
                env.reset();
                let held = random_action(&mut rng);
                for _ in 0..60 {
                    let out = env.step(&held).unwrap();
                    for (m, v) in max_abs.iter_mut().zip(out.achieved) {
                        *m = m.max(v.abs());
                    }
                }
            }
            max_abs
        };
        let nominal = hull(Scenario::Nominal);
        let limited = hull(Scenario::Limited);
        let back = hull(Scenario::Back);
        for axis in 0..3 {
            assert!(nominal[axis] >= limited[axis] - 1e-12);
            assert!(nominal[axis] >= back[axis] - 1e-12);
        }
        assert!(limited[1] < 0.05 && nominal[1] > 0.5, "limited must lose lateral reach");
        assert!(back[0] < nominal[0] - 0.05, "back must lose thrust reach");
        // With the twist pair masked, only the weaker hip coupling can yaw.
        assert!(back[2] < nominal[2] - 0.05, "back must lose yaw reach");
    }

    #[test]
    fn dynamics_replay_is_exact() {
        let mut rng = stream(41, &[3]);
        let cmd = Command::new(0.2, 0.4, -0.3);
        let actions: Vec<[f64; ACTUATORS]> = (0..100).map(|_| random_action(&mut rng)).collect();
        let run = || {
            let mut env = SurrogateEnv::new(Scenario::Nominal.spec(), cmd);
            env.reset();
            actions.iter().map(|a| *env.step(a).unwrap().achieved.first().unwrap()).collect::<Vec<f64>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn calm_tracking_reaches_command_with_zero_penalties() {
        let map = MixingMap::build();
        let spec = Scenario::Nominal.spec();
        for cmd in [
            Command::new(0.5, 0.0, 0.0),
            Command::new(0.3, 0.2, -0.25),
            Command::new(0.0, 0.4, 0.3),
        ] {
            let action = calm_tracking_action(&map, &cmd)
                .unwrap_or_else(|| panic!("command {cmd:?} outside calm envelope"));
            let mut env = SurrogateEnv::new(spec.clone(), cmd);
            env.reset();
            let mut last = None;
            for step in 0..80 {
                let out = env.step(&action).unwrap();
                if step >= 1 {
                    assert_eq!(out.joint_speed_excess, 0.0, "joint channel active at {step}");
                    assert!(out.posture_deviation.abs() < 1e-12);
                    assert!(out.height_deviation.abs() < 1e-9);
                }
                last = Some(out);
            }
            let achieved = last.unwrap().achieved;
            for (a, c) in achieved.iter().zip(cmd.as_array()) {
                assert!((a - c).abs() < 1e-6, "tracking error {} for {cmd:?}", (a - c).abs());
            }
        }
    }

    #[test]
    fn non_finite_actions_fault() {
        let mut env = SurrogateEnv::new(Scenario::Nominal.spec(), Command::new(0.5, 0.0, 0.0));
        env.reset();
        let mut a = [0.0; ACTUATORS];
        a[3] = f64::NAN;
        assert!(matches!(env.step(&a), Err(Error::SimulationFault(_))));
    }

    struct HoldController([f64; ACTUATORS]);

    impl Controller for HoldController {
        fn act(&self, _obs: &[f64], _explore: bool, _rng: &mut ChaCha8Rng) -> ([f64; ACTUATORS], f64) {
            (self.0, 0.0)
        }
    }

    #[test]
    fn simulate_command_records_full_trajectories() {
        let cmd = Command::new(0.4, 0.0, 0.0);
        let spec = Scenario::Nominal.spec();
        let cfg = RewardConfig::default();
        let controller = HoldController([0.3; ACTUATORS]);
        let mut rng = stream(41, &[4]);
        let traj =
            simulate_command(&controller, cmd, &spec, 120, &cfg, false, &mut rng).unwrap();
        assert_eq!(traj.len(), 120);
        assert!(traj.fault.is_none());
        let mp = traj.mean_positive_reward();
        assert!((0.0..=2.0).contains(&mp));

        let mut rng2 = stream(41, &[4]);
        let again =
            simulate_command(&controller, cmd, &spec, 120, &cfg, false, &mut rng2).unwrap();
        assert_eq!(traj, again);
    }
}
