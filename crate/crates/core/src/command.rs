//! Velocity-command domain.
//!
//! A command is a target (vx, vy, wz) triple. Commands are normalized
//! per-component into [-1, 1] against the configured bounds, then projected
//! onto the unit hypersphere where the vertices of an inscribed regular
//! simplex act as the learning objectives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum normalized magnitude below which a command counts as degenerate.
/// "Stand still" is not a direction on the hypersphere, so samplers reject
/// anything smaller and [`project_to_sphere`] refuses it.
pub const EPSILON_MIN: f64 = 0.05;

/// Number of command dimensions.
pub const COMMAND_DIMS: usize = 3;

const DIM_NAMES: [&str; COMMAND_DIMS] = ["vx", "vy", "wz"];

/// Tolerance for the unit-norm precondition of [`angle_between`].
const UNIT_NORM_TOL: f64 = 1e-9;

/// One locomotion task: target x/y linear velocity (m/s) and z angular
/// velocity (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
}

impl Command {
    pub fn new(vx: f64, vy: f64, wz: f64) -> Self {
        Self { vx, vy, wz }
    }

    pub fn from_array(v: [f64; COMMAND_DIMS]) -> Self {
        Self { vx: v[0], vy: v[1], wz: v[2] }
    }

    pub fn as_array(&self) -> [f64; COMMAND_DIMS] {
        [self.vx, self.vy, self.wz]
    }

    /// Euclidean magnitude of the raw (un-normalized) command.
    pub fn magnitude(&self) -> f64 {
        (self.vx * self.vx + self.vy * self.vy + self.wz * self.wz).sqrt()
    }

    /// Euclidean magnitude of the command after per-component normalization.
    pub fn normalized_magnitude(&self, bounds: &CommandBounds) -> Result<f64> {
        let n = normalize_command(self, bounds)?;
        Ok(norm(&n))
    }

    /// True when the normalized magnitude falls below [`EPSILON_MIN`].
    pub fn is_degenerate(&self, bounds: &CommandBounds) -> bool {
        match self.normalized_magnitude(bounds) {
            Ok(m) => m < EPSILON_MIN,
            Err(_) => false,
        }
    }
}

/// Per-dimension (min, max) limits of the command space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandBounds {
    pub min: [f64; COMMAND_DIMS],
    pub max: [f64; COMMAND_DIMS],
}

impl Default for CommandBounds {
    /// (-1, 1) m/s for vx, vy and (-1, 1) rad/s for wz. Mutation strengths
    /// are expressed relative to a unit velocity, so unit-scaled bounds are
    /// the natural default.
    fn default() -> Self {
        Self { min: [-1.0; COMMAND_DIMS], max: [1.0; COMMAND_DIMS] }
    }
}

impl CommandBounds {
    pub fn new(min: [f64; COMMAND_DIMS], max: [f64; COMMAND_DIMS]) -> Result<Self> {
        for d in 0..COMMAND_DIMS {
            if !min[d].is_finite() || !max[d].is_finite() {
                return Err(Error::Config(format!(
                    "bounds for {} must be finite",
                    DIM_NAMES[d]
                )));
            }
            if min[d] >= max[d] {
                return Err(Error::Config(format!(
                    "bounds for {} must satisfy min < max, got [{}, {}]",
                    DIM_NAMES[d], min[d], max[d]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn half_range(&self, dim: usize) -> f64 {
        (self.max[dim] - self.min[dim]) / 2.0
    }

    pub fn contains(&self, c: &Command) -> bool {
        c.as_array()
            .iter()
            .enumerate()
            .all(|(d, &v)| v >= self.min[d] && v <= self.max[d])
    }

    pub fn clamp(&self, c: Command) -> Command {
        let v = c.as_array();
        let mut out = [0.0; COMMAND_DIMS];
        for d in 0..COMMAND_DIMS {
            out[d] = v[d].clamp(self.min[d], self.max[d]);
        }
        Command::from_array(out)
    }

    /// Largest per-axis absolute velocity, used to derive reward feature
    /// ranges.
    pub fn max_axis_magnitude(&self) -> f64 {
        (0..COMMAND_DIMS)
            .map(|d| self.min[d].abs().max(self.max[d].abs()))
            .fold(0.0, f64::max)
    }
}

/// Map each component affinely so that min -> -1 and max -> +1.
pub fn normalize_command(c: &Command, bounds: &CommandBounds) -> Result<[f64; COMMAND_DIMS]> {
    let v = c.as_array();
    let mut out = [0.0; COMMAND_DIMS];
    for d in 0..COMMAND_DIMS {
        if v[d] < bounds.min[d] || v[d] > bounds.max[d] {
            return Err(Error::OutOfBounds {
                dim: DIM_NAMES[d],
                value: v[d],
                min: bounds.min[d],
                max: bounds.max[d],
            });
        }
        out[d] = 2.0 * (v[d] - bounds.min[d]) / (bounds.max[d] - bounds.min[d]) - 1.0;
    }
    Ok(out)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// L2-project a normalized coordinate onto the unit hypersphere.
///
/// Rejects inputs with norm below [`EPSILON_MIN`]; the selectors never
/// sample such commands.
pub fn project_to_sphere(n: &[f64]) -> Result<Vec<f64>> {
    let m = norm(n);
    if m < EPSILON_MIN {
        return Err(Error::DegenerateCommand { magnitude: m, minimum: EPSILON_MIN });
    }
    Ok(n.iter().map(|x| x / m).collect())
}

/// Vertices of a regular d-simplex inscribed in the unit d-sphere.
///
/// Canonical recursive construction with the first vertex on the first
/// coordinate axis: for d > 1 the remaining d vertices share first
/// coordinate -1/d and carry a scaled (d-1)-simplex in the other
/// coordinates. All pairwise dot products equal -1/d and the construction
/// is bit-identical across calls.
pub fn simplex_points(d: usize) -> Result<Vec<Vec<f64>>> {
    if d < 1 {
        return Err(Error::Config("simplex dimension must be >= 1".into()));
    }
    if d == 1 {
        return Ok(vec![vec![1.0], vec![-1.0]]);
    }
    let inner = simplex_points(d - 1)?;
    let first = 1.0 / d as f64;
    let scale = (1.0 - first * first).sqrt();
    let mut vertices = Vec::with_capacity(d + 1);
    let mut apex = vec![0.0; d];
    apex[0] = 1.0;
    vertices.push(apex);
    for sub in inner {
        let mut v = Vec::with_capacity(d);
        v.push(-first);
        v.extend(sub.iter().map(|x| x * scale));
        vertices.push(v);
    }
    Ok(vertices)
}

/// Angle in [0, pi] between two unit vectors; the dot product is clamped
/// into [-1, 1] before arccos.
pub fn angle_between(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "angle between vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    for w in [u, v] {
        let n = norm(w);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotUnit { norm: n });
        }
    }
    Ok(dot(u, v).clamp(-1.0, 1.0).acos())
}

/// The objective space: the unit hypersphere with d+1 inscribed simplex
/// vertices as objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpace {
    dims: usize,
    vertices: Vec<Vec<f64>>,
    max_angle: f64,
}

impl ObjectiveSpace {
    pub fn new(dims: usize) -> Result<Self> {
        let vertices = simplex_points(dims)?;
        // Inter-vertex angle of the regular simplex.
        let max_angle = (-1.0 / dims as f64).acos();
        Ok(Self { dims, vertices, max_angle })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Number of objectives (d + 1).
    pub fn objective_count(&self) -> usize {
        self.vertices.len()
    }

    /// Angle between adjacent simplex vertices, arccos(-1/d).
    pub fn max_angle(&self) -> f64 {
        self.max_angle
    }
}
