use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::shape::Shape;
use crate::error::{Error, Result};
use crate::taxonomy::TopologyLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Affordance {
    Lift,
    Pull,
    Press,
    Twist,
    Lever,
    WrapGrasp,
    HandleGrasp,
}

impl Affordance {
    /// Report row order.
    pub const ALL: [Affordance; 7] = [
        Affordance::Lift,
        Affordance::Pull,
        Affordance::Press,
        Affordance::Twist,
        Affordance::Lever,
        Affordance::WrapGrasp,
        Affordance::HandleGrasp,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Affordance::Lift => "Lift",
            Affordance::Pull => "Pull",
            Affordance::Press => "Press",
            Affordance::Twist => "Twist",
            Affordance::Lever => "Lever",
            Affordance::WrapGrasp => "Wrap-Grasp",
            Affordance::HandleGrasp => "Handle-Grasp",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Affordance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

impl FromStr for Affordance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', '_'], "");
        Self::ALL
            .into_iter()
            .find(|a| a.title().to_ascii_lowercase().replace('-', "") == norm)
            .ok_or_else(|| Error::Task(format!("unknown affordance `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub position: Vector3<f64>,
    pub orient: UnitQuaternion<f64>,
    pub shape: Shape,
    pub mass: f64,
    pub mu: f64,
}

impl ObjectState {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Task(format!("object mass must be positive, got {}", self.mass)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::Task(format!("friction coefficient must be >= 0, got {}", self.mu)));
        }
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("object position".into()));
        }
        Ok(())
    }

    /// Half extent of the object along world z.
    pub fn vertical_half_extent(&self) -> f64 {
        self.shape.half_extent_along(&self.orient.inverse_transform_vector(&Vector3::z()))
    }

    /// Signed distance and outward unit normal (world frame) at `p`.
    pub fn sdf(&self, p: &Vector3<f64>) -> (f64, Option<Vector3<f64>>) {
        let local = self.orient.inverse_transform_vector(&(p - self.position));
        let (d, g) = self.shape.sdf(&local);
        (d, g.map(|g| self.orient.transform_vector(&g)))
    }

    pub fn max_dim(&self) -> f64 {
        self.shape.dims().iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(default)]
    pub name: String,
    pub object: ObjectState,
    pub affordance: Affordance,
    pub topology: TopologyLabel,
    /// Target palm position for the grasp.
    pub grasp_location: Vector3<f64>,
    /// Palm orientation used throughout the episode.
    pub grasp_orient: UnitQuaternion<f64>,
    /// Direction along which twist torque or press force is measured.
    pub success_axis: Vector3<f64>,
}

impl TaskSpec {
    pub fn validate(&self, workspace_half: f64) -> Result<()> {
        self.object.validate()?;
        let inside = |v: &Vector3<f64>| v.iter().all(|c| c.is_finite() && c.abs() <= workspace_half);
        if !inside(&self.grasp_location) {
            return Err(Error::Task(format!(
                "task `{}`: grasp location {:?} outside workspace",
                self.name,
                self.grasp_location.as_slice()
            )));
        }
        if !inside(&self.object.position) {
            return Err(Error::Task(format!("task `{}`: object outside workspace", self.name)));
        }
        let n = self.success_axis.norm();
        if !((n - 1.0).abs() < 1e-6) {
            return Err(Error::Task(format!(
                "task `{}`: success_axis must be a unit vector (norm {n})",
                self.name
            )));
        }
        Ok(())
    }
}

/// Reads a task file: a JSON array of tasks.
pub fn load_tasks(path: &Path) -> Result<Vec<TaskSpec>> {
    let text = std::fs::read_to_string(path)?;
    let tasks: Vec<TaskSpec> = serde_json::from_str(&text)?;
    if tasks.is_empty() {
        return Err(Error::Task(format!("{} contains no tasks", path.display())));
    }
    Ok(tasks)
}

pub fn save_tasks(path: &Path, tasks: &[TaskSpec]) -> Result<()> {
    let text = serde_json::to_string_pretty(tasks)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
