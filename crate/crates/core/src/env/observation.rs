use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::contact::{contact_wrench, friction_cone_check, Contact};
use super::task::ObjectState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalObservation {
    pub n_c: usize,
    pub o_dist: f64,
    pub o_object: Vector3<f64>,
    pub o_cone: bool,
    /// Palm origin minus object position.
    pub o_relative: Vector3<f64>,
    /// Net contact force plus object weight (N).
    pub o_force: Vector3<f64>,
    /// Net contact torque about the object's centre of mass (N m).
    pub o_torque: Vector3<f64>,
}

impl GlobalObservation {
    pub fn build(
        palm_pos: &Vector3<f64>,
        grasp_location: &Vector3<f64>,
        object: &ObjectState,
        contacts: &[Contact],
        gravity: f64,
    ) -> Self {
        let (force, torque) = contact_wrench(contacts, &object.position);
        Self {
            n_c: contacts.len(),
            o_dist: (palm_pos - grasp_location).norm(),
            o_object: object.position,
            o_cone: friction_cone_check(contacts, object.mu),
            o_relative: palm_pos - object.position,
            o_force: force - Vector3::new(0.0, 0.0, object.mass * gravity),
            o_torque: torque,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.o_dist.is_finite()
            && [self.o_object, self.o_relative, self.o_force, self.o_torque]
                .iter()
                .all(|v| v.iter().all(|c| c.is_finite()))
    }
}
