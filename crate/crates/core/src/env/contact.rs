//! Penalty contacts with capped friction.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::task::ObjectState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    /// Separation below which a point counts as touching (m).
    pub contact_eps: f64,
    /// Penalty stiffness (N/m).
    pub k_contact: f64,
    /// Penetration tolerated before the object is shoved (m).
    pub push_tol: f64,
    pub push_gain: f64,
    pub gravity: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            contact_eps: 0.002,
            k_contact: 500.0,
            push_tol: 0.004,
            push_gain: 0.5,
            gravity: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub point: Vector3<f64>,
    /// Outward object normal, pointing into the hand.
    pub normal: Vector3<f64>,
    pub f_normal: f64,
    pub f_tangent: Vector3<f64>,
    /// Index of the candidate point that produced this contact.
    pub source: usize,
}

impl Contact {
    /// Force exerted by the hand on the object.
    pub fn force_on_object(&self) -> Vector3<f64> {
        -self.normal * self.f_normal + self.f_tangent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactResult {
    pub contacts: Vec<Contact>,
    pub pushed_displacement: Vector3<f64>,
}

/// Normal force a single point would exert, ignoring friction.
pub fn penetration_force(object: &ObjectState, p: &Vector3<f64>, cfg: &ContactConfig) -> f64 {
    let (d, _) = object.sdf(p);
    cfg.k_contact * (-d).max(0.0)
}

pub fn compute_contacts(points: &[Vector3<f64>], object: &ObjectState, cfg: &ContactConfig) -> ContactResult {
    let mut contacts = Vec::new();
    let mut pushed = Vector3::zeros();
    for (i, p) in points.iter().enumerate() {
        let (d, grad) = object.sdf(p);
        if d > cfg.contact_eps {
            continue;
        }
        let Some(normal) = grad else { continue };
        let pen = (-d).max(0.0);
        contacts.push(Contact {
            point: *p,
            normal,
            f_normal: cfg.k_contact * pen,
            f_tangent: Vector3::zeros(),
            source: i,
        });
        let deep = pen - cfg.push_tol;
        if deep > 0.0 {
            pushed -= normal * (deep * cfg.push_gain);
        }
    }
    // Each contact resists its normal-force-weighted share of gravity,
    // limited to the tangent plane and the friction cone.
    let total: f64 = contacts.iter().map(|c| c.f_normal).sum();
    if total > 0.0 {
        let resist = Vector3::new(0.0, 0.0, object.mass * cfg.gravity);
        for c in &mut contacts {
            let share = resist * (c.f_normal / total);
            let mut t = share - c.normal * share.dot(&c.normal);
            let cap = object.mu * c.f_normal;
            let n = t.norm();
            if n > cap {
                t *= cap / n;
                // rounding can leave |t| a hair above the cap
                while t.norm() > cap {
                    t *= 1.0 - 1e-12;
                }
            }
            c.f_tangent = t;
        }
    }
    ContactResult {
        contacts,
        pushed_displacement: pushed,
    }
}

/// True iff there is at least one contact and every contact is inside its
/// friction cone.
pub fn friction_cone_check(contacts: &[Contact], mu: f64) -> bool {
    !contacts.is_empty() && contacts.iter().all(|c| c.f_tangent.norm() <= mu * c.f_normal)
}

/// Net contact force and torque about `com`.
pub fn contact_wrench(contacts: &[Contact], com: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    for c in contacts {
        let f = c.force_on_object();
        force += f;
        torque += (c.point - com).cross(&f);
    }
    (force, torque)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::shape::Shape;
    use nalgebra::UnitQuaternion;

    fn sphere(mass: f64, mu: f64) -> ObjectState {
        ObjectState {
            position: Vector3::zeros(),
            orient: UnitQuaternion::identity(),
            shape: Shape::Sphere { radius: 0.05 },
            mass,
            mu,
        }
    }

    #[test]
    fn separated_point_has_no_contact() {
        let r = compute_contacts(&[Vector3::new(0.06, 0.0, 0.0)], &sphere(0.1, 0.5), &ContactConfig::default());
        assert!(r.contacts.is_empty());
        assert!(!friction_cone_check(&r.contacts, 0.5));
    }

    #[test]
    fn one_millimetre_penetration_gives_half_newton() {
        let r = compute_contacts(&[Vector3::new(0.049, 0.0, 0.0)], &sphere(0.1, 0.5), &ContactConfig::default());
        assert_eq!(r.contacts.len(), 1);
        assert!((r.contacts[0].f_normal - 0.5).abs() < 1e-9);
        assert_eq!(r.pushed_displacement, Vector3::zeros());
    }

    #[test]
    fn friction_is_capped_and_tangent() {
        let pts = [Vector3::new(0.048, 0.0, 0.0), Vector3::new(-0.048, 0.0, 0.0)];
        let r = compute_contacts(&pts, &sphere(1.0, 0.3), &ContactConfig::default());
        for c in &r.contacts {
            assert!(c.f_tangent.norm() <= 0.3 * c.f_normal);
            assert!(c.f_tangent.dot(&c.normal).abs() < 1e-9);
        }
        assert!(friction_cone_check(&r.contacts, 0.3));
    }

    #[test]
    fn deep_contact_pushes_object_away() {
        let r = compute_contacts(&[Vector3::new(0.044, 0.0, 0.0)], &sphere(0.1, 0.5), &ContactConfig::default());
        // 6 mm deep, 2 mm past tolerance, half gain
        assert!((r.pushed_displacement - Vector3::new(-0.001, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cone_examples() {
        let mk = |ft: f64| Contact {
            point: Vector3::zeros(),
            normal: Vector3::x(),
            f_normal: 10.0,
            f_tangent: Vector3::new(0.0, ft, 0.0),
            source: 0,
        };
        assert!(friction_cone_check(&[mk(4.0)], 0.5));
        assert!(!friction_cone_check(&[mk(6.0)], 0.5));
    }
}
