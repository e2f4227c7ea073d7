//! Analytic signed distance functions in the object frame.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEGENERATE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Box { half_extents: [f64; 3] },
    /// Axis along the object z axis.
    Cylinder { radius: f64, half_height: f64 },
    Sphere { radius: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        let fine = match self {
            Shape::Box { half_extents } => half_extents.iter().all(|&h| ok(h)),
            Shape::Cylinder { radius, half_height } => ok(*radius) && ok(*half_height),
            Shape::Sphere { radius } => ok(*radius),
        };
        if fine {
            Ok(())
        } else {
            Err(Error::Task(format!("shape sizes must be positive: {self:?}")))
        }
    }

    /// Full extents along the object axes.
    pub fn dims(&self) -> [f64; 3] {
        match *self {
            Shape::Box { half_extents: h } => [2.0 * h[0], 2.0 * h[1], 2.0 * h[2]],
            Shape::Cylinder { radius, half_height } => [2.0 * radius, 2.0 * radius, 2.0 * half_height],
            Shape::Sphere { radius } => [2.0 * radius; 3],
        }
    }

    pub fn one_hot(&self) -> [f64; 3] {
        match self {
            Shape::Box { .. } => [1.0, 0.0, 0.0],
            Shape::Cylinder { .. } => [0.0, 1.0, 0.0],
            Shape::Sphere { .. } => [0.0, 0.0, 1.0],
        }
    }

    /// Support half-width along unit direction `u` (object frame).
    pub fn half_extent_along(&self, u: &Vector3<f64>) -> f64 {
        match *self {
            Shape::Box { half_extents: h } => {
                h[0] * u.x.abs() + h[1] * u.y.abs() + h[2] * u.z.abs()
            }
            Shape::Cylinder { radius, half_height } => {
                half_height * u.z.abs() + radius * (u.x * u.x + u.y * u.y).sqrt()
            }
            Shape::Sphere { radius } => radius,
        }
    }

    /// Signed distance (negative inside) and outward unit gradient. The
    /// gradient is `None` where it is undefined.
    pub fn sdf(&self, p: &Vector3<f64>) -> (f64, Option<Vector3<f64>>) {
        match *self {
            Shape::Sphere { radius } => {
                let n = p.norm();
                let g = (n > DEGENERATE).then(|| p / n);
                (n - radius, g)
            }
            Shape::Box { half_extents: h } => {
                let q = Vector3::new(p.x.abs() - h[0], p.y.abs() - h[1], p.z.abs() - h[2]);
                let outside = q.map(|v| v.max(0.0));
                let out_norm = outside.norm();
                if out_norm > 0.0 {
                    let g = Vector3::new(
                        outside.x * p.x.signum(),
                        outside.y * p.y.signum(),
                        outside.z * p.z.signum(),
                    ) / out_norm;
                    return (out_norm, Some(g));
                }
                let axis = q.imax();
                let inside = q[axis];
                let mut g = Vector3::zeros();
                let g = if p[axis].abs() > DEGENERATE {
                    g[axis] = p[axis].signum();
                    Some(g)
                } else {
                    None
                };
                (inside, g)
            }
            Shape::Cylinder { radius, half_height } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                let dr = rho - radius;
                let dz = p.z.abs() - half_height;
                let radial = (rho > DEGENERATE).then(|| Vector3::new(p.x / rho, p.y / rho, 0.0));
                let axial = Vector3::new(0.0, 0.0, p.z.signum());
                if dr > 0.0 || dz > 0.0 {
                    let a = dr.max(0.0);
                    let b = dz.max(0.0);
                    let d = (a * a + b * b).sqrt();
                    let g = match radial {
                        Some(r) => Some((r * a + axial * b) / d),
                        None if b > 0.0 => Some(axial),
                        None => None,
                    };
                    (d, g)
                } else if dr > dz {
                    (dr, radial)
                } else {
                    let g = (p.z.abs() > DEGENERATE).then_some(axial);
                    (dz, g)
                }
            }
        }
    }
}
