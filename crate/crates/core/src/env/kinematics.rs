//! Planar coupled-joint hand model.
//!
//! Hand-local frame: x runs along the extended fingers, y is the palm
//! normal (the side the hand grasps with) and z is lateral across the palm.
//! Each finger is a planar chain in the x/y plane anchored on the distal
//! palm edge; the thumb anchors on the proximal edge.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::taxonomy::{TopologySpec, NUM_DIGITS};

pub const ALPHA_DIP: [f64; 4] = [0.77, 0.75, 0.75, 0.57];
pub const ALPHA_MCP: f64 = 0.67;
pub const ALPHA_TMCP: f64 = 0.5;

pub const THUMB: usize = 0;
/// Candidate points: 5 tips, 5 phalanx midpoints, palm pad.
pub const NUM_POINTS: usize = 2 * NUM_DIGITS + 1;
pub const PALM_POINT: usize = 2 * NUM_DIGITS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandConfig {
    /// Proximal, middle, distal link lengths of each finger (m).
    pub finger_links: [f64; 3],
    /// Proximal and distal thumb link lengths (m).
    pub thumb_links: [f64; 2],
    /// Palm plate extent along the finger axis (m).
    pub palm_length: f64,
    /// Palm plate extent across the fingers (m).
    pub palm_width: f64,
    pub theta_max: f64,
}

impl Default for HandConfig {
    fn default() -> Self {
        Self {
            finger_links: [0.045, 0.025, 0.020],
            thumb_links: [0.040, 0.030],
            palm_length: 0.080,
            palm_width: 0.090,
            theta_max: 1.6,
        }
    }
}

/// Dependent joint angles of one digit: `[mcp, pip, dip]` for fingers and
/// `[tmcp, ip]` for the thumb.
pub fn coupled_joints(digit: usize, theta: f64) -> Vec<f64> {
    if digit == THUMB {
        vec![theta, ALPHA_TMCP * theta]
    } else {
        vec![ALPHA_MCP * theta, theta, ALPHA_DIP[digit - 1] * theta]
    }
}

/// Hand-local anchors and thumb posture for one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct HandGeometry {
    pub cfg: HandConfig,
    pub anchors: [Vector3<f64>; NUM_DIGITS],
    /// In-plane heading of the thumb at zero flexion; flexion turns it
    /// toward the fingers.
    pub thumb_base: f64,
    pub active: [bool; NUM_DIGITS],
}

impl HandGeometry {
    pub fn new(cfg: &HandConfig, topo: &TopologySpec) -> Self {
        let w = cfg.palm_width;
        let lateral = [0.375 * w, 0.125 * w, -0.125 * w, -0.375 * w];
        let mut anchors = [Vector3::zeros(); NUM_DIGITS];
        for (i, s) in lateral.iter().enumerate() {
            anchors[i + 1] = Vector3::new(cfg.palm_length / 2.0, 0.0, *s);
        }
        let act: Vec<f64> = (1..NUM_DIGITS)
            .filter(|&i| topo.active_fingers[i])
            .map(|i| lateral[i - 1])
            .collect();
        let thumb_s = if act.is_empty() {
            0.0
        } else {
            act.iter().sum::<f64>() / act.len() as f64
        };
        anchors[THUMB] = Vector3::new(-cfg.palm_length / 2.0, 0.0, thumb_s);
        // an inactive thumb lies flat against the palm plate
        let thumb_base = if topo.active_fingers[THUMB] {
            std::f64::consts::FRAC_PI_2
        } else {
            std::f64::consts::PI
        };
        Self {
            cfg: cfg.clone(),
            anchors,
            thumb_base,
            active: topo.active_fingers,
        }
    }

    /// Hand-local `[midpoint, tip]` of a digit at flexion `theta`.
    pub fn digit_points(&self, digit: usize, theta: f64) -> [Vector3<f64>; 2] {
        let a = self.anchors[digit];
        let dir = |phi: f64| Vector3::new(phi.cos(), phi.sin(), 0.0);
        if digit == THUMB {
            let j = coupled_joints(digit, theta);
            let l = self.cfg.thumb_links;
            let h1 = self.thumb_base - j[0];
            let h2 = h1 - j[1];
            let knuckle = a + dir(h1) * l[0];
            [knuckle + dir(h2) * (0.5 * l[1]), knuckle + dir(h2) * l[1]]
        } else {
            let j = coupled_joints(digit, theta);
            let l = self.cfg.finger_links;
            let p1 = j[0];
            let p2 = p1 + j[1];
            let p3 = p2 + j[2];
            let k1 = a + dir(p1) * l[0];
            let k2 = k1 + dir(p2) * l[1];
            [k1 + dir(p2) * (0.5 * l[1]), k2 + dir(p3) * l[2]]
        }
    }

    /// All candidate contact points in the hand frame, ordered tips
    /// (thumb..little), midpoints (thumb..little), palm pad.
    pub fn local_points(&self, theta: &[f64; NUM_DIGITS]) -> [Vector3<f64>; NUM_POINTS] {
        let mut out = [Vector3::zeros(); NUM_POINTS];
        for d in 0..NUM_DIGITS {
            let [mid, tip] = self.digit_points(d, theta[d]);
            out[d] = tip;
            out[NUM_DIGITS + d] = mid;
        }
        out
    }
}

/// World-frame candidate contact points.
pub fn forward_kinematics(
    geom: &HandGeometry,
    palm_pos: &Vector3<f64>,
    palm_orient: &UnitQuaternion<f64>,
    theta: &[f64; NUM_DIGITS],
) -> [Vector3<f64>; NUM_POINTS] {
    geom.local_points(theta)
        .map(|p| palm_pos + palm_orient.transform_vector(&p))
}

/// Canonical palm orientation: fingers along world +y, palm normal along
/// world +x, lateral along world -z.
pub fn canonical_orientation() -> UnitQuaternion<f64> {
    let m = nalgebra::Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0);
    UnitQuaternion::from_matrix(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{topology_spec, TopologyLabel};

    #[test]
    fn index_coupling_example() {
        assert_eq!(coupled_joints(1, 1.0), vec![0.67, 1.0, 0.77]);
        assert_eq!(coupled_joints(THUMB, 1.0), vec![1.0, 0.5]);
    }

    #[test]
    fn extended_fingertips_at_link_sum() {
        let g = HandGeometry::new(&HandConfig::default(), &topology_spec(TopologyLabel::PPdAb25));
        let pts = g.local_points(&[0.0; 5]);
        for d in 1..5 {
            assert!((pts[d].x - (0.04 + 0.09)).abs() < 1e-15);
            assert_eq!(pts[d].y, 0.0);
        }
        assert!((pts[THUMB].y - 0.07).abs() < 1e-15);
        assert_eq!(pts[PALM_POINT], Vector3::zeros());
    }

    #[test]
    fn canonical_frame_axes() {
        let q = canonical_orientation();
        assert!((q * Vector3::x() - Vector3::y()).norm() < 1e-12);
        assert!((q * Vector3::y() - Vector3::x()).norm() < 1e-12);
        assert!((q * Vector3::z() + Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn platform_thumb_lies_flat() {
        let g = HandGeometry::new(&HandConfig::default(), &topology_spec(TopologyLabel::Platform));
        let pts = g.local_points(&[0.0; 5]);
        assert!(pts[THUMB].y.abs() < 1e-12);
        assert!(pts[THUMB].x < 0.0);
    }
}
