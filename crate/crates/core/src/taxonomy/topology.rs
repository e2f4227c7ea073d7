use std::fmt;
use std::str::FromStr;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grasp topologies. Output order of the selector network follows `ALL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TopologyLabel {
    #[serde(rename = "platform")]
    Platform,
    #[serde(rename = "poPmAb25")]
    PoPmAb25,
    #[serde(rename = "pPdAb2")]
    PPdAb2,
    #[serde(rename = "pPdAb23")]
    PPdAb23,
    #[serde(rename = "pPdAb25")]
    PPdAb25,
    #[serde(rename = "InSiAd2")]
    InSiAd2,
}

impl TopologyLabel {
    pub const ALL: [TopologyLabel; 6] = [
        TopologyLabel::Platform,
        TopologyLabel::PoPmAb25,
        TopologyLabel::PPdAb2,
        TopologyLabel::PPdAb23,
        TopologyLabel::PPdAb25,
        TopologyLabel::InSiAd2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopologyLabel::Platform => "platform",
            TopologyLabel::PoPmAb25 => "poPmAb25",
            TopologyLabel::PPdAb2 => "pPdAb2",
            TopologyLabel::PPdAb23 => "pPdAb23",
            TopologyLabel::PPdAb25 => "pPdAb25",
            TopologyLabel::InSiAd2 => "InSiAd2",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&l| l == self).unwrap()
    }
}

impl fmt::Display for TopologyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Task(format!("unknown topology label `{s}`")))
    }
}

/// Digit order used everywhere: thumb, index, middle, ring, little.
pub const NUM_DIGITS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub label: TopologyLabel,
    pub active_fingers: [bool; NUM_DIGITS],
    pub palm_contact_required: bool,
    pub min_contacts: usize,
    /// Applied after the canonical hand orientation (hand-local rotation).
    pub palm_orient_offset: UnitQuaternion<f64>,
}

impl TopologySpec {
    /// Fingers plus the palm when it is a required contact source.
    pub fn contact_sources(&self) -> usize {
        self.active_fingers.iter().filter(|&&a| a).count() + usize::from(self.palm_contact_required)
    }

    pub fn active_non_thumb(&self) -> usize {
        self.active_fingers[1..].iter().filter(|&&a| a).count()
    }
}

pub fn topology_spec(label: TopologyLabel) -> TopologySpec {
    let (active, palm, min) = match label {
        TopologyLabel::Platform => ([false; 5], true, 1),
        TopologyLabel::PPdAb2 => ([true, true, false, false, false], false, 2),
        TopologyLabel::PPdAb23 => ([true, true, true, false, false], false, 3),
        TopologyLabel::PPdAb25 => ([true; 5], false, 3),
        TopologyLabel::PoPmAb25 => ([true; 5], true, 4),
        TopologyLabel::InSiAd2 => ([true, true, false, false, false], false, 2),
    };
    let offset = match label {
        // palm turned to face the support surface
        TopologyLabel::Platform => {
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::FRAC_PI_2)
        }
        _ => UnitQuaternion::identity(),
    };
    TopologySpec {
        label,
        active_fingers: active,
        palm_contact_required: palm,
        min_contacts: min,
        palm_orient_offset: offset,
    }
}
