use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{TaxonomyConfig, TopologyLabel};
use crate::env::{Affordance, Shape, TaskSpec};
use crate::error::{Error, Result};

pub const FEATURE_DIM: usize = 14;

/// Object dimensions, shape one-hot, mass and affordance one-hot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dims: [f64; 3],
    pub shape: [f64; 3],
    pub mass: f64,
    pub affordance: [f64; 7],
}

impl FeatureVector {
    pub fn new(shape: &Shape, mass: f64, affordance: Affordance) -> Self {
        let mut aff = [0.0; 7];
        aff[affordance.index()] = 1.0;
        Self {
            dims: shape.dims(),
            shape: shape.one_hot(),
            mass,
            affordance: aff,
        }
    }

    pub fn from_task(task: &TaskSpec) -> Self {
        Self::new(&task.object.shape, task.object.mass, task.affordance)
    }

    pub fn validate(&self) -> Result<()> {
        let hot = |v: &[f64]| v.iter().filter(|&&x| x == 1.0).count() == 1 && v.iter().all(|&x| x == 0.0 || x == 1.0);
        if !hot(&self.shape) || !hot(&self.affordance) {
            return Err(Error::Task("feature one-hot fields must have exactly one hot entry".into()));
        }
        if !self.dims.iter().all(|&d| d > 0.0) {
            return Err(Error::Task("feature dims must be positive".into()));
        }
        Ok(())
    }

    pub fn affordance(&self) -> Affordance {
        let i = self
            .affordance
            .iter()
            .position(|&v| v == 1.0)
            .unwrap_or(0);
        Affordance::ALL[i]
    }

    pub fn max_dim(&self) -> f64 {
        self.dims.iter().cloned().fold(0.0, f64::max)
    }

    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        out[..3].copy_from_slice(&self.dims);
        out[3..6].copy_from_slice(&self.shape);
        out[6] = self.mass;
        out[7..].copy_from_slice(&self.affordance);
        out
    }
}

/// Rule table standing in for annotated grasp labels.
pub fn label_oracle(f: &FeatureVector, size_threshold: f64) -> TopologyLabel {
    match f.affordance() {
        Affordance::Press => TopologyLabel::Platform,
        Affordance::Twist | Affordance::Lever => TopologyLabel::InSiAd2,
        Affordance::Pull => TopologyLabel::PPdAb25,
        Affordance::Lift | Affordance::WrapGrasp | Affordance::HandleGrasp => {
            if f.max_dim() >= size_threshold {
                TopologyLabel::PoPmAb25
            } else {
                TopologyLabel::PPdAb23
            }
        }
    }
}

/// Draws a shape from the configured size ranges.
pub fn sample_shape<R: Rng + ?Sized>(rng: &mut R, cfg: &TaxonomyConfig) -> Shape {
    let kind = rng.random_range(0..3u8);
    let mut u = |r: [f64; 2]| rng.random_range(r[0]..=r[1]);
    match kind {
        0 => {
            let mut h = [u(cfg.box_size) / 2.0, u(cfg.box_size) / 2.0, u(cfg.box_size) / 2.0];
            // shorter horizontal side across the grip
            if h[1] > h[0] {
                h.swap(0, 1);
            }
            Shape::Box { half_extents: h }
        }
        1 => Shape::Cylinder {
            radius: u(cfg.cylinder_radius),
            half_height: u(cfg.cylinder_height) / 2.0,
        },
        _ => Shape::Sphere {
            radius: u(cfg.sphere_radius),
        },
    }
}

pub fn sample_features<R: Rng + ?Sized>(rng: &mut R, cfg: &TaxonomyConfig) -> FeatureVector {
    let shape = sample_shape(rng, cfg);
    let mass = rng.random_range(cfg.mass[0]..=cfg.mass[1]);
    let aff = Affordance::ALL[rng.random_range(0..Affordance::ALL.len())];
    FeatureVector::new(&shape, mass, aff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let sphere = |r| Shape::Sphere { radius: r };
        let f = FeatureVector::new(&sphere(0.02), 0.1, Affordance::Lift);
        assert_eq!(label_oracle(&f, 0.06), TopologyLabel::PPdAb23);
        let f = FeatureVector::new(&sphere(0.04), 0.1, Affordance::Lift);
        assert_eq!(label_oracle(&f, 0.06), TopologyLabel::PoPmAb25);
        let f = FeatureVector::new(&sphere(0.04), 0.1, Affordance::Press);
        assert_eq!(label_oracle(&f, 0.06), TopologyLabel::Platform);
        let f = FeatureVector::new(&sphere(0.04), 0.1, Affordance::Twist);
        assert_eq!(label_oracle(&f, 0.06), TopologyLabel::InSiAd2);
        let f = FeatureVector::new(&sphere(0.04), 0.1, Affordance::Pull);
        assert_eq!(label_oracle(&f, 0.06), TopologyLabel::PPdAb25);
    }

    #[test]
    fn encoding_layout() {
        let f = FeatureVector::new(&Shape::Cylinder { radius: 0.02, half_height: 0.05 }, 0.3, Affordance::Lever);
        f.validate().unwrap();
        let a = f.to_array();
        assert_eq!(&a[..3], &[0.04, 0.04, 0.1]);
        assert_eq!(&a[3..6], &[0.0, 1.0, 0.0]);
        assert_eq!(a[6], 0.3);
        assert_eq!(a[7 + Affordance::Lever.index()], 1.0);
        assert_eq!(a[7..].iter().sum::<f64>(), 1.0);
    }
}
