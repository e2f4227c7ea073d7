//! Grasp taxonomy: topology metadata, the labelling rule table, the
//! topology-selection network and the synthetic task generator.

pub mod features;
pub mod generate;
pub mod selector;
pub mod topology;

pub use features::{label_oracle, sample_features, FeatureVector, FEATURE_DIM};
pub use generate::{generate_task, generate_tasks};
pub use selector::{train_selector, SelectorConfig, TopologySelector};
pub use topology::{topology_spec, TopologyLabel, TopologySpec, NUM_DIGITS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxonomyConfig {
    /// Largest object dimension at which lifting switches to a power grasp (m).
    pub size_threshold: f64,
    /// Box side range (m).
    pub box_size: [f64; 2],
    pub cylinder_radius: [f64; 2],
    pub cylinder_height: [f64; 2],
    pub sphere_radius: [f64; 2],
    pub mass: [f64; 2],
    pub mu: [f64; 2],
    /// Object placement ranges on the support surface (m).
    pub place_x: [f64; 2],
    pub place_y: [f64; 2],
    /// Object resamples allowed per task before giving up.
    pub max_attempts: usize,
    /// Randomized scripted episodes a generated task must pass.
    pub robustness_trials: usize,
    pub selector: SelectorConfig,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        Self {
            size_threshold: 0.06,
            box_size: [0.03, 0.12],
            cylinder_radius: [0.01, 0.04],
            cylinder_height: [0.04, 0.12],
            sphere_radius: [0.02, 0.05],
            mass: [0.05, 0.8],
            mu: [0.3, 0.9],
            place_x: [0.25, 0.40],
            place_y: [-0.15, 0.15],
            max_attempts: 200,
            robustness_trials: 3,
            selector: SelectorConfig::default(),
        }
    }
}

impl TaxonomyConfig {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("taxonomy.box_size", self.box_size),
            ("taxonomy.cylinder_radius", self.cylinder_radius),
            ("taxonomy.cylinder_height", self.cylinder_height),
            ("taxonomy.sphere_radius", self.sphere_radius),
            ("taxonomy.mass", self.mass),
        ];
        for (key, [lo, hi]) in ranges {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::config(key, "range must satisfy 0 < lo <= hi"));
            }
        }
        if !(self.mu[0] >= 0.0 && self.mu[0] <= self.mu[1]) {
            return Err(Error::config("taxonomy.mu", "range must satisfy 0 <= lo <= hi"));
        }
        if !(self.size_threshold > 0.0) {
            return Err(Error::config("taxonomy.size_threshold", "must be positive"));
        }
        if self.max_attempts == 0 {
            return Err(Error::config("taxonomy.max_attempts", "must be at least 1"));
        }
        Ok(())
    }
}
