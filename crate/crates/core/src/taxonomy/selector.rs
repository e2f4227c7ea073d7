//! Topology-selection network: object features and task objective in,
//! per-topology probabilities out.

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{label_oracle, FeatureVector, FEATURE_DIM};
use super::TopologyLabel;
use crate::approx::{Mlp, OptimState};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub n_train: usize,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            epochs: 80,
            batch_size: 64,
            lr: 3e-3,
            n_train: 10_000,
        }
    }
}

/// Fixed input scaling so sizes and masses sit near unit range.
pub fn encode(f: &FeatureVector) -> Vec<f64> {
    let mut x = f.to_array().to_vec();
    for d in &mut x[..3] {
        *d = (*d - 0.075) / 0.03;
    }
    x[6] = (x[6] - 0.4) / 0.25;
    x
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone)]
pub struct TopologySelector {
    net: Option<Mlp>,
    size_threshold: f64,
}

impl TopologySelector {
    /// Without a network every query falls back to the rule table.
    pub fn untrained(size_threshold: f64) -> Self {
        Self {
            net: None,
            size_threshold,
        }
    }

    pub fn with_net(net: Mlp, size_threshold: f64) -> Self {
        Self {
            net: Some(net),
            size_threshold,
        }
    }

    pub fn net(&self) -> Option<&Mlp> {
        self.net.as_ref()
    }

    pub fn probabilities(&self, f: &FeatureVector) -> [f64; 6] {
        let mut out = [0.0; 6];
        match &self.net {
            Some(net) => {
                let z = net.forward(&encode(f)).expect("selector input is 14 wide");
                for (o, z) in out.iter_mut().zip(z) {
                    *o = sigmoid(z);
                }
            }
            None => {
                warn!("topology selector has no trained network; using rule table");
                out[label_oracle(f, self.size_threshold).index()] = 1.0;
            }
        }
        out
    }

    pub fn select(&self, f: &FeatureVector) -> TopologyLabel {
        let p = self.probabilities(f);
        let best = (0..6).fold(0, |b, i| if p[i] > p[b] { i } else { b });
        TopologyLabel::ALL[best]
    }
}

pub fn selector_sizes(cfg: &SelectorConfig) -> Vec<usize> {
    let mut sizes = vec![FEATURE_DIM];
    sizes.extend(&cfg.hidden);
    sizes.push(TopologyLabel::ALL.len());
    sizes
}

/// Trains with per-label binary cross-entropy against one-hot targets.
/// Returns the network and the final epoch's mean loss.
pub fn train_selector<R: Rng + ?Sized>(
    samples: &[(FeatureVector, TopologyLabel)],
    cfg: &SelectorConfig,
    rng: &mut R,
) -> Result<(Mlp, f64)> {
    let mut net = Mlp::glorot(&selector_sizes(cfg), rng)?;
    let mut opt = OptimState::new(net.params().len(), cfg.lr);
    let inputs: Vec<Vec<f64>> = samples.iter().map(|(f, _)| encode(f)).collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grads = vec![0.0; net.params().len()];
    let mut last_loss = f64::NAN;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let trace = net.forward_trace(&inputs[i])?;
                let z = trace.output();
                let target = samples[i].1.index();
                let mut dz = vec![0.0; z.len()];
                for (k, &zk) in z.iter().enumerate() {
                    let y = if k == target { 1.0 } else { 0.0 };
                    let p = sigmoid(zk);
                    // numerically stable BCE with logits
                    total += zk.max(0.0) - zk * y + (-zk.abs()).exp().ln_1p();
                    dz[k] = (p - y) / batch.len() as f64;
                }
                net.backward_accumulate(&trace, &dz, &mut grads)?;
            }
            opt.step(net.params_mut(), &grads)?;
        }
        last_loss = total / samples.len() as f64;
    }
    Ok((net, last_loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Affordance, Shape};

    #[test]
    fn zero_net_gives_one_half() {
        let net = Mlp::zeros(&[14, 32, 32, 6]).unwrap();
        let s = TopologySelector::with_net(net, 0.06);
        let f = FeatureVector::new(&Shape::Sphere { radius: 0.03 }, 0.2, Affordance::Lift);
        assert_eq!(s.probabilities(&f), [0.5; 6]);
    }

    #[test]
    fn fallback_matches_oracle() {
        let s = TopologySelector::untrained(0.06);
        let f = FeatureVector::new(&Shape::Sphere { radius: 0.03 }, 0.2, Affordance::Press);
        assert_eq!(s.select(&f), TopologyLabel::Platform);
    }
}
