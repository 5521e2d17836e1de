// SPDX-License-Identifier: Apache-2.0

//! Random forest, Gaussian mixture and affinity propagation, plus the model
//! bundle that carries one Trojan class's trained models.

pub mod affinity;
pub mod forest;
pub mod mixture;

pub use affinity::{affinity_propagation, neg_sq_euclidean, read_similarity_csv, ClusterAssignment};
pub use forest::{train_classifier, Forest, ForestParams};
pub use mixture::{fit_em, fit_mixture, Component, EmFit, Mixture, VARIANCE_FLOOR};

use crate::error::{Error, Result};
use crate::features::{FeatureMask, TrojanFeatureVector, NUM_NET_FEATURES, NUM_TROJAN_FEATURES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Draws a reference Trojan vector, clamped to the unit cube.
pub fn sample_reference(m: &Mixture, seed: u64) -> TrojanFeatureVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = m.sample(&mut rng);
    let mut a = [0.0; NUM_TROJAN_FEATURES];
    for (o, x) in a.iter_mut().zip(v) {
        *o = x.clamp(0.0, 1.0);
    }
    TrojanFeatureVector::from_array(a)
}

pub const BUNDLE_SCHEMA: u32 = 1;

/// Trained models for one Trojan class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema: u32,
    pub net_features: usize,
    pub trojan_features: usize,
    pub mask: FeatureMask,
    /// Template the training Trojans were built from.
    pub template: String,
    pub cluster: usize,
    /// Trojan vectors of the cluster's training members.
    pub members: Vec<TrojanFeatureVector>,
    pub trigger: Forest,
    pub payload: Forest,
    pub trojan: Mixture,
}

impl ModelBundle {
    pub fn new(
        mask: FeatureMask,
        template: &str,
        cluster: usize,
        members: Vec<TrojanFeatureVector>,
        trigger: Forest,
        payload: Forest,
        trojan: Mixture,
    ) -> Self {
        ModelBundle {
            schema: BUNDLE_SCHEMA,
            net_features: NUM_NET_FEATURES,
            trojan_features: NUM_TROJAN_FEATURES,
            mask,
            template: template.to_string(),
            cluster,
            members,
            trigger,
            payload,
            trojan,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.schema != BUNDLE_SCHEMA {
            return Err(Error::Schema(format!("bundle schema {} (expected {BUNDLE_SCHEMA})", self.schema)));
        }
        if self.net_features != NUM_NET_FEATURES || self.trojan_features != NUM_TROJAN_FEATURES {
            return Err(Error::Schema(format!(
                "bundle has {} net / {} Trojan features",
                self.net_features, self.trojan_features
            )));
        }
        let d = self.mask.dim();
        for f in [&self.trigger, &self.payload] {
            if f.n_features != d {
                return Err(Error::Schema(format!("classifier expects {} features, mask gives {d}", f.n_features)));
            }
        }
        if self.trojan.components.is_empty() || self.trojan.dim() != NUM_TROJAN_FEATURES {
            return Err(Error::Schema("Trojan model must be 5-dimensional".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: ModelBundle = serde_json::from_str(text)?;
        b.check()?;
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
