//! Categorical encoding and per-site classifiers.

mod encode;
mod forest;
mod knn;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use encode::{encode, BinaryMatrix, FeatureVocabulary, VocabularyBlock};
pub use forest::{gini, train_forest, DecisionTree, ForestParams, MaxFeatures, Node, RandomForestModel};
pub use knn::{knn_reference, KnnReference};

/// Probabilities over labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassDistribution(BTreeMap<String, f64>);

impl ClassDistribution {
    /// Certainty on a single label.
    pub fn certain(label: impl Into<String>) -> Self {
        ClassDistribution(BTreeMap::from([(label.into(), 1.0)]))
    }

    pub fn from_map(map: BTreeMap<String, f64>) -> Self {
        ClassDistribution(map)
    }

    pub fn probability(&self, label: &str) -> f64 {
        self.0.get(label).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    /// Most probable label; ties go to the smallest label.
    pub fn argmax(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (label, p) in self.iter() {
            match best {
                Some((_, b)) if p <= b + 1e-12 => {}
                _ => best = Some((label, p)),
            }
        }
        best.map(|(l, _)| l)
    }
}
