//! Random forest of CART trees over binary features.
//!
//! Each tree is grown on a bootstrap sample of the training rows. At a node,
//! features are drawn without replacement in random order and those that
//! are constant on the node are passed over without counting; the first
//! `max_features` non-constant ones are scored by Gini reduction and the
//! best wins, ties going to the lowest feature index. A node becomes a leaf
//! when it is pure, holds fewer than `min_samples_split` samples, has
//! reached `max_depth`, or has no non-constant feature left. Leaves keep the
//! label counts of the samples that reach them.
//!
//! Tree `t` draws from [`XorShift64Star::stream`]`(seed, t)` and nothing
//! else, so a forest does not depend on how trees are scheduled.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BinaryMatrix, ClassDistribution};
use crate::error::{Error, Result};
use crate::phonology::MISSING;
use crate::rng::XorShift64Star;

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))`.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            max_depth: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `feature == 0` go to `absent`, the rest to `present`.
    Split { feature: u32, absent: u32, present: u32 },
    /// `(label index, count)` pairs with non-zero counts.
    Leaf { counts: Vec<(u32, u32)> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn leaf(&self, x: &[u8]) -> &[(u32, u32)] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    absent,
                    present,
                } => {
                    at = if x[*feature as usize] != 0 { *present } else { *absent } as usize;
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub params: ForestParams,
    pub n_features: usize,
    /// Sorted label alphabet.
    pub labels: Vec<String>,
    pub trees: Vec<DecisionTree>,
}

/// Gini impurity `1 - Σ (c/N)²`.
pub fn gini(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("label counts"));
    }
    Ok(gini_unchecked(counts, total))
}

fn gini_unchecked(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Trains a forest on rows of `x` labelled by `y`.
pub fn train_forest(x: &BinaryMatrix, y: &[String], params: &ForestParams) -> Result<RandomForestModel> {
    if x.rows() == 0 || y.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if x.rows() != y.len() {
        return Err(Error::Invalid(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if y.iter().any(|l| l == MISSING) {
        return Err(Error::Invalid("`?` cannot be a training label".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::Invalid("a forest needs at least one tree".into()));
    }
    let mut labels: Vec<String> = y.to_vec();
    labels.sort();
    labels.dedup();
    let y_idx: Vec<usize> = y
        .iter()
        .map(|l| labels.binary_search(l).expect("label in alphabet"))
        .collect();

    let grower = Grower {
        x,
        y: &y_idx,
        n_labels: labels.len(),
        max_features: params.max_features.resolve(x.cols()),
        params,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grower.grow(XorShift64Star::stream(params.seed, t as u64)))
        .collect();
    Ok(RandomForestModel {
        params: params.clone(),
        n_features: x.cols(),
        labels,
        trees,
    })
}

struct Grower<'a> {
    x: &'a BinaryMatrix,
    y: &'a [usize],
    n_labels: usize,
    max_features: usize,
    params: &'a ForestParams,
}

impl Grower<'_> {
    fn label_counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_labels];
        for &s in samples {
            counts[self.y[s]] += 1;
        }
        counts
    }

    fn grow(&self, mut rng: XorShift64Star) -> DecisionTree {
        let n = self.x.rows();
        let samples: Vec<usize> = if self.params.bootstrap {
            (0..n).map(|_| rng.below(n)).collect()
        } else {
            (0..n).collect()
        };

        let mut nodes = vec![Node::Leaf { counts: vec![] }];
        let mut work = vec![(0usize, samples, 0usize)];
        let mut order: Vec<usize> = (0..self.x.cols()).collect();
        while let Some((at, samples, depth)) = work.pop() {
            let counts = self.label_counts(&samples);
            let split = if counts.iter().filter(|&&c| c > 0).count() <= 1
                || samples.len() < self.params.min_samples_split
                || self.params.max_depth.is_some_and(|m| depth >= m)
            {
                None
            } else {
                self.best_split(&samples, &counts, &mut order, &mut rng)
            };
            match split {
                None => {
                    nodes[at] = Node::Leaf {
                        counts: counts
                            .iter()
                            .enumerate()
                            .filter(|(_, &c)| c > 0)
                            .map(|(l, &c)| (l as u32, c as u32))
                            .collect(),
                    };
                }
                Some(feature) => {
                    let (present, absent): (Vec<usize>, Vec<usize>) =
                        samples.iter().partition(|&&s| self.x.get(s, feature));
                    let absent_at = nodes.len();
                    let present_at = absent_at + 1;
                    nodes.push(Node::Leaf { counts: vec![] });
                    nodes.push(Node::Leaf { counts: vec![] });
                    nodes[at] = Node::Split {
                        feature: feature as u32,
                        absent: absent_at as u32,
                        present: present_at as u32,
                    };
                    work.push((present_at, present, depth + 1));
                    work.push((absent_at, absent, depth + 1));
                }
            }
        }
        DecisionTree { nodes }
    }

    /// Best feature among up to `max_features` non-constant candidates.
    fn best_split(
        &self,
        samples: &[usize],
        counts: &[usize],
        order: &mut [usize],
        rng: &mut XorShift64Star,
    ) -> Option<usize> {
        let n = samples.len();
        let parent = gini_unchecked(counts, n);
        let d = order.len();
        let mut best: Option<(usize, f64)> = None;
        let mut evaluated = 0;
        let mut ones = vec![0usize; self.n_labels];
        for i in 0..d {
            if evaluated == self.max_features {
                break;
            }
            let j = i + rng.below(d - i);
            order.swap(i, j);
            let f = order[i];

            ones.iter_mut().for_each(|c| *c = 0);
            let mut n_ones = 0;
            for &s in samples {
                if self.x.get(s, f) {
                    ones[self.y[s]] += 1;
                    n_ones += 1;
                }
            }
            if n_ones == 0 || n_ones == n {
                continue;
            }
            evaluated += 1;
            let zeros: Vec<usize> = counts.iter().zip(&ones).map(|(c, o)| c - o).collect();
            let n_zeros = n - n_ones;
            let weighted = (n_ones as f64 * gini_unchecked(&ones, n_ones)
                + n_zeros as f64 * gini_unchecked(&zeros, n_zeros))
                / n as f64;
            let gain = parent - weighted;
            best = match best {
                Some((bf, bg)) if gain < bg - TIE_EPS || (gain <= bg + TIE_EPS && bf < f) => Some((bf, bg)),
                _ => Some((f, gain)),
            };
        }
        best.map(|(f, _)| f)
    }
}

impl RandomForestModel {
    /// Mean of the trees' normalised leaf counts.
    pub fn predict_proba(&self, x: &[u8]) -> Result<ClassDistribution> {
        if x.len() != self.n_features {
            return Err(Error::WidthMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut acc = vec![0.0f64; self.labels.len()];
        for tree in &self.trees {
            let leaf = tree.leaf(x);
            let total: u32 = leaf.iter().map(|&(_, c)| c).sum();
            for &(l, c) in leaf {
                acc[l as usize] += c as f64 / total as f64;
            }
        }
        let n = self.trees.len() as f64;
        Ok(ClassDistribution::from_map(
            acc.into_iter()
                .enumerate()
                .filter(|&(_, p)| p > 0.0)
                .map(|(l, p)| (self.labels[l].clone(), p / n))
                .collect::<BTreeMap<_, _>>(),
        ))
    }

    /// Argmax label for each row of `x`.
    pub fn predict(&self, x: &BinaryMatrix) -> Result<Vec<String>> {
        (0..x.rows())
            .map(|i| {
                let d = self.predict_proba(x.row(i))?;
                Ok(d.argmax().expect("non-empty distribution").to_owned())
            })
            .collect()
    }

    /// Structural checks for models read from disk.
    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() || self.labels.is_empty() {
            return Err(Error::Corrupt("forest without trees or labels".into()));
        }
        for tree in &self.trees {
            if tree.nodes.is_empty() {
                return Err(Error::Corrupt("empty tree".into()));
            }
            for node in &tree.nodes {
                match node {
                    Node::Split {
                        feature,
                        absent,
                        present,
                    } => {
                        if *feature as usize >= self.n_features
                            || *absent as usize >= tree.nodes.len()
                            || *present as usize >= tree.nodes.len()
                        {
                            return Err(Error::Corrupt("tree index out of bounds".into()));
                        }
                    }
                    Node::Leaf { counts } => {
                        if counts.is_empty() || counts.iter().any(|&(l, c)| l as usize >= self.labels.len() || c == 0) {
                            return Err(Error::Corrupt("invalid leaf".into()));
                        }
                    }
                }
            }
            // Children always follow their parent, so walks terminate.
            for (i, node) in tree.nodes.iter().enumerate() {
                if let Node::Split { absent, present, .. } = node {
                    if (*absent as usize) <= i || (*present as usize) <= i {
                        return Err(Error::Corrupt("tree is not acyclic".into()));
                    }
                }
            }
        }
        Ok(())
    }
}
