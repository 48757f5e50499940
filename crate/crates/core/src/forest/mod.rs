//! Random-forest classifier: bootstrap-sampled CART trees split on Gini
//! impurity over random feature subsets, predicting by majority vote.

mod split;
mod tree;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use split::{best_split, gini, FeatureView, Split};
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// `None` means `floor(sqrt(dim))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: None,
            seed: 42,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    /// The effective subset size for `dim` features.
    pub fn features_per_split_for(&self, dim: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| ((dim as f64).sqrt().floor() as usize).max(1))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Parameter("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Parameter("min_samples_split must be at least 2".into()));
        }
        let k = self.features_per_split_for(dim);
        if k == 0 || k > dim {
            return Err(Error::Parameter(format!(
                "features_per_split must be in 1..={dim}, got {k}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub class: usize,
    /// Trees voting for each class; sums to the number of trees.
    pub votes: Vec<u32>,
}

/// Index of the largest element, lowest index on ties.
pub(crate) fn argmax(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Trains a forest on the rows of `features`. Tree `t` draws its bootstrap
/// sample and all per-node feature subsets from its own RNG stream keyed by
/// `(params.seed, t)`, so trees can be grown in parallel without affecting
/// the result.
pub fn train(features: FeatureView<'_>, labels: &[usize], n_classes: usize, params: &ForestParams) -> Result<Forest> {
    let n = features.rows();
    let dim = features.dim();
    params.validate(dim)?;
    if n_classes < 2 {
        return Err(Error::Training(format!("need at least 2 classes, got {n_classes}")));
    }
    if n < 2 {
        return Err(Error::Training(format!("need at least 2 samples, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::Training(format!("{n} feature rows but {} labels", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Training(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }

    let grower = tree::Grower {
        features,
        labels,
        n_classes,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        features_per_split: params.features_per_split_for(dim),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(params.seed, rng::Domain::Tree, t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(rows, &mut rng)
        })
        .collect();
    Ok(Forest { trees, n_classes, dim })
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict(&self, x: &[f32]) -> Result<Prediction> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "sample has {} features, forest expects {}",
                x.len(),
                self.dim
            )));
        }
        let mut votes = vec![0u32; self.n_classes];
        for tree in &self.trees {
            votes[argmax(tree.leaf_counts(x))] += 1;
        }
        Ok(Prediction {
            class: argmax(&votes),
            votes,
        })
    }

    /// Predicted class for every row of `features`.
    pub fn predict_all(&self, features: FeatureView<'_>) -> Result<Vec<usize>> {
        (0..features.rows())
            .into_par_iter()
            .map(|i| self.predict(features.row(i)).map(|p| p.class))
            .collect()
    }

    /// Checks the structural invariants a decoded forest must satisfy.
    pub fn validate(&self) -> Result<()> {
        for (t, tree) in self.trees.iter().enumerate() {
            tree.validate(self.n_classes, self.dim)
                .map_err(|e| Error::Format(format!("tree {t}: {e}")))?;
        }
        Ok(())
    }
}
