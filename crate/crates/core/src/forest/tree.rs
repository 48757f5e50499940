use rand::seq::{index, SliceRandom};
use rand_chacha::ChaCha8Rng;

use super::split::{best_split_with, FeatureView, Split, SplitScratch};

/// A tree node. Internal nodes send `x[feature] <= threshold` to `left`.
/// Children are indices into [`Tree::nodes`]; nodes are stored in preorder
/// with the root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        class_counts: Vec<u32>,
    },
    Split {
        feature: usize,
        threshold: f32,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Class histogram of the leaf `x` falls into.
    pub fn leaf_counts(&self, x: &[f32]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class_counts } => return class_counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub(crate) fn validate(&self, n_classes: usize, dim: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Leaf { class_counts } => {
                    if class_counts.len() != n_classes {
                        return Err(format!(
                            "leaf {i} has {} counts, expected {n_classes}",
                            class_counts.len()
                        ));
                    }
                    if class_counts.iter().all(|&c| c == 0) {
                        return Err(format!("leaf {i} is empty"));
                    }
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= dim {
                        return Err(format!("node {i} splits on feature {feature} >= dim {dim}"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i} has non-finite threshold"));
                    }
                    let n = self.nodes.len();
                    if !(*left > i && *right > *left && *right < n) {
                        return Err(format!("node {i} has invalid children {left}/{right}"));
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) struct Grower<'a> {
    pub features: FeatureView<'a>,
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features_per_split: usize,
}

impl Grower<'_> {
    pub(crate) fn grow(&self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = Vec::new();
        let mut scratch = SplitScratch::default();
        self.build(rows, 0, rng, &mut nodes, &mut scratch);
        Tree { nodes }
    }

    fn build(
        &self,
        rows: Vec<usize>,
        depth: usize,
        rng: &mut ChaCha8Rng,
        nodes: &mut Vec<Node>,
        scratch: &mut SplitScratch,
    ) -> usize {
        let mut counts = vec![0u32; self.n_classes];
        for &r in &rows {
            counts[self.labels[r]] += 1;
        }
        let id = nodes.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let stop = pure || rows.len() < self.min_samples_split || self.max_depth.is_some_and(|d| depth >= d);
        let split = if stop {
            None
        } else {
            self.choose_split(&rows, rng, scratch)
        };
        let Some(split) = split else {
            nodes.push(Node::Leaf { class_counts: counts });
            return id;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.features.value(r, split.feature) <= split.threshold);
        drop(rows);
        nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: usize::MAX,
            right: usize::MAX,
        });
        let left = self.build(left_rows, depth + 1, rng, nodes, scratch);
        let right = self.build(right_rows, depth + 1, rng, nodes, scratch);
        if let Node::Split { left: l, right: r, .. } = &mut nodes[id] {
            *l = left;
            *r = right;
        }
        id
    }

    /// Searches a random subset of `features_per_split` features. When every
    /// feature in the subset is constant on this node, further disjoint
    /// subsets are drawn from the remaining features until one splits or
    /// none remain.
    fn choose_split(&self, rows: &[usize], rng: &mut ChaCha8Rng, scratch: &mut SplitScratch) -> Option<Split> {
        let dim = self.features.dim();
        let k = self.features_per_split;
        let drawn = index::sample(rng, dim, k).into_vec();
        let found = best_split_with(scratch, self.features, self.labels, self.n_classes, rows, &drawn);
        if found.is_some() || k == dim {
            return found;
        }
        let mut taken = vec![false; dim];
        for &f in &drawn {
            taken[f] = true;
        }
        let mut rest: Vec<usize> = (0..dim).filter(|&f| !taken[f]).collect();
        rest.shuffle(rng);
        rest.chunks(k)
            .find_map(|chunk| best_split_with(scratch, self.features, self.labels, self.n_classes, rows, chunk))
    }
}
