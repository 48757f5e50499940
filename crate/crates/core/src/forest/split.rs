use std::cmp::Ordering;

use crate::error::{Error, Result};

/// A borrowed row-major `n × dim` feature matrix.
#[derive(Debug, Clone, Copy)]
pub struct FeatureView<'a> {
    values: &'a [f32],
    dim: usize,
}

impl<'a> FeatureView<'a> {
    pub fn new(values: &'a [f32], dim: usize) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::Dimension(format!(
                "{} values do not form rows of width {dim}",
                values.len()
            )));
        }
        Ok(FeatureView { values, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &'a [f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f32 {
        self.values[row * self.dim + feature]
    }
}

/// Gini impurity `1 − Σ (n_k / n)²` of a class histogram.
pub fn gini(class_counts: &[u32]) -> Result<f64> {
    let n: u64 = class_counts.iter().map(|&c| c as u64).sum();
    if n == 0 {
        return Err(Error::Domain("gini impurity of an empty node".into()));
    }
    let n = n as f64;
    Ok(1.0 - class_counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f32,
    /// `n_L/n · gini(L) + n_R/n · gini(R)`
    pub impurity: f64,
}

/// Score of a candidate partition, `Σ l_k²/n_L + Σ r_k²/n_R`. Larger is
/// better; it equals `n · (1 − weighted child impurity)`. Kept as an exact
/// rational so equal partitions compare equal and tie-breaks are exact.
#[derive(Debug, Clone, Copy)]
struct Score {
    sq_left: u64,
    n_left: u64,
    sq_right: u64,
    n_right: u64,
}

impl Score {
    fn numerator(&self) -> u128 {
        self.sq_left as u128 * self.n_right as u128 + self.sq_right as u128 * self.n_left as u128
    }

    fn denominator(&self) -> u128 {
        self.n_left as u128 * self.n_right as u128
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.numerator() * other.denominator()).cmp(&(other.numerator() * self.denominator()))
    }

    fn impurity(&self) -> f64 {
        let n = (self.n_left + self.n_right) as f64;
        1.0 - (self.sq_left as f64 / self.n_left as f64 + self.sq_right as f64 / self.n_right as f64) / n
    }
}

/// Midpoint of two consecutive distinct values, nudged down to `lo` when the
/// f32 midpoint would round onto `hi` and stop separating them.
fn midpoint(lo: f32, hi: f32) -> f32 {
    let mid = ((lo as f64 + hi as f64) / 2.0) as f32;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Scratch reused across nodes of one tree.
#[derive(Default)]
pub(crate) struct SplitScratch {
    pairs: Vec<(f32, u32)>,
    left: Vec<u32>,
    right: Vec<u32>,
}

/// Exhaustive CART split search over `candidate_features`, considering
/// midpoints between consecutive distinct values of the samples in `rows`.
///
/// Minimises weighted child Gini impurity; ties go to the lower feature index
/// and then the lower threshold. Returns `None` when every candidate feature
/// is constant over `rows`.
pub fn best_split(
    features: FeatureView<'_>,
    labels: &[usize],
    n_classes: usize,
    rows: &[usize],
    candidate_features: &[usize],
) -> Option<Split> {
    best_split_with(
        &mut SplitScratch::default(),
        features,
        labels,
        n_classes,
        rows,
        candidate_features,
    )
}

pub(crate) fn best_split_with(
    scratch: &mut SplitScratch,
    features: FeatureView<'_>,
    labels: &[usize],
    n_classes: usize,
    rows: &[usize],
    candidate_features: &[usize],
) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let mut order = candidate_features.to_vec();
    order.sort_unstable();
    order.dedup();

    let mut best: Option<(Score, usize, f32)> = None;
    for &feature in &order {
        scratch.pairs.clear();
        scratch
            .pairs
            .extend(rows.iter().map(|&r| (features.value(r, feature), labels[r] as u32)));
        scratch.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let pairs = &scratch.pairs;
        if pairs[0].0 == pairs[pairs.len() - 1].0 {
            continue;
        }

        scratch.left.clear();
        scratch.left.resize(n_classes, 0);
        scratch.right.clear();
        scratch.right.resize(n_classes, 0);
        for &(_, l) in pairs {
            scratch.right[l as usize] += 1;
        }
        let mut score = Score {
            sq_left: 0,
            n_left: 0,
            sq_right: scratch.right.iter().map(|&c| c as u64 * c as u64).sum(),
            n_right: pairs.len() as u64,
        };

        for i in 0..pairs.len() - 1 {
            let k = pairs[i].1 as usize;
            score.sq_left += 2 * scratch.left[k] as u64 + 1;
            score.sq_right -= 2 * scratch.right[k] as u64 - 1;
            scratch.left[k] += 1;
            scratch.right[k] -= 1;
            score.n_left += 1;
            score.n_right -= 1;

            let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
            if lo == hi {
                continue;
            }
            let better = match &best {
                None => true,
                Some((b, _, _)) => score.cmp(b) == Ordering::Greater,
            };
            if better {
                best = Some((score, feature, midpoint(lo, hi)));
            }
        }
    }
    best.map(|(score, feature, threshold)| Split {
        feature,
        threshold,
        impurity: score.impurity(),
    })
}
