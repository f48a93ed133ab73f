//! CART decision trees and a bagged random forest for binary labels.
//!
//! Split search is exhaustive over the drawn features: each node sorts its
//! rows by feature value and scores every midpoint between consecutive
//! distinct values. Gini scores are compared in exact integer arithmetic,
//! so ties are real ties and break toward the lower feature index, then the
//! lower threshold.
//!
//! Trees are grown from widened `f32` columns regardless of the storage
//! precision of the dataset. Tree `i` draws everything from its own stream
//! seeded with `derive_seed(config.seed, i)`, which makes the model
//! independent of how trees are scheduled across threads.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            _ => Err(Error::Config(format!("unknown criterion `{s}`"))),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Gini => "gini",
            Criterion::Entropy => "entropy",
        })
    }
}

/// Gini impurity of a node with the given class counts.
pub fn gini(counts: [u64; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (counts[0] as f64 / n, counts[1] as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

/// Shannon entropy in bits.
pub fn entropy(counts: [u64; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

impl Criterion {
    pub fn impurity(self, counts: [u64; 2]) -> f64 {
        match self {
            Criterion::Gini => gini(counts),
            Criterion::Entropy => entropy(counts),
        }
    }
}

/// How many features each node considers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(c) => c,
        };
        m.clamp(1, n_features.max(1))
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "all" => Ok(MaxFeatures::All),
            n => n
                .parse()
                .map(MaxFeatures::Count)
                .map_err(|_| Error::Config(format!("invalid features_per_split `{s}`"))),
        }
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Count(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until another stopping rule fires.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub features_per_split: MaxFeatures,
    pub criterion: Criterion,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            features_per_split: MaxFeatures::Sqrt,
            criterion: Criterion::Gini,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if self.features_per_split == MaxFeatures::Count(0) {
            return Err(Error::Config("features_per_split must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rows with `value < threshold` go left.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature_index: usize,
    pub threshold: f32,
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, row: &[f32]) -> bool {
        row[self.feature_index] < self.threshold
    }
}

/// One node of a [`Tree`]; children are indices into the tree's node list.
#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Internal {
        rule: SplitRule,
        /// Impurity decrease of the split at this node.
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// `[class 0, class 1]` training rows that reached this leaf.
        class_counts: [u32; 2],
    },
}

/// A decision tree stored as a flat node list with the root at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn leaf_for(&self, row: &[f32]) -> [u32; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Internal {
                    rule, left, right, ..
                } => i = if rule.goes_left(row) { *left } else { *right },
                TreeNode::Leaf { class_counts } => return *class_counts,
            }
        }
    }

    /// Fraction of class-1 training rows in the leaf `row` lands in.
    pub fn predict_proba(&self, row: &[f32]) -> f64 {
        let [c0, c1] = self.leaf_for(row);
        c1 as f64 / (c0 + c1) as f64
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            best = best.max(d);
            if let TreeNode::Internal { left, right, .. } = self.nodes[i] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        best
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    fn to_nested(&self, i: usize) -> NestedNode {
        match &self.nodes[i] {
            TreeNode::Internal {
                rule,
                gain,
                left,
                right,
            } => NestedNode::Split {
                feature: rule.feature_index,
                threshold: rule.threshold,
                gain: *gain,
                left: Box::new(self.to_nested(*left)),
                right: Box::new(self.to_nested(*right)),
            },
            TreeNode::Leaf { class_counts } => NestedNode::Leaf {
                class_counts: *class_counts,
            },
        }
    }

    /// Rebuild with the same numbering as `grow`: both children are
    /// allocated together, then the left subtree is filled before the right.
    fn fill_nested(nodes: &mut Vec<TreeNode>, slot: usize, n: NestedNode) {
        nodes[slot] = match n {
            NestedNode::Leaf { class_counts } => TreeNode::Leaf { class_counts },
            NestedNode::Split {
                feature,
                threshold,
                gain,
                left,
                right,
            } => {
                let l = nodes.len();
                nodes.push(TreeNode::Leaf { class_counts: [0, 0] });
                nodes.push(TreeNode::Leaf { class_counts: [0, 0] });
                Self::fill_nested(nodes, l, *left);
                Self::fill_nested(nodes, l + 1, *right);
                TreeNode::Internal {
                    rule: SplitRule {
                        feature_index: feature,
                        threshold,
                    },
                    gain,
                    left: l,
                    right: l + 1,
                }
            }
        };
    }
}

/// JSON shape of a tree: nested objects from the root down.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum NestedNode {
    Split {
        feature: usize,
        threshold: f32,
        gain: f64,
        left: Box<NestedNode>,
        right: Box<NestedNode>,
    },
    Leaf {
        class_counts: [u32; 2],
    },
}

impl Serialize for Tree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested(0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let nested = NestedNode::deserialize(d)?;
        let mut nodes = vec![TreeNode::Leaf { class_counts: [0, 0] }];
        Tree::fill_nested(&mut nodes, 0, nested);
        Ok(Tree { nodes })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub feature_count: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Mean over trees of the leaf fraud fraction.
    pub fn predict_proba(&self, row: &[f32]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_proba(row)).sum();
        sum / self.trees.len() as f64
    }

    /// Scores for every row of `d`, in row order.
    pub fn predict_proba_dataset(&self, d: &Dataset) -> Vec<f64> {
        let m = d.features();
        (0..d.n())
            .into_par_iter()
            .map_init(
                || vec![0.0f32; m.cols()],
                |row, i| {
                    m.row_into(i, row);
                    self.predict_proba(row)
                },
            )
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Hard labels: 1 iff the score is at least `threshold`.
pub fn predict(model: &ForestModel, rows: &[Vec<f32>], threshold: f64) -> Result<Vec<u8>> {
    check_threshold(threshold)?;
    Ok(rows
        .iter()
        .map(|r| u8::from(model.predict_proba(r) >= threshold))
        .collect())
}

pub fn labels_from_scores(scores: &[f64], threshold: f64) -> Result<Vec<u8>> {
    check_threshold(threshold)?;
    Ok(scores.iter().map(|&s| u8::from(s >= threshold)).collect())
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "decision threshold must lie in [0, 1], got {threshold}"
        )))
    }
}

/// Widened, column-major copy of a dataset's features.
pub struct Columns {
    n_rows: usize,
    values: Vec<f32>,
    labels: Vec<u8>,
}

impl Columns {
    pub fn new(d: &Dataset) -> Self {
        let mut values = d.features().to_f32_columns();
        // -0.0 and 0.0 must sort as one value
        for v in &mut values {
            *v += 0.0;
        }
        Columns {
            n_rows: d.n(),
            values,
            labels: d.labels().to_vec(),
        }
    }

    fn n_features(&self) -> usize {
        if self.n_rows == 0 {
            0
        } else {
            self.values.len() / self.n_rows
        }
    }

    #[inline]
    fn column(&self, f: usize) -> &[f32] {
        &self.values[f * self.n_rows..(f + 1) * self.n_rows]
    }
}

/// Grow one tree on every row of `data` (no bootstrap).
pub fn train_tree(data: &Dataset, config: &ForestConfig, tree_seed: u64) -> Result<Tree> {
    config.validate()?;
    let cols = Columns::new(data);
    let mut rng = seed::rng(tree_seed);
    let rows: Vec<u32> = (0..data.n() as u32).collect();
    Ok(grow(&cols, rows, config, &mut rng))
}

/// Train `config.n_trees` trees in parallel.
pub fn train_forest(data: &Dataset, config: &ForestConfig) -> Result<ForestModel> {
    config.validate()?;
    if data.n() == 0 {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    let cols = Columns::new(data);
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::derive_seed(config.seed, i as u64));
            let rows = if config.bootstrap {
                bootstrap_rows(data.n(), &mut rng)
            } else {
                (0..data.n() as u32).collect()
            };
            grow(&cols, rows, config, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        config: config.clone(),
        feature_count: data.n_features(),
        trees,
    })
}

/// `n` row indices drawn uniformly with replacement.
pub fn bootstrap_rows(n: usize, rng: &mut seed::Rng) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(0..n as u32)).collect()
}

/// Comparable split quality; larger is better.
#[derive(Clone, Copy, Debug)]
enum Score {
    /// Gini: `(|L|² share + |R|² share)` as the exact fraction `num / den`.
    Ratio { num: u128, den: u128 },
    /// Entropy: negated weighted child entropy.
    Float(f64),
}

impl Score {
    fn cmp(&self, other: &Score) -> Ordering {
        match (self, other) {
            (Score::Ratio { num: a, den: b }, Score::Ratio { num: c, den: d }) => (a * d).cmp(&(c * b)),
            (Score::Float(a), Score::Float(b)) => a.total_cmp(b),
            _ => unreachable!("scores from different criteria"),
        }
    }
}

fn sum_sq(c: [u64; 2]) -> u128 {
    (c[0] as u128).pow(2) + (c[1] as u128).pow(2)
}

fn parent_score(criterion: Criterion, c: [u64; 2]) -> Score {
    let n = (c[0] + c[1]) as u128;
    match criterion {
        Criterion::Gini => Score::Ratio {
            num: sum_sq(c),
            den: n,
        },
        Criterion::Entropy => Score::Float(-(n as f64) * entropy(c)),
    }
}

fn split_score(criterion: Criterion, l: [u64; 2], r: [u64; 2]) -> Score {
    let nl = (l[0] + l[1]) as u128;
    let nr = (r[0] + r[1]) as u128;
    match criterion {
        // sum_c l_c²/nl + sum_c r_c²/nr, which is maximal where weighted Gini is minimal
        Criterion::Gini => Score::Ratio {
            num: sum_sq(l) * nr + sum_sq(r) * nl,
            den: nl * nr,
        },
        Criterion::Entropy => Score::Float(-(nl as f64) * entropy(l) - (nr as f64) * entropy(r)),
    }
}

/// Decrease in node impurity from the parent to the size-weighted children.
fn impurity_decrease(criterion: Criterion, parent: [u64; 2], l: [u64; 2], r: [u64; 2]) -> f64 {
    let n = (parent[0] + parent[1]) as f64;
    let nl = (l[0] + l[1]) as f64;
    let nr = (r[0] + r[1]) as f64;
    criterion.impurity(parent) - (nl * criterion.impurity(l) + nr * criterion.impurity(r)) / n
}

const ENTROPY_MIN_GAIN: f64 = 1e-12;

struct Candidate {
    feature: usize,
    threshold: f32,
    score: Score,
    left: [u64; 2],
}

/// Threshold strictly above `lo` and at most `hi`, normally their midpoint.
pub fn midpoint(lo: f32, hi: f32) -> f32 {
    let mid = ((lo as f64 + hi as f64) * 0.5) as f32;
    let t = if mid > lo { mid } else { hi };
    if t == f32::INFINITY && lo < f32::MAX {
        f32::MAX
    } else {
        t
    }
}

fn count(labels: &[u8], rows: &[u32]) -> [u64; 2] {
    let pos = rows.iter().filter(|&&r| labels[r as usize] == 1).count() as u64;
    [rows.len() as u64 - pos, pos]
}

fn leaf(c: [u64; 2]) -> TreeNode {
    TreeNode::Leaf {
        class_counts: [c[0] as u32, c[1] as u32],
    }
}

struct Pending {
    slot: usize,
    rows: Vec<u32>,
    depth: usize,
}

fn grow(cols: &Columns, rows: Vec<u32>, config: &ForestConfig, rng: &mut seed::Rng) -> Tree {
    let n_features = cols.n_features();
    let mtry = config.features_per_split.resolve(n_features);
    let mut nodes = vec![TreeNode::Leaf {
        class_counts: [0, 0],
    }];
    let mut pending = vec![Pending {
        slot: 0,
        rows,
        depth: 0,
    }];
    let mut order: Vec<usize> = (0..n_features).collect();
    let mut buf: Vec<(f32, u8)> = Vec::new();

    while let Some(Pending { slot, mut rows, depth }) = pending.pop() {
        let counts = count(&cols.labels, &rows);
        let n = rows.len();
        let stop = counts[0] == 0
            || counts[1] == 0
            || config.max_depth.is_some_and(|d| depth >= d)
            || n < config.min_samples_split
            || n < 2 * config.min_samples_leaf;
        let best = if stop {
            None
        } else {
            best_split(cols, &rows, counts, config, mtry, &mut order, &mut buf, rng)
        };
        let Some(best) = best else {
            nodes[slot] = leaf(counts);
            continue;
        };

        let column = cols.column(best.feature);
        let split_at = partition(&mut rows, |r| column[r as usize] < best.threshold);
        let right_rows = rows.split_off(split_at);
        let left_rows = rows;
        let right_counts = [counts[0] - best.left[0], counts[1] - best.left[1]];
        let gain = impurity_decrease(config.criterion, counts, best.left, right_counts);

        let left = nodes.len();
        let right = left + 1;
        nodes.push(TreeNode::Leaf {
            class_counts: [0, 0],
        });
        nodes.push(TreeNode::Leaf {
            class_counts: [0, 0],
        });
        nodes[slot] = TreeNode::Internal {
            rule: SplitRule {
                feature_index: best.feature,
                threshold: best.threshold,
            },
            gain,
            left,
            right,
        };
        // right first so the left subtree is built (and numbered) first
        pending.push(Pending {
            slot: right,
            rows: right_rows,
            depth: depth + 1,
        });
        pending.push(Pending {
            slot: left,
            rows: left_rows,
            depth: depth + 1,
        });
    }
    Tree { nodes }
}

/// In-place partition; returns the number of rows satisfying `pred`, which
/// end up first.
fn partition(rows: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let mut next = 0;
    for i in 0..rows.len() {
        if pred(rows[i]) {
            rows.swap(next, i);
            next += 1;
        }
    }
    next
}

#[allow(clippy::too_many_arguments)]
fn best_split(
    cols: &Columns,
    rows: &[u32],
    counts: [u64; 2],
    config: &ForestConfig,
    mtry: usize,
    order: &mut [usize],
    buf: &mut Vec<(f32, u8)>,
    rng: &mut seed::Rng,
) -> Option<Candidate> {
    // Visit features in random order until `mtry` non-constant ones are found,
    // then score those in ascending index order.
    order.shuffle(rng);
    let mut chosen = Vec::with_capacity(mtry);
    for &f in order.iter() {
        if chosen.len() == mtry {
            break;
        }
        let column = cols.column(f);
        let first = column[rows[0] as usize];
        if rows.iter().any(|&r| column[r as usize] != first) {
            chosen.push(f);
        }
    }
    chosen.sort_unstable();

    let parent = parent_score(config.criterion, counts);
    let n = rows.len() as u64;
    let min_leaf = config.min_samples_leaf as u64;
    let mut best: Option<Candidate> = None;

    for &f in &chosen {
        let column = cols.column(f);
        buf.clear();
        buf.extend(rows.iter().map(|&r| (column[r as usize], cols.labels[r as usize])));
        buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u64; 2];
        for i in 0..buf.len() - 1 {
            left[buf[i].1 as usize] += 1;
            let (lo, hi) = (buf[i].0, buf[i + 1].0);
            if lo == hi {
                continue;
            }
            let nl = i as u64 + 1;
            if nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let score = split_score(config.criterion, left, right);
            if best.as_ref().map_or(true, |b| score.cmp(&b.score) == Ordering::Greater) {
                best = Some(Candidate {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    score,
                    left,
                });
            }
        }
    }

    let best = best?;
    let improves = match config.criterion {
        Criterion::Gini => best.score.cmp(&parent) == Ordering::Greater,
        Criterion::Entropy => {
            let right = [counts[0] - best.left[0], counts[1] - best.left[1]];
            impurity_decrease(Criterion::Entropy, counts, best.left, right) > ENTROPY_MIN_GAIN
        }
    };
    improves.then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_features() -> ForestConfig {
        ForestConfig {
            n_trees: 1,
            features_per_split: MaxFeatures::All,
            bootstrap: false,
            ..ForestConfig::default()
        }
    }

    #[test]
    fn criterion_values() {
        assert_eq!(gini([10, 0]), 0.0);
        assert_eq!(gini([5, 5]), 0.5);
        assert_eq!(entropy([5, 5]), 1.0);
        assert_eq!(entropy([0, 7]), 0.0);
    }

    #[test]
    fn sqrt_features() {
        assert_eq!(MaxFeatures::Sqrt.resolve(30), 5);
        assert_eq!(MaxFeatures::All.resolve(30), 30);
        assert_eq!(MaxFeatures::Count(50).resolve(3), 3);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
    }

    #[test]
    fn one_dimensional_root_threshold() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], &[0, 0, 1, 1]).unwrap();
        let t = train_tree(&d, &all_features(), 1).unwrap();
        match t.root() {
            TreeNode::Internal { rule, gain, .. } => {
                assert_eq!(rule.feature_index, 0);
                assert_eq!(rule.threshold, 1.5);
                assert_eq!(*gain, 0.5);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn single_class_is_one_leaf() {
        let d = Dataset::from_rows(&[vec![0.0], vec![5.0], vec![2.0]], &[1, 1, 1]).unwrap();
        let t = train_tree(&d, &all_features(), 0).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict_proba(&[100.0]), 1.0);
    }

    #[test]
    fn depth_zero_is_majority_leaf() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[0, 1, 1]).unwrap();
        let cfg = ForestConfig {
            max_depth: Some(0),
            ..all_features()
        };
        let t = train_tree(&d, &cfg, 0).unwrap();
        assert_eq!(t.root(), &TreeNode::Leaf { class_counts: [1, 2] });
    }

    #[test]
    fn midpoint_edges() {
        assert_eq!(midpoint(1.0, 2.0), 1.5);
        let lo = 1.0f32;
        let hi = f32::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(t > lo && t <= hi);
        assert_eq!(midpoint(65504.0, f32::INFINITY), f32::MAX);
        assert_eq!(midpoint(f32::NEG_INFINITY, 0.0), 0.0);
    }

    #[test]
    fn infinite_cells_split_cleanly() {
        let d = Dataset::from_rows(
            &[vec![1.0], vec![2.0], vec![f32::INFINITY], vec![f32::INFINITY]],
            &[0, 0, 1, 1],
        )
        .unwrap();
        let t = train_tree(&d, &all_features(), 0).unwrap();
        assert_eq!(t.predict_proba(&[f32::INFINITY]), 1.0);
        assert_eq!(t.predict_proba(&[2.0]), 0.0);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<Tree>(&json).unwrap(), t);
    }

    #[test]
    fn min_samples_leaf_respected() {
        let rows: Vec<Vec<f32>> = (0..20).map(|i| vec![i as f32]).collect();
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i % 3 == 0)).collect();
        let d = Dataset::from_rows(&rows, &labels).unwrap();
        let cfg = ForestConfig {
            min_samples_leaf: 4,
            ..all_features()
        };
        let t = train_tree(&d, &cfg, 0).unwrap();
        for n in t.nodes() {
            if let TreeNode::Leaf { class_counts } = n {
                assert!(class_counts[0] + class_counts[1] >= 4);
            }
        }
    }

    #[test]
    fn predict_threshold_rules() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0]], &[0, 1]).unwrap();
        let model = train_forest(&d, &all_features()).unwrap();
        let rows = vec![vec![0.0], vec![1.0]];
        assert_eq!(predict(&model, &rows, 0.0).unwrap(), vec![1, 1]);
        assert_eq!(predict(&model, &rows, 0.5).unwrap(), vec![0, 1]);
        assert!(predict(&model, &rows, 1.0 + 1e-9).is_err());
        assert_eq!(labels_from_scores(&[0.5], 0.5).unwrap(), vec![1]);
    }

    #[test]
    fn two_tree_average() {
        let pure0 = Tree {
            nodes: vec![TreeNode::Leaf { class_counts: [3, 0] }],
        };
        let pure1 = Tree {
            nodes: vec![TreeNode::Leaf { class_counts: [0, 2] }],
        };
        let model = ForestModel {
            config: ForestConfig::default(),
            feature_count: 1,
            trees: vec![pure0, pure1],
        };
        assert_eq!(model.predict_proba(&[0.0]), 0.5);
    }

    #[test]
    fn config_validation() {
        assert!(ForestConfig {
            n_trees: 0,
            ..ForestConfig::default()
        }
        .validate()
        .is_err());
        assert!(ForestConfig {
            min_samples_split: 1,
            ..ForestConfig::default()
        }
        .validate()
        .is_err());
        assert!("log2".parse::<MaxFeatures>().is_err());
        assert_eq!("7".parse::<MaxFeatures>().unwrap(), MaxFeatures::Count(7));
    }

    #[test]
    fn bootstrap_draws_original_indices() {
        let mut rng = seed::rng(3);
        let rows = bootstrap_rows(50, &mut rng);
        assert_eq!(rows.len(), 50);
        assert!(rows.iter().all(|&r| r < 50));
    }
}
