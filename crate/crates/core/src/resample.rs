//! Rebalancing of the training partition.
//!
//! The minority class is whichever has fewer rows. Over-sampling and SMOTE
//! keep every original row in place and append the new rows after them;
//! under-sampling shuffles its output.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_SMOTE_K: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ResampleMode {
    #[default]
    None,
    Under,
    Over,
    Smote {
        k: usize,
    },
}

impl ResampleMode {
    pub fn name(&self) -> &'static str {
        match self {
            ResampleMode::None => "none",
            ResampleMode::Under => "under",
            ResampleMode::Over => "over",
            ResampleMode::Smote { .. } => "smote",
        }
    }
}

impl fmt::Display for ResampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ResampleMode::None),
            "under" => Ok(ResampleMode::Under),
            "over" => Ok(ResampleMode::Over),
            "smote" => Ok(ResampleMode::Smote {
                k: DEFAULT_SMOTE_K,
            }),
            _ => Err(Error::Config(format!("unknown resample mode `{s}`"))),
        }
    }
}

/// Apply `mode` to a training partition.
pub fn resample(train: &Dataset, mode: ResampleMode, seed: u64) -> Result<Dataset> {
    match mode {
        ResampleMode::None => Ok(train.clone()),
        ResampleMode::Under => undersample(train, seed),
        ResampleMode::Over => oversample_duplicate(train, seed),
        ResampleMode::Smote { k } => smote(train, k, seed),
    }
}

struct Classes {
    minority: Vec<usize>,
    majority: Vec<usize>,
    minority_label: u8,
}

fn classes(d: &Dataset) -> Result<Classes> {
    let [neg, pos] = d.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::SingleClass {
            negatives: neg,
            positives: pos,
        });
    }
    let minority_label = u8::from(pos <= neg);
    let (minority, majority) = (0..d.n()).partition(|&i| d.labels()[i] == minority_label);
    Ok(Classes {
        minority,
        majority,
        minority_label,
    })
}

fn stage_rng(seed: u64) -> seed::Rng {
    seed::rng(seed::derive_seed(seed, seed::stream::RESAMPLE))
}

/// Random under-sampling: keep a uniform subset of the majority class the
/// size of the minority class.
pub fn undersample(train: &Dataset, seed: u64) -> Result<Dataset> {
    let c = classes(train)?;
    let mut rng = stage_rng(seed);
    let mut keep: Vec<usize> = index::sample(&mut rng, c.majority.len(), c.minority.len())
        .into_iter()
        .map(|j| c.majority[j])
        .collect();
    keep.sort_unstable();
    keep.extend_from_slice(&c.minority);
    keep.shuffle(&mut rng);
    Ok(train.select(&keep))
}

/// Random over-sampling: append copies of minority rows drawn with
/// replacement until the classes are equal.
pub fn oversample_duplicate(train: &Dataset, seed: u64) -> Result<Dataset> {
    let c = classes(train)?;
    let mut rng = stage_rng(seed);
    let need = c.majority.len() - c.minority.len();
    let mut rows: Vec<usize> = (0..train.n()).collect();
    rows.extend((0..need).map(|_| c.minority[rng.random_range(0..c.minority.len())]));
    Ok(train.select(&rows))
}

/// Provenance of one synthetic SMOTE row, as indices into the input dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSample {
    pub base: usize,
    pub neighbor: usize,
    pub u: f32,
}

/// SMOTE with `k` nearest minority neighbours.
pub fn smote(train: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    smote_traced(train, k, seed).map(|(d, _)| d)
}

/// [`smote`], also returning how each appended row was made.
pub fn smote_traced(train: &Dataset, k: usize, seed: u64) -> Result<(Dataset, Vec<SyntheticSample>)> {
    if k == 0 {
        return Err(Error::Config("SMOTE k must be at least 1".into()));
    }
    let c = classes(train)?;
    let m = c.minority.len();
    if m < 2 {
        return Err(Error::TooFewMinority(m));
    }
    let need = c.majority.len() - m;
    if need == 0 {
        return Ok((train.clone(), Vec::new()));
    }
    let k = if k >= m {
        log::warn!("SMOTE k={k} is not below the minority count {m}; using k={}", m - 1);
        m - 1
    } else {
        k
    };

    let points: Vec<Vec<f32>> = c.minority.iter().map(|&i| train.row(i)).collect();
    let neighbors = nearest_neighbors(&points, k);

    let cols = train.n_features();
    let mut rng = stage_rng(seed);
    let mut values = Vec::with_capacity(need * cols);
    let mut trace = Vec::with_capacity(need);
    for s in 0..need {
        let base = s % m;
        let neighbor = neighbors[base][rng.random_range(0..k)];
        let u: f32 = rng.random();
        let (x, y) = (&points[base], &points[neighbor]);
        values.extend(x.iter().zip(y).map(|(&a, &b)| {
            let v = a + u * (b - a);
            v.clamp(a.min(b), a.max(b))
        }));
        trace.push(SyntheticSample {
            base: c.minority[base],
            neighbor: c.minority[neighbor],
            u,
        });
    }
    let labels = vec![c.minority_label; need];
    Ok((train.append(&values, &labels), trace))
}

/// Squared Euclidean distance, accumulated in `f64` from widened values.
pub fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// For each point, the indices of its `k` nearest other points. Ties go to
/// the lower index.
pub fn nearest_neighbors(points: &[Vec<f32>], k: usize) -> Vec<Vec<usize>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut cand: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| (squared_distance(p, q), j))
                .collect();
            let k = k.min(cand.len());
            let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k, by_distance);
                cand.truncate(k);
            }
            cand.sort_unstable_by(by_distance);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(majority: usize, minority: usize) -> Dataset {
        let rows: Vec<Vec<f32>> = (0..majority + minority)
            .map(|i| vec![i as f32, (i * i) as f32 * 0.5])
            .collect();
        let labels: Vec<u8> = (0..majority + minority)
            .map(|i| u8::from(i >= majority))
            .collect();
        Dataset::from_rows(&rows, &labels).unwrap()
    }

    #[test]
    fn parse_modes() {
        assert_eq!("smote".parse::<ResampleMode>().unwrap(), ResampleMode::Smote { k: 5 });
        assert_eq!("UNDER".parse::<ResampleMode>().unwrap(), ResampleMode::Under);
        assert!("adasyn".parse::<ResampleMode>().is_err());
    }

    #[test]
    fn under_balances() {
        let d = toy(20, 4);
        let out = undersample(&d, 1).unwrap();
        assert_eq!(out.class_counts(), [4, 4]);
        let balanced = toy(5, 5);
        assert_eq!(undersample(&balanced, 1).unwrap().class_counts(), [5, 5]);
    }

    #[test]
    fn single_class_rejected() {
        let d = toy(5, 0);
        for mode in [
            ResampleMode::Under,
            ResampleMode::Over,
            ResampleMode::Smote { k: 5 },
        ] {
            assert!(matches!(resample(&d, mode, 0), Err(Error::SingleClass { .. })));
        }
    }

    #[test]
    fn over_copies_minority() {
        let d = toy(10, 3);
        let out = oversample_duplicate(&d, 4).unwrap();
        assert_eq!(out.class_counts(), [10, 10]);
        assert_eq!(out.n(), 20);
        let minority: Vec<Vec<f32>> = (10..13).map(|i| d.row(i)).collect();
        for i in 13..20 {
            assert_eq!(out.labels()[i], 1);
            assert!(minority.contains(&out.row(i)));
        }
        let balanced = toy(4, 4);
        assert_eq!(oversample_duplicate(&balanced, 4).unwrap(), balanced);
    }

    #[test]
    fn smote_balances_and_keeps_originals() {
        let d = toy(30, 6);
        let (out, trace) = smote_traced(&d, 3, 5).unwrap();
        assert_eq!(out.class_counts(), [30, 30]);
        assert_eq!(trace.len(), 24);
        for i in 0..d.n() {
            assert_eq!(out.row(i), d.row(i));
        }
        // round-robin over the minority rows
        assert_eq!(trace[0].base, 30);
        assert_eq!(trace[7].base, 31);
        assert_eq!(smote(&toy(6, 6), 3, 5).unwrap(), toy(6, 6));
    }

    #[test]
    fn smote_clamps_k() {
        let d = toy(10, 3);
        let out = smote(&d, 50, 1).unwrap();
        assert_eq!(out.class_counts(), [10, 10]);
        assert!(matches!(smote(&toy(10, 1), 5, 1), Err(Error::TooFewMinority(1))));
        assert!(smote(&d, 0, 1).is_err());
    }

    #[test]
    fn neighbor_ties_prefer_lower_index() {
        let points = vec![vec![0.0], vec![1.0], vec![-1.0], vec![2.0]];
        let nn = nearest_neighbors(&points, 2);
        assert_eq!(nn[0], vec![1, 2]);
        assert_eq!(nn[3], vec![1, 0]);
    }
}
