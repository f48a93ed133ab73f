//! Reference implementations used only by tests. None of these call into the
//! code path they check.
#![allow(dead_code)]

use std::sync::LazyLock;

use num_bigint::BigInt;
use num_rational::Ratio;

use fraudbench::{Format16, Tree, TreeNode};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Exact magnitudes of every non-negative finite pattern of a 16-bit format,
/// plus the first value past the largest finite one (where rounding
/// overflows), all scaled by 2^SCALE so they are integers.
pub struct ExactFormat {
    exponent_bits: u32,
    mantissa_bits: u32,
    /// Index = bit pattern.
    values: Vec<BigInt>,
}

const SCALE: i32 = 160;

fn scaled(mantissa: u64, exp2: i32) -> BigInt {
    BigInt::from(mantissa) << ((exp2 + SCALE) as usize)
}

impl ExactFormat {
    pub fn new(format: Format16) -> Self {
        let (e_bits, m_bits) = match format {
            Format16::Half16 => (5u32, 10u32),
            Format16::Brain16 => (8, 7),
        };
        let bias = (1i32 << (e_bits - 1)) - 1;
        let exp_all = (1u32 << e_bits) - 1;
        let mut values = Vec::new();
        // patterns 0 ..= inf; the inf slot holds 2^(emax + 1)
        for p in 0..=(exp_all << m_bits) {
            let e = p >> m_bits;
            let m = (p & ((1 << m_bits) - 1)) as u64;
            let v = if e == 0 {
                scaled(m, 1 - bias - m_bits as i32)
            } else {
                scaled((1u64 << m_bits) + m, e as i32 - bias - m_bits as i32)
            };
            values.push(v);
        }
        ExactFormat {
            exponent_bits: e_bits,
            mantissa_bits: m_bits,
            values,
        }
    }

    pub fn infinity(&self) -> u16 {
        (((1u32 << self.exponent_bits) - 1) << self.mantissa_bits) as u16
    }

    /// Exact value of a finite pattern as `num / 2^SCALE`.
    pub fn exact(&self, bits: u16) -> (bool, &BigInt) {
        (bits & 0x8000 != 0, &self.values[(bits & 0x7FFF) as usize])
    }

    /// Round-to-nearest-even of an `f32`, decided entirely in big integers.
    pub fn encode(&self, x: f32, canonical_nan: u16) -> u16 {
        if x.is_nan() {
            return canonical_nan;
        }
        let sign = if x.is_sign_negative() { 0x8000u16 } else { 0 };
        if x.is_infinite() {
            return sign | self.infinity();
        }
        let target = f32_exact(x.abs());
        // largest pattern with value <= target
        let idx = self.values.partition_point(|v| *v <= target);
        let lo = idx - 1;
        if self.values[lo] == target || lo as u16 == self.infinity() {
            return sign | lo as u16;
        }
        let hi = lo + 1;
        let twice = &target * 2;
        let mid = &self.values[lo] + &self.values[hi];
        let pick = if twice < mid {
            lo
        } else if twice > mid {
            hi
        } else if lo % 2 == 0 {
            lo
        } else {
            hi
        };
        sign | pick as u16
    }

    /// Exact distance `|value(bits) - x|` scaled by 2^SCALE, or `None` for
    /// infinite/NaN patterns.
    pub fn distance(&self, bits: u16, x: f32) -> Option<BigInt> {
        if (bits & 0x7FFF) >= self.infinity() {
            return None;
        }
        let (neg, mag) = self.exact(bits);
        let v = if neg { -mag.clone() } else { mag.clone() };
        let t = if x.is_sign_negative() {
            -f32_exact(x.abs())
        } else {
            f32_exact(x.abs())
        };
        let d = v - t;
        Some(if d < BigInt::from(0) { -d } else { d })
    }
}

static HALF: LazyLock<ExactFormat> = LazyLock::new(|| ExactFormat::new(Format16::Half16));
static BRAIN: LazyLock<ExactFormat> = LazyLock::new(|| ExactFormat::new(Format16::Brain16));

/// Shared table for `format`, built once per test binary.
pub fn exact_format(format: Format16) -> &'static ExactFormat {
    match format {
        Format16::Half16 => &HALF,
        Format16::Brain16 => &BRAIN,
    }
}

/// Exact value of a finite non-negative `f32`, scaled by 2^SCALE.
pub fn f32_exact(x: f32) -> BigInt {
    let bits = x.to_bits();
    let e = (bits >> 23) & 0xFF;
    let m = (bits & 0x7F_FFFF) as u64;
    if e == 0 {
        scaled(m, -149)
    } else {
        scaled(m | 0x80_0000, e as i32 - 150)
    }
}

/// The classic bfloat16 bit trick: add 0x7FFF plus the lowest kept bit,
/// then keep the top half.
pub fn bf16_bit_trick(x: f32) -> u16 {
    if x.is_nan() {
        return 0x7FC0;
    }
    let b = x.to_bits();
    let lsb = (b >> 16) & 1;
    (b.wrapping_add(0x7FFF + lsb) >> 16) as u16
}

/// AUC as the fraction of (positive, negative) pairs ranked correctly, ties
/// counting one half.
pub fn pairwise_auc(actual: &[u8], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &a) in actual.iter().enumerate() {
        if a != 1 {
            continue;
        }
        for (j, &b) in actual.iter().enumerate() {
            if b != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

pub type Q = Ratio<i128>;

fn gini_q(c0: i128, c1: i128) -> Q {
    let n = c0 + c1;
    Q::from_integer(1) - Q::new(c0 * c0 + c1 * c1, n * n)
}

/// Best split by exhaustive enumeration with exact rational Gini.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteSplit {
    pub feature: usize,
    /// Threshold lies in `(lo, hi]`.
    pub lo: f32,
    pub hi: f32,
    pub decrease: Q,
}

/// Scan every feature and every gap between consecutive distinct values.
/// Returns the split with the largest Gini decrease, ties to the lower
/// feature then the lower gap; `None` unless some split decreases impurity.
pub fn brute_force_best_split(rows: &[Vec<f32>], labels: &[u8], min_leaf: usize) -> Option<BruteSplit> {
    let n = rows.len() as i128;
    let c1 = labels.iter().filter(|&&l| l == 1).count() as i128;
    let parent = gini_q(n - c1, c1);
    let mut best: Option<BruteSplit> = None;
    let n_features = rows.first().map_or(0, Vec::len);
    for f in 0..n_features {
        let mut vals: Vec<f32> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (mut l0, mut l1, mut r0, mut r1) = (0i128, 0i128, 0i128, 0i128);
            for (row, &y) in rows.iter().zip(labels) {
                match (row[f] <= lo, y) {
                    (true, 0) => l0 += 1,
                    (true, _) => l1 += 1,
                    (false, 0) => r0 += 1,
                    (false, _) => r1 += 1,
                }
            }
            let (nl, nr) = (l0 + l1, r0 + r1);
            if (nl as usize) < min_leaf || (nr as usize) < min_leaf {
                continue;
            }
            let weighted = Q::new(nl, n) * gini_q(l0, l1) + Q::new(nr, n) * gini_q(r0, r1);
            let decrease = parent - weighted;
            if best.as_ref().map_or(true, |b| decrease > b.decrease) {
                best = Some(BruteSplit {
                    feature: f,
                    lo,
                    hi,
                    decrease,
                });
            }
        }
    }
    best.filter(|b| b.decrease > Q::from_integer(0))
}

/// k nearest neighbours by sorting every other point on (distance, index).
pub fn brute_force_knn(points: &[Vec<f32>], k: usize) -> Vec<Vec<usize>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut all: Vec<(f64, usize)> = Vec::new();
            for (j, q) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut d = 0.0f64;
                for c in 0..p.len() {
                    let diff = p[c] as f64 - q[c] as f64;
                    d += diff * diff;
                }
                all.push((d, j));
            }
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Up to 50 rows and 3 features on a coarse grid, random labels.
pub fn random_tiny(rng: &mut ChaCha8Rng) -> (Vec<Vec<f32>>, Vec<u8>) {
    let n = rng.random_range(2..=50);
    let f = rng.random_range(1..=3);
    // a coarse grid makes duplicate values and tied splits common
    let grid = rng.random_range(2..=12);
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| {
            (0..f)
                .map(|_| rng.random_range(0..grid) as f32 * 0.25 - 1.0)
                .collect()
        })
        .collect();
    let labels = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    (rows, labels)
}

/// Walk the tree, re-deriving each node's rows by routing, and compare every
/// decision with the exhaustive search.
pub fn check_node(tree: &Tree, node: usize, rows: &[Vec<f32>], labels: &[u8]) {
    let brute = brute_force_best_split(rows, labels, 1);
    match &tree.nodes()[node] {
        TreeNode::Leaf { class_counts } => {
            let ones = labels.iter().filter(|&&l| l == 1).count() as u32;
            assert_eq!(*class_counts, [labels.len() as u32 - ones, ones]);
            assert!(brute.is_none(), "leaf where a split helps: {brute:?}");
        }
        TreeNode::Internal { rule, gain, left, right } => {
            let b = brute.expect("split where none helps");
            assert_eq!(rule.feature_index, b.feature);
            assert!(
                b.lo < rule.threshold && rule.threshold <= b.hi,
                "threshold {} outside ({}, {}]",
                rule.threshold,
                b.lo,
                b.hi
            );
            assert!(*gain > 0.0);
            let exact = *b.decrease.numer() as f64 / *b.decrease.denom() as f64;
            assert!((gain - exact).abs() < 1e-12, "gain {gain} vs {exact}");
            let (mut lr, mut ll, mut rr, mut rl) = (vec![], vec![], vec![], vec![]);
            for (r, &y) in rows.iter().zip(labels) {
                if rule.goes_left(r) {
                    lr.push(r.clone());
                    ll.push(y);
                } else {
                    rr.push(r.clone());
                    rl.push(y);
                }
            }
            check_node(tree, *left, &lr, &ll);
            check_node(tree, *right, &rr, &rl);
        }
    }
}
