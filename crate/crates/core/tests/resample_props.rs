mod common;

use common::brute_force_knn;
use fraudbench::data::synth_generate;
use fraudbench::lowprec::{encode, decode};
use fraudbench::resample::{nearest_neighbors, oversample_duplicate, resample, smote_traced, undersample};
use fraudbench::{Dataset, Format16, PrecisionFormat, ResampleMode, Rounding};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn minority_rows(d: &Dataset) -> Vec<usize> {
    let [neg, pos] = d.class_counts();
    let label = u8::from(pos <= neg);
    (0..d.n()).filter(|&i| d.labels()[i] == label).collect()
}

fn small_imbalanced(seed: u64, n: usize, rate: f64) -> Dataset {
    synth_generate(n, rate, 2.0, seed).unwrap()
}

#[test]
fn smote_balances_and_keeps_originals() {
    for seed in 0..5 {
        let d = small_imbalanced(seed, 1200, 0.04);
        let (out, trace) = smote_traced(&d, 5, seed).unwrap();
        let [neg, pos] = out.class_counts();
        assert_eq!(neg, pos);
        assert_eq!(out.n(), 2 * d.class_counts()[0]);
        assert_eq!(trace.len(), out.n() - d.n());
        for i in 0..d.n() {
            assert_eq!(out.row(i), d.row(i));
            assert_eq!(out.labels()[i], d.labels()[i]);
        }
    }
}

#[test]
fn synthetic_rows_lie_on_their_segment() {
    for (seed, precision) in [
        (1, PrecisionFormat::SINGLE32),
        (2, PrecisionFormat::HALF16),
        (3, PrecisionFormat::BRAIN16),
    ] {
        let (d, _) = small_imbalanced(seed, 900, 0.05).to_precision(precision, Rounding::NearestEven);
        let (out, trace) = smote_traced(&d, 5, seed).unwrap();
        let minority = minority_rows(&d);
        for (s, t) in trace.iter().enumerate() {
            assert!((0.0..1.0).contains(&t.u));
            assert!(minority.contains(&t.base) && minority.contains(&t.neighbor));
            assert_ne!(t.base, t.neighbor);
            let (x, y, z) = (d.row(t.base), d.row(t.neighbor), out.row(d.n() + s));
            for c in 0..x.len() {
                let (lo, hi) = (x[c].min(y[c]), x[c].max(y[c]));
                assert!(lo <= z[c] && z[c] <= hi, "coordinate {c}: {} not in [{lo}, {hi}]", z[c]);
                // recompute the interpolation and storage rounding independently
                let want = (x[c] as f64 + t.u as f64 * (y[c] as f64 - x[c] as f64)) as f32;
                let want = want.clamp(lo, hi);
                let want = match precision.as_16bit() {
                    Some(f) => decode(encode(want, f)),
                    None => want,
                };
                let tol = match precision.as_16bit() {
                    Some(Format16::Half16) => 2f32.powi(-10) * hi.abs().max(lo.abs()),
                    Some(Format16::Brain16) => 2f32.powi(-7) * hi.abs().max(lo.abs()),
                    None => 4.0 * f32::EPSILON * hi.abs().max(lo.abs()),
                };
                assert!((z[c] - want).abs() <= tol, "{} vs {want}", z[c]);
            }
        }
    }
}

#[test]
fn neighbour_search_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let m = rng.random_range(2..=200);
        let dims = rng.random_range(1..=6);
        let grid = rng.random_range(2..=10);
        let points: Vec<Vec<f32>> = (0..m)
            .map(|_| (0..dims).map(|_| rng.random_range(0..grid) as f32 * 0.5).collect())
            .collect();
        let k = rng.random_range(1..m.max(2));
        assert_eq!(nearest_neighbors(&points, k), brute_force_knn(&points, k));
    }
}

#[test]
fn smote_neighbours_come_from_brute_force_knn() {
    let d = small_imbalanced(8, 3000, 0.03);
    let minority = minority_rows(&d);
    assert!(minority.len() <= 200);
    let points: Vec<Vec<f32>> = minority.iter().map(|&i| d.row(i)).collect();
    let knn = brute_force_knn(&points, 5);
    let (_, trace) = smote_traced(&d, 5, 8).unwrap();
    for t in &trace {
        let b = minority.iter().position(|&i| i == t.base).unwrap();
        let n = minority.iter().position(|&i| i == t.neighbor).unwrap();
        assert!(knn[b].contains(&n));
    }
}

#[test]
fn smote_clamps_k_to_minority() {
    let rows: Vec<Vec<f32>> = (0..20).map(|i| vec![i as f32, (i * i) as f32]).collect();
    let labels: Vec<u8> = (0..20).map(|i| u8::from(i < 3)).collect();
    let d = Dataset::from_rows(&rows, &labels).unwrap();
    let (out, trace) = smote_traced(&d, 5, 0).unwrap();
    assert_eq!(out.class_counts(), [17, 17]);
    assert!(trace.iter().all(|t| t.base < 3 && t.neighbor < 3));
}

#[test]
fn resampling_is_deterministic() {
    let d = small_imbalanced(4, 1000, 0.05);
    for mode in [
        ResampleMode::Under,
        ResampleMode::Over,
        ResampleMode::Smote { k: 5 },
    ] {
        let a = resample(&d, mode, 77).unwrap();
        let b = resample(&d, mode, 77).unwrap();
        assert_eq!(a, b, "{mode}");
        assert_eq!(a.class_counts()[0], a.class_counts()[1], "{mode}");
    }
}

#[test]
fn undersample_keeps_a_subset() {
    let d = small_imbalanced(6, 800, 0.1);
    let out = undersample(&d, 1).unwrap();
    assert_eq!(out.class_counts(), [80, 80]);
    let originals: Vec<Vec<u32>> = (0..d.n())
        .map(|i| d.row(i).iter().map(|v| v.to_bits()).collect())
        .collect();
    for i in 0..out.n() {
        let r: Vec<u32> = out.row(i).iter().map(|v| v.to_bits()).collect();
        assert!(originals.contains(&r));
    }
}

#[test]
fn oversample_appends_minority_copies() {
    let d = small_imbalanced(7, 500, 0.1);
    let out = oversample_duplicate(&d, 1).unwrap();
    assert_eq!(out.class_counts(), [450, 450]);
    let minority: Vec<Vec<f32>> = minority_rows(&d).iter().map(|&i| d.row(i)).collect();
    for i in d.n()..out.n() {
        assert_eq!(out.labels()[i], 1);
        assert!(minority.contains(&out.row(i)));
    }
}
