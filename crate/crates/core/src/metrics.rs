//! Confusion matrix, the rates derived from it, and rank-based ROC-AUC.
//!
//! Positive class is fraud (label 1). Any rate whose denominator is zero is
//! reported as `None` ("undefined"), never as 0, NaN or infinity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

/// An exact ratio of counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub num: u128,
    pub den: u128,
}

impl Fraction {
    fn new(num: u128, den: u128) -> Option<Fraction> {
        (den != 0).then_some(Fraction { num, den })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

pub fn confusion(actual: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    let mut c = ConfusionMatrix::default();
    for (&a, &p) in actual.iter().zip(predicted) {
        match (a, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (1, 0) => c.fn_ += 1,
            (0, 0) => c.tn += 1,
            _ => {
                return Err(Error::InvalidLabel {
                    row: c.total() as usize,
                    value: format!("({a}, {p})"),
                })
            }
        }
    }
    Ok(c)
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Roles of the two classes swapped (class 0 treated as positive).
    pub fn transposed_roles(&self) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    fn frac(num: u64, den: u64) -> Option<Fraction> {
        Fraction::new(num as u128, den as u128)
    }

    pub fn accuracy(&self) -> Option<Fraction> {
        Self::frac(self.tp + self.tn, self.total())
    }
    pub fn precision(&self) -> Option<Fraction> {
        Self::frac(self.tp, self.tp + self.fp)
    }
    pub fn fdr(&self) -> Option<Fraction> {
        Self::frac(self.fp, self.tp + self.fp)
    }
    pub fn false_omission_rate(&self) -> Option<Fraction> {
        Self::frac(self.fn_, self.fn_ + self.tn)
    }
    pub fn npv(&self) -> Option<Fraction> {
        Self::frac(self.tn, self.fn_ + self.tn)
    }
    pub fn tpr(&self) -> Option<Fraction> {
        Self::frac(self.tp, self.tp + self.fn_)
    }
    pub fn fnr(&self) -> Option<Fraction> {
        Self::frac(self.fn_, self.tp + self.fn_)
    }
    pub fn fpr(&self) -> Option<Fraction> {
        Self::frac(self.fp, self.fp + self.tn)
    }
    pub fn tnr(&self) -> Option<Fraction> {
        Self::frac(self.tn, self.fp + self.tn)
    }
    pub fn prevalence(&self) -> Option<Fraction> {
        Self::frac(self.tp + self.fn_, self.total())
    }
    pub fn f1(&self) -> Option<Fraction> {
        Self::frac(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    /// TPR / FPR.
    pub fn lr_plus(&self) -> Option<Fraction> {
        let (tpr, fpr) = (self.tpr()?, self.fpr()?);
        Fraction::new(tpr.num * fpr.den, tpr.den * fpr.num)
    }

    /// FNR / TNR.
    pub fn lr_minus(&self) -> Option<Fraction> {
        let (fnr, tnr) = (self.fnr()?, self.tnr()?);
        Fraction::new(fnr.num * tnr.den, fnr.den * tnr.num)
    }
}

/// Every rate derived from a [`ConfusionMatrix`]. `None` marks a rate whose
/// denominator is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub tnr: Option<f64>,
    pub fdr: Option<f64>,
    #[serde(rename = "for")]
    pub for_: Option<f64>,
    pub npv: Option<f64>,
    pub prevalence: Option<f64>,
    pub f1: Option<f64>,
    pub g_mean: Option<f64>,
    pub lr_plus: Option<f64>,
    pub lr_minus: Option<f64>,
    /// `[class 0, class 1]`.
    pub per_class_precision: [Option<f64>; 2],
    /// `[class 0, class 1]`.
    pub per_class_recall: [Option<f64>; 2],
}

pub fn derive_metrics(c: &ConfusionMatrix) -> MetricsReport {
    let v = |f: Option<Fraction>| f.map(Fraction::value);
    let g_mean = match (c.tpr(), c.tnr()) {
        (Some(a), Some(b)) => Some((a.value() * b.value()).sqrt()),
        _ => None,
    };
    MetricsReport {
        accuracy: v(c.accuracy()),
        precision: v(c.precision()),
        recall: v(c.tpr()),
        fpr: v(c.fpr()),
        fnr: v(c.fnr()),
        tnr: v(c.tnr()),
        fdr: v(c.fdr()),
        for_: v(c.false_omission_rate()),
        npv: v(c.npv()),
        prevalence: v(c.prevalence()),
        f1: v(c.f1()),
        g_mean,
        lr_plus: v(c.lr_plus()),
        lr_minus: v(c.lr_minus()),
        per_class_precision: [v(c.npv()), v(c.precision())],
        per_class_recall: [v(c.tnr()), v(c.tpr())],
    }
}

/// Area under the ROC curve via the Mann-Whitney rank statistic, tied scores
/// sharing their mean rank.
pub fn roc_auc(actual: &[u8], scores: &[f64]) -> Result<f64> {
    if actual.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: scores.len(),
        });
    }
    let n_pos = actual.iter().filter(|&&a| a == 1).count();
    let n_neg = actual.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass {
            negatives: n_neg,
            positives: n_pos,
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of 2 * rank over positives keeps half-ranks integral.
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share (start + 1 + end) / 2
        let twice_rank = (start + 1 + end) as u128;
        let positives = order[start..end].iter().filter(|&&i| actual[i] == 1).count() as u128;
        twice_rank_sum += twice_rank * positives;
        start = end;
    }
    let (p, n) = (n_pos as u128, n_neg as u128);
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * n) as f64)
}

const UNDEFINED: &str = "—";

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |v| format!("{:.0}%", v * 100.0))
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |v| format!("{v:.2}"))
}

/// Text grid: predicted condition on rows, actual condition on columns,
/// rates in the margins.
pub fn format_table(c: &ConfusionMatrix, m: &MetricsReport) -> String {
    let rows: [[String; 5]; 8] = [
        ["".into(), "Actual Condition".into(), "".into(), "Accuracy".into(), "".into()],
        [
            "".into(),
            "Condition +ve".into(),
            "Condition -ve".into(),
            pct(m.accuracy),
            "".into(),
        ],
        [
            "Predicted +ve".into(),
            c.tp.to_string(),
            c.fp.to_string(),
            format!("Precision {}", pct(m.precision)),
            format!("False discovery rate {}", pct(m.fdr)),
        ],
        [
            "Predicted -ve".into(),
            c.fn_.to_string(),
            c.tn.to_string(),
            format!("False omission rate {}", pct(m.for_)),
            format!("Negative predictive value {}", pct(m.npv)),
        ],
        [
            "Prevalence".into(),
            "Sensitivity, Recall TPR".into(),
            "Fallout FPR".into(),
            "+ve likelihood ratio".into(),
            "-ve likelihood ratio".into(),
        ],
        [pct(m.prevalence), pct(m.recall), pct(m.fpr), num(m.lr_plus), num(m.lr_minus)],
        [
            "".into(),
            "Miss Rate FNR".into(),
            "Specificity TNR".into(),
            "F1 Score".into(),
            "G-Mean".into(),
        ],
        ["".into(), pct(m.fnr), pct(m.tnr), num(m.f1), num(m.g_mean)],
    ];
    let widths: Vec<usize> = (0..5)
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| UNDEFINED.to_string(), |v| format!("{v:.9}"));
        let fields: [(&str, Option<f64>); 14] = [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("fpr", self.fpr),
            ("fnr", self.fnr),
            ("tnr", self.tnr),
            ("fdr", self.fdr),
            ("for", self.for_),
            ("npv", self.npv),
            ("prevalence", self.prevalence),
            ("f1", self.f1),
            ("g_mean", self.g_mean),
            ("lr_plus", self.lr_plus),
            ("lr_minus", self.lr_minus),
        ];
        for (name, v) in fields {
            writeln!(f, "{name:<12}{}", show(v))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Option<f64>, b: f64, tol: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() <= tol)
    }

    #[test]
    fn small_confusion() {
        let c = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(
            c,
            ConfusionMatrix {
                tp: 1,
                fp: 1,
                fn_: 1,
                tn: 1
            }
        );
        let same = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        assert!(matches!(confusion(&[1], &[1, 0]), Err(Error::LengthMismatch { .. })));
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn perfect_matrix() {
        let m = derive_metrics(&ConfusionMatrix {
            tp: 5,
            fp: 0,
            fn_: 0,
            tn: 7,
        });
        assert_eq!(m.accuracy, Some(1.0));
        assert_eq!(m.f1, Some(1.0));
        assert_eq!(m.g_mean, Some(1.0));
        assert_eq!(m.lr_plus, None);
        assert_eq!(m.lr_minus, Some(0.0));
    }

    #[test]
    fn unbalanced_run_matrix() {
        // [[85286, 9], [32, 116]] with actual on rows
        let c = ConfusionMatrix {
            tp: 116,
            fp: 9,
            fn_: 32,
            tn: 85286,
        };
        let m = derive_metrics(&c);
        assert!(close(m.accuracy, 0.9995201479348805, 1e-15));
        assert!(close(m.per_class_precision[0], 0.99962493, 5e-9));
        assert!(close(m.per_class_precision[1], 0.928, 1e-12));
        assert!(close(m.per_class_recall[0], 0.99989448, 5e-9));
        assert!(close(m.per_class_recall[1], 0.78378378, 5e-9));
    }

    #[test]
    fn empty_matrix_is_undefined() {
        let m = derive_metrics(&ConfusionMatrix::default());
        assert_eq!(m.accuracy, None);
        assert_eq!(m.g_mean, None);
        assert!(format_table(&ConfusionMatrix::default(), &m).contains(UNDEFINED));
    }

    #[test]
    fn auc_small_cases() {
        assert_eq!(roc_auc(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]).unwrap(), 0.75);
        assert_eq!(roc_auc(&[0, 1, 0, 1], &[0.2; 4]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0, 0, 1], &[0.1, 0.2, 0.9]).unwrap(), 1.0);
        assert!(matches!(roc_auc(&[1, 1], &[0.1, 0.2]), Err(Error::SingleClass { .. })));
        assert!(roc_auc(&[1, 0], &[0.1]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = derive_metrics(&ConfusionMatrix {
            tp: 3,
            fp: 0,
            fn_: 2,
            tn: 0,
        });
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"lr_plus\":null"));
        assert_eq!(serde_json::from_str::<MetricsReport>(&text).unwrap(), m);
    }
}
