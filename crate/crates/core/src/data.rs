//! Credit-card transaction table: schema, CSV ingestion, audit, splitting and
//! a synthetic stand-in generator.
//!
//! Features are kept raw. No scaling is applied, so anything distance-based
//! (SMOTE) is dominated by `Time` and `Amount`.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowprec::{quantize_matrix, Cell, PrecisionFormat, QuantizedMatrix, Rounding};
use crate::seed;

pub const N_FEATURES: usize = 30;
pub const LABEL_COLUMN: &str = "Class";
pub const TIME_COLUMN: &str = "Time";
pub const AMOUNT_COLUMN: &str = "Amount";

/// Canonical feature order: `Time`, `V1`..`V28`, `Amount`.
pub fn feature_names() -> Vec<String> {
    std::iter::once(TIME_COLUMN.to_string())
        .chain((1..=28).map(|i| format!("V{i}")))
        .chain(std::iter::once(AMOUNT_COLUMN.to_string()))
        .collect()
}

/// Feature matrix plus binary labels (1 = fraud).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: QuantizedMatrix,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, features: QuantizedMatrix, labels: Vec<u8>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if features.cols() != feature_names.len() {
            return Err(Error::Shape(format!(
                "{} feature columns but {} names",
                features.cols(),
                feature_names.len()
            )));
        }
        if let Some((row, &v)) = labels.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::InvalidLabel {
                row,
                value: v.to_string(),
            });
        }
        Ok(Dataset {
            feature_names,
            features,
            labels,
        })
    }

    /// Build from row-major `f32` values, narrowed to `precision`.
    pub fn from_f32(
        feature_names: Vec<String>,
        values: &[f32],
        labels: Vec<u8>,
        precision: PrecisionFormat,
    ) -> Result<Self> {
        let cols = feature_names.len();
        if cols == 0 || values.len() != labels.len() * cols {
            return Err(Error::Shape(format!(
                "{} values for {} rows of {} columns",
                values.len(),
                labels.len(),
                cols
            )));
        }
        let q = quantize_matrix(labels.len(), cols, values, precision);
        Dataset::new(feature_names, q.matrix, labels)
    }

    /// Unnamed columns `f0`, `f1`, ... ; convenient for small fixtures.
    pub fn from_rows(rows: &[Vec<f32>], labels: &[u8]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let names = (0..cols).map(|i| format!("f{i}")).collect();
        let values: Vec<f32> = rows.iter().flatten().copied().collect();
        Dataset::from_f32(names, &values, labels.to_vec(), PrecisionFormat::SINGLE32)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &QuantizedMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn precision(&self) -> PrecisionFormat {
        self.features.format()
    }

    pub fn row(&self, i: usize) -> Vec<f32> {
        self.features.row(i)
    }

    /// `[class 0, class 1]` counts.
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Subset of rows, in the given order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Append rows given as widened values; they are narrowed to this
    /// dataset's precision.
    pub fn append(&self, values: &[f32], labels: &[u8]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            features: self.features.append_rows(values),
            labels: self.labels.iter().chain(labels).copied().collect(),
        }
    }

    /// Re-store the features at another precision. Returns the cells that
    /// overflowed to infinity.
    pub fn to_precision(&self, format: PrecisionFormat, rounding: Rounding) -> (Dataset, Vec<Cell>) {
        let out = self.features.requantize(format, rounding);
        (
            Dataset {
                feature_names: self.feature_names.clone(),
                features: out.matrix,
                labels: self.labels.clone(),
            },
            out.overflow,
        )
    }

    /// Write as CSV with a header, labels in a trailing `Class` column.
    /// Values use the shortest representation that parses back to the same
    /// `f32`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(LABEL_COLUMN);
        out.write_record(&header)?;
        let mut row = vec![0.0f32; self.n_features()];
        let mut fields = Vec::with_capacity(self.n_features() + 1);
        for i in 0..self.n() {
            self.features.row_into(i, &mut row);
            fields.clear();
            fields.extend(row.iter().map(|v| v.to_string()));
            fields.push(self.labels[i].to_string());
            out.write_record(&fields)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Load the transaction CSV. Columns are matched by name in any order and
/// reordered canonically; extra columns are ignored.
pub fn load_csv(path: impl AsRef<Path>, precision: PrecisionFormat) -> Result<Dataset> {
    read_csv(File::open(path)?, precision)
}

pub fn read_csv<R: Read>(reader: R, precision: PrecisionFormat) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let names = feature_names();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let feature_pos = names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;
    let label_pos = find(LABEL_COLUMN)?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0usize;
    while rdr.read_record(&mut record)? {
        for (name, &pos) in names.iter().zip(&feature_pos) {
            values.push(parse_cell(record.get(pos), row, name)?);
        }
        labels.push(parse_label(record.get(label_pos), row)?);
        row += 1;
    }

    let out = quantize_matrix(labels.len(), N_FEATURES, &values, precision);
    if !out.overflow.is_empty() {
        log::warn!(
            "{} cell(s) overflowed to infinity when stored as {}",
            out.overflow.len(),
            precision
        );
    }
    Dataset::new(names, out.matrix, labels)
}

fn parse_cell(field: Option<&str>, row: usize, column: &str) -> Result<f32> {
    let text = field.unwrap_or("");
    if is_null(text) {
        return Err(Error::NullCell {
            row,
            column: column.to_string(),
        });
    }
    let non_numeric = || Error::NonNumericCell {
        row,
        column: column.to_string(),
        text: text.to_string(),
    };
    let v: f32 = text.parse().map_err(|_| non_numeric())?;
    if !v.is_finite() {
        return Err(non_numeric());
    }
    Ok(v)
}

fn parse_label(field: Option<&str>, row: usize) -> Result<u8> {
    let text = field.unwrap_or("");
    if is_null(text) {
        return Err(Error::NullCell {
            row,
            column: LABEL_COLUMN.to_string(),
        });
    }
    let value = match text.parse::<i64>() {
        Ok(v) => v as f64,
        Err(_) => text.parse::<f64>().map_err(|_| Error::NonNumericCell {
            row,
            column: LABEL_COLUMN.to_string(),
            text: text.to_string(),
        })?,
    };
    if value == 0.0 {
        Ok(0)
    } else if value == 1.0 {
        Ok(1)
    } else {
        Err(Error::InvalidLabel {
            row,
            value: text.to_string(),
        })
    }
}

fn is_null(text: &str) -> bool {
    text.is_empty()
        || ["nan", "na", "null", "none"]
            .iter()
            .any(|n| text.eq_ignore_ascii_case(n))
}

/// Per-column audit line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnAudit {
    pub name: String,
    pub non_null: usize,
    pub infinite: usize,
    pub dtype: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub columns: Vec<ColumnAudit>,
}

impl ValidationReport {
    /// True when every column is fully populated with finite values.
    pub fn is_clean(&self) -> bool {
        self.columns
            .iter()
            .all(|c| c.non_null == self.n && c.infinite == 0)
    }
}

pub fn validate(d: &Dataset) -> ValidationReport {
    let dtype = match d.precision().kind {
        crate::PrecisionKind::Single32 => "float32",
        crate::PrecisionKind::Half16 => "float16",
        crate::PrecisionKind::Brain16 => "bfloat16",
    };
    let mut columns: Vec<ColumnAudit> = d
        .feature_names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let mut audit = ColumnAudit {
                name: name.clone(),
                non_null: 0,
                infinite: 0,
                dtype: dtype.to_string(),
                min: None,
                max: None,
            };
            for r in 0..d.n() {
                let v = d.features.get(r, c);
                if v.is_nan() {
                    continue;
                }
                audit.non_null += 1;
                if v.is_infinite() {
                    audit.infinite += 1;
                }
                let v = v as f64;
                audit.min = Some(audit.min.map_or(v, |m| m.min(v)));
                audit.max = Some(audit.max.map_or(v, |m| m.max(v)));
            }
            audit
        })
        .collect();
    columns.push(ColumnAudit {
        name: LABEL_COLUMN.to_string(),
        non_null: d.n(),
        infinite: 0,
        dtype: "int".to_string(),
        min: d.labels.iter().min().map(|&v| v as f64),
        max: d.labels.iter().max().map(|&v| v as f64),
    });
    ValidationReport { n: d.n(), columns }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RangeIndex: {} entries", self.n)?;
        writeln!(f, "Data columns (total {} columns):", self.columns.len())?;
        writeln!(f, " #   Column  Non-Null Count  Dtype")?;
        writeln!(f, "---  ------  --------------  -----")?;
        for (i, c) in self.columns.iter().enumerate() {
            write!(
                f,
                " {:<3} {:<7} {:>8} non-null  {}",
                i, c.name, c.non_null, c.dtype
            )?;
            if c.infinite > 0 {
                write!(f, "  ({} infinite)", c.infinite)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub n_total: usize,
    pub n_fraud: usize,
    pub n_nonfraud: usize,
    pub fraud_rate: f64,
    pub amount_mean: Option<f64>,
    pub amount_max: Option<f64>,
    pub amount_min: Option<f64>,
    pub time_max: Option<f64>,
}

pub fn class_stats(d: &Dataset) -> ClassStats {
    let [n_nonfraud, n_fraud] = d.class_counts();
    let n_total = d.n();
    let column = |name: &str| -> Option<Vec<f64>> {
        let c = d.column_index(name)?;
        if n_total == 0 {
            return None;
        }
        Some((0..n_total).map(|r| d.features.get(r, c) as f64).collect())
    };
    let amount = column(AMOUNT_COLUMN);
    let time = column(TIME_COLUMN);
    ClassStats {
        n_total,
        n_fraud,
        n_nonfraud,
        fraud_rate: if n_total == 0 {
            0.0
        } else {
            n_fraud as f64 / n_total as f64
        },
        amount_mean: amount
            .as_ref()
            .map(|a| a.iter().sum::<f64>() / a.len() as f64),
        amount_max: amount.as_ref().map(|a| a.iter().copied().fold(f64::MIN, f64::max)),
        amount_min: amount.as_ref().map(|a| a.iter().copied().fold(f64::MAX, f64::min)),
        time_max: time.map(|t| t.into_iter().fold(f64::MIN, f64::max)),
    }
}

impl fmt::Display for ClassStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "—".to_string(), |v| format!("{v:.6}"));
        writeln!(f, "rows          {}", self.n_total)?;
        writeln!(f, "fraud         {}", self.n_fraud)?;
        writeln!(f, "non-fraud     {}", self.n_nonfraud)?;
        writeln!(f, "fraud rate    {:.6}", self.fraud_rate)?;
        writeln!(f, "amount mean   {}", opt(self.amount_mean))?;
        writeln!(f, "amount min    {}", opt(self.amount_min))?;
        writeln!(f, "amount max    {}", opt(self.amount_max))?;
        writeln!(f, "time max      {}", opt(self.time_max))
    }
}

fn train_count(n: usize, train_fraction: f64) -> usize {
    (n as f64 * train_fraction).floor() as usize
}

fn check_fraction(train_fraction: f64) -> Result<()> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    Ok(())
}

/// Seeded shuffle, then the first `floor(n * train_fraction)` rows train.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    check_fraction(train_fraction)?;
    let n = d.n();
    let n_train = train_count(n, train_fraction);
    if n_train == 0 || n_train == n {
        return Err(Error::DegenerateSplit {
            train: n_train,
            test: n - n_train,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive_seed(seed, seed::stream::SPLIT)));
    Ok((d.select(&order[..n_train]), d.select(&order[n_train..])))
}

/// Like [`split`] but each class is cut separately, so the training side
/// receives `floor(count * train_fraction)` rows of each class.
pub fn split_stratified(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    check_fraction(train_fraction)?;
    let mut rng = seed::rng(seed::derive_seed(seed, seed::stream::SPLIT));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..=1u8 {
        let mut idx: Vec<usize> = (0..d.n()).filter(|&i| d.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let cut = train_count(idx.len(), train_fraction);
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::DegenerateSplit {
            train: train.len(),
            test: test.len(),
        });
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((d.select(&train), d.select(&test)))
}

/// Two unit-variance Gaussian clusters in 30 dimensions whose means are
/// `separation` apart. Exactly `round(n * fraud_rate)` rows (at least one of
/// each class) are fraud. Stored at 32 bits.
pub fn synth_generate(n: usize, fraud_rate: f64, separation: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Config(format!("synthetic dataset needs n >= 2, got {n}")));
    }
    if !(fraud_rate > 0.0 && fraud_rate < 1.0) {
        return Err(Error::Config(format!(
            "fraud rate must lie in (0, 1), got {fraud_rate}"
        )));
    }
    let n_fraud = ((n as f64 * fraud_rate).round() as usize).clamp(1, n - 1);
    let mut rng = seed::rng(seed);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_fraud)).collect();
    labels.shuffle(&mut rng);

    let offset = separation / (N_FEATURES as f64).sqrt();
    let mut values = Vec::with_capacity(n * N_FEATURES);
    for &label in &labels {
        let mean = if label == 1 { offset } else { 0.0 };
        for _ in 0..N_FEATURES {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push((mean + z) as f32);
        }
    }
    Dataset::from_f32(feature_names(), &values, labels, PrecisionFormat::SINGLE32)
}
