//! End-to-end benchmark runs and their comparison.
//!
//! A run prepares its data once (load, audit, split, store at the chosen
//! precision, rebalance the training side) and then times only training and
//! prediction, `repetitions` times over the identical prepared data.

mod clock;
mod config;
mod report;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use clock::{median, process_cpu_seconds, Clock, FakeClock, ProcessClock, Reading};
pub use config::{BenchConfig, DataSource, QuantizeOrder, DATA_ENV};
pub use report::{
    chart_bars, emit_report, emit_timing_chart, render_report, render_timing_chart, Bar,
    ReportFormat, CSV_HEADER,
};

use crate::data::{self, ClassStats, Dataset};
use crate::error::{Error, Result};
use crate::forest::{self, ForestModel};
use crate::lowprec::{PrecisionFormat, PrecisionKind};
use crate::metrics::{self, ConfusionMatrix, MetricsReport};
use crate::resample;

/// Time-reduction band (percent) that reduced-precision storage is
/// expected to land in; printed next to every measured reduction.
pub const REFERENCE_TIME_REDUCTION_PCT: (f64, f64) = (50.0, 60.0);

/// Data ready for the timed phases.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub stats: ClassStats,
    pub train: Dataset,
    pub test: Dataset,
    /// Footprint of the full feature matrix at the run's precision.
    pub matrix_bytes: usize,
    pub overflow_cells: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Median over repetitions, seconds of process CPU time.
    pub fit_cpu_seconds: f64,
    pub fit_wall_seconds: f64,
    pub predict_cpu_seconds: f64,
    pub predict_wall_seconds: f64,
    pub fit_cpu_samples: Vec<f64>,
    pub fit_wall_samples: Vec<f64>,
    pub predict_cpu_samples: Vec<f64>,
    pub predict_wall_samples: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub dataset: ClassStats,
    pub train_rows: usize,
    pub test_rows: usize,
    /// After resampling.
    pub train_class_counts: [usize; 2],
    pub test_class_counts: [usize; 2],
    pub matrix_bytes: usize,
    pub overflow_cells: usize,
    pub forest_nodes: usize,
    pub timing: Timing,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    /// `None` when the test partition holds a single class.
    pub roc_auc: Option<f64>,
}

impl BenchReport {
    pub fn label(&self) -> String {
        format!("{}/{}", self.config.precision, self.config.resample)
    }
}

fn load(config: &BenchConfig) -> Result<Dataset> {
    match &config.data {
        config::DataSource::Csv { path } => data::load_csv(path, PrecisionFormat::SINGLE32),
        config::DataSource::Synth {
            n,
            fraud_rate,
            separation,
            seed,
        } => data::synth_generate(*n, *fraud_rate, *separation, *seed),
    }
}

/// Everything before the timed region.
pub fn prepare(config: &BenchConfig) -> Result<Prepared> {
    config.validate()?;
    let full = load(config).map_err(Error::at("load"))?;
    prepare_dataset(config, &full)
}

/// [`prepare`] for an already loaded 32-bit dataset.
pub fn prepare_dataset(config: &BenchConfig, full: &Dataset) -> Result<Prepared> {
    let audit = data::validate(full);
    if !audit.is_clean() {
        return Err(Error::at("validate")(Error::Shape(
            "dataset has null or infinite cells".into(),
        )));
    }
    let stats = data::class_stats(full);

    let (train, test) = if config.stratify {
        data::split_stratified(full, config.split_fraction, config.split_seed)
    } else {
        data::split(full, config.split_fraction, config.split_seed)
    }
    .map_err(Error::at("split"))?;

    let precision = PrecisionFormat::of(config.precision);
    let (test, test_overflow) = test.to_precision(precision, config.rounding);
    let resample_at = |d: &Dataset| {
        resample::resample(d, config.resample, config.resample_seed).map_err(Error::at("resample"))
    };
    let (train, train_overflow, train_bytes) = match config.quantize_order {
        QuantizeOrder::BeforeResample => {
            let (q, overflow) = train.to_precision(precision, config.rounding);
            let bytes = q.features().bytes();
            (resample_at(&q)?, overflow.len(), bytes)
        }
        QuantizeOrder::AfterResample => {
            let bytes = train.n() * train.n_features() * precision.cell_bytes();
            let r = resample_at(&train)?;
            let (q, overflow) = r.to_precision(precision, config.rounding);
            (q, overflow.len(), bytes)
        }
    };
    if train_overflow + test_overflow.len() > 0 {
        log::warn!(
            "{} cell(s) overflowed to infinity at {}",
            train_overflow + test_overflow.len(),
            precision
        );
    }
    Ok(Prepared {
        stats,
        matrix_bytes: train_bytes + test.features().bytes(),
        overflow_cells: train_overflow + test_overflow.len(),
        train,
        test,
    })
}

pub fn run_pipeline(config: &BenchConfig) -> Result<BenchReport> {
    run_pipeline_with_clock(config, &ProcessClock::new())
}

pub fn run_pipeline_with_clock(config: &BenchConfig, clock: &dyn Clock) -> Result<BenchReport> {
    let prepared = prepare(config)?;
    run_prepared(config, &prepared, clock)
}

/// The timed phases plus scoring. `clock` is read exactly four times per
/// repetition: around training and around prediction.
pub fn run_prepared(config: &BenchConfig, prepared: &Prepared, clock: &dyn Clock) -> Result<BenchReport> {
    config.validate()?;
    let mut timing = Timing::default();
    let mut result: Option<(ForestModel, Vec<f64>)> = None;
    for _ in 0..config.repetitions {
        let t0 = clock.read();
        let model = forest::train_forest(&prepared.train, &config.forest);
        let t1 = clock.read();
        let model = model.map_err(Error::at("train"))?;

        let t2 = clock.read();
        let scores = model.predict_proba_dataset(&prepared.test);
        let t3 = clock.read();

        let fit = t1.since(t0);
        let predict = t3.since(t2);
        timing.fit_cpu_samples.push(fit.cpu);
        timing.fit_wall_samples.push(fit.wall);
        timing.predict_cpu_samples.push(predict.cpu);
        timing.predict_wall_samples.push(predict.wall);
        if result.is_none() {
            result = Some((model, scores));
        }
    }
    timing.fit_cpu_seconds = median(&timing.fit_cpu_samples);
    timing.fit_wall_seconds = median(&timing.fit_wall_samples);
    timing.predict_cpu_seconds = median(&timing.predict_cpu_samples);
    timing.predict_wall_seconds = median(&timing.predict_wall_samples);

    let (model, scores) = result.expect("at least one repetition");
    let actual = prepared.test.labels();
    let predicted = forest::labels_from_scores(&scores, config.threshold).map_err(Error::at("predict"))?;
    let confusion = metrics::confusion(actual, &predicted).map_err(Error::at("metrics"))?;
    let roc_auc = match metrics::roc_auc(actual, &scores) {
        Ok(a) => Some(a),
        Err(Error::SingleClass { .. }) => None,
        Err(e) => return Err(Error::at("metrics")(e)),
    };

    Ok(BenchReport {
        config: config.clone(),
        dataset: prepared.stats.clone(),
        train_rows: prepared.train.n(),
        test_rows: prepared.test.n(),
        train_class_counts: prepared.train.class_counts(),
        test_class_counts: prepared.test.class_counts(),
        matrix_bytes: prepared.matrix_bytes,
        overflow_cells: prepared.overflow_cells,
        forest_nodes: model.trees.iter().map(|t| t.nodes().len()).sum(),
        timing,
        metrics: metrics::derive_metrics(&confusion),
        confusion,
        roc_auc,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub baseline: BenchReport,
    pub candidate: BenchReport,
    /// Candidate minus baseline.
    pub accuracy_delta: Option<f64>,
    /// `100 * (1 - candidate / baseline)` on median fit CPU time.
    pub time_reduction_pct: Option<f64>,
    pub wall_time_reduction_pct: Option<f64>,
    /// Baseline bytes over candidate bytes.
    pub memory_ratio: f64,
}

fn reduction_pct(baseline: f64, candidate: f64) -> Option<f64> {
    (baseline > 0.0).then(|| 100.0 * (1.0 - candidate / baseline))
}

pub fn compare(baseline: &BenchReport, candidate: &BenchReport) -> Result<CompareReport> {
    let (a, b) = (&baseline.config, &candidate.config);
    if a.data != b.data {
        return Err(Error::IncomparableRuns("different data sources".into()));
    }
    if a.split_seed != b.split_seed || a.split_fraction != b.split_fraction || a.stratify != b.stratify {
        return Err(Error::IncomparableRuns("different train/test splits".into()));
    }
    let accuracy_delta = match (candidate.metrics.accuracy, baseline.metrics.accuracy) {
        (Some(c), Some(b)) => Some(c - b),
        _ => None,
    };
    Ok(CompareReport {
        baseline: baseline.clone(),
        candidate: candidate.clone(),
        accuracy_delta,
        time_reduction_pct: reduction_pct(
            baseline.timing.fit_cpu_seconds,
            candidate.timing.fit_cpu_seconds,
        ),
        wall_time_reduction_pct: reduction_pct(
            baseline.timing.fit_wall_seconds,
            candidate.timing.fit_wall_seconds,
        ),
        memory_ratio: baseline.matrix_bytes as f64 / candidate.matrix_bytes as f64,
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "—".to_string(), |v| format!("{v:.digits$}"))
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (b, c) = (&self.baseline, &self.candidate);
        writeln!(f, "{:<26}{:>16}{:>16}", "", b.label(), c.label())?;
        writeln!(
            f,
            "{:<26}{:>16}{:>16}",
            "accuracy",
            opt(b.metrics.accuracy, 9),
            opt(c.metrics.accuracy, 9)
        )?;
        writeln!(
            f,
            "{:<26}{:>16}{:>16}",
            "fraud precision",
            opt(b.metrics.precision, 6),
            opt(c.metrics.precision, 6)
        )?;
        writeln!(
            f,
            "{:<26}{:>16}{:>16}",
            "fraud recall",
            opt(b.metrics.recall, 6),
            opt(c.metrics.recall, 6)
        )?;
        writeln!(
            f,
            "{:<26}{:>16}{:>16}",
            "roc auc",
            opt(b.roc_auc, 6),
            opt(c.roc_auc, 6)
        )?;
        writeln!(
            f,
            "{:<26}{:>16.3}{:>16.3}",
            "fit cpu seconds", b.timing.fit_cpu_seconds, c.timing.fit_cpu_seconds
        )?;
        writeln!(
            f,
            "{:<26}{:>16.3}{:>16.3}",
            "fit wall seconds", b.timing.fit_wall_seconds, c.timing.fit_wall_seconds
        )?;
        writeln!(
            f,
            "{:<26}{:>16}{:>16}",
            "matrix bytes", b.matrix_bytes, c.matrix_bytes
        )?;
        writeln!(f)?;
        writeln!(f, "accuracy delta            {}", opt(self.accuracy_delta, 9))?;
        let (lo, hi) = REFERENCE_TIME_REDUCTION_PCT;
        writeln!(
            f,
            "fit time reduction        {}% measured (reference band {lo:.0}-{hi:.0}%)",
            opt(self.time_reduction_pct, 1)
        )?;
        writeln!(
            f,
            "wall time reduction       {}%",
            opt(self.wall_time_reduction_pct, 1)
        )?;
        writeln!(f, "memory ratio              {:.3}", self.memory_ratio)
    }
}

/// Convenience for comparing a 32-bit baseline against another precision
/// with otherwise identical settings.
pub fn with_precision(config: &BenchConfig, precision: PrecisionKind) -> BenchConfig {
    BenchConfig {
        precision,
        ..config.clone()
    }
}
