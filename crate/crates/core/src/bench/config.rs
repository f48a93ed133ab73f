use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::lowprec::{PrecisionKind, Rounding};
use crate::resample::{ResampleMode, DEFAULT_SMOTE_K};

/// Environment variable naming the default transaction CSV.
pub const DATA_ENV: &str = "FRAUDBENCH_DATA";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Csv {
        path: PathBuf,
    },
    Synth {
        n: usize,
        fraud_rate: f64,
        separation: f64,
        seed: u64,
    },
}

impl DataSource {
    pub fn default_synth() -> Self {
        DataSource::Synth {
            n: 20_000,
            fraud_rate: 0.01,
            separation: 3.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizeOrder {
    /// Store the training partition at reduced precision, then resample it.
    #[default]
    BeforeResample,
    /// Resample at 32 bits, then store the result at reduced precision.
    AfterResample,
}

impl FromStr for QuantizeOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "before_resample" | "before" => Ok(QuantizeOrder::BeforeResample),
            "after_resample" | "after" => Ok(QuantizeOrder::AfterResample),
            _ => Err(Error::Config(format!("unknown quantize_order `{s}`"))),
        }
    }
}

impl QuantizeOrder {
    pub fn name(self) -> &'static str {
        match self {
            QuantizeOrder::BeforeResample => "before_resample",
            QuantizeOrder::AfterResample => "after_resample",
        }
    }
}

/// One pipeline run. Text form is flat `key = value` lines; see
/// [`BenchConfig::set`] for the keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub data: DataSource,
    pub precision: PrecisionKind,
    pub rounding: Rounding,
    pub resample: ResampleMode,
    pub resample_seed: u64,
    pub forest: ForestConfig,
    pub split_fraction: f64,
    pub split_seed: u64,
    pub stratify: bool,
    pub repetitions: usize,
    pub quantize_order: QuantizeOrder,
    pub threshold: f64,
    pub output: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            data: DataSource::default_synth(),
            precision: PrecisionKind::Single32,
            rounding: Rounding::NearestEven,
            resample: ResampleMode::None,
            resample_seed: 0,
            forest: ForestConfig::default(),
            split_fraction: 0.7,
            split_seed: 0,
            stratify: false,
            repetitions: 3,
            quantize_order: QuantizeOrder::BeforeResample,
            threshold: 0.5,
            output: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value for `{key}`: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean for `{key}`: {value:?}"))),
    }
}

impl BenchConfig {
    /// Apply one `key = value` setting.
    ///
    /// Keys: `data` (CSV path or `synth`), `synth_n`, `synth_fraud_rate`,
    /// `synth_separation`, `synth_seed`, `precision`, `rounding`, `resample`,
    /// `smote_k`, `resample_seed`, `n_trees`, `max_depth` (`none` or a
    /// count), `min_samples_leaf`, `min_samples_split`, `features_per_split`
    /// (`sqrt`, `all` or a count), `criterion`, `bootstrap`, `forest_seed`,
    /// `split_fraction`, `split_seed`, `stratify`, `repetitions`,
    /// `quantize_order`, `threshold`, `output`. `seed` sets all three
    /// stage seeds at once.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "data" => {
                self.data = if value == "synth" {
                    match self.data {
                        DataSource::Synth { .. } => self.data.clone(),
                        DataSource::Csv { .. } => DataSource::default_synth(),
                    }
                } else {
                    DataSource::Csv {
                        path: PathBuf::from(value),
                    }
                }
            }
            k @ ("synth_n" | "synth_fraud_rate" | "synth_separation" | "synth_seed") => {
                if let DataSource::Csv { .. } = self.data {
                    self.data = DataSource::default_synth();
                }
                if let DataSource::Synth {
                    n,
                    fraud_rate,
                    separation,
                    seed,
                } = &mut self.data
                {
                    match k {
                        "synth_n" => *n = parse(k, value)?,
                        "synth_fraud_rate" => *fraud_rate = parse(k, value)?,
                        "synth_separation" => *separation = parse(k, value)?,
                        _ => *seed = parse(k, value)?,
                    }
                }
            }
            "precision" => self.precision = value.parse()?,
            "rounding" => self.rounding = value.parse()?,
            "resample" => {
                let k = match self.resample {
                    ResampleMode::Smote { k } => k,
                    _ => DEFAULT_SMOTE_K,
                };
                self.resample = match value.parse()? {
                    ResampleMode::Smote { .. } => ResampleMode::Smote { k },
                    other => other,
                };
            }
            "smote_k" => {
                let k = parse(key, value)?;
                // ignored unless SMOTE is selected
                if let ResampleMode::Smote { k: current } = &mut self.resample {
                    *current = k;
                }
            }
            "resample_seed" => self.resample_seed = parse(key, value)?,
            "n_trees" => self.forest.n_trees = parse(key, value)?,
            "max_depth" => {
                self.forest.max_depth = match value {
                    "none" | "unlimited" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "min_samples_leaf" => self.forest.min_samples_leaf = parse(key, value)?,
            "min_samples_split" => self.forest.min_samples_split = parse(key, value)?,
            "features_per_split" => self.forest.features_per_split = value.parse()?,
            "criterion" => self.forest.criterion = value.parse()?,
            "bootstrap" => self.forest.bootstrap = parse_bool(key, value)?,
            "forest_seed" => self.forest.seed = parse(key, value)?,
            "split_fraction" => self.split_fraction = parse(key, value)?,
            "split_seed" => self.split_seed = parse(key, value)?,
            "stratify" => self.stratify = parse_bool(key, value)?,
            "repetitions" => self.repetitions = parse(key, value)?,
            "quantize_order" => self.quantize_order = value.parse()?,
            "threshold" => self.threshold = parse(key, value)?,
            "output" => {
                self.output = match value {
                    "" | "none" => None,
                    v => Some(PathBuf::from(v)),
                }
            }
            "seed" => {
                let s: u64 = parse(key, value)?;
                self.split_seed = s;
                self.forest.seed = s;
                self.resample_seed = s;
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Apply every `key = value` line of `text`. `#` starts a comment.
    /// `smote_k` is applied after `resample` wherever it appears.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut deferred = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            if key.trim() == "smote_k" {
                deferred.push(value);
            } else {
                self.set(key, value)?;
            }
        }
        for value in deferred {
            self.set("smote_k", value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = BenchConfig::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.forest.validate()?;
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config("split_fraction must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("threshold must lie in [0, 1]".into()));
        }
        if let ResampleMode::Smote { k: 0 } = self.resample {
            return Err(Error::Config("smote_k must be at least 1".into()));
        }
        Ok(())
    }

    /// The `key = value` text that [`from_text`](Self::from_text) reads back
    /// to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.data {
            DataSource::Csv { path } => {
                let _ = writeln!(s, "data = {}", path.display());
            }
            DataSource::Synth {
                n,
                fraud_rate,
                separation,
                seed,
            } => {
                let _ = writeln!(s, "data = synth");
                let _ = writeln!(s, "synth_n = {n}");
                let _ = writeln!(s, "synth_fraud_rate = {fraud_rate}");
                let _ = writeln!(s, "synth_separation = {separation}");
                let _ = writeln!(s, "synth_seed = {seed}");
            }
        }
        let rounding = match self.rounding {
            Rounding::NearestEven => "nearest",
            Rounding::Truncate => "truncate",
        };
        let f = &self.forest;
        let lines = [
            ("precision", self.precision.to_string()),
            ("rounding", rounding.to_string()),
            ("resample", self.resample.name().to_string()),
            (
                "smote_k",
                match self.resample {
                    ResampleMode::Smote { k } => k,
                    _ => DEFAULT_SMOTE_K,
                }
                .to_string(),
            ),
            ("resample_seed", self.resample_seed.to_string()),
            ("n_trees", f.n_trees.to_string()),
            (
                "max_depth",
                f.max_depth.map_or("none".to_string(), |d| d.to_string()),
            ),
            ("min_samples_leaf", f.min_samples_leaf.to_string()),
            ("min_samples_split", f.min_samples_split.to_string()),
            ("features_per_split", f.features_per_split.to_string()),
            ("criterion", f.criterion.to_string()),
            ("bootstrap", f.bootstrap.to_string()),
            ("forest_seed", f.seed.to_string()),
            ("split_fraction", self.split_fraction.to_string()),
            ("split_seed", self.split_seed.to_string()),
            ("stratify", self.stratify.to_string()),
            ("repetitions", self.repetitions.to_string()),
            ("quantize_order", self.quantize_order.name().to_string()),
            ("threshold", self.threshold.to_string()),
            (
                "output",
                self.output
                    .as_ref()
                    .map_or("none".to_string(), |p| p.display().to_string()),
            ),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{Criterion, MaxFeatures};

    #[test]
    fn parses_keys() {
        let c = BenchConfig::from_text(
            "# sample\n\
             data = /tmp/creditcard.csv\n\
             precision = float16\n\
             resample = smote\n\
             smote_k = 3\n\
             n_trees = 10\n\
             max_depth = 8\n\
             features_per_split = all\n\
             criterion = entropy\n\
             bootstrap = false\n\
             quantize_order = after_resample\n\
             seed = 9\n",
        )
        .unwrap();
        assert_eq!(
            c.data,
            DataSource::Csv {
                path: "/tmp/creditcard.csv".into()
            }
        );
        assert_eq!(c.precision, PrecisionKind::Half16);
        assert_eq!(c.resample, ResampleMode::Smote { k: 3 });
        assert_eq!(c.forest.n_trees, 10);
        assert_eq!(c.forest.max_depth, Some(8));
        assert_eq!(c.forest.features_per_split, MaxFeatures::All);
        assert_eq!(c.forest.criterion, Criterion::Entropy);
        assert!(!c.forest.bootstrap);
        assert_eq!(c.quantize_order, QuantizeOrder::AfterResample);
        assert_eq!((c.split_seed, c.forest.seed, c.resample_seed), (9, 9, 9));
    }

    #[test]
    fn smote_k_before_mode() {
        let c = BenchConfig::from_text("smote_k = 2\nresample = smote\n").unwrap();
        assert_eq!(c.resample, ResampleMode::Smote { k: 2 });
    }

    #[test]
    fn text_round_trip() {
        let mut c = BenchConfig::default();
        c.set("precision", "bf16").unwrap();
        c.set("resample", "smote").unwrap();
        c.set("synth_n", "500").unwrap();
        c.set("output", "out.json").unwrap();
        assert_eq!(BenchConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BenchConfig::from_text("colour = red\n").is_err());
        assert!(BenchConfig::from_text("n_trees\n").is_err());
        assert!(BenchConfig::from_text("repetitions = 0\n").is_err());
        assert!(BenchConfig::from_text("threshold = 1.5\n").is_err());
        assert!(BenchConfig::from_text("bootstrap = maybe\n").is_err());
    }
}
