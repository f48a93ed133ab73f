use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fraudbench::bench::{
    self, compare, emit_report, emit_timing_chart, render_report, BenchConfig, BenchReport,
    ReportFormat, DATA_ENV,
};
use fraudbench::data::{self, class_stats, validate};
use fraudbench::PrecisionFormat;

#[derive(Parser)]
#[command(name = "fraudbench", version, about = "Reduced-precision fraud-detection benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit a transaction CSV: per-column non-null counts and dtypes.
    Validate {
        csv: PathBuf,
        /// Storage precision to audit at.
        #[arg(long, default_value = "single32")]
        precision: PrecisionFormat,
    },
    /// Class balance and Amount/Time summary of a transaction CSV.
    Stats {
        csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic two-cluster dataset with the transaction schema.
    Synth {
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        fraud_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3.0)]
        separation: f64,
    },
    /// Run the full pipeline and report timings and metrics.
    Bench(BenchArgs),
    /// Compare two JSON reports written by `bench`.
    Compare {
        baseline: PathBuf,
        candidate: PathBuf,
        /// Also write the comparison as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Draw a bar chart of fit times from JSON reports.
    Chart {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path, or `synth`.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    precision: Option<String>,
    /// none | under | over | smote
    #[arg(long)]
    resample: Option<String>,
    #[arg(long)]
    smote_k: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    /// Seed for split, resampling and forest.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// before_resample | after_resample
    #[arg(long)]
    quantize_order: Option<String>,
    #[arg(long)]
    stratify: bool,
    /// Any config key, as KEY=VALUE. Applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// JSON report path (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    text: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

impl BenchArgs {
    fn resolve(&self) -> Result<BenchConfig> {
        let mut cfg = BenchConfig::default();
        if let Ok(path) = std::env::var(DATA_ENV) {
            cfg.set("data", &path)?;
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("config: reading {}", path.display()))?;
            cfg.apply_text(&text).context("config")?;
        }
        let flags: [(&str, Option<String>); 8] = [
            ("data", self.data.clone()),
            ("precision", self.precision.clone()),
            ("resample", self.resample.clone()),
            ("smote_k", self.smote_k.map(|v| v.to_string())),
            ("n_trees", self.trees.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("repetitions", self.repetitions.map(|v| v.to_string())),
            ("quantize_order", self.quantize_order.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v).context("config")?;
            }
        }
        if self.stratify {
            cfg.stratify = true;
        }
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("config: --set expects KEY=VALUE, got {kv:?}");
            };
            cfg.set(k, v).context("config")?;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate().context("config")?;
        Ok(cfg)
    }
}

fn read_report(path: &Path) -> Result<BenchReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { csv, precision } => {
            let d = data::load_csv(&csv, precision).context("load")?;
            let report = validate(&d);
            print!("{report}");
            if !report.is_clean() {
                bail!("validate: dataset has null or infinite cells");
            }
        }
        Command::Stats { csv, json } => {
            let d = data::load_csv(&csv, PrecisionFormat::SINGLE32).context("load")?;
            let stats = class_stats(&d);
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                print!("{stats}");
            }
        }
        Command::Synth {
            out,
            n,
            fraud_rate,
            seed,
            separation,
        } => {
            let d = data::synth_generate(n, fraud_rate, separation, seed).context("synth")?;
            let file = File::create(&out).with_context(|| format!("synth: creating {}", out.display()))?;
            d.write_csv(BufWriter::new(file)).context("synth")?;
            eprintln!("wrote {} rows ({} fraud) to {}", d.n(), d.class_counts()[1], out.display());
        }
        Command::Bench(args) => {
            let cfg = args.resolve()?;
            log::info!("running:\n{}", cfg.to_text());
            let report = bench::run_pipeline(&cfg)?;
            print!("{}", render_report(&report, ReportFormat::Text)?);
            if let Some(path) = &cfg.output {
                emit_report(&report, ReportFormat::Json, path).context("report")?;
            }
            if let Some(path) = &args.csv {
                emit_report(&report, ReportFormat::Csv, path).context("report")?;
            }
            if let Some(path) = &args.text {
                emit_report(&report, ReportFormat::Text, path).context("report")?;
            }
            if let Some(path) = &args.svg {
                emit_timing_chart(std::slice::from_ref(&report), path).context("chart")?;
            }
        }
        Command::Compare {
            baseline,
            candidate,
            json,
        } => {
            let a = read_report(&baseline).context("compare")?;
            let b = read_report(&candidate).context("compare")?;
            let cmp = compare(&a, &b).context("compare")?;
            print!("{cmp}");
            if let Some(path) = json {
                std::fs::write(&path, serde_json::to_string_pretty(&cmp)? + "\n")
                    .with_context(|| format!("compare: writing {}", path.display()))?;
            }
        }
        Command::Chart { reports, out } => {
            let reports = reports
                .iter()
                .map(|p| read_report(p))
                .collect::<Result<Vec<_>>>()
                .context("chart")?;
            emit_timing_chart(&reports, &out).context("chart")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
