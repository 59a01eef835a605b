//! Shared plumbing for `train`, `evaluate` and `compare`: dataset loading,
//! the fixed output-directory layout, the train→checkpoint→score pipeline of
//! one architecture, and table printing.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use runoff_core::architectures::ModelSpec;
use runoff_core::data::{
    ingest_csv, split_chronological, FlowBands, NormStats, SeriesTable, Split, WindowSet,
};
use runoff_core::evaluation::{
    assemble_report, data_fingerprint, evaluate_checkpoint, median_predictions, write_predictions,
    EvalData, MetricsReport, Period,
};
use runoff_core::training::{
    run_trials, save_checkpoint, write_loss_log, TrainConfig, TrialsOutcome,
};

use crate::config::{pick, pick_opt, FileConfig};

/// Fixed layout under one output root, so downstream tooling can rely on the
/// paths: `checkpoints/`, `logs/`, `reports/`, `predictions/`.
pub struct OutDirs {
    root: PathBuf,
}

impl OutDirs {
    pub fn create(root: PathBuf) -> Result<OutDirs> {
        let dirs = OutDirs { root };
        for sub in [
            dirs.checkpoints(),
            dirs.logs(),
            dirs.reports(),
            dirs.predictions(),
        ] {
            std::fs::create_dir_all(&sub)
                .with_context(|| format!("creating output directory {}", sub.display()))?;
        }
        Ok(dirs)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn logs(&self) -> PathBuf {
        self.root.join("logs")
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn predictions(&self) -> PathBuf {
        self.root.join("predictions")
    }
}

/// Flags shared by every command that reads a dataset.
#[derive(clap::Args)]
pub struct DataArgs {
    /// Hourly dataset CSV with a trailing `flow` column
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Leading whole years fitted on
    #[arg(long)]
    pub train_years: Option<usize>,
    /// Years after the training span, used for early stopping
    #[arg(long)]
    pub val_years: Option<usize>,
    /// Trailing held-out years
    #[arg(long)]
    pub test_years: Option<usize>,
}

/// Architecture-shape overrides; defaults are the full-scale values.
#[derive(clap::Args)]
pub struct SpecArgs {
    /// First conv layer's channel count (doubled at each conv layer)
    #[arg(long)]
    pub nchf: Option<usize>,
    /// LSTM hidden/cell state length
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Long hourly window length
    #[arg(long)]
    pub long_len: Option<usize>,
    /// Short hourly window length
    #[arg(long)]
    pub short_len: Option<usize>,
    /// Daily window length (days)
    #[arg(long)]
    pub daily_len: Option<usize>,
}

/// Training-protocol knobs.
#[derive(clap::Args)]
pub struct TrainKnobs {
    /// Independent trainings per architecture
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed; trial k trains with seed ^ k
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Consecutive non-improving epochs tolerated before stopping
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Adam learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// Keep every stride-th training/validation sample (1 = all)
    #[arg(long)]
    pub stride: Option<usize>,
    /// Concurrent trials (trials stay individually seeded either way)
    #[arg(long)]
    pub parallel_trials: Option<usize>,
}

/// Everything resolved and validated before any compute starts.
pub struct RunConfig {
    pub data: PathBuf,
    pub years: (usize, usize, usize),
    pub overrides: SpecOverrides,
    pub train: TrainConfig,
    pub stride: usize,
    pub out: OutDirs,
}

pub struct SpecOverrides {
    nchf: Option<usize>,
    hidden: Option<usize>,
    long_len: Option<usize>,
    short_len: Option<usize>,
    daily_len: Option<usize>,
}

impl SpecOverrides {
    pub fn apply(&self, mut spec: ModelSpec) -> ModelSpec {
        if let Some(v) = self.nchf {
            spec.nchf = v;
        }
        if let Some(v) = self.hidden {
            spec.hidden_size = v;
        }
        if let Some(v) = self.long_len {
            spec.long_len = v;
        }
        if let Some(v) = self.short_len {
            spec.short_len = v;
        }
        if let Some(v) = self.daily_len {
            spec.daily_len = v;
        }
        spec
    }
}

pub fn resolve_run(
    file: &FileConfig,
    data: DataArgs,
    spec: SpecArgs,
    knobs: TrainKnobs,
    out_flag: Option<PathBuf>,
) -> Result<RunConfig> {
    let defaults = TrainConfig::default();
    let mut train = TrainConfig {
        batch_size: pick(knobs.batch_size, file, "batch-size", defaults.batch_size)?,
        patience: pick(knobs.patience, file, "patience", defaults.patience)?,
        max_epochs: pick(knobs.max_epochs, file, "max-epochs", defaults.max_epochs)?,
        n_trials: pick(knobs.trials, file, "trials", defaults.n_trials)?,
        base_seed: pick(knobs.seed, file, "seed", defaults.base_seed)?,
        // One worker preserves the strictest determinism story, although
        // trials are individually seeded and scheduling-independent anyway.
        threads: pick(knobs.parallel_trials, file, "parallel-trials", 1)?,
        ..defaults
    };
    train.adam.lr = pick(knobs.lr, file, "lr", train.adam.lr)?;
    train.validate()?;

    let stride = pick(knobs.stride, file, "stride", 1)?;
    if stride == 0 {
        bail!("--stride must be at least 1");
    }
    let years = (
        pick(data.train_years, file, "train-years", 9)?,
        pick(data.val_years, file, "val-years", 2)?,
        pick(data.test_years, file, "test-years", 2)?,
    );
    Ok(RunConfig {
        data: crate::config::pick_required(data.data, file, "data")?,
        years,
        overrides: SpecOverrides {
            nchf: pick_opt(spec.nchf, file, "nchf")?,
            hidden: pick_opt(spec.hidden, file, "hidden")?,
            long_len: pick_opt(spec.long_len, file, "long-len")?,
            short_len: pick_opt(spec.short_len, file, "short-len")?,
            daily_len: pick_opt(spec.daily_len, file, "daily-len")?,
        },
        train,
        stride,
        out: OutDirs::create(crate::config::pick_out_root(out_flag, file)?)?,
    })
}

/// A dataset with everything derived from it: train-span z-scores, the
/// normalized hourly/daily tables, flow-band thresholds fitted on the whole
/// observed record, and the chronological split.
pub struct Dataset {
    pub raw: SeriesTable,
    pub normalized: SeriesTable,
    pub daily: Option<SeriesTable>,
    pub stats: NormStats,
    pub bands: FlowBands,
    pub split: Split,
}

impl Dataset {
    pub fn eval_data(&self) -> EvalData<'_> {
        EvalData {
            raw: &self.raw,
            normalized: &self.normalized,
            daily: self.daily.as_ref(),
            bands: self.bands,
            split: &self.split,
        }
    }
}

/// Reads and prepares a dataset. `stats` supplies training-time z-scores when
/// scoring an existing checkpoint; pass `None` to fit fresh ones on the
/// training span.
pub fn load_dataset(
    path: &Path,
    years: (usize, usize, usize),
    needs_daily: bool,
    stats: Option<&NormStats>,
) -> Result<Dataset> {
    let raw = ingest_csv(path).with_context(|| format!("reading dataset {}", path.display()))?;
    let split = split_chronological(&raw, years.0, years.1, years.2)?;
    let stats = match stats {
        Some(s) => s.clone(),
        None => NormStats::fit(&raw, split.train.clone())?,
    };
    let normalized = stats.normalize(&raw)?;
    let daily = if needs_daily {
        let (table, trimmed) = normalized.aggregate_daily(&[])?;
        if trimmed > 0 {
            eprintln!("warning: dropped {trimmed} trailing hours short of a full day from the daily table");
        }
        Some(table)
    } else {
        None
    };
    let bands = FlowBands::fit(raw.flow().as_slice().expect("flow row is contiguous"))?;
    Ok(Dataset {
        raw,
        normalized,
        daily,
        stats,
        bands,
        split,
    })
}

pub struct ArchRun {
    pub outcome: TrialsOutcome,
    pub report: MetricsReport,
}

/// Trains one architecture, saves its artifacts under the fixed layout, and
/// scores every surviving trial on all three periods.
pub fn train_and_report(
    spec: &ModelSpec,
    ds: &Dataset,
    train_cfg: &TrainConfig,
    stride: usize,
    out: &OutDirs,
) -> Result<ArchRun> {
    let label = spec.kind.label();
    let mut train_set = WindowSet::build(
        &ds.normalized,
        ds.daily.as_ref(),
        spec,
        ds.split.train.clone(),
    )?;
    let mut val_set = WindowSet::build(
        &ds.normalized,
        ds.daily.as_ref(),
        spec,
        ds.split.val.clone(),
    )?;
    train_set.thin(stride);
    val_set.thin(stride);
    if train_set.is_empty() || val_set.is_empty() {
        bail!(
            "no admissible samples: train span yields {}, validation span {} \
             (windows need {} hours of history)",
            train_set.len(),
            val_set.len(),
            spec.long_len
                .max(spec.short_len)
                .max((spec.daily_len.max(1) - 1) * 24 + 1),
        );
    }

    let outcome = run_trials(spec, &ds.stats, &train_set, &val_set, train_cfg)?;
    for (k, msg) in &outcome.failures {
        eprintln!("warning: {label} trial {k} aborted: {msg}");
    }
    for t in &outcome.trials {
        let path = out
            .checkpoints()
            .join(format!("{label}-trial{}.ckpt", t.trial));
        save_checkpoint(&t.checkpoint, &path)?;
    }
    write_loss_log(
        &outcome.trials,
        &out.logs().join(format!("{label}-losses.csv")),
    )?;

    let eval_data = ds.eval_data();
    let mut evals = Vec::new();
    for t in &outcome.trials {
        evals.push(evaluate_checkpoint(&t.checkpoint, &eval_data, t.trial)?);
    }
    let report = assemble_report(label, &evals, &data_fingerprint(&ds.raw));
    report.write_csv(&out.reports().join(format!("{label}-metrics.csv")))?;
    report.write_json(&out.reports().join(format!("{label}-metrics.json")))?;

    for eval in &evals {
        for p in &eval.periods {
            let name = format!("{label}-trial{}-{}.csv", eval.trial, p.period.label());
            write_predictions(p, &ds.raw, &out.predictions().join(name))?;
        }
    }
    for period in Period::ALL {
        if let Some(med) = median_predictions(&evals, period)? {
            let name = format!("{label}-median-{}.csv", period.label());
            write_predictions(&med, &ds.raw, &out.predictions().join(name))?;
        }
    }
    Ok(ArchRun { outcome, report })
}

pub fn fmt_metric(v: f64) -> String {
    format!("{v:.4}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_metric).unwrap_or_else(|| "-".to_string())
}

/// Left-aligned fixed-width table on stdout.
pub fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        println!("{}", padded.join("  ").trim_end());
    };
    line(header.iter().map(|s| s.to_string()).collect());
    for row in rows {
        line(row.clone());
    }
}

pub const METRIC_COLUMNS: [&str; 7] = [
    "rmse",
    "r",
    "nse",
    "rmse_low",
    "rmse_middle",
    "rmse_high",
    "rmse_peak",
];

/// The seven metric cells of one median row, formatted for display.
pub fn median_cells(m: &runoff_core::evaluation::MedianMetrics) -> Vec<String> {
    vec![
        fmt_metric(m.rmse),
        fmt_metric(m.r),
        fmt_metric(m.nse),
        fmt_opt(m.bands.low),
        fmt_opt(m.bands.middle),
        fmt_opt(m.bands.high),
        fmt_opt(m.bands.peak),
    ]
}
