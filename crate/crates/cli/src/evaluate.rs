use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use runoff_core::evaluation::{
    assemble_report, data_fingerprint, evaluate_checkpoint, lag_correlation, write_predictions,
};
use runoff_core::training::load_checkpoint;

use crate::config::{pick, pick_opt, pick_out_root, pick_required, FileConfig};
use crate::pipeline::{
    fmt_metric, fmt_opt, load_dataset, print_table, DataArgs, OutDirs, METRIC_COLUMNS,
};

#[derive(clap::Args)]
pub struct Args {
    /// Checkpoint written by `train`
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Also write the flow-vs-driver lag-correlation curve for this variable
    #[arg(long)]
    lag_corr: Option<String>,
    /// Largest lag (hours) for --lag-corr
    #[arg(long)]
    max_lag: Option<usize>,
    /// Output root (default $RUNOFF_OUT_DIR, else ./runs)
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// `key = value` defaults for any of the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let ckpt_path: PathBuf = pick_required(args.checkpoint, &file, "checkpoint")?;
    let data_path: PathBuf = pick_required(args.data.data, &file, "data")?;
    let years = (
        pick(args.data.train_years, &file, "train-years", 9)?,
        pick(args.data.val_years, &file, "val-years", 2)?,
        pick(args.data.test_years, &file, "test-years", 2)?,
    );
    let lag_var = pick_opt(args.lag_corr, &file, "lag-corr")?;
    let max_lag = pick(args.max_lag, &file, "max-lag", 24)?;
    let out = OutDirs::create(pick_out_root(args.out, &file)?)?;

    let ckpt = load_checkpoint(&ckpt_path)
        .with_context(|| format!("loading checkpoint {}", ckpt_path.display()))?;
    // Normalize with the z-scores the checkpoint was trained under, never
    // with stats refitted on the evaluation dataset.
    let ds = load_dataset(
        &data_path,
        years,
        ckpt.spec.kind.needs().2,
        Some(&ckpt.stats),
    )?;
    let label = ckpt.spec.kind.label();

    let eval = evaluate_checkpoint(&ckpt, &ds.eval_data(), 0)?;
    let report = assemble_report(
        label,
        std::slice::from_ref(&eval),
        &data_fingerprint(&ds.raw),
    );
    report.write_csv(&out.reports().join(format!("{label}-eval-metrics.csv")))?;
    report.write_json(&out.reports().join(format!("{label}-eval-metrics.json")))?;
    for p in &eval.periods {
        let name = format!("{label}-eval-{}.csv", p.period.label());
        write_predictions(p, &ds.raw, &out.predictions().join(name))?;
    }

    println!(
        "{label} checkpoint (trained with seed {}, best epoch {}) on {}:",
        ckpt.seed,
        ckpt.epoch_of_best,
        data_path.display(),
    );
    let mut header = vec!["period"];
    header.extend(METRIC_COLUMNS);
    let rows: Vec<Vec<String>> = eval
        .periods
        .iter()
        .map(|p| {
            vec![
                p.period.label().to_string(),
                fmt_metric(p.metrics.rmse),
                fmt_metric(p.metrics.r),
                fmt_metric(p.metrics.nse),
                fmt_opt(p.metrics.bands.low),
                fmt_opt(p.metrics.bands.middle),
                fmt_opt(p.metrics.bands.high),
                fmt_opt(p.metrics.bands.peak),
            ]
        })
        .collect();
    print_table(&header, &rows);
    println!("reports under {}", out.reports().display());

    if let Some(var) = lag_var {
        write_lag_curve(&ds, &var, max_lag, &out)?;
    }
    Ok(())
}

/// Correlates observed flow with `var` delayed by 0..=max_lag hours and
/// writes the curve as `lag,r`.
fn write_lag_curve(
    ds: &crate::pipeline::Dataset,
    var: &str,
    max_lag: usize,
    out: &OutDirs,
) -> Result<()> {
    let idx = ds
        .raw
        .names()
        .iter()
        .position(|n| n == var)
        .ok_or_else(|| {
            anyhow!(
                "variable {var:?} not in dataset; have: {}",
                ds.raw.names().join(", ")
            )
        })?;
    let flow = ds.raw.flow().to_vec();
    let driver = ds.raw.inputs().row(idx).to_vec();
    let curve = lag_correlation(&flow, &driver, max_lag)?;

    let path = out.reports().join(format!("lag-{var}.csv"));
    let mut text = String::from("lag,r\n");
    for (lag, r) in curve.iter().enumerate() {
        let cell = r.map(|v| v.to_string()).unwrap_or_default();
        text.push_str(&format!("{lag},{cell}\n"));
    }
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;

    let peak = curve
        .iter()
        .enumerate()
        .filter_map(|(lag, r)| r.map(|v| (lag, v)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite correlations"));
    if let Some((lag, r)) = peak {
        println!(
            "lag correlation of flow vs {var}: peak r = {r:.3} at {lag} h ({})",
            path.display()
        );
    }
    Ok(())
}
