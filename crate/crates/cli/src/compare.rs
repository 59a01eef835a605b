use std::path::PathBuf;

use anyhow::{bail, Result};
use runoff_core::architectures::{ModelKind, ModelSpec};
use runoff_core::evaluation::Period;

use crate::config::FileConfig;
use crate::pipeline::{
    load_dataset, median_cells, print_table, resolve_run, train_and_report, DataArgs, SpecArgs,
    TrainKnobs, METRIC_COLUMNS,
};

#[derive(clap::Args)]
pub struct Args {
    /// Architectures to train, comma-separated (default: all five)
    #[arg(long, value_delimiter = ',')]
    archs: Option<Vec<String>>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    knobs: TrainKnobs,
    /// Output root (default $RUNOFF_OUT_DIR, else ./runs)
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// `key = value` defaults for any of the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let kinds: Vec<ModelKind> =
        match crate::config::pick_opt(args.archs.map(|v| v.join(",")), &file, "archs")? {
            Some(list) => list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| ModelKind::parse(s.trim()))
                .collect::<runoff_core::Result<_>>()?,
            None => ModelKind::ALL.to_vec(),
        };
    if kinds.is_empty() {
        bail!("--archs lists no architectures");
    }
    let rc = resolve_run(&file, args.data, args.spec, args.knobs, args.out)?;

    let needs_daily = kinds.iter().any(|k| k.needs().2);
    let ds = load_dataset(&rc.data, rc.years, needs_daily, None)?;
    // Validate every spec before training the first one.
    let specs: Vec<ModelSpec> = kinds
        .iter()
        .map(|&kind| {
            let spec = rc.overrides.apply(ModelSpec::new(kind, ds.raw.n_vars()));
            spec.validate()?;
            Ok(spec)
        })
        .collect::<runoff_core::Result<_>>()?;

    let mut medians: Vec<(ModelKind, Vec<runoff_core::evaluation::MedianMetrics>)> = Vec::new();
    for spec in &specs {
        eprintln!("training {} ...", spec.kind.label());
        let run = train_and_report(spec, &ds, &rc.train, rc.stride, &rc.out)?;
        medians.push((spec.kind, run.report.medians));
    }

    // Consolidated median table, one row per architecture and period.
    let path = rc.out.reports().join("compare.csv");
    let mut text = format!("model,period,{}\n", METRIC_COLUMNS.join(","));
    for (kind, rows) in &medians {
        for m in rows {
            let bands = [m.bands.low, m.bands.middle, m.bands.high, m.bands.peak]
                .map(|v| v.map(|x| x.to_string()).unwrap_or_default());
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                kind.label(),
                m.period.label(),
                m.rmse,
                m.r,
                m.nse,
                bands.join(","),
            ));
        }
    }
    std::fs::write(&path, text)?;

    println!(
        "\ntest-period medians over {} trial(s) per architecture:",
        rc.train.n_trials
    );
    let mut header = vec!["model"];
    header.extend(METRIC_COLUMNS);
    let rows: Vec<Vec<String>> = medians
        .iter()
        .filter_map(|(kind, rows)| {
            let m = rows.iter().find(|m| m.period == Period::Test)?;
            let mut row = vec![kind.label().to_string()];
            row.extend(median_cells(m));
            Some(row)
        })
        .collect();
    print_table(&header, &rows);
    println!("\nfull table: {}", path.display());
    Ok(())
}
