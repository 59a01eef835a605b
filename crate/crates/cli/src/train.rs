use std::path::PathBuf;

use anyhow::Result;
use runoff_core::architectures::{ModelKind, ModelSpec};

use crate::config::{pick_required, FileConfig};
use crate::pipeline::{
    load_dataset, median_cells, print_table, resolve_run, train_and_report, DataArgs, SpecArgs,
    TrainKnobs, METRIC_COLUMNS,
};

#[derive(clap::Args)]
pub struct Args {
    /// Architecture: cnn | lstm-hour | lstm-dph | cnn-s-lstm | cnn-p-lstm
    #[arg(long)]
    arch: Option<String>,
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
    let kind = ModelKind::parse(&pick_required::<String>(args.arch, &file, "arch")?)?;
    let rc = resolve_run(&file, args.data, args.spec, args.knobs, args.out)?;

    let ds = load_dataset(&rc.data, rc.years, kind.needs().2, None)?;
    let spec = rc.overrides.apply(ModelSpec::new(kind, ds.raw.n_vars()));
    spec.validate()?;

    let run = train_and_report(&spec, &ds, &rc.train, rc.stride, &rc.out)?;
    let best = run.outcome.best_trial();
    println!(
        "{}: {} trial(s) trained, {} parameters each; best trial {} \
         (val loss {:.6e} at epoch {})",
        kind.label(),
        run.outcome.trials.len(),
        best.checkpoint.instantiate()?.param_count(),
        best.trial,
        best.checkpoint.best_val_loss,
        best.checkpoint.epoch_of_best,
    );
    println!("artifacts under {}", rc.out.root().display());
    println!();

    let mut header = vec!["period"];
    header.extend(METRIC_COLUMNS);
    let rows: Vec<Vec<String>> = run
        .report
        .medians
        .iter()
        .map(|m| {
            let mut row = vec![format!("{} (median)", m.period.label())];
            row.extend(median_cells(m));
            row
        })
        .collect();
    print_table(&header, &rows);
    Ok(())
}
