use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use runoff_core::architectures::ModelKind;
use runoff_core::check::{
    check_activation, check_architecture, check_conv, check_dense, check_lstm_cell, check_pool,
    CheckOutcome, CheckSettings,
};
use runoff_core::layers::{ActKind, PoolKind};

use crate::config::{pick, pick_opt, FileConfig};
use crate::pipeline::print_table;

#[derive(clap::Args)]
pub struct Args {
    /// Architecture to check end to end, or `all`
    #[arg(long, default_value = "all")]
    arch: String,
    /// Randomized instances per component
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum accepted relative error
    #[arg(long)]
    tol: Option<f64>,
    /// Negative control: corrupt the named component's analytic gradients so
    /// its check must fail
    #[arg(long, hide = true)]
    corrupt: Option<String>,
    /// `key = value` defaults for any of the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let defaults = CheckSettings::default();
    let settings = CheckSettings {
        trials: pick(args.trials, &file, "trials", defaults.trials)?,
        seed: pick(args.seed, &file, "seed", defaults.seed)?,
        tol: pick(args.tol, &file, "tol", defaults.tol)?,
        ..defaults
    };
    let corrupt = pick_opt(args.corrupt, &file, "corrupt")?;
    let archs: Vec<ModelKind> = if args.arch == "all" {
        ModelKind::ALL.to_vec()
    } else {
        vec![ModelKind::parse(&args.arch)?]
    };

    type Runner = Box<dyn Fn(&CheckSettings) -> runoff_core::Result<CheckOutcome>>;
    let mut components: Vec<(String, Runner)> = vec![
        (
            "conv1d".into(),
            Box::new(|s: &CheckSettings| Ok(check_conv(s))),
        ),
        (
            "pool1d/max".into(),
            Box::new(|s: &CheckSettings| Ok(check_pool(PoolKind::Max, s))),
        ),
        (
            "pool1d/average".into(),
            Box::new(|s: &CheckSettings| Ok(check_pool(PoolKind::Average, s))),
        ),
        (
            "dense".into(),
            Box::new(|s: &CheckSettings| Ok(check_dense(s))),
        ),
        (
            "activation/relu".into(),
            Box::new(|s: &CheckSettings| Ok(check_activation(ActKind::Relu, s))),
        ),
        (
            "activation/sigmoid".into(),
            Box::new(|s: &CheckSettings| Ok(check_activation(ActKind::Sigmoid, s))),
        ),
        (
            "activation/tanh".into(),
            Box::new(|s: &CheckSettings| Ok(check_activation(ActKind::Tanh, s))),
        ),
        (
            "lstm-cell".into(),
            Box::new(|s: &CheckSettings| Ok(check_lstm_cell(s))),
        ),
    ];
    for kind in archs {
        components.push((
            format!("architecture/{}", kind.label()),
            Box::new(move |s: &CheckSettings| check_architecture(kind, s)),
        ));
    }

    let started = Instant::now();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (label, runner) in &components {
        let s = CheckSettings {
            corrupt: corrupt.as_deref().is_some_and(|c| label.contains(c)),
            ..settings
        };
        let outcome = runner(&s)?;
        rows.push(vec![
            label.clone(),
            outcome.coords_checked.to_string(),
            outcome.coords_skipped.to_string(),
            format!("{:.3e}", outcome.max_rel_err),
            format!("{:.1e}", outcome.tol),
            if outcome.passed() {
                "ok".into()
            } else {
                "FAILED".into()
            },
        ]);
        if !outcome.passed() {
            failed.push(outcome);
        }
    }

    print_table(
        &[
            "component",
            "coords",
            "skipped",
            "max rel err",
            "tol",
            "status",
        ],
        &rows,
    );
    println!(
        "\n{} component(s), {} trials each, {:.1}s",
        components.len(),
        settings.trials,
        started.elapsed().as_secs_f64(),
    );
    if !failed.is_empty() {
        for outcome in &failed {
            eprintln!("\n{}", outcome.summary());
            for f in &outcome.failures {
                eprintln!("  {f}");
            }
        }
        bail!("{} gradient check(s) failed", failed.len());
    }
    Ok(())
}
