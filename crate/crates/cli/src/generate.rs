use std::path::PathBuf;

use anyhow::{Context, Result};
use runoff_core::data::{generate_with_balance, SyntheticConfig};

use crate::config::{pick, pick_required, FileConfig};

#[derive(clap::Args)]
pub struct Args {
    /// Whole calendar years to synthesize
    #[arg(long)]
    years: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// First simulated year (January 1 onward)
    #[arg(long)]
    start_year: Option<i32>,
    /// Precipitation sub-regions, one input variable each
    #[arg(long)]
    regions: Option<usize>,
    /// Destination CSV file
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// `key = value` defaults for any of the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let defaults = SyntheticConfig::default();
    let config = SyntheticConfig {
        years: pick(args.years, &file, "years", defaults.years)?,
        seed: pick(args.seed, &file, "seed", defaults.seed)?,
        start_year: pick(args.start_year, &file, "start-year", defaults.start_year)?,
        n_precip_regions: pick(args.regions, &file, "regions", defaults.n_precip_regions)?,
        ..defaults
    };
    let output = pick_required(args.output, &file, "output")?;

    let (table, balance) = generate_with_balance(&config)?;
    table
        .export_csv(&output)
        .with_context(|| format!("writing {}", output.display()))?;
    println!(
        "wrote {} hourly steps ({} input variables + flow), {} .. {}, to {}",
        table.len(),
        table.n_vars(),
        table.timestamp(0).format("%Y-%m-%d %H:%M"),
        table.timestamp(table.len() - 1).format("%Y-%m-%d %H:%M"),
        output.display(),
    );
    println!(
        "water balance: {:.1} mm precip, {:.1} mm ET, {:.1} mm discharge; closure error {:.2e} mm",
        balance.precip_mm,
        balance.et_mm,
        balance.flow_mm,
        balance.closure_error(),
    );
    Ok(())
}
