use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::bands::FlowBands;
use crate::data::series::SeriesTable;
use crate::data::split::Split;
use crate::data::windows::WindowSet;
use crate::error::{Error, Result};
use crate::evaluation::metrics::{band_rmse, median, nse, pearson_r, rmse, BandRmse};
use crate::training::Checkpoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Train,
    Val,
    Test,
}

impl Period {
    pub const ALL: [Period; 3] = [Period::Train, Period::Val, Period::Test];

    pub fn label(&self) -> &'static str {
        match self {
            Period::Train => "train",
            Period::Val => "val",
            Period::Test => "test",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub rmse: f64,
    pub r: f64,
    pub nse: f64,
    pub bands: BandRmse,
}

/// Inference results of one trial over one period, in physical units.
#[derive(Clone, Debug)]
pub struct PeriodEvaluation {
    pub period: Period,
    /// Target hour of each sample, indexing the hourly table.
    pub targets: Vec<usize>,
    pub observed: Vec<f64>,
    pub simulated: Vec<f64>,
    pub metrics: PeriodMetrics,
}

/// One trial's evaluations; periods with no admissible samples are absent.
#[derive(Clone, Debug)]
pub struct TrialEvaluation {
    pub trial: usize,
    pub seed: u64,
    pub periods: Vec<PeriodEvaluation>,
}

impl TrialEvaluation {
    pub fn period(&self, period: Period) -> Option<&PeriodEvaluation> {
        self.periods.iter().find(|p| p.period == period)
    }
}

/// Everything evaluation needs alongside a checkpoint. `raw` is the physical
/// table; `normalized`/`daily` are its z-scored hourly and daily versions
/// (the same transforms training saw); `bands` come from the observed record.
pub struct EvalData<'a> {
    pub raw: &'a SeriesTable,
    pub normalized: &'a SeriesTable,
    pub daily: Option<&'a SeriesTable>,
    pub bands: FlowBands,
    pub split: &'a Split,
}

/// Runs inference over every admissible sample of every period, denormalizes
/// to m3/s, and scores RMSE / Pearson r / NSE plus per-band RMSE.
pub fn evaluate_checkpoint(
    checkpoint: &Checkpoint,
    data: &EvalData<'_>,
    trial: usize,
) -> Result<TrialEvaluation> {
    let mut model = checkpoint.instantiate()?;
    let spans = [
        (Period::Train, data.split.train.clone()),
        (Period::Val, data.split.val.clone()),
        (Period::Test, data.split.test.clone()),
    ];
    let mut periods = Vec::new();
    for (period, range) in spans {
        let set = WindowSet::build(data.normalized, data.daily, &checkpoint.spec, range)?;
        if set.is_empty() {
            continue;
        }
        let n = set.len();
        let mut targets = Vec::with_capacity(n);
        let mut observed = Vec::with_capacity(n);
        let mut simulated = Vec::with_capacity(n);
        for s in 0..n {
            let z = model.forward(&set.input(s))?;
            let t = set.target_index(s);
            targets.push(t);
            observed.push(data.raw.flow()[t]);
            simulated.push(checkpoint.stats.denormalize_flow(z));
        }
        let metrics = PeriodMetrics {
            rmse: rmse(&observed, &simulated)?,
            r: pearson_r(&observed, &simulated)?,
            nse: nse(&observed, &simulated)?,
            bands: band_rmse(&observed, &simulated, &data.bands)?,
        };
        periods.push(PeriodEvaluation {
            period,
            targets,
            observed,
            simulated,
            metrics,
        });
    }
    Ok(TrialEvaluation {
        trial,
        seed: checkpoint.seed,
        periods,
    })
}

/// Cross-trial medians of every metric for one period. Band medians are taken
/// over the trials where the band was present.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MedianMetrics {
    pub period: Period,
    pub rmse: f64,
    pub r: f64,
    pub nse: f64,
    pub bands: BandRmse,
}

pub fn median_over_trials(trials: &[TrialEvaluation], period: Period) -> Option<MedianMetrics> {
    let rows: Vec<&PeriodMetrics> = trials
        .iter()
        .filter_map(|t| t.period(period))
        .map(|p| &p.metrics)
        .collect();
    if rows.is_empty() {
        return None;
    }
    let collect =
        |f: &dyn Fn(&PeriodMetrics) -> f64| -> Vec<f64> { rows.iter().map(|m| f(m)).collect() };
    let band = |f: &dyn Fn(&BandRmse) -> Option<f64>| -> Option<f64> {
        let present: Vec<f64> = rows.iter().filter_map(|m| f(&m.bands)).collect();
        median(&present)
    };
    Some(MedianMetrics {
        period,
        rmse: median(&collect(&|m| m.rmse)).unwrap(),
        r: median(&collect(&|m| m.r)).unwrap(),
        nse: median(&collect(&|m| m.nse)).unwrap(),
        bands: BandRmse {
            low: band(&|b| b.low),
            middle: band(&|b| b.middle),
            high: band(&|b| b.high),
            peak: band(&|b| b.peak),
        },
    })
}

/// The full scorecard of one architecture: every trial's metrics per period,
/// their medians, and enough metadata to reproduce the run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub seeds: Vec<u64>,
    pub data_hash: String,
    pub rows: Vec<MetricsRow>,
    pub medians: Vec<MedianMetrics>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MetricsRow {
    pub trial: usize,
    pub period: Period,
    #[serde(flatten)]
    pub metrics: PeriodMetrics,
}

pub fn assemble_report(model: &str, trials: &[TrialEvaluation], data_hash: &str) -> MetricsReport {
    let mut rows = Vec::new();
    for trial in trials {
        for p in &trial.periods {
            rows.push(MetricsRow {
                trial: trial.trial,
                period: p.period,
                metrics: p.metrics,
            });
        }
    }
    let medians = Period::ALL
        .iter()
        .filter_map(|&p| median_over_trials(trials, p))
        .collect();
    MetricsReport {
        model: model.to_string(),
        seeds: trials.iter().map(|t| t.seed).collect(),
        data_hash: data_hash.to_string(),
        rows,
        medians,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsReport {
    /// `trial,period,rmse,r,nse,rmse_low,rmse_middle,rmse_high,rmse_peak`,
    /// one row per trial and period plus a `median` pseudo-trial per period.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record([
            "trial",
            "period",
            "rmse",
            "r",
            "nse",
            "rmse_low",
            "rmse_middle",
            "rmse_high",
            "rmse_peak",
        ])?;
        for row in &self.rows {
            let m = &row.metrics;
            writer.write_record([
                row.trial.to_string(),
                row.period.label().to_string(),
                m.rmse.to_string(),
                m.r.to_string(),
                m.nse.to_string(),
                cell(m.bands.low),
                cell(m.bands.middle),
                cell(m.bands.high),
                cell(m.bands.peak),
            ])?;
        }
        for m in &self.medians {
            writer.write_record([
                "median".to_string(),
                m.period.label().to_string(),
                m.rmse.to_string(),
                m.r.to_string(),
                m.nse.to_string(),
                cell(m.bands.low),
                cell(m.bands.middle),
                cell(m.bands.high),
                cell(m.bands.peak),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }
}

/// Writes `timestamp,observed,simulated` for one period of one trial.
pub fn write_predictions(
    evaluation: &PeriodEvaluation,
    table: &SeriesTable,
    path: &Path,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["timestamp", "observed", "simulated"])?;
    for (i, &t) in evaluation.targets.iter().enumerate() {
        writer.write_record([
            table
                .timestamp(t)
                .format(crate::data::series::TIMESTAMP_FMT)
                .to_string(),
            evaluation.observed[i].to_string(),
            evaluation.simulated[i].to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-timestep median of the simulations across trials, for Fig-8-style
/// scatter plots. All trials must cover the same targets.
pub fn median_predictions(
    trials: &[TrialEvaluation],
    period: Period,
) -> Result<Option<PeriodEvaluation>> {
    let present: Vec<&PeriodEvaluation> = trials.iter().filter_map(|t| t.period(period)).collect();
    let Some(first) = present.first() else {
        return Ok(None);
    };
    for p in &present[1..] {
        if p.targets != first.targets {
            return Err(Error::Config(
                "trials disagree on evaluated targets; cannot take a median".into(),
            ));
        }
    }
    let n = first.targets.len();
    let mut simulated = Vec::with_capacity(n);
    for i in 0..n {
        let sims: Vec<f64> = present.iter().map(|p| p.simulated[i]).collect();
        simulated.push(median(&sims).expect("nonempty trials"));
    }
    let metrics = PeriodMetrics {
        rmse: rmse(&first.observed, &simulated)?,
        r: pearson_r(&first.observed, &simulated)?,
        nse: nse(&first.observed, &simulated)?,
        bands: BandRmse::default(),
    };
    Ok(Some(PeriodEvaluation {
        period,
        targets: first.targets.clone(),
        observed: first.observed.clone(),
        simulated,
        metrics,
    }))
}

/// SHA-256 over the table's metadata and values; identifies the dataset a
/// report was computed from.
pub fn data_fingerprint(table: &SeriesTable) -> String {
    let mut hasher = Sha256::new();
    hasher.update(table.start_time().and_utc().timestamp().to_le_bytes());
    hasher.update(table.step_hours().to_le_bytes());
    hasher.update((table.names().len() as u64).to_le_bytes());
    for name in table.names() {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
    }
    for v in table.values().iter() {
        hasher.update(v.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
