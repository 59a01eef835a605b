use std::ops::Range;

use ndarray::s;

use crate::architectures::{AssembledInput, ModelSpec};
use crate::data::series::SeriesTable;
use crate::error::{Error, Result};

/// The input windows for every admissible target hour in a step range.
///
/// Each sample predicts the flow at target hour `t` from windows that end at
/// `t`: the long hourly window covers `t-long_len+1 ..= t`, the short one
/// `t-short_len+1 ..= t`, and the daily window ends at the day containing `t`.
/// `t` is admissible when every window the architecture consumes has a full
/// history. Windows are cut as views on demand, so a set over a 13-year table
/// costs no copies, and the underlying tables are immutable — samples may be
/// read from several threads at once.
pub struct WindowSet<'a> {
    hourly: &'a SeriesTable,
    daily: Option<&'a SeriesTable>,
    spec: &'a ModelSpec,
    needs: (bool, bool, bool),
    targets: Vec<usize>,
}

impl<'a> WindowSet<'a> {
    /// Collects the admissible targets within `range` (clamped to the table).
    /// `daily` is required only by kinds that consume daily inputs; it must be
    /// the 24h aggregate of `hourly`.
    pub fn build(
        hourly: &'a SeriesTable,
        daily: Option<&'a SeriesTable>,
        spec: &'a ModelSpec,
        range: Range<usize>,
    ) -> Result<WindowSet<'a>> {
        if hourly.step_hours() != 1 {
            return Err(Error::Config(format!(
                "window extraction needs an hourly table, got step {}h",
                hourly.step_hours()
            )));
        }
        let needs = spec.kind.needs();
        let daily = if needs.2 {
            let d = daily.ok_or_else(|| {
                Error::Config(format!(
                    "{} consumes daily inputs but none were given",
                    spec.kind
                ))
            })?;
            if d.step_hours() != 24 {
                return Err(Error::Config(format!(
                    "daily table has step {}h, expected 24",
                    d.step_hours()
                )));
            }
            if d.start_time() != hourly.start_time() {
                return Err(Error::Config(format!(
                    "daily table starts at {}, hourly at {}; they must align",
                    d.start_time(),
                    hourly.start_time()
                )));
            }
            if d.names() != hourly.names() {
                return Err(Error::Config(
                    "daily and hourly tables carry different variables".into(),
                ));
            }
            Some(d)
        } else {
            None
        };
        if hourly.n_vars() != spec.n_vars {
            return Err(Error::Shape(format!(
                "table has {} input variables, model expects {}",
                hourly.n_vars(),
                spec.n_vars
            )));
        }

        // Earliest target with full hourly history.
        let mut first = 0usize;
        if needs.0 {
            first = first.max(spec.long_len - 1);
        }
        if needs.1 {
            first = first.max(spec.short_len - 1);
        }
        if needs.2 {
            // Day d = t/24 must have daily_len full days ending at it.
            first = first.max((spec.daily_len - 1) * 24);
        }
        let lo = range.start.max(first);
        let mut hi = range.end.min(hourly.len());
        if let Some(d) = daily {
            // The day containing t must exist in the aggregate (a trailing
            // partial day was trimmed there).
            hi = hi.min(d.len() * 24);
        }
        let targets: Vec<usize> = (lo..hi).collect();
        Ok(WindowSet {
            hourly,
            daily,
            spec,
            needs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Target hour indices into the hourly table.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Keeps every `stride`-th sample — cheap desk-scale subsampling.
    pub fn thin(&mut self, stride: usize) {
        if stride > 1 {
            self.targets = self.targets.iter().copied().step_by(stride).collect();
        }
    }

    pub fn target_index(&self, sample: usize) -> usize {
        self.targets[sample]
    }

    /// Observed flow at the sample's target hour.
    pub fn observed(&self, sample: usize) -> f64 {
        self.hourly.flow()[self.targets[sample]]
    }

    /// The windows the model consumes for this sample, as borrowed views.
    pub fn input(&self, sample: usize) -> AssembledInput<'_> {
        let t = self.targets[sample];
        let inputs = self.hourly.inputs();
        let mut assembled = AssembledInput {
            long_window: None,
            short_window: None,
            daily_window: None,
        };
        if self.needs.0 {
            assembled.long_window =
                Some(inputs.slice_move(s![.., t + 1 - self.spec.long_len..t + 1]));
        }
        if self.needs.1 {
            assembled.short_window = Some(
                self.hourly
                    .inputs()
                    .slice_move(s![.., t + 1 - self.spec.short_len..t + 1]),
            );
        }
        if self.needs.2 {
            let day = t / 24;
            let daily = self.daily.expect("daily table checked in build");
            assembled.daily_window = Some(
                daily
                    .inputs()
                    .slice_move(s![.., day + 1 - self.spec.daily_len..day + 1]),
            );
        }
        assembled
    }
}
