use std::path::Path;

use chrono::{Duration, NaiveDateTime, Timelike};
use ndarray::{s, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Timestamp format used in CSV files: `2007-01-01T00:00`.
pub const TIMESTAMP_FMT: &str = "%Y-%m-%dT%H:%M";

/// Column name of the target series in CSV files.
pub const FLOW_COLUMN: &str = "flow";

/// A gap-free multivariate time series: N input variables plus observed flow,
/// sampled on a fixed step (hourly for raw tables, 24h for daily aggregates).
///
/// `values` is `[N+1, len]` with the flow in the last row. Tables are
/// immutable once built, so views into them can be shared freely across
/// threads.
#[derive(Clone, Debug)]
pub struct SeriesTable {
    start_time: NaiveDateTime,
    step_hours: i64,
    names: Vec<String>,
    values: Array2<f64>,
}

impl SeriesTable {
    /// Builds a physical table: every value finite, flow nonnegative.
    pub fn new(
        start_time: NaiveDateTime,
        names: Vec<String>,
        values: Array2<f64>,
    ) -> Result<SeriesTable> {
        SeriesTable::build(start_time, 1, names, values, true)
    }

    /// Builds a table whose flow row may be negative (normalized data).
    pub(crate) fn new_signed(
        start_time: NaiveDateTime,
        step_hours: i64,
        names: Vec<String>,
        values: Array2<f64>,
    ) -> Result<SeriesTable> {
        SeriesTable::build(start_time, step_hours, names, values, false)
    }

    fn build(
        start_time: NaiveDateTime,
        step_hours: i64,
        names: Vec<String>,
        values: Array2<f64>,
        require_nonneg_flow: bool,
    ) -> Result<SeriesTable> {
        if names.is_empty() {
            return Err(Error::Config(
                "a series table needs at least one input variable".into(),
            ));
        }
        if values.nrows() != names.len() + 1 {
            return Err(Error::Shape(format!(
                "table has {} rows but {} variable names (+1 flow row expected)",
                values.nrows(),
                names.len()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::Config("a series table cannot be empty".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name == "timestamp" || name == FLOW_COLUMN {
                return Err(Error::Config(format!(
                    "variable {i} has reserved name {name:?}"
                )));
            }
            if names[..i].contains(name) {
                return Err(Error::Config(format!("duplicate variable name {name:?}")));
            }
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "table contains a non-finite value {bad}"
            )));
        }
        let flow = values.row(values.nrows() - 1);
        if require_nonneg_flow {
            if let Some((i, v)) = flow.iter().enumerate().find(|(_, v)| **v < 0.0) {
                return Err(Error::Config(format!(
                    "flow must be nonnegative; step {i} has {v}"
                )));
            }
        }
        Ok(SeriesTable {
            start_time,
            step_hours,
            names,
            values,
        })
    }

    pub fn start_time(&self) -> NaiveDateTime {
        self.start_time
    }

    /// Hours between consecutive steps (1 = hourly, 24 = daily).
    pub fn step_hours(&self) -> i64 {
        self.step_hours
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    /// Number of input variables (flow excluded).
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    /// Input rows only, `[N, len]`.
    pub fn inputs(&self) -> ArrayView2<'_, f64> {
        self.values.slice(s![..self.names.len(), ..])
    }

    /// Observed flow row.
    pub fn flow(&self) -> ArrayView1<'_, f64> {
        self.values.row(self.names.len())
    }

    pub fn timestamp(&self, step: usize) -> NaiveDateTime {
        self.start_time + Duration::hours(self.step_hours * step as i64)
    }

    /// Per-variable daily aggregate over each 24-hour block: the mean, except
    /// variables listed in `sum_vars` (accumulative quantities like
    /// precipitation) which are summed instead. Flow is always averaged.
    ///
    /// A trailing partial day is dropped; the second return value is how many
    /// hours were trimmed so the caller can warn about them.
    pub fn aggregate_daily(&self, sum_vars: &[usize]) -> Result<(SeriesTable, usize)> {
        if self.step_hours != 1 {
            return Err(Error::Config(format!(
                "daily aggregation needs an hourly table, got step {}h",
                self.step_hours
            )));
        }
        if self.start_time.hour() != 0 {
            return Err(Error::Config(format!(
                "daily aggregation needs a table starting at midnight, got {}",
                self.start_time.format(TIMESTAMP_FMT)
            )));
        }
        if let Some(&bad) = sum_vars.iter().find(|&&v| v >= self.names.len()) {
            return Err(Error::Config(format!(
                "sum_vars index {bad} out of range for {} variables",
                self.names.len()
            )));
        }
        let n_days = self.len() / 24;
        let trimmed = self.len() % 24;
        if n_days == 0 {
            return Err(Error::Config(format!(
                "table spans only {} hours, less than one full day",
                self.len()
            )));
        }
        let n_rows = self.values.nrows();
        let mut daily = Array2::zeros((n_rows, n_days));
        for r in 0..n_rows {
            let summed = r < self.names.len() && sum_vars.contains(&r);
            for d in 0..n_days {
                let block = self.values.slice(s![r, d * 24..(d + 1) * 24]);
                let total: f64 = block.sum();
                daily[[r, d]] = if summed { total } else { total / 24.0 };
            }
        }
        let table = SeriesTable::build(self.start_time, 24, self.names.clone(), daily, false)?;
        Ok((table, trimmed))
    }

    /// Writes `timestamp,<vars...>,flow` with full-precision values, so a
    /// round trip through [`ingest_csv`] reproduces the table exactly.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["timestamp".to_string()];
        header.extend(self.names.iter().cloned());
        header.push(FLOW_COLUMN.to_string());
        writer.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for step in 0..self.len() {
            record.clear();
            record.push(self.timestamp(step).format(TIMESTAMP_FMT).to_string());
            for r in 0..self.values.nrows() {
                record.push(self.values[[r, step]].to_string());
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Reads a CSV written in the [`SeriesTable::export_csv`] layout, with the
/// flow column named `flow`.
pub fn ingest_csv(path: &Path) -> Result<SeriesTable> {
    ingest_csv_named(path, FLOW_COLUMN)
}

/// Reads an hourly CSV whose flow column carries a custom name. The flow
/// column may sit anywhere after `timestamp`; remaining columns become input
/// variables in file order.
pub fn ingest_csv_named(path: &Path, flow_column: &str) -> Result<SeriesTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if headers.first().map(String::as_str) != Some("timestamp") {
        return Err(Error::Ingest(format!(
            "first column must be \"timestamp\", found {:?}",
            headers.first().map(String::as_str).unwrap_or("")
        )));
    }
    let flow_pos = headers
        .iter()
        .position(|h| h == flow_column)
        .ok_or_else(|| Error::Ingest(format!("no flow column named {flow_column:?} in header")))?;
    if flow_pos == 0 {
        return Err(Error::Ingest(
            "flow column cannot be the timestamp column".into(),
        ));
    }
    let var_positions: Vec<usize> = (1..headers.len()).filter(|&i| i != flow_pos).collect();
    if var_positions.is_empty() {
        return Err(Error::Ingest("file has no input variable columns".into()));
    }
    let names: Vec<String> = var_positions.iter().map(|&i| headers[i].clone()).collect();

    let mut start_time: Option<NaiveDateTime> = None;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len() + 1];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        // Line numbers count the header, matching what an editor shows.
        let line = row_idx + 2;
        if record.len() != headers.len() {
            return Err(Error::Ingest(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let ts = NaiveDateTime::parse_from_str(record[0].trim(), TIMESTAMP_FMT).map_err(|e| {
            Error::Ingest(format!("line {line}: bad timestamp {:?}: {e}", &record[0]))
        })?;
        match start_time {
            None => start_time = Some(ts),
            Some(start) => {
                let expected = start + Duration::hours(row_idx as i64);
                if ts != expected {
                    return Err(Error::Ingest(format!(
                        "line {line}: expected hourly-consecutive timestamp {}, found {}",
                        expected.format(TIMESTAMP_FMT),
                        ts.format(TIMESTAMP_FMT)
                    )));
                }
            }
        }
        let parse = |pos: usize| -> Result<f64> {
            let cell = record[pos].trim();
            cell.parse::<f64>().map_err(|_| {
                Error::Ingest(format!(
                    "line {line}: column {:?} has non-numeric cell {cell:?}",
                    headers[pos]
                ))
            })
        };
        for (k, &pos) in var_positions.iter().enumerate() {
            columns[k].push(parse(pos)?);
        }
        let flow_idx = columns.len() - 1;
        columns[flow_idx].push(parse(flow_pos)?);
    }
    let start = start_time.ok_or_else(|| Error::Ingest("file has no data rows".into()))?;
    let n_steps = columns[0].len();
    let mut values = Array2::zeros((columns.len(), n_steps));
    for (r, col) in columns.iter().enumerate() {
        for (c, &v) in col.iter().enumerate() {
            values[[r, c]] = v;
        }
    }
    SeriesTable::new(start, names, values)
}
