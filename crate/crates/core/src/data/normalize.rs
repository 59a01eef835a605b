use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::series::SeriesTable;
use crate::error::{Error, Result};

/// Per-variable z-score statistics, fitted on the training span only and then
/// applied unchanged to validation and test data. The last entry is the flow.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormStats {
    names: Vec<String>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl NormStats {
    /// Fits mean and standard deviation of every variable (inputs and flow)
    /// over `range` of the table's steps.
    pub fn fit(table: &SeriesTable, range: Range<usize>) -> Result<NormStats> {
        if range.start >= range.end || range.end > table.len() {
            return Err(Error::Config(format!(
                "fit range {range:?} invalid for a table of {} steps",
                table.len()
            )));
        }
        let n = (range.end - range.start) as f64;
        let values = table.values();
        let mut names: Vec<String> = table.names().to_vec();
        names.push("flow".into());
        let mut mean = Vec::with_capacity(names.len());
        let mut std = Vec::with_capacity(names.len());
        for (row, name) in values.rows().into_iter().zip(&names) {
            let slice = row.slice(ndarray::s![range.clone()]);
            let m = slice.sum() / n;
            let var = slice.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            if s < 1e-12 {
                return Err(Error::Config(format!(
                    "variable {name:?} is constant over the fit range (std {s:.3e})"
                )));
            }
            mean.push(m);
            std.push(s);
        }
        Ok(NormStats { names, mean, std })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mean(&self, var: usize) -> f64 {
        self.mean[var]
    }

    pub fn std(&self, var: usize) -> f64 {
        self.std[var]
    }

    fn flow_idx(&self) -> usize {
        self.names.len() - 1
    }

    /// Applies the z-score to every row of `table` (which must carry the same
    /// variables the stats were fitted on).
    pub fn normalize(&self, table: &SeriesTable) -> Result<SeriesTable> {
        if table.names() != &self.names[..self.flow_idx()] {
            return Err(Error::Config(format!(
                "stats fitted on {:?} cannot normalize table with {:?}",
                &self.names[..self.flow_idx()],
                table.names()
            )));
        }
        let mut values = table.values().to_owned();
        for r in 0..values.nrows() {
            let (m, s) = (self.mean[r], self.std[r]);
            values.row_mut(r).mapv_inplace(|v| (v - m) / s);
        }
        SeriesTable::new_signed(
            table.start_time(),
            table.step_hours(),
            table.names().to_vec(),
            values,
        )
    }

    pub fn normalize_flow(&self, value: f64) -> f64 {
        let i = self.flow_idx();
        (value - self.mean[i]) / self.std[i]
    }

    /// Exact inverse of [`normalize_flow`]: back to m3/s.
    pub fn denormalize_flow(&self, z: f64) -> f64 {
        let i = self.flow_idx();
        z * self.std[i] + self.mean[i]
    }
}
