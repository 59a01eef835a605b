use ndarray::Array2;

use super::{require_window, AssembledInput, InputGrads, ModelSpec};
use crate::error::Result;
use crate::layers::Dense;
use crate::numerics::{Param, Rng};
use crate::recurrent::Lstm;

/// LSTM over the full long hourly window, one step per hour.
pub struct LstmWHourModel {
    pub spec: ModelSpec,
    lstm: Lstm,
    head: Dense,
}

impl LstmWHourModel {
    pub fn new(spec: &ModelSpec, rng: &mut Rng) -> Result<LstmWHourModel> {
        Ok(LstmWHourModel {
            spec: spec.clone(),
            lstm: Lstm::new("lstm", spec.n_vars, spec.hidden_size, rng)?,
            head: Dense::new("head", spec.hidden_size, 1, rng)?,
        })
    }

    pub fn forward(&mut self, input: &AssembledInput<'_>) -> Result<f64> {
        let long = require_window(
            input.long_window,
            "long_window",
            self.spec.n_vars,
            self.spec.long_len,
        )?;
        let h = self.lstm.forward(long)?;
        Ok(self.head.forward(h.view())?[0])
    }

    pub fn backward(&mut self, dy: f64, need_input_grads: bool) -> Result<Option<InputGrads>> {
        let dh = self.head.backward(ndarray::arr1(&[dy]).view())?;
        let d_long = self.lstm.backward(dh.view(), need_input_grads)?;
        Ok(d_long.map(|g| InputGrads {
            long_window: Some(g),
            short_window: None,
            daily_window: None,
        }))
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.lstm.params_mut();
        out.extend(self.head.params_mut());
        out
    }
}

/// LSTM over the short window with each step carrying the hourly vector for
/// that step stacked on the daily vector for the same step index: step s of
/// T sees hour t-T+s and day t_D-T+s, so input size is 2N.
pub struct LstmWDpHModel {
    pub spec: ModelSpec,
    lstm: Lstm,
    head: Dense,
}

impl LstmWDpHModel {
    pub fn new(spec: &ModelSpec, rng: &mut Rng) -> Result<LstmWDpHModel> {
        Ok(LstmWDpHModel {
            spec: spec.clone(),
            lstm: Lstm::new("lstm", 2 * spec.n_vars, spec.hidden_size, rng)?,
            head: Dense::new("head", spec.hidden_size, 1, rng)?,
        })
    }

    pub fn forward(&mut self, input: &AssembledInput<'_>) -> Result<f64> {
        let n = self.spec.n_vars;
        let short = require_window(input.short_window, "short_window", n, self.spec.short_len)?;
        let daily = require_window(input.daily_window, "daily_window", n, self.spec.daily_len)?;
        let mut combined = Array2::zeros((2 * n, self.spec.short_len));
        combined.slice_mut(ndarray::s![..n, ..]).assign(&short);
        combined.slice_mut(ndarray::s![n.., ..]).assign(&daily);
        let h = self.lstm.forward(combined.view())?;
        Ok(self.head.forward(h.view())?[0])
    }

    pub fn backward(&mut self, dy: f64, need_input_grads: bool) -> Result<Option<InputGrads>> {
        let dh = self.head.backward(ndarray::arr1(&[dy]).view())?;
        let d_combined = self.lstm.backward(dh.view(), need_input_grads)?;
        Ok(d_combined.map(|g| {
            let n = self.spec.n_vars;
            InputGrads {
                long_window: None,
                short_window: Some(g.slice(ndarray::s![..n, ..]).to_owned()),
                daily_window: Some(g.slice(ndarray::s![n.., ..]).to_owned()),
            }
        }))
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.lstm.params_mut();
        out.extend(self.head.params_mut());
        out
    }
}
