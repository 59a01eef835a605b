//! The five benchmark models: a pure convolutional network over a long
//! hourly window, two plain LSTMs (hourly; daily-plus-hourly), and two
//! CNN/LSTM hybrids (serial and parallel coupling). All take meteorological
//! windows ending at the target time and emit one scalar flow estimate.

mod cnn;
mod hybrid;
mod lstm_only;

use std::fmt;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{ConvSpec, PoolKind, PoolSpec};
use crate::numerics::{Param, Rng};

pub use cnn::CnnOnlyModel;
pub use hybrid::{CnnPLstmModel, CnnSLstmModel};
pub use lstm_only::{LstmWDpHModel, LstmWHourModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    CnnOnly,
    LstmWHour,
    LstmWDpH,
    CnnSLstm,
    CnnPLstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::CnnOnly,
        ModelKind::LstmWHour,
        ModelKind::LstmWDpH,
        ModelKind::CnnSLstm,
        ModelKind::CnnPLstm,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::CnnOnly => "cnn",
            ModelKind::LstmWHour => "lstm-hour",
            ModelKind::LstmWDpH => "lstm-dph",
            ModelKind::CnnSLstm => "cnn-s-lstm",
            ModelKind::CnnPLstm => "cnn-p-lstm",
        }
    }

    /// Parses a kind name, ignoring case and separators, so `cnn-s-lstm`,
    /// `cnnslstm` and `CNNsLSTM` all name the same model.
    pub fn parse(label: &str) -> Result<ModelKind> {
        let key: String = label
            .chars()
            .filter(char::is_ascii_alphanumeric)
            .collect::<String>()
            .to_ascii_lowercase();
        let kind = match key.as_str() {
            "cnn" | "1dcnn" | "cnnonly" => Some(ModelKind::CnnOnly),
            "lstmhour" | "lstmwhour" => Some(ModelKind::LstmWHour),
            "lstmdph" | "lstmwdph" => Some(ModelKind::LstmWDpH),
            "cnnslstm" => Some(ModelKind::CnnSLstm),
            "cnnplstm" => Some(ModelKind::CnnPLstm),
            _ => None,
        };
        kind.ok_or_else(|| {
            let names: Vec<&str> = ModelKind::ALL.iter().map(|k| k.label()).collect();
            Error::Config(format!(
                "unknown model kind {label:?}; expected one of {}",
                names.join(", ")
            ))
        })
    }

    /// Which input windows this kind consumes.
    pub fn needs(&self) -> (bool, bool, bool) {
        // (long, short, daily)
        match self {
            ModelKind::CnnOnly | ModelKind::LstmWHour => (true, false, false),
            ModelKind::LstmWDpH => (false, true, true),
            ModelKind::CnnSLstm | ModelKind::CnnPLstm => (true, true, false),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Kernel/stride/padding triple for one conv or pool layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geom {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Geom {
    pub const fn new(kernel: usize, stride: usize, padding: usize) -> Geom {
        Geom {
            kernel,
            stride,
            padding,
        }
    }

    pub fn conv_spec(&self, in_channels: usize, out_channels: usize) -> ConvSpec {
        ConvSpec {
            in_channels,
            out_channels,
            kernel_size: self.kernel,
            stride: self.stride,
            padding: self.padding,
        }
    }

    pub fn pool_spec(&self) -> PoolSpec {
        PoolSpec {
            kind: PoolKind::Max,
            kernel_size: self.kernel,
            stride: self.stride,
            padding: self.padding,
        }
    }

    pub fn out_len(&self, input_len: usize) -> Result<usize> {
        self.conv_spec(1, 1).out_len(input_len)
    }
}

/// Everything needed to build one model: kind, input-window sizes, channel
/// schedule, and the layer geometries (defaults follow the benchmark
/// configuration; miniaturized tests override them).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Number of meteorological variables N.
    pub n_vars: usize,
    /// First conv layer's output channels; doubled at each conv layer.
    pub nchf: usize,
    /// Long hourly window length T.
    pub long_len: usize,
    /// Short hourly window length I.
    pub short_len: usize,
    /// Daily window length.
    pub daily_len: usize,
    /// LSTM hidden/cell state length.
    pub hidden_size: usize,
    /// Conv geometries for the pooled stack (long-window CNN branch).
    pub pooled_convs: [Geom; 3],
    /// Pool geometries paired with `pooled_convs`.
    pub pooled_pools: [Geom; 3],
    /// Conv geometries for the unpooled serial stack.
    pub serial_convs: [Geom; 3],
    /// Dense widths after the pooled stack (flat -> w0 -> w1 -> 1).
    pub head_widths: [usize; 2],
    /// CNN-branch dense width in the parallel hybrid.
    pub branch_width: usize,
    /// Fused dense width after concatenation in the parallel hybrid.
    pub fused_width: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n_vars: usize) -> ModelSpec {
        ModelSpec {
            kind,
            n_vars,
            nchf: 8,
            long_len: 5040,
            short_len: 210,
            daily_len: 210,
            hidden_size: 30,
            pooled_convs: [Geom::new(6, 3, 3), Geom::new(4, 2, 2), Geom::new(4, 4, 2)],
            pooled_pools: [Geom::new(4, 2, 2); 3],
            serial_convs: [Geom::new(6, 3, 3), Geom::new(4, 2, 2), Geom::new(4, 4, 0)],
            head_widths: [256, 128],
            branch_width: 128,
            fused_width: 64,
        }
    }

    /// Channel schedule through a three-layer conv stack: input, then
    /// doubling from `nchf`.
    pub fn channels(&self) -> [usize; 4] {
        [self.n_vars, self.nchf, 2 * self.nchf, 4 * self.nchf]
    }

    /// Sequence lengths after each conv/pool stage of the pooled stack, plus
    /// the flattened feature count.
    pub fn pooled_chain(&self) -> Result<(Vec<usize>, usize)> {
        let mut lens = Vec::with_capacity(6);
        let mut len = self.long_len;
        for (conv, pool) in self.pooled_convs.iter().zip(self.pooled_pools.iter()) {
            len = conv.out_len(len)?;
            lens.push(len);
            len = pool.pool_spec().validate().and(pool.out_len(len))?;
            lens.push(len);
        }
        Ok((lens, len * self.channels()[3]))
    }

    /// Sequence lengths after each conv of the serial (unpooled) stack.
    pub fn serial_chain(&self) -> Result<Vec<usize>> {
        let mut lens = Vec::with_capacity(3);
        let mut len = self.long_len;
        for conv in self.serial_convs.iter() {
            len = conv.out_len(len)?;
            lens.push(len);
        }
        Ok(lens)
    }

    /// LSTM per-step input vector size for this kind.
    pub fn lstm_input_size(&self) -> usize {
        match self.kind {
            ModelKind::LstmWHour | ModelKind::CnnPLstm => self.n_vars,
            ModelKind::LstmWDpH => 2 * self.n_vars,
            ModelKind::CnnSLstm => self.n_vars + self.channels()[3],
            ModelKind::CnnOnly => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vars < 1 {
            return Err(Error::Config("model spec: n_vars must be >= 1".into()));
        }
        if self.nchf < 1 {
            return Err(Error::Config("model spec: nchf must be >= 1".into()));
        }
        if self.long_len < 1 || self.short_len < 1 || self.daily_len < 1 {
            return Err(Error::Config(
                "model spec: window lengths must be >= 1".into(),
            ));
        }
        if self.hidden_size < 1 {
            return Err(Error::Config("model spec: hidden_size must be >= 1".into()));
        }
        match self.kind {
            ModelKind::CnnOnly | ModelKind::CnnPLstm => {
                let (_, flat) = self.pooled_chain()?;
                if flat < 1 {
                    return Err(Error::Config(
                        "model spec: empty flattened feature map".into(),
                    ));
                }
                if self.head_widths.iter().any(|&w| w < 1)
                    || self.branch_width < 1
                    || self.fused_width < 1
                {
                    return Err(Error::Config(
                        "model spec: dense widths must be >= 1".into(),
                    ));
                }
            }
            ModelKind::CnnSLstm => {
                let lens = self.serial_chain()?;
                let fmap_len = *lens.last().unwrap();
                if fmap_len > self.short_len {
                    return Err(Error::Config(format!(
                        "model spec: serial conv stack yields length {fmap_len} on long window {}, \
                         which exceeds short window length {}; lengths must align (feature map is \
                         zero-padded only when shorter)",
                        self.long_len, self.short_len
                    )));
                }
            }
            ModelKind::LstmWHour | ModelKind::LstmWDpH => {}
        }
        if self.kind == ModelKind::LstmWDpH && self.short_len != self.daily_len {
            return Err(Error::Config(format!(
                "model spec: daily-plus-hourly stacking pairs step s of both windows, so \
                 short_len ({}) must equal daily_len ({})",
                self.short_len, self.daily_len
            )));
        }
        Ok(())
    }
}

/// Input windows for one sample. All present windows end at the same target
/// time; which ones are required depends on the model kind.
#[derive(Clone, Copy)]
pub struct AssembledInput<'a> {
    pub long_window: Option<ArrayView2<'a, f64>>,
    pub short_window: Option<ArrayView2<'a, f64>>,
    pub daily_window: Option<ArrayView2<'a, f64>>,
}

impl<'a> AssembledInput<'a> {
    pub fn long(view: ArrayView2<'a, f64>) -> AssembledInput<'a> {
        AssembledInput {
            long_window: Some(view),
            short_window: None,
            daily_window: None,
        }
    }
}

/// Gradients with respect to the input windows, mirroring `AssembledInput`.
pub struct InputGrads {
    pub long_window: Option<Array2<f64>>,
    pub short_window: Option<Array2<f64>>,
    pub daily_window: Option<Array2<f64>>,
}

fn require_window<'a>(
    window: Option<ArrayView2<'a, f64>>,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<ArrayView2<'a, f64>> {
    let w = window
        .ok_or_else(|| Error::Shape(format!("{name}: required by this model kind but absent")))?;
    if w.dim() != (rows, cols) {
        return Err(Error::Shape(format!(
            "{name}: expected {rows} x {cols}, got {} x {}",
            w.nrows(),
            w.ncols()
        )));
    }
    Ok(w)
}

/// One of the five benchmark models. Parameter order (for checkpoints and
/// the optimizer) is the construction order and is stable per kind.
// One model exists per trial; the stack-size spread between variants is
// irrelevant next to their heap-allocated parameters.
#[allow(clippy::large_enum_variant)]
pub enum Model {
    CnnOnly(CnnOnlyModel),
    LstmWHour(LstmWHourModel),
    LstmWDpH(LstmWDpHModel),
    CnnSLstm(CnnSLstmModel),
    CnnPLstm(CnnPLstmModel),
}

impl Model {
    pub fn build(spec: &ModelSpec, rng: &mut Rng) -> Result<Model> {
        spec.validate()?;
        Ok(match spec.kind {
            ModelKind::CnnOnly => Model::CnnOnly(CnnOnlyModel::new(spec, rng)?),
            ModelKind::LstmWHour => Model::LstmWHour(LstmWHourModel::new(spec, rng)?),
            ModelKind::LstmWDpH => Model::LstmWDpH(LstmWDpHModel::new(spec, rng)?),
            ModelKind::CnnSLstm => Model::CnnSLstm(CnnSLstmModel::new(spec, rng)?),
            ModelKind::CnnPLstm => Model::CnnPLstm(CnnPLstmModel::new(spec, rng)?),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        match self {
            Model::CnnOnly(m) => &m.spec,
            Model::LstmWHour(m) => &m.spec,
            Model::LstmWDpH(m) => &m.spec,
            Model::CnnSLstm(m) => &m.spec,
            Model::CnnPLstm(m) => &m.spec,
        }
    }

    pub fn forward(&mut self, input: &AssembledInput<'_>) -> Result<f64> {
        match self {
            Model::CnnOnly(m) => m.forward(input),
            Model::LstmWHour(m) => m.forward(input),
            Model::LstmWDpH(m) => m.forward(input),
            Model::CnnSLstm(m) => m.forward(input),
            Model::CnnPLstm(m) => m.forward(input),
        }
    }

    /// Backpropagates a scalar output gradient, accumulating parameter
    /// gradients. Input-window gradients are built only on request.
    pub fn backward(&mut self, dy: f64, need_input_grads: bool) -> Result<Option<InputGrads>> {
        match self {
            Model::CnnOnly(m) => m.backward(dy, need_input_grads),
            Model::LstmWHour(m) => m.backward(dy, need_input_grads),
            Model::LstmWDpH(m) => m.backward(dy, need_input_grads),
            Model::CnnSLstm(m) => m.backward(dy, need_input_grads),
            Model::CnnPLstm(m) => m.backward(dy, need_input_grads),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Model::CnnOnly(m) => m.params_mut(),
            Model::LstmWHour(m) => m.params_mut(),
            Model::LstmWDpH(m) => m.params_mut(),
            Model::CnnSLstm(m) => m.params_mut(),
            Model::CnnPLstm(m) => m.params_mut(),
        }
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn param_count(&mut self) -> usize {
        self.params_mut().iter().map(|p| p.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    pub(super) fn tiny_spec(kind: ModelKind) -> ModelSpec {
        // pooled chain: 48 -> 24 -> 12 -> 6 -> 3 -> 3 -> 1; serial chain: 48 -> 24 -> 12 -> 12
        let mut spec = ModelSpec::new(kind, 2);
        spec.nchf = 2;
        spec.long_len = 48;
        spec.short_len = 12;
        spec.daily_len = 12;
        spec.hidden_size = 3;
        spec.pooled_convs = [Geom::new(3, 2, 1), Geom::new(3, 2, 1), Geom::new(3, 1, 1)];
        spec.pooled_pools = [Geom::new(2, 2, 0); 3];
        spec.serial_convs = [Geom::new(3, 2, 1), Geom::new(3, 2, 1), Geom::new(3, 1, 1)];
        spec.head_widths = [8, 4];
        spec.branch_width = 5;
        spec.fused_width = 4;
        spec
    }

    pub(super) fn filled(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = Rng::new(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.uniform(-1.0, 1.0))
    }

    #[test]
    fn default_serial_stack_reports_benchmark_lengths() {
        let spec = ModelSpec::new(ModelKind::CnnSLstm, 6);
        assert_eq!(spec.serial_chain().unwrap(), vec![1681, 841, 210]);
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn default_pooled_stack_flattens_to_864() {
        let spec = ModelSpec::new(ModelKind::CnnOnly, 6);
        let (lens, flat) = spec.pooled_chain().unwrap();
        assert_eq!(lens, vec![1681, 841, 421, 211, 53, 27]);
        assert_eq!(flat, 27 * 32);
    }

    #[test]
    fn channel_schedule_doubles_from_nchf() {
        let spec = ModelSpec::new(ModelKind::CnnSLstm, 6);
        assert_eq!(spec.channels(), [6, 8, 16, 32]);
        assert_eq!(spec.lstm_input_size(), 6 + 32);
    }

    #[test]
    fn daily_plus_hourly_input_size_doubles_n() {
        let spec = ModelSpec::new(ModelKind::LstmWDpH, 11);
        assert_eq!(spec.lstm_input_size(), 22);
    }

    #[test]
    fn serial_stack_longer_than_short_window_is_rejected() {
        let mut spec = ModelSpec::new(ModelKind::CnnSLstm, 6);
        spec.short_len = 100; // conv stack yields 210 > 100
        let err = spec.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("210") && msg.contains("100"), "{msg}");
    }

    #[test]
    fn daily_hourly_length_mismatch_is_rejected() {
        let mut spec = ModelSpec::new(ModelKind::LstmWDpH, 3);
        spec.daily_len = 100;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn zero_parameters_give_zero_output_for_every_kind() {
        for kind in ModelKind::ALL {
            let spec = tiny_spec(kind);
            let mut model = Model::build(&spec, &mut Rng::new(1)).unwrap();
            for p in model.params_mut() {
                p.values_slice_mut().iter_mut().for_each(|v| *v = 0.0);
            }
            let long = filled(2, 48, 3);
            let short = filled(2, 12, 4);
            let daily = filled(2, 12, 5);
            let input = AssembledInput {
                long_window: Some(long.view()),
                short_window: Some(short.view()),
                daily_window: Some(daily.view()),
            };
            let y = model.forward(&input).unwrap();
            assert_eq!(y, 0.0, "{:?}", kind);
        }
    }

    #[test]
    fn outputs_are_finite_for_finite_inputs() {
        for kind in ModelKind::ALL {
            let spec = tiny_spec(kind);
            let mut model = Model::build(&spec, &mut Rng::new(11)).unwrap();
            let long = filled(2, 48, 13) * 50.0;
            let short = filled(2, 12, 14) * 50.0;
            let daily = filled(2, 12, 15) * 50.0;
            let input = AssembledInput {
                long_window: Some(long.view()),
                short_window: Some(short.view()),
                daily_window: Some(daily.view()),
            };
            let y = model.forward(&input).unwrap();
            assert!(y.is_finite(), "{:?}", kind);
        }
    }

    #[test]
    fn missing_window_error_names_the_window() {
        let spec = tiny_spec(ModelKind::CnnSLstm);
        let mut model = Model::build(&spec, &mut Rng::new(2)).unwrap();
        let long = filled(2, 48, 6);
        let input = AssembledInput::long(long.view());
        let err = model.forward(&input).unwrap_err();
        assert!(err.to_string().contains("short_window"), "{err}");
    }

    #[test]
    fn wrong_window_shape_error_names_the_window() {
        let spec = tiny_spec(ModelKind::CnnOnly);
        let mut model = Model::build(&spec, &mut Rng::new(2)).unwrap();
        let long = filled(2, 47, 6);
        let input = AssembledInput::long(long.view());
        let err = model.forward(&input).unwrap_err();
        assert!(err.to_string().contains("long_window"), "{err}");
    }

    #[test]
    fn kind_labels_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(ModelKind::parse(kind.label()).unwrap(), kind);
        }
        assert!(ModelKind::parse("resnet").is_err());
    }
}
