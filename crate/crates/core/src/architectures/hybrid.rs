use ndarray::{s, Array1, Array2, ArrayView2};

use super::cnn::{
    build_pooled_stack, flatten, stack_backward, stack_forward, stack_params_mut, unflatten,
    ConvPoolStage,
};
use super::{require_window, AssembledInput, InputGrads, ModelSpec};
use crate::error::Result;
use crate::layers::{ActKind, Activation, Conv1d, Dense};
use crate::numerics::{Param, Rng};
use crate::recurrent::Lstm;

/// Serial hybrid: an unpooled conv stack compresses the long window into a
/// feature map whose length matches the short window; the feature map is
/// concatenated channel-wise under the short window (N meteorological rows,
/// then P feature rows) and the LSTM consumes the combined sequence.
pub struct CnnSLstmModel {
    pub spec: ModelSpec,
    convs: Vec<(Conv1d, Activation)>,
    lstm: Lstm,
    head: Dense,
    fmap_len: usize,
}

impl CnnSLstmModel {
    pub fn new(spec: &ModelSpec, rng: &mut Rng) -> Result<CnnSLstmModel> {
        let ch = spec.channels();
        let mut convs = Vec::with_capacity(3);
        for i in 0..3 {
            convs.push((
                Conv1d::new(
                    &format!("cnn.conv{i}"),
                    spec.serial_convs[i].conv_spec(ch[i], ch[i + 1]),
                    rng,
                )?,
                Activation::new(ActKind::Relu),
            ));
        }
        let fmap_len = *spec.serial_chain()?.last().unwrap();
        Ok(CnnSLstmModel {
            spec: spec.clone(),
            convs,
            lstm: Lstm::new("lstm", spec.lstm_input_size(), spec.hidden_size, rng)?,
            head: Dense::new("head", spec.hidden_size, 1, rng)?,
            fmap_len,
        })
    }

    fn conv_forward(&mut self, long: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut x = long.to_owned();
        for (conv, relu) in &mut self.convs {
            x = conv.forward(x.view())?;
            relu.forward_inplace(x.as_slice_mut().unwrap());
        }
        Ok(x)
    }

    pub fn forward(&mut self, input: &AssembledInput<'_>) -> Result<f64> {
        let n = self.spec.n_vars;
        let long = require_window(input.long_window, "long_window", n, self.spec.long_len)?;
        let short = require_window(input.short_window, "short_window", n, self.spec.short_len)?;
        let fmap = self.conv_forward(long)?;
        let p = fmap.nrows();
        let i_len = self.spec.short_len;
        let mut combined = Array2::zeros((n + p, i_len));
        combined.slice_mut(s![..n, ..]).assign(&short);
        // When the feature map is shorter than the short window, left-pad
        // with zeros so both sequences end at the target time.
        let pad = i_len - self.fmap_len;
        combined.slice_mut(s![n.., pad..]).assign(&fmap);
        let h = self.lstm.forward(combined.view())?;
        Ok(self.head.forward(h.view())?[0])
    }

    pub fn backward(&mut self, dy: f64, need_input_grads: bool) -> Result<Option<InputGrads>> {
        let dh = self.head.backward(ndarray::arr1(&[dy]).view())?;
        // The feature-map rows always need gradients — they feed the convs.
        let d_combined = self.lstm.backward(dh.view(), true)?.unwrap();
        let n = self.spec.n_vars;
        let pad = self.spec.short_len - self.fmap_len;
        let mut d = d_combined.slice(s![n.., pad..]).to_owned();
        for (conv, relu) in self.convs[1..].iter_mut().rev() {
            relu.backward_inplace(d.as_slice_mut().unwrap());
            d = conv.backward(d.view(), true)?.unwrap();
        }
        let (conv0, relu0) = &mut self.convs[0];
        relu0.backward_inplace(d.as_slice_mut().unwrap());
        let d_long = conv0.backward(d.view(), need_input_grads)?;
        Ok(if need_input_grads {
            Some(InputGrads {
                long_window: d_long,
                short_window: Some(d_combined.slice(s![..n, ..]).to_owned()),
                daily_window: None,
            })
        } else {
            None
        })
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self
            .convs
            .iter_mut()
            .flat_map(|(c, _)| c.params_mut())
            .collect();
        out.extend(self.lstm.params_mut());
        out.extend(self.head.params_mut());
        out
    }
}

/// Parallel hybrid: the pooled conv stack plus a dense layer summarize the
/// long window; an LSTM reads the short window; both summaries are
/// concatenated (CNN features first) and passed through a small dense head.
pub struct CnnPLstmModel {
    pub spec: ModelSpec,
    stages: Vec<ConvPoolStage>,
    branch_fc: Dense,
    branch_relu: Activation,
    lstm: Lstm,
    fused_fc: Dense,
    fused_relu: Activation,
    out_fc: Dense,
    fmap_shape: (usize, usize),
}

impl CnnPLstmModel {
    pub fn new(spec: &ModelSpec, rng: &mut Rng) -> Result<CnnPLstmModel> {
        let (lens, flat) = spec.pooled_chain()?;
        let stages = build_pooled_stack(spec, rng)?;
        Ok(CnnPLstmModel {
            spec: spec.clone(),
            stages,
            branch_fc: Dense::new("cnn.fc", flat, spec.branch_width, rng)?,
            branch_relu: Activation::new(ActKind::Relu),
            lstm: Lstm::new("lstm", spec.n_vars, spec.hidden_size, rng)?,
            fused_fc: Dense::new(
                "head.fc1",
                spec.branch_width + spec.hidden_size,
                spec.fused_width,
                rng,
            )?,
            fused_relu: Activation::new(ActKind::Relu),
            out_fc: Dense::new("head.fc2", spec.fused_width, 1, rng)?,
            fmap_shape: (spec.channels()[3], *lens.last().unwrap()),
        })
    }

    pub fn forward(&mut self, input: &AssembledInput<'_>) -> Result<f64> {
        let n = self.spec.n_vars;
        let long = require_window(input.long_window, "long_window", n, self.spec.long_len)?;
        let short = require_window(input.short_window, "short_window", n, self.spec.short_len)?;
        let fmap = stack_forward(&mut self.stages, long)?;
        let mut feat = self.branch_fc.forward(flatten(fmap).view())?;
        self.branch_relu
            .forward_inplace(feat.as_slice_mut().unwrap());
        let h = self.lstm.forward(short)?;
        let mut concat = Array1::zeros(feat.len() + h.len());
        concat.slice_mut(s![..feat.len()]).assign(&feat);
        concat.slice_mut(s![feat.len()..]).assign(&h);
        let mut z = self.fused_fc.forward(concat.view())?;
        self.fused_relu.forward_inplace(z.as_slice_mut().unwrap());
        Ok(self.out_fc.forward(z.view())?[0])
    }

    pub fn backward(&mut self, dy: f64, need_input_grads: bool) -> Result<Option<InputGrads>> {
        let mut dz = self.out_fc.backward(ndarray::arr1(&[dy]).view())?;
        self.fused_relu.backward_inplace(dz.as_slice_mut().unwrap());
        let d_concat = self.fused_fc.backward(dz.view())?;
        let w = self.spec.branch_width;
        let mut d_feat = d_concat.slice(s![..w]).to_owned();
        let d_h = d_concat.slice(s![w..]).to_owned();
        let d_short = self.lstm.backward(d_h.view(), need_input_grads)?;
        self.branch_relu
            .backward_inplace(d_feat.as_slice_mut().unwrap());
        let d_flat = self.branch_fc.backward(d_feat.view())?;
        let d_long = stack_backward(
            &mut self.stages,
            unflatten(d_flat, self.fmap_shape),
            need_input_grads,
        )?;
        Ok(if need_input_grads {
            Some(InputGrads {
                long_window: d_long,
                short_window: d_short,
                daily_window: None,
            })
        } else {
            None
        })
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = stack_params_mut(&mut self.stages);
        out.extend(self.branch_fc.params_mut());
        out.extend(self.lstm.params_mut());
        out.extend(self.fused_fc.params_mut());
        out.extend(self.out_fc.params_mut());
        out
    }
}
