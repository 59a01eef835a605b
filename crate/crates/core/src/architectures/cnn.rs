use ndarray::{Array1, Array2, ArrayView2};

use super::{require_window, AssembledInput, InputGrads, ModelSpec};
use crate::error::Result;
use crate::layers::{ActKind, Activation, Conv1d, Dense, Pool1d};
use crate::numerics::{Param, Rng};

/// One conv -> ReLU -> max-pool stage of the pooled stack.
pub(super) struct ConvPoolStage {
    conv: Conv1d,
    relu: Activation,
    pool: Pool1d,
}

impl ConvPoolStage {
    fn forward(&mut self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut v = self.conv.forward(x)?;
        self.relu.forward_inplace(v.as_slice_mut().unwrap());
        self.pool.forward(v.view())
    }

    fn backward(
        &mut self,
        dout: ArrayView2<'_, f64>,
        need_input_grad: bool,
    ) -> Result<Option<Array2<f64>>> {
        let mut dv = self.pool.backward(dout)?;
        self.relu.backward_inplace(dv.as_slice_mut().unwrap());
        self.conv.backward(dv.view(), need_input_grad)
    }
}

/// Builds the three-stage pooled stack shared by the pure CNN and the
/// parallel hybrid's CNN branch.
pub(super) fn build_pooled_stack(spec: &ModelSpec, rng: &mut Rng) -> Result<Vec<ConvPoolStage>> {
    let ch = spec.channels();
    let mut stages = Vec::with_capacity(3);
    for i in 0..3 {
        stages.push(ConvPoolStage {
            conv: Conv1d::new(
                &format!("cnn.conv{i}"),
                spec.pooled_convs[i].conv_spec(ch[i], ch[i + 1]),
                rng,
            )?,
            relu: Activation::new(ActKind::Relu),
            pool: Pool1d::new(spec.pooled_pools[i].pool_spec())?,
        });
    }
    Ok(stages)
}

pub(super) fn stack_forward(
    stages: &mut [ConvPoolStage],
    long: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let mut x = stages[0].forward(long)?;
    for stage in &mut stages[1..] {
        x = stage.forward(x.view())?;
    }
    Ok(x)
}

pub(super) fn stack_backward(
    stages: &mut [ConvPoolStage],
    dout: Array2<f64>,
    need_input_grad: bool,
) -> Result<Option<Array2<f64>>> {
    let mut d = dout;
    for stage in stages[1..].iter_mut().rev() {
        d = stage.backward(d.view(), true)?.unwrap();
    }
    stages[0].backward(d.view(), need_input_grad)
}

pub(super) fn stack_params_mut(stages: &mut [ConvPoolStage]) -> Vec<&mut Param> {
    stages
        .iter_mut()
        .flat_map(|s| s.conv.params_mut())
        .collect()
}

/// Row-major (channel-major) flattening of a feature map into a vector.
pub(super) fn flatten(fmap: Array2<f64>) -> Array1<f64> {
    let n = fmap.len();
    fmap.into_shape_with_order(n)
        .expect("feature map not contiguous")
}

pub(super) fn unflatten(flat: Array1<f64>, shape: (usize, usize)) -> Array2<f64> {
    flat.into_shape_with_order(shape)
        .expect("flat gradient length mismatch")
}

/// Pure convolutional model over the long hourly window: three
/// conv/ReLU/max-pool stages, then a three-layer dense head with ReLU after
/// the first two layers.
pub struct CnnOnlyModel {
    pub spec: ModelSpec,
    stages: Vec<ConvPoolStage>,
    fc1: Dense,
    relu1: Activation,
    fc2: Dense,
    relu2: Activation,
    fc3: Dense,
    fmap_shape: (usize, usize),
}

impl CnnOnlyModel {
    pub fn new(spec: &ModelSpec, rng: &mut Rng) -> Result<CnnOnlyModel> {
        let (lens, flat) = spec.pooled_chain()?;
        let stages = build_pooled_stack(spec, rng)?;
        let [w1, w2] = spec.head_widths;
        Ok(CnnOnlyModel {
            spec: spec.clone(),
            stages,
            fc1: Dense::new("head.fc1", flat, w1, rng)?,
            relu1: Activation::new(ActKind::Relu),
            fc2: Dense::new("head.fc2", w1, w2, rng)?,
            relu2: Activation::new(ActKind::Relu),
            fc3: Dense::new("head.fc3", w2, 1, rng)?,
            fmap_shape: (spec.channels()[3], *lens.last().unwrap()),
        })
    }

    pub fn forward(&mut self, input: &AssembledInput<'_>) -> Result<f64> {
        let long = require_window(
            input.long_window,
            "long_window",
            self.spec.n_vars,
            self.spec.long_len,
        )?;
        let fmap = stack_forward(&mut self.stages, long)?;
        let mut v = self.fc1.forward(flatten(fmap).view())?;
        self.relu1.forward_inplace(v.as_slice_mut().unwrap());
        let mut v = self.fc2.forward(v.view())?;
        self.relu2.forward_inplace(v.as_slice_mut().unwrap());
        Ok(self.fc3.forward(v.view())?[0])
    }

    pub fn backward(&mut self, dy: f64, need_input_grads: bool) -> Result<Option<InputGrads>> {
        let mut d = self.fc3.backward(ndarray::arr1(&[dy]).view())?;
        self.relu2.backward_inplace(d.as_slice_mut().unwrap());
        let mut d = self.fc2.backward(d.view())?;
        self.relu1.backward_inplace(d.as_slice_mut().unwrap());
        let d = self.fc1.backward(d.view())?;
        let d_long = stack_backward(
            &mut self.stages,
            unflatten(d, self.fmap_shape),
            need_input_grads,
        )?;
        Ok(d_long.map(|g| InputGrads {
            long_window: Some(g),
            short_window: None,
            daily_window: None,
        }))
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = stack_params_mut(&mut self.stages);
        out.extend(self.fc1.params_mut());
        out.extend(self.fc2.params_mut());
        out.extend(self.fc3.params_mut());
        out
    }
}
