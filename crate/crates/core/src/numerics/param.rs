use ndarray::{ArrayD, ArrayView2, ArrayView3, ArrayViewMut2, Ix2, Ix3, IxDyn};

use super::rng::Rng;
use crate::error::{Error, Result};

/// A learnable tensor: values plus a same-shape gradient accumulator and
/// Adam moment state.
#[derive(Clone, Debug)]
pub struct Param {
    name: String,
    pub values: ArrayD<f64>,
    pub grad: ArrayD<f64>,
    pub(crate) m: ArrayD<f64>,
    pub(crate) v: ArrayD<f64>,
    pub(crate) step_count: u64,
}

impl Param {
    /// All-zero parameter (the initializer for every bias).
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Param {
        let dim = IxDyn(shape);
        Param {
            name: name.into(),
            values: ArrayD::zeros(dim.clone()),
            grad: ArrayD::zeros(dim.clone()),
            m: ArrayD::zeros(dim.clone()),
            v: ArrayD::zeros(dim),
            step_count: 0,
        }
    }

    /// Glorot-uniform initialization: entries drawn from
    /// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))`.
    pub fn glorot(
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut Rng,
    ) -> Param {
        assert!(fan_in >= 1 && fan_out >= 1, "fans must be >= 1");
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut p = Param::zeros(name, shape);
        for x in p.values.iter_mut() {
            *x = rng.uniform(-limit, limit);
        }
        p
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        self.values.shape()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Replace values from a checkpoint payload; the shape must match.
    pub fn load_values(&mut self, values: ArrayD<f64>) -> Result<()> {
        if values.shape() != self.values.shape() {
            return Err(Error::Shape(format!(
                "tensor '{}': stored shape {:?} does not match model shape {:?}",
                self.name,
                values.shape(),
                self.values.shape()
            )));
        }
        self.values = values;
        Ok(())
    }

    pub fn view2(&self) -> ArrayView2<'_, f64> {
        self.values
            .view()
            .into_dimensionality::<Ix2>()
            .expect("param is not 2-d")
    }

    pub fn view3(&self) -> ArrayView3<'_, f64> {
        self.values
            .view()
            .into_dimensionality::<Ix3>()
            .expect("param is not 3-d")
    }

    pub fn grad2_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.grad
            .view_mut()
            .into_dimensionality::<Ix2>()
            .expect("param is not 2-d")
    }

    /// Flat slices; every Param is standard-layout by construction.
    pub fn values_slice(&self) -> &[f64] {
        self.values.as_slice().expect("param not contiguous")
    }

    pub fn values_slice_mut(&mut self) -> &mut [f64] {
        self.values.as_slice_mut().expect("param not contiguous")
    }

    pub fn grad_slice(&self) -> &[f64] {
        self.grad.as_slice().expect("grad not contiguous")
    }

    pub fn grad_slice_mut(&mut self) -> &mut [f64] {
        self.grad.as_slice_mut().expect("grad not contiguous")
    }
}
