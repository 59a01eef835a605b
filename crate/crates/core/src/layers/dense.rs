use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, Param, Rng};

/// Fully connected layer: `y = W x + b` with `W: [out x in]`.
pub struct Dense {
    pub w: Param,
    pub b: Param,
    in_dim: usize,
    out_dim: usize,
    cache: Option<Array1<f64>>,
}

impl Dense {
    pub fn new(name_prefix: &str, in_dim: usize, out_dim: usize, rng: &mut Rng) -> Result<Dense> {
        if in_dim < 1 || out_dim < 1 {
            return Err(Error::Config("dense: dimensions must be >= 1".into()));
        }
        let w = Param::glorot(
            format!("{name_prefix}.w"),
            &[out_dim, in_dim],
            in_dim,
            out_dim,
            rng,
        );
        let b = Param::zeros(format!("{name_prefix}.b"), &[out_dim]);
        Ok(Dense {
            w,
            b,
            in_dim,
            out_dim,
            cache: None,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn forward(&mut self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::Shape(format!(
                "dense: input length {} does not match weight columns {}",
                x.len(),
                self.in_dim
            )));
        }
        let x = x.to_owned();
        let xs = x.as_slice().unwrap();
        let w = self.w.values_slice();
        let b = self.b.values_slice();
        let mut y = Array1::zeros(self.out_dim);
        for o in 0..self.out_dim {
            y[o] = dot(&w[o * self.in_dim..(o + 1) * self.in_dim], xs) + b[o];
        }
        self.cache = Some(x);
        Ok(y)
    }

    pub fn backward(&mut self, dout: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let x = self
            .cache
            .take()
            .ok_or_else(|| Error::State("dense backward called without a cached forward".into()))?;
        if dout.len() != self.out_dim {
            return Err(Error::Shape(format!(
                "dense backward: gradient length {} does not match output {}",
                dout.len(),
                self.out_dim
            )));
        }
        let xs = x.as_slice().unwrap();
        let w = self.w.values_slice().to_vec();
        let dw = self.w.grad_slice_mut();
        let mut dx = Array1::zeros(self.in_dim);
        let dxs = dx.as_slice_mut().unwrap();
        for o in 0..self.out_dim {
            let g = dout[o];
            self.b.grad_slice_mut()[o] += g;
            if g == 0.0 {
                continue;
            }
            axpy(g, xs, &mut dw[o * self.in_dim..(o + 1) * self.in_dim]);
            axpy(g, &w[o * self.in_dim..(o + 1) * self.in_dim], dxs);
        }
        Ok(dx)
    }
}
