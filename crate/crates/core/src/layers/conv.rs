use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, Param, Rng};

/// Geometry of a 1-D convolution layer.
///
/// Output length follows `floor((L + 2*padding - kernel)/stride) + 1` with
/// symmetric zero padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels < 1 || self.out_channels < 1 {
            return Err(Error::Config("conv: channel counts must be >= 1".into()));
        }
        if self.kernel_size < 1 {
            return Err(Error::Config("conv: kernel size must be >= 1".into()));
        }
        if self.stride < 1 {
            return Err(Error::Config("conv: stride must be >= 1".into()));
        }
        // padding >= kernel would let windows slide wholly outside the
        // input, where the output is a bare bias with no tap range.
        if self.padding >= self.kernel_size {
            return Err(Error::Config(format!(
                "conv: padding {} must be smaller than kernel {}",
                self.padding, self.kernel_size
            )));
        }
        Ok(())
    }

    pub fn out_len(&self, input_len: usize) -> Result<usize> {
        let padded = input_len + 2 * self.padding;
        if padded < self.kernel_size {
            return Err(Error::Config(format!(
                "conv: padded input length {padded} shorter than kernel {}",
                self.kernel_size
            )));
        }
        let out = (padded - self.kernel_size) / self.stride + 1;
        if out < 1 {
            return Err(Error::Config(format!(
                "conv: output length {out} < 1 for input length {input_len}"
            )));
        }
        Ok(out)
    }

    /// Window geometry for output position `i`: the in-bounds tap range and
    /// the input offset of the first in-bounds tap.
    #[inline]
    fn window(&self, i: usize, in_len: usize) -> (usize, usize, usize) {
        let base = (i * self.stride) as isize - self.padding as isize;
        let m_lo = (-base).max(0) as usize;
        let m_hi = (self.kernel_size as isize)
            .min(in_len as isize - base)
            .max(0) as usize;
        let start = (base + m_lo as isize) as usize;
        (m_lo, m_hi.max(m_lo), start)
    }
}

struct ConvCache {
    input: Array2<f64>,
    out_len: usize,
}

/// 1-D convolution over a `[channels x length]` feature map.
///
/// Kernels are laid out `[out_channel][in_channel][tap]`; this ordering is
/// part of the checkpoint format.
pub struct Conv1d {
    spec: ConvSpec,
    pub kernels: Param,
    pub bias: Param,
    cache: Option<ConvCache>,
}

impl Conv1d {
    pub fn new(name_prefix: &str, spec: ConvSpec, rng: &mut Rng) -> Result<Conv1d> {
        spec.validate()?;
        let (p, n, m) = (spec.out_channels, spec.in_channels, spec.kernel_size);
        let kernels = Param::glorot(
            format!("{name_prefix}.kernel"),
            &[p, n, m],
            n * m,
            p * m,
            rng,
        );
        let bias = Param::zeros(format!("{name_prefix}.bias"), &[p]);
        Ok(Conv1d {
            spec,
            kernels,
            bias,
            cache: None,
        })
    }

    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.kernels, &mut self.bias]
    }

    pub fn forward(&mut self, input: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (n_ch, in_len) = input.dim();
        if n_ch != self.spec.in_channels {
            return Err(Error::Shape(format!(
                "conv: input has {n_ch} channels, spec expects {}",
                self.spec.in_channels
            )));
        }
        let spec = self.spec;
        let out_len = spec.out_len(in_len)?;
        let input = input.to_owned();
        let x = input.as_slice().expect("conv input not contiguous");
        let k = self.kernels.values_slice();
        let b = self.bias.values_slice();
        let (p_ch, m) = (self.spec.out_channels, self.spec.kernel_size);

        let mut out = Array2::zeros((p_ch, out_len));
        {
            let o = out.as_slice_mut().unwrap();
            for p in 0..p_ch {
                for i in 0..out_len {
                    let (m_lo, m_hi, start) = spec.window(i, in_len);
                    let mut acc = b[p];
                    for n in 0..n_ch {
                        let krow = &k[(p * n_ch + n) * m + m_lo..(p * n_ch + n) * m + m_hi];
                        let xrow = &x[n * in_len + start..n * in_len + start + (m_hi - m_lo)];
                        acc += dot(krow, xrow);
                    }
                    o[p * out_len + i] = acc;
                }
            }
        }
        self.cache = Some(ConvCache { input, out_len });
        Ok(out)
    }

    /// Accumulates kernel/bias gradients; returns the input gradient unless
    /// `need_input_grad` is false (the first layer of a stack can skip it).
    pub fn backward(
        &mut self,
        dout: ArrayView2<'_, f64>,
        need_input_grad: bool,
    ) -> Result<Option<Array2<f64>>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("conv backward called without a cached forward".into()))?;
        let spec = self.spec;
        let (n_ch, in_len) = cache.input.dim();
        let (p_ch, m) = (self.spec.out_channels, self.spec.kernel_size);
        if dout.dim() != (p_ch, cache.out_len) {
            return Err(Error::Shape(format!(
                "conv backward: gradient shape {:?} does not match output ({p_ch}, {})",
                dout.dim(),
                cache.out_len
            )));
        }
        let x = cache.input.as_slice().unwrap();
        let k = self.kernels.values_slice().to_vec();
        let dk = self.kernels.grad_slice_mut();
        let mut d_input = if need_input_grad {
            Some(Array2::<f64>::zeros((n_ch, in_len)))
        } else {
            None
        };
        for p in 0..p_ch {
            let mut db = 0.0;
            for i in 0..cache.out_len {
                let g = dout[[p, i]];
                db += g;
                if g == 0.0 {
                    continue;
                }
                let (m_lo, m_hi, start) = spec.window(i, in_len);
                for n in 0..n_ch {
                    let koff = (p * n_ch + n) * m;
                    let xrow = &x[n * in_len + start..n * in_len + start + (m_hi - m_lo)];
                    axpy(g, xrow, &mut dk[koff + m_lo..koff + m_hi]);
                    if let Some(dx) = d_input.as_mut() {
                        let dxs = dx.as_slice_mut().unwrap();
                        axpy(
                            g,
                            &k[koff + m_lo..koff + m_hi],
                            &mut dxs[n * in_len + start..n * in_len + start + (m_hi - m_lo)],
                        );
                    }
                }
            }
            self.bias.grad_slice_mut()[p] += db;
        }
        Ok(d_input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn conv_with_kernel(spec: ConvSpec, kernel: &[f64], bias: &[f64]) -> Conv1d {
        let mut rng = Rng::new(0);
        let mut c = Conv1d::new("t", spec, &mut rng).unwrap();
        c.kernels.values_slice_mut().copy_from_slice(kernel);
        c.bias.values_slice_mut().copy_from_slice(bias);
        c
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 1,
            stride: 1,
            padding: 0,
        };
        let mut c = conv_with_kernel(spec, &[1.0], &[0.0]);
        let input = array![[1.0, 2.0, 3.0, 4.0]];
        let out = c.forward(input.view()).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn two_tap_kernel_sums_neighbors() {
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 2,
            stride: 1,
            padding: 0,
        };
        let mut c = conv_with_kernel(spec, &[1.0, 1.0], &[0.0]);
        let out = c.forward(array![[1.0, 2.0, 3.0, 4.0]].view()).unwrap();
        assert_eq!(out, array![[3.0, 5.0, 7.0]]);
    }

    #[test]
    fn length_formula_matches_hand_computation() {
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 6,
            stride: 3,
            padding: 3,
        };
        assert_eq!(spec.out_len(5040).unwrap(), 1681);
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 4,
            stride: 4,
            padding: 0,
        };
        assert_eq!(spec.out_len(841).unwrap(), 210);
    }

    #[test]
    fn rejects_channel_mismatch_and_degenerate_output() {
        let spec = ConvSpec {
            in_channels: 2,
            out_channels: 1,
            kernel_size: 2,
            stride: 1,
            padding: 0,
        };
        let mut c = Conv1d::new("t", spec, &mut Rng::new(0)).unwrap();
        assert!(matches!(
            c.forward(array![[1.0, 2.0]].view()),
            Err(Error::Shape(_))
        ));
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 9,
            stride: 1,
            padding: 0,
        };
        assert!(matches!(spec.out_len(4), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_padding_reaching_the_kernel_size() {
        // padding >= kernel lets the last windows slide wholly past the
        // input's right edge; such specs must never construct.
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 1,
            stride: 1,
            padding: 2,
        };
        assert!(matches!(
            Conv1d::new("t", spec, &mut Rng::new(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 2,
            kernel_size: 2,
            stride: 1,
            padding: 1,
        };
        let mut c = Conv1d::new("t", spec, &mut Rng::new(1)).unwrap();
        let out = c.forward(array![[1.0, -2.0, 3.0]].view()).unwrap();
        let dz = Array2::zeros(out.dim());
        let dx = c.backward(dz.view(), true).unwrap().unwrap();
        assert!(dx.iter().all(|&g| g == 0.0));
        assert!(c.kernels.grad_slice().iter().all(|&g| g == 0.0));
        assert!(c.bias.grad_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn identity_kernel_backward_passes_gradient_through() {
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 1,
            stride: 1,
            padding: 0,
        };
        let mut c = conv_with_kernel(spec, &[1.0], &[0.0]);
        c.forward(array![[1.0, 2.0, 3.0]].view()).unwrap();
        let g = array![[0.5, -1.0, 2.0]];
        let dx = c.backward(g.view(), true).unwrap().unwrap();
        assert_eq!(dx, g);
    }

    #[test]
    fn backward_without_forward_is_a_state_error() {
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 1,
            stride: 1,
            padding: 0,
        };
        let mut c = Conv1d::new("t", spec, &mut Rng::new(0)).unwrap();
        let g = array![[1.0]];
        assert!(matches!(c.backward(g.view(), true), Err(Error::State(_))));
    }
}
