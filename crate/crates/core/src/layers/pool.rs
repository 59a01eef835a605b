use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolKind {
    Max,
    Average,
}

/// Geometry of a 1-D pooling layer. Same length arithmetic as convolution;
/// the channel count is preserved. Padded positions never contribute: max
/// pooling ignores them, average pooling divides by the in-bounds count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub kind: PoolKind,
    pub kernel_size: usize,
    pub stride: usize,
    pub padding: usize,
}

impl PoolSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size < 1 {
            return Err(Error::Config("pool: kernel size must be >= 1".into()));
        }
        if self.stride < 1 {
            return Err(Error::Config("pool: stride must be >= 1".into()));
        }
        // padding >= kernel would create windows with no in-bounds position.
        if self.padding >= self.kernel_size {
            return Err(Error::Config(format!(
                "pool: padding {} must be smaller than kernel {}",
                self.padding, self.kernel_size
            )));
        }
        Ok(())
    }

    pub fn out_len(&self, input_len: usize) -> Result<usize> {
        let padded = input_len + 2 * self.padding;
        if padded < self.kernel_size {
            return Err(Error::Config(format!(
                "pool: padded input length {padded} shorter than kernel {}",
                self.kernel_size
            )));
        }
        Ok((padded - self.kernel_size) / self.stride + 1)
    }
}

struct PoolCache {
    channels: usize,
    in_len: usize,
    out_len: usize,
    /// Max pooling: winning input index per output position, `[ch * out_len + i]`.
    argmax: Vec<usize>,
}

/// 1-D max/average pooling, applied independently per channel.
pub struct Pool1d {
    spec: PoolSpec,
    cache: Option<PoolCache>,
}

impl Pool1d {
    pub fn new(spec: PoolSpec) -> Result<Pool1d> {
        spec.validate()?;
        Ok(Pool1d { spec, cache: None })
    }

    pub fn spec(&self) -> &PoolSpec {
        &self.spec
    }

    /// In-bounds input index range `[lo, hi)` for output position `i`.
    #[inline]
    fn window(&self, i: usize, in_len: usize) -> (usize, usize) {
        let base = (i * self.spec.stride) as isize - self.spec.padding as isize;
        let lo = base.max(0) as usize;
        let hi = (base + self.spec.kernel_size as isize)
            .min(in_len as isize)
            .max(0) as usize;
        (lo, hi.max(lo))
    }

    pub fn forward(&mut self, input: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (channels, in_len) = input.dim();
        let out_len = self.spec.out_len(in_len)?;
        let mut out = Array2::zeros((channels, out_len));
        let mut argmax = vec![
            0usize;
            if self.spec.kind == PoolKind::Max {
                channels * out_len
            } else {
                0
            }
        ];
        for ch in 0..channels {
            for i in 0..out_len {
                let (lo, hi) = self.window(i, in_len);
                if lo >= hi {
                    return Err(Error::Config(format!(
                        "pool: window at position {i} has no in-bounds input"
                    )));
                }
                match self.spec.kind {
                    PoolKind::Max => {
                        // Strict `>` keeps the lowest index on ties.
                        let mut best = input[[ch, lo]];
                        let mut best_j = lo;
                        for j in lo + 1..hi {
                            if input[[ch, j]] > best {
                                best = input[[ch, j]];
                                best_j = j;
                            }
                        }
                        out[[ch, i]] = best;
                        argmax[ch * out_len + i] = best_j;
                    }
                    PoolKind::Average => {
                        let mut sum = 0.0;
                        for j in lo..hi {
                            sum += input[[ch, j]];
                        }
                        out[[ch, i]] = sum / (hi - lo) as f64;
                    }
                }
            }
        }
        self.cache = Some(PoolCache {
            channels,
            in_len,
            out_len,
            argmax,
        });
        Ok(out)
    }

    pub fn backward(&mut self, dout: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("pool backward called without a cached forward".into()))?;
        if dout.dim() != (cache.channels, cache.out_len) {
            return Err(Error::Shape(format!(
                "pool backward: gradient shape {:?} does not match output ({}, {})",
                dout.dim(),
                cache.channels,
                cache.out_len
            )));
        }
        let mut d_input = Array2::zeros((cache.channels, cache.in_len));
        for ch in 0..cache.channels {
            for i in 0..cache.out_len {
                let g = dout[[ch, i]];
                match self.spec.kind {
                    PoolKind::Max => {
                        d_input[[ch, cache.argmax[ch * cache.out_len + i]]] += g;
                    }
                    PoolKind::Average => {
                        let (lo, hi) = self.window(i, cache.in_len);
                        let share = g / (hi - lo) as f64;
                        for j in lo..hi {
                            d_input[[ch, j]] += share;
                        }
                    }
                }
            }
        }
        Ok(d_input)
    }
}
