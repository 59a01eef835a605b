//! Seeded randomness, learnable-parameter state, MSE loss, and the Adam
//! optimizer. Everything is 64-bit and deterministic under a fixed seed.

mod adam;
mod loss;
mod param;
mod rng;

pub use adam::{adam_step, AdamConfig};
pub use loss::mse_loss;
pub use param::Param;
pub use rng::Rng;

/// Dot product with a fixed 4-lane accumulation order.
///
/// The unroll both vectorizes under strict FP semantics and pins the
/// summation order, so results are identical on every platform.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = c * 4;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..n {
        tail += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// `out[i] += alpha * x[i]`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), out.len());
    for (o, &xi) in out.iter_mut().zip(x) {
        *o += alpha * xi;
    }
}
