use serde::{Deserialize, Serialize};

/// Numerically stable logistic sigmoid.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActKind {
    Relu,
    Sigmoid,
    Tanh,
}

/// Element-wise activation with an output cache for the backward pass.
///
/// All three derivatives here are functions of the *output*, so caching the
/// forward result is enough: relu' = [y > 0], sigmoid' = y(1-y),
/// tanh' = 1 - y^2. The relu subgradient at zero is taken as 0.
pub struct Activation {
    kind: ActKind,
    cache: Vec<f64>,
}

impl Activation {
    pub fn new(kind: ActKind) -> Activation {
        Activation {
            kind,
            cache: Vec::new(),
        }
    }

    pub fn kind(&self) -> ActKind {
        self.kind
    }

    pub fn forward_inplace(&mut self, data: &mut [f64]) {
        for v in data.iter_mut() {
            *v = match self.kind {
                ActKind::Relu => v.max(0.0),
                ActKind::Sigmoid => sigmoid(*v),
                ActKind::Tanh => v.tanh(),
            };
        }
        self.cache.clear();
        self.cache.extend_from_slice(data);
    }

    pub fn backward_inplace(&self, grad: &mut [f64]) {
        debug_assert_eq!(
            grad.len(),
            self.cache.len(),
            "activation cache/grad length mismatch"
        );
        for (g, &y) in grad.iter_mut().zip(self.cache.iter()) {
            *g *= match self.kind {
                ActKind::Relu => {
                    if y > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                ActKind::Sigmoid => y * (1.0 - y),
                ActKind::Tanh => 1.0 - y * y,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_clamps_negatives_and_masks_their_gradient() {
        let mut a = Activation::new(ActKind::Relu);
        let mut x = vec![-2.0, 0.0, 3.0];
        a.forward_inplace(&mut x);
        assert_eq!(x, vec![0.0, 0.0, 3.0]);
        let mut g = vec![1.0, 1.0, 1.0];
        a.backward_inplace(&mut g);
        assert_eq!(g, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn sigmoid_midpoint_and_symmetry() {
        assert_eq!(sigmoid(0.0), 0.5);
        let s = sigmoid(2.0);
        assert!((s + sigmoid(-2.0) - 1.0).abs() < 1e-15);
        assert!((s - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        // extreme inputs stay finite and saturate
        assert_eq!(sigmoid(1e4), 1.0);
        assert_eq!(sigmoid(-1e4), 0.0);
    }

    #[test]
    fn sigmoid_gradient_uses_cached_output() {
        let mut a = Activation::new(ActKind::Sigmoid);
        let mut x = vec![0.0];
        a.forward_inplace(&mut x);
        let mut g = vec![1.0];
        a.backward_inplace(&mut g);
        assert!((g[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tanh_gradient_uses_cached_output() {
        let mut a = Activation::new(ActKind::Tanh);
        let mut x = vec![0.5];
        a.forward_inplace(&mut x);
        let y = 0.5f64.tanh();
        let mut g = vec![2.0];
        a.backward_inplace(&mut g);
        assert!((g[0] - 2.0 * (1.0 - y * y)).abs() < 1e-15);
    }
}
