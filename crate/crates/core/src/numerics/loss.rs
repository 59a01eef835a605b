use ndarray::Array1;

use crate::error::{Error, Result};

/// Mean square error and its gradient with respect to the predictions.
///
/// Returns `(1/L) * sum((pred - target)^2)` together with the gradient
/// `(2/L) * (pred - target)`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Array1<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "mse_loss: pred has length {} but target has length {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Config("mse_loss: empty input".into()));
    }
    let inv_l = 1.0 / pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array1::zeros(pred.len());
    for (i, (&p, &t)) in pred.iter().zip(target).enumerate() {
        let d = p - t;
        loss += d * d;
        grad[i] = 2.0 * inv_l * d;
    }
    Ok((loss * inv_l, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_give_zero() {
        let (loss, grad) = mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn single_element_case() {
        let (loss, grad) = mse_loss(&[0.0], &[3.0]).unwrap();
        assert_eq!(loss, 9.0);
        assert_eq!(grad[0], -6.0);
    }

    #[test]
    fn rejects_mismatch_and_empty() {
        assert!(matches!(
            mse_loss(&[1.0], &[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(mse_loss(&[], &[]), Err(Error::Config(_))));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = crate::numerics::Rng::new(123);
        for _ in 0..20 {
            let n = 1 + rng.index(8);
            let pred: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let target: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let (_, grad) = mse_loss(&pred, &target).unwrap();
            let h = 1e-6;
            for i in 0..n {
                let mut plus = pred.clone();
                plus[i] += h;
                let mut minus = pred.clone();
                minus[i] -= h;
                let (lp, _) = mse_loss(&plus, &target).unwrap();
                let (lm, _) = mse_loss(&minus, &target).unwrap();
                let fd = (lp - lm) / (2.0 * h);
                let denom = grad[i].abs().max(fd.abs()).max(1e-8);
                assert!(
                    ((grad[i] - fd) / denom).abs() < 1e-8,
                    "i={i} analytic={} fd={fd}",
                    grad[i]
                );
            }
        }
    }
}
