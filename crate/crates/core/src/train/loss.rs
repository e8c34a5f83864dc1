use crate::error::Result;
use crate::tensor::Tensor4;

/// Mean squared error and its gradient `2 (pred - target) / N`.
pub fn mse_loss(pred: &Tensor4, target: &Tensor4) -> Result<(f64, Tensor4)> {
    let diff = pred.sub(target)?;
    let n = diff.len() as f64;
    let loss = diff.data().iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff.scale(2.0 / n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn identical_inputs() {
        let a = Tensor4::from_fn(1, 1, 3, 3, |_, _, y, x| (y * 3 + x) as f64);
        let (l, g) = mse_loss(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_offset() {
        let t = Tensor4::zeros(2, 1, 2, 3);
        let p = Tensor4::full(2, 1, 2, 3, 1.0);
        let (l, g) = mse_loss(&p, &t).unwrap();
        assert_eq!(l, 1.0);
        assert!(g.data().iter().all(|&v| v == 2.0 / 12.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = Tensor4::from_fn(1, 1, 4, 4, |_, _, y, x| ((y * 4 + x) as f64 * 0.9).sin());
        let t = Tensor4::from_fn(1, 1, 4, 4, |_, _, y, x| ((y * 4 + x) as f64 * 0.4).cos());
        let (_, g) = mse_loss(&p, &t).unwrap();
        let eps = 1e-6;
        for i in 0..p.len() {
            let (mut pp, mut pm) = (p.clone(), p.clone());
            pp.data_mut()[i] += eps;
            pm.data_mut()[i] -= eps;
            let num = (mse_loss(&pp, &t).unwrap().0 - mse_loss(&pm, &t).unwrap().0) / (2.0 * eps);
            let ana = g.data()[i];
            assert!((ana - num).abs() / ana.abs().max(num.abs()) < 1e-8);
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = Tensor4::zeros(1, 1, 2, 2);
        let b = Tensor4::zeros(1, 1, 2, 3);
        assert!(matches!(mse_loss(&a, &b), Err(Error::Dimension(_))));
    }
}
