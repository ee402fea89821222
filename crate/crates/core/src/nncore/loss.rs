use super::tensor::{Scalar, Tensor4};
use crate::Result;

/// Mean squared error over all elements and its gradient w.r.t. `pred`.
pub fn mse_loss<T: Scalar>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<(f64, Tensor4<T>)> {
    target.expect_shape(pred.shape())?;
    let count = pred.shape().len().max(1) as f64;
    let scale = T::cast_from(2.0 / count);
    let mut sum = 0.0f64;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p - t;
            sum += d.as_f64() * d.as_f64();
            d * scale
        })
        .collect();
    Ok((sum / count, Tensor4::from_vec(pred.shape(), grad)?))
}
