use super::real::Real;
use super::tensor::Tensor;
use crate::error::Result;

/// Floor on the loss in the gradient denominator, so identical tensors give a zero gradient.
pub const RMSE_EPS: f64 = 1e-12;

/// Root-mean-square error and its gradient with respect to `yhat`.
pub fn rmse_loss<T: Real>(y: &Tensor<T>, yhat: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    yhat.expect_shape(y.shape())?;
    let n = y.len().max(1);
    // Accumulate in f64 so the f32 training loss is not dominated by summation error.
    let sq: f64 = y
        .data()
        .iter()
        .zip(yhat.data())
        .map(|(&a, &b)| {
            let d = (b - a).as_f64();
            d * d
        })
        .sum();
    let loss = (sq / n as f64).sqrt();
    let denom = n as f64 * loss.max(RMSE_EPS);
    let data = y
        .data()
        .iter()
        .zip(yhat.data())
        .map(|(&a, &b)| T::from_f64((b - a).as_f64() / denom))
        .collect();
    Ok((T::from_f64(loss), Tensor::from_vec(y.shape(), data)?))
}
