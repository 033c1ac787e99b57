use super::real::Real;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Moment estimates and hyper-parameters of the Adam optimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Real> AdamState<T> {
    /// Zero moments shaped like `params`, with the usual defaults.
    pub fn new(params: &[&Tensor<T>]) -> Self {
        Self::with_hyper(params, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(params: &[&Tensor<T>], beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step_count: 0,
            beta1,
            beta2,
            eps,
        }
    }
}

/// One bias-corrected Adam update. `names` label the tensors in error messages.
/// Gradients are validated before anything is modified.
pub fn adam_step<T: Real>(
    params: &mut [&mut Tensor<T>],
    grads: &[Tensor<T>],
    names: &[String],
    state: &mut AdamState<T>,
    lr: f64,
) -> Result<()> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::Parameter(format!("learning rate must be positive, got {lr}")));
    }
    if params.len() != grads.len() || params.len() != state.m.len() || names.len() != params.len() {
        return Err(Error::Contract("parameter, gradient and optimiser lists differ in length".into()));
    }
    for ((p, g), name) in params.iter().zip(grads).zip(names) {
        g.expect_shape(p.shape())?;
        if !g.all_finite() {
            return Err(Error::Numerical(format!("non-finite gradient in tensor {name}")));
        }
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (T::from_f64(state.beta1), T::from_f64(state.beta2));
    let (one, eps) = (T::one(), T::from_f64(state.eps));
    let bc1 = T::from_f64(1.0 - state.beta1.powi(t));
    let bc2 = T::from_f64(1.0 - state.beta2.powi(t));
    let lr = T::from_f64(lr);
    for (k, p) in params.iter_mut().enumerate() {
        let g = grads[k].data();
        let m = state.m[k].data_mut();
        let v = state.v[k].data_mut();
        for (i, x) in p.data_mut().iter_mut().enumerate() {
            m[i] = b1 * m[i] + (one - b1) * g[i];
            v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            *x -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn first_step_is_lr_sized() {
        let mut p = Tensor::<f64>::zeros(&[1]);
        let g = Tensor::from_vec(&[1], vec![0.5]).unwrap();
        let mut st = AdamState::new(&[&p]);
        adam_step(&mut [&mut p], &[g], &names(1), &mut st, 0.001).unwrap();
        let expect = -0.001 * 0.5 / (0.5 + 1e-8);
        assert!((p.data()[0] - expect).abs() < 1e-15);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Tensor::<f32>::from_fn(&[3], |i| i as f32);
        let before = p.clone();
        let mut st = AdamState::new(&[&p]);
        for _ in 0..3 {
            adam_step(&mut [&mut p], &[Tensor::zeros(&[3])], &names(1), &mut st, 0.01).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(st.step_count, 3);
    }

    #[test]
    fn non_finite_gradient_names_tensor_and_changes_nothing() {
        let mut a = Tensor::<f64>::zeros(&[2]);
        let mut b = Tensor::<f64>::zeros(&[2]);
        let mut st = AdamState::new(&[&a, &b]);
        let grads = [Tensor::full(&[2], 1.0), Tensor::from_vec(&[2], vec![0.0, f64::NAN]).unwrap()];
        let err = adam_step(&mut [&mut a, &mut b], &grads, &names(2), &mut st, 0.01).unwrap_err();
        assert!(matches!(&err, Error::Numerical(m) if m.contains("p1")));
        assert_eq!(st.step_count, 0);
        assert!(a.data().iter().all(|&v| v == 0.0));
    }
}
