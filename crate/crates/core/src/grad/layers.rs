//! Pointwise layers acting on activations laid out as `[channels × pixels…]`.
//! Every axis after the first is treated as a flat pixel axis, so a batch can
//! be passed as `[c × batch × nx × nz]`.

use super::real::{gemm, MatMut, MatRef, Real};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// A differentiable map with parameters. `backward` must be given the context
/// produced by `forward` on the same input.
pub trait Layer<T: Real> {
    type Ctx;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Self::Ctx)>;

    /// Returns the input gradient and one gradient per parameter tensor, in
    /// the order of [`Layer::params`].
    fn backward(&self, ctx: &Self::Ctx, grad_y: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>)>;

    fn params(&self) -> Vec<&Tensor<T>>;
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>>;
}

fn split_channels<T: Real>(x: &Tensor<T>, expect: usize) -> Result<(usize, Vec<usize>)> {
    let shape = x.shape();
    if shape.is_empty() || shape[0] != expect {
        return Err(Error::Contract(format!(
            "expected {expect} channels on the first axis, got shape {shape:?}"
        )));
    }
    Ok((x.len() / expect.max(1), shape.to_vec()))
}

/// Channel-mixing affine map `y = W·x + b` applied at every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `[c_out × c_in]`
    pub w: Tensor<T>,
    /// `[c_out]`
    pub b: Tensor<T>,
}

impl<T: Real> Dense<T> {
    pub fn new(w: Tensor<T>, b: Tensor<T>) -> Result<Self> {
        if w.shape().len() != 2 || b.shape() != [w.dim(0)] {
            return Err(Error::Contract(format!(
                "dense weights {:?} and bias {:?} do not conform",
                w.shape(),
                b.shape()
            )));
        }
        Ok(Self { w, b })
    }

    pub fn zeros(c_in: usize, c_out: usize) -> Self {
        Self {
            w: Tensor::zeros(&[c_out, c_in]),
            b: Tensor::zeros(&[c_out]),
        }
    }

    pub fn c_in(&self) -> usize {
        self.w.dim(1)
    }

    pub fn c_out(&self) -> usize {
        self.w.dim(0)
    }

    /// Forward pass without a context.
    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (pix, mut shape) = split_channels(x, self.c_in())?;
        let (ci, co) = (self.c_in(), self.c_out());
        shape[0] = co;
        let mut y = Tensor::zeros(&shape);
        {
            let yd = y.data_mut();
            for (o, &bias) in self.b.data().iter().enumerate() {
                yd[o * pix..(o + 1) * pix].iter_mut().for_each(|v| *v = bias);
            }
        }
        gemm(
            T::one(),
            MatRef::new(self.w.data(), co, ci),
            MatRef::new(x.data(), ci, pix),
            T::one(),
            MatMut::new(y.data_mut(), co, pix),
        );
        Ok(y)
    }

    /// Gradients `(dx, dW, db)` given the input and the output gradient.
    pub fn grads(&self, x: &Tensor<T>, gy: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
        let (pix, shape) = split_channels(x, self.c_in())?;
        let (ci, co) = (self.c_in(), self.c_out());
        let (gpix, _) = split_channels(gy, co)?;
        if gpix != pix {
            return Err(Error::Contract("dense output gradient does not match the input".into()));
        }
        let mut dx = Tensor::zeros(&shape);
        gemm(
            T::one(),
            MatRef::new(self.w.data(), co, ci).t(),
            MatRef::new(gy.data(), co, pix),
            T::zero(),
            MatMut::new(dx.data_mut(), ci, pix),
        );
        let mut dw = Tensor::zeros(&[co, ci]);
        gemm(
            T::one(),
            MatRef::new(gy.data(), co, pix),
            MatRef::new(x.data(), ci, pix).t(),
            T::zero(),
            MatMut::new(dw.data_mut(), co, ci),
        );
        let db = Tensor::from_fn(&[co], |o| gy.data()[o * pix..(o + 1) * pix].iter().copied().sum());
        Ok((dx, dw, db))
    }
}

impl<T: Real> Layer<T> for Dense<T> {
    type Ctx = Tensor<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        Ok((self.apply(x)?, x.clone()))
    }

    fn backward(&self, x: &Tensor<T>, gy: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>)> {
        let (dx, dw, db) = self.grads(x, gy)?;
        Ok((dx, vec![dw, db]))
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Default negative-side slope of [`leaky_relu`].
pub const LEAKY_SLOPE: f64 = 0.01;

/// `x` for `x ≥ 0`, `slope·x` otherwise.
pub fn leaky_relu<T: Real>(x: &Tensor<T>, slope: T) -> Tensor<T> {
    x.map(|v| if v >= T::zero() { v } else { slope * v })
}

/// Multiplies `grad` by the activation derivative at the pre-activation `x`
/// (1 on the non-negative side, so the subgradient at 0 is 1).
pub fn leaky_relu_backward<T: Real>(x: &Tensor<T>, grad: &Tensor<T>, slope: T) -> Result<Tensor<T>> {
    grad.expect_shape(x.shape())?;
    let data = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| if v >= T::zero() { g } else { slope * g })
        .collect();
    Tensor::from_vec(x.shape(), data)
}

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    leaky_relu(x, T::zero())
}

pub fn relu_backward<T: Real>(x: &Tensor<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
    leaky_relu_backward(x, grad, T::zero())
}

/// Parameter-free activation wrapped as a [`Layer`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakyRelu {
    pub slope: f64,
}

impl<T: Real> Layer<T> for LeakyRelu {
    type Ctx = Tensor<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        Ok((leaky_relu(x, T::from_f64(self.slope)), x.clone()))
    }

    fn backward(&self, x: &Tensor<T>, gy: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>)> {
        Ok((leaky_relu_backward(x, gy, T::from_f64(self.slope))?, Vec::new()))
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        Vec::new()
    }
}
