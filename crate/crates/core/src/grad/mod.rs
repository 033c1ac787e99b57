//! Minimal differentiable building blocks: tensors, pointwise layers, the RMSE
//! loss, Adam and a finite-difference gradient checker.

pub mod adam;
pub mod check;
pub mod layers;
pub mod loss;
pub mod real;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use check::{check_function, grad_check, numeric_gradients, probe, relative_error, FD_EPS};
pub use layers::{leaky_relu, leaky_relu_backward, relu, relu_backward, Dense, Layer, LeakyRelu, LEAKY_SLOPE};
pub use loss::rmse_loss;
pub use real::{gemm, MatMut, MatRef, Real};
pub use tensor::Tensor;
