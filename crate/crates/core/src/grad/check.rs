//! Finite-difference verification of analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::Layer;
use super::tensor::Tensor;

/// Default central-difference step.
pub const FD_EPS: f64 = 1e-6;

/// Relative error between two gradient tensors, measured in the Euclidean norm:
/// `‖a − n‖ / max(‖a‖, ‖n‖)`, or the absolute difference when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut na = 0.0;
    let mut nn = 0.0;
    for (&a, &n) in analytic.iter().zip(numeric) {
        diff += (a - n) * (a - n);
        na += a * a;
        nn += n * n;
    }
    let scale = na.sqrt().max(nn.sqrt());
    if scale < 1e-300 {
        diff.sqrt()
    } else {
        diff.sqrt() / scale
    }
}

/// Central differences of the scalar `f` with respect to every entry of every
/// tensor in `args`.
pub fn numeric_gradients(f: &dyn Fn(&[Tensor<f64>]) -> f64, args: &[Tensor<f64>], eps: f64) -> Vec<Tensor<f64>> {
    let mut work = args.to_vec();
    let mut out = Vec::with_capacity(args.len());
    for k in 0..args.len() {
        let mut g = Tensor::zeros(args[k].shape());
        for i in 0..args[k].len() {
            let orig = work[k].data()[i];
            work[k].data_mut()[i] = orig + eps;
            let up = f(&work);
            work[k].data_mut()[i] = orig - eps;
            let down = f(&work);
            work[k].data_mut()[i] = orig;
            g.data_mut()[i] = (up - down) / (2.0 * eps);
        }
        out.push(g);
    }
    out
}

/// Largest per-tensor relative error between `analytic` and the central
/// differences of `f` at `args`.
pub fn check_function(
    f: &dyn Fn(&[Tensor<f64>]) -> f64,
    args: &[Tensor<f64>],
    analytic: &[Tensor<f64>],
    eps: f64,
) -> f64 {
    numeric_gradients(f, args, eps)
        .iter()
        .zip(analytic)
        .map(|(n, a)| relative_error(a.data(), n.data()))
        .fold(0.0, f64::max)
}

/// Random projection tensor used to turn a layer output into a scalar loss.
pub fn probe(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

/// Checks a layer's backward pass against central differences over its input
/// and all parameters, using the scalar loss `Σ c ⊙ layer(x)` for a fixed random
/// `c`. Returns the maximum relative error over the input and parameter tensors.
pub fn grad_check<L>(layer: &L, x: &Tensor<f64>, eps: f64) -> f64
where
    L: Layer<f64> + Clone,
{
    let (y, ctx) = layer.forward(x).expect("forward on the check input");
    let c = probe(y.shape(), 0x5eed);
    let (dx, dparams) = layer.backward(&ctx, &c).expect("backward on the check input");

    let mut args = vec![x.clone()];
    args.extend(layer.params().into_iter().cloned());
    let mut analytic = vec![dx];
    analytic.extend(dparams);

    let f = |a: &[Tensor<f64>]| {
        let mut l = layer.clone();
        for (p, v) in l.params_mut().into_iter().zip(&a[1..]) {
            *p = v.clone();
        }
        let (y, _) = l.forward(&a[0]).expect("forward during finite differences");
        y.data().iter().zip(c.data()).map(|(a, b)| a * b).sum()
    };
    check_function(&f, &args, &analytic, eps)
}
