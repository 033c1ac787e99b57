use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grad::{leaky_relu, leaky_relu_backward, relu, relu_backward, Dense, Real, Tensor, LEAKY_SLOPE};
use crate::spectral::{spectral_backward, spectral_forward, SpectralCtx, SpectralPlan, SpectralWeights};

/// Input features per pixel: permeability, porosity, producer mask, rate feature, time.
pub const IN_CHANNELS: usize = 5;
pub const OUT_CHANNELS: usize = 1;
pub const FOURIER_LAYERS: usize = 4;

/// Network hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FnoArch {
    pub width: usize,
    pub modes_x: usize,
    pub modes_z: usize,
    pub fc2_width: usize,
    /// Whether the Fourier layers carry a trainable bias.
    pub fourier_bias: bool,
}

impl Default for FnoArch {
    fn default() -> Self {
        Self {
            width: 32,
            modes_x: 12,
            modes_z: 12,
            fc2_width: 128,
            fourier_bias: true,
        }
    }
}

impl FnoArch {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.fc2_width == 0 || self.modes_x == 0 || self.modes_z == 0 {
            return Err(Error::Config("FNO width, fc2 width and mode counts must be positive".into()));
        }
        Ok(())
    }

    /// Mode counts clipped to what an `nx × nz` grid can carry.
    pub fn effective_modes(&self, nx: usize, nz: usize) -> (usize, usize) {
        (self.modes_x.min(nx / 2).max(1), self.modes_z.min(nz / 2).max(1))
    }

    pub fn parameter_count(&self) -> usize {
        let w = self.width;
        let spectral = 2 * w * w * (2 * self.modes_x - 1) * (2 * self.modes_z - 1);
        (IN_CHANNELS + 1) * w
            + FOURIER_LAYERS * (spectral + w * w + w)
            + (w + 1) * self.fc2_width
            + (self.fc2_width + 1) * OUT_CHANNELS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierLayer<T> {
    pub spectral: SpectralWeights<T>,
    /// Pointwise bypass `W_l` with bias `b_l`.
    pub bypass: Dense<T>,
}

/// All trainable tensors of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct FnoParams<T> {
    pub arch: FnoArch,
    pub fc1: Dense<T>,
    pub fourier: Vec<FourierLayer<T>>,
    pub fc2: Dense<T>,
    pub fc3: Dense<T>,
}

fn uniform_dense<T: Real>(c_in: usize, c_out: usize, rng: &mut ChaCha8Rng) -> Dense<T> {
    let bound = (1.0 / c_in as f64).sqrt();
    let mut d = Dense::zeros(c_in, c_out);
    for v in d.w.data_mut() {
        *v = T::from_f64(rng.random_range(-bound..bound));
    }
    d
}

/// Deterministic initialisation: dense weights uniform in `±sqrt(1/c_in)`, spectral
/// weights with real and imaginary parts uniform in `[0, 1/(c_in·c_out))`, zero biases.
pub fn fno_init<T: Real>(arch: &FnoArch, seed: u64) -> Result<FnoParams<T>> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = arch.width;
    let fc1 = uniform_dense(IN_CHANNELS, w, &mut rng);
    let fourier = (0..FOURIER_LAYERS)
        .map(|_| {
            let scale = 1.0 / (w * w) as f64;
            let spectral = SpectralWeights::random(w, w, arch.modes_x, arch.modes_z, scale, &mut rng);
            let bypass = uniform_dense(w, w, &mut rng);
            FourierLayer { spectral, bypass }
        })
        .collect();
    let fc2 = uniform_dense(w, arch.fc2_width, &mut rng);
    let fc3 = uniform_dense(arch.fc2_width, OUT_CHANNELS, &mut rng);
    Ok(FnoParams {
        arch: *arch,
        fc1,
        fourier,
        fc2,
        fc3,
    })
}

impl<T: Real> FnoParams<T> {
    /// Parameter tensors in the fixed serialisation order.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = vec![&self.fc1.w, &self.fc1.b];
        for l in &self.fourier {
            out.extend([&l.spectral.re, &l.spectral.im, &l.bypass.w, &l.bypass.b]);
        }
        out.extend([&self.fc2.w, &self.fc2.b, &self.fc3.w, &self.fc3.b]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = vec![&mut self.fc1.w, &mut self.fc1.b];
        for l in &mut self.fourier {
            out.push(&mut l.spectral.re);
            out.push(&mut l.spectral.im);
            out.push(&mut l.bypass.w);
            out.push(&mut l.bypass.b);
        }
        out.extend([&mut self.fc2.w, &mut self.fc2.b, &mut self.fc3.w, &mut self.fc3.b]);
        out
    }

    /// Names matching [`FnoParams::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = vec!["fc1.w".to_string(), "fc1.b".to_string()];
        for l in 0..self.fourier.len() {
            for part in ["r.re", "r.im", "w", "b"] {
                out.push(format!("fourier{}.{part}", l + 1));
            }
        }
        out.extend(["fc2.w", "fc2.b", "fc3.w", "fc3.b"].map(String::from));
        out
    }

    /// Consumes the parameters, returning the tensors in [`FnoParams::tensors`] order.
    pub fn into_tensors(self) -> Vec<Tensor<T>> {
        let mut out = vec![self.fc1.w, self.fc1.b];
        for l in self.fourier {
            out.extend([l.spectral.re, l.spectral.im, l.bypass.w, l.bypass.b]);
        }
        out.extend([self.fc2.w, self.fc2.b, self.fc3.w, self.fc3.b]);
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(T::zero()));
        z
    }

    pub fn cast<U: Real>(&self) -> FnoParams<U> {
        let dense = |d: &Dense<T>| Dense {
            w: d.w.cast(),
            b: d.b.cast(),
        };
        FnoParams {
            arch: self.arch,
            fc1: dense(&self.fc1),
            fourier: self
                .fourier
                .iter()
                .map(|l| FourierLayer {
                    spectral: SpectralWeights {
                        re: l.spectral.re.cast(),
                        im: l.spectral.im.cast(),
                        modes_x: l.spectral.modes_x,
                        modes_z: l.spectral.modes_z,
                    },
                    bypass: dense(&l.bypass),
                })
                .collect(),
            fc2: dense(&self.fc2),
            fc3: dense(&self.fc3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let fresh: FnoParams<T> = fno_init(&self.arch, 0)?;
        if self.fourier.len() != FOURIER_LAYERS {
            return Err(Error::Contract(format!("expected {FOURIER_LAYERS} Fourier layers")));
        }
        for ((name, a), b) in self.tensor_names().iter().zip(self.tensors()).zip(fresh.tensors()) {
            a.expect_shape(b.shape())
                .map_err(|e| Error::Contract(format!("{name}: {e}")))?;
            if !a.all_finite() {
                return Err(Error::Numerical(format!("non-finite parameter in {name}")));
            }
        }
        Ok(())
    }

    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.arch == other.arch && self.tensors().iter().zip(other.tensors()).all(|(a, b)| a.bitwise_eq(b))
    }

    /// Order-sensitive fingerprint of every parameter bit.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.tensors() {
            for v in t.data() {
                h ^= v.as_f64().to_bits();
                h = h.wrapping_mul(0x1000_0000_01b3).rotate_left(5);
            }
        }
        h
    }
}

/// Intermediates kept by [`fno_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct FnoCache<T> {
    fingerprint: u64,
    shape: Vec<usize>,
    x: Tensor<T>,
    /// Inputs of the Fourier layers (`v_0 … v_3`) followed by `v_4`.
    v: Vec<Tensor<T>>,
    /// Pre-activations of the Fourier layers.
    z: Vec<Tensor<T>>,
    spec: Vec<SpectralCtx<T>>,
    h: Tensor<T>,
    a: Tensor<T>,
}

fn grid_of(shape: &[usize]) -> Result<(usize, usize)> {
    match *shape {
        [IN_CHANNELS, nx, nz] | [IN_CHANNELS, _, nx, nz] => Ok((nx, nz)),
        _ => Err(Error::Contract(format!(
            "FNO input must be [{IN_CHANNELS} × (batch ×) nx × nz], got {shape:?}"
        ))),
    }
}

fn plan_for<T: Real>(arch: &FnoArch, nx: usize, nz: usize) -> Result<SpectralPlan<T>> {
    SpectralPlan::new(nx, nz, arch.modes_x, arch.modes_z)
}

/// Runs the network on `x` of shape `[5 × nx × nz]` or `[5 × batch × nx × nz]`.
pub fn fno_forward<T: Real>(params: &FnoParams<T>, x: &Tensor<T>) -> Result<(Tensor<T>, FnoCache<T>)> {
    let (nx, nz) = grid_of(x.shape())?;
    let plan = plan_for::<T>(&params.arch, nx, nz)?;
    let slope = T::from_f64(LEAKY_SLOPE);
    let mut v = Vec::with_capacity(FOURIER_LAYERS + 1);
    let mut z = Vec::with_capacity(FOURIER_LAYERS);
    let mut spec = Vec::with_capacity(FOURIER_LAYERS);
    v.push(params.fc1.apply(x)?);
    for layer in &params.fourier {
        let input = v.last().expect("non-empty");
        let (s, ctx) = spectral_forward(&plan, &layer.spectral, input)?;
        let mut pre = layer.bypass.apply(input)?;
        pre.add_assign(&s)?;
        v.push(leaky_relu(&pre, slope));
        z.push(pre);
        spec.push(ctx);
    }
    let h = params.fc2.apply(v.last().expect("non-empty"))?;
    let a = relu(&h);
    let y = params.fc3.apply(&a)?;
    if !y.all_finite() {
        return Err(Error::Numerical("FNO produced a non-finite output".into()));
    }
    let cache = FnoCache {
        fingerprint: params.fingerprint(),
        shape: x.shape().to_vec(),
        x: x.clone(),
        v,
        z,
        spec,
        h,
        a,
    };
    Ok((y, cache))
}

/// Forward pass without keeping intermediates.
pub fn fno_predict<T: Real>(params: &FnoParams<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    let (nx, nz) = grid_of(x.shape())?;
    let plan = plan_for::<T>(&params.arch, nx, nz)?;
    let slope = T::from_f64(LEAKY_SLOPE);
    let mut v = params.fc1.apply(x)?;
    for layer in &params.fourier {
        let (s, _) = spectral_forward(&plan, &layer.spectral, &v)?;
        let mut pre = layer.bypass.apply(&v)?;
        pre.add_assign(&s)?;
        v = leaky_relu(&pre, slope);
    }
    let y = params.fc3.apply(&relu(&params.fc2.apply(&v)?))?;
    if !y.all_finite() {
        return Err(Error::Numerical("FNO produced a non-finite output".into()));
    }
    Ok(y)
}

/// Parameter gradients for the output gradient `grad_y`. Also returns the input gradient.
pub fn fno_backward<T: Real>(
    params: &FnoParams<T>,
    cache: &FnoCache<T>,
    grad_y: &Tensor<T>,
) -> Result<(FnoParams<T>, Tensor<T>)> {
    if cache.fingerprint != params.fingerprint() {
        return Err(Error::Contract("stale FNO cache: parameters changed since the forward pass".into()));
    }
    let mut out_shape = cache.shape.clone();
    out_shape[0] = OUT_CHANNELS;
    grad_y.expect_shape(&out_shape)?;
    let (nx, nz) = grid_of(&cache.shape)?;
    let plan = plan_for::<T>(&params.arch, nx, nz)?;
    let slope = T::from_f64(LEAKY_SLOPE);
    let mut grads = params.zeros_like();

    let (da, w3, b3) = params.fc3.grads(&cache.a, grad_y)?;
    grads.fc3 = Dense { w: w3, b: b3 };
    let dh = relu_backward(&cache.h, &da)?;
    let (mut dv, w2, b2) = params.fc2.grads(&cache.v[FOURIER_LAYERS], &dh)?;
    grads.fc2 = Dense { w: w2, b: b2 };
    for l in (0..FOURIER_LAYERS).rev() {
        let layer = &params.fourier[l];
        let dz = leaky_relu_backward(&cache.z[l], &dv, slope)?;
        let (mut dv_in, dw, db) = layer.bypass.grads(&cache.v[l], &dz)?;
        let (dv_spec, dr) = spectral_backward(&plan, &layer.spectral, &cache.spec[l], &dz)?;
        dv_in.add_assign(&dv_spec)?;
        let g = &mut grads.fourier[l];
        g.spectral = dr;
        g.bypass.w = dw;
        g.bypass.b = if params.arch.fourier_bias { db } else { Tensor::zeros(&[params.arch.width]) };
        dv = dv_in;
    }
    let (dx, w1, b1) = params.fc1.grads(&cache.x, &dv)?;
    grads.fc1 = Dense { w: w1, b: b1 };
    Ok((grads, dx))
}
