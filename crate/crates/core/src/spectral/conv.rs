//! Truncated spectral convolution evaluated as dense partial DFTs.
//!
//! Along each axis the retained frequencies are `k = 0, ±1, …, ±(m−1)`: the four
//! `m × m` corner blocks of the spectrum, which overlap on the zero-frequency row
//! and column. The set is closed under negation, so for real input and identity
//! weights the truncation is an exact real projection. With `K = 2m − 1` retained
//! frequencies per axis the partial transforms are small GEMMs, much cheaper
//! than full FFTs when `m` is well below `n/2`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grad::{gemm, MatMut, MatRef, Real, Tensor};

/// Number of retained frequencies along an axis with `m` modes.
pub fn retained_len(m: usize) -> usize {
    2 * m - 1
}

/// Retained DFT indices along an axis of length `n`, in storage order
/// `0, 1, …, m−1, n−m+1, …, n−1`.
pub fn retained_frequencies(n: usize, m: usize) -> Vec<usize> {
    let k = retained_len(m);
    (0..k).map(|j| if j < m { j } else { n - k + j }).collect()
}

/// Storage index of the frequency `−k` for the entry at storage index `j`.
pub fn negated_index(j: usize, m: usize) -> usize {
    let k = retained_len(m);
    (k - j) % k
}

/// Complex multipliers of the retained modes, stored as separate real and
/// imaginary planes of shape `[c_out × c_in × (2m_x−1) × (2m_z−1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWeights<T> {
    pub re: Tensor<T>,
    pub im: Tensor<T>,
    pub modes_x: usize,
    pub modes_z: usize,
}

impl<T: Real> SpectralWeights<T> {
    pub fn zeros(c_in: usize, c_out: usize, modes_x: usize, modes_z: usize) -> Self {
        let shape = [c_out, c_in, retained_len(modes_x), retained_len(modes_z)];
        Self {
            re: Tensor::zeros(&shape),
            im: Tensor::zeros(&shape),
            modes_x,
            modes_z,
        }
    }

    /// Real and imaginary parts drawn uniformly from `[0, scale)`.
    pub fn random(c_in: usize, c_out: usize, modes_x: usize, modes_z: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut w = Self::zeros(c_in, c_out, modes_x, modes_z);
        for v in w.re.data_mut().iter_mut().chain(w.im.data_mut().iter_mut()) {
            *v = T::from_f64(scale * rng.random::<f64>());
        }
        w
    }

    /// `δ_{oi}` on every retained mode, which makes the layer a pure projection.
    pub fn identity(c: usize, modes_x: usize, modes_z: usize) -> Self {
        let mut w = Self::zeros(c, c, modes_x, modes_z);
        let per = w.modes_per_pair();
        for o in 0..c {
            let start = (o * c + o) * per;
            w.re.data_mut()[start..start + per].iter_mut().for_each(|v| *v = T::one());
        }
        w
    }

    pub fn c_out(&self) -> usize {
        self.re.dim(0)
    }

    pub fn c_in(&self) -> usize {
        self.re.dim(1)
    }

    pub fn modes_per_pair(&self) -> usize {
        retained_len(self.modes_x) * retained_len(self.modes_z)
    }

    pub fn validate(&self) -> Result<()> {
        let shape = [self.c_out(), self.c_in(), retained_len(self.modes_x), retained_len(self.modes_z)];
        self.re.expect_shape(&shape)?;
        self.im.expect_shape(&shape)?;
        if !(self.re.all_finite() && self.im.all_finite()) {
            return Err(Error::Numerical("non-finite spectral weight".into()));
        }
        Ok(())
    }
}

/// Precomputed partial DFT matrices for one grid and mode count.
#[derive(Debug, Clone)]
pub struct SpectralPlan<T> {
    pub nx: usize,
    pub nz: usize,
    pub modes_x: usize,
    pub modes_z: usize,
    kx: usize,
    kz: usize,
    /// `nz × 2K_z`: `[cos | −sin]` of the retained z frequencies.
    ez: Vec<T>,
    /// `2K_x × nx`: `[cos ; −sin]` of the retained x frequencies.
    exs: Vec<T>,
}

impl<T: Real> SpectralPlan<T> {
    pub fn new(nx: usize, nz: usize, modes_x: usize, modes_z: usize) -> Result<Self> {
        if modes_x == 0 || modes_z == 0 {
            return Err(Error::Parameter("mode counts must be at least 1".into()));
        }
        if modes_x > nx / 2 || modes_z > nz / 2 {
            return Err(Error::Parameter(format!(
                "modes ({modes_x}, {modes_z}) exceed half the grid {nx}×{nz}"
            )));
        }
        let (kx, kz) = (retained_len(modes_x), retained_len(modes_z));
        let angle = |k: usize, x: usize, n: usize| 2.0 * PI * ((k * x) % n) as f64 / n as f64;
        let fz = retained_frequencies(nz, modes_z);
        let mut ez = vec![T::zero(); nz * 2 * kz];
        for z in 0..nz {
            for (j, &k) in fz.iter().enumerate() {
                let th = angle(k, z, nz);
                ez[z * 2 * kz + j] = T::from_f64(th.cos());
                ez[z * 2 * kz + kz + j] = T::from_f64(-th.sin());
            }
        }
        let fx = retained_frequencies(nx, modes_x);
        let mut exs = vec![T::zero(); 2 * kx * nx];
        for (j, &k) in fx.iter().enumerate() {
            for x in 0..nx {
                let th = angle(k, x, nx);
                exs[j * nx + x] = T::from_f64(th.cos());
                exs[(kx + j) * nx + x] = T::from_f64(-th.sin());
            }
        }
        Ok(Self {
            nx,
            nz,
            modes_x,
            modes_z,
            kx,
            kz,
            ez,
            exs,
        })
    }

    fn n_modes(&self) -> usize {
        self.kx * self.kz
    }

    /// Forward partial DFT of `planes` real `nx × nz` fields into retained
    /// coefficients `(re, im)`, each `[planes × K_x × K_z]`.
    fn analyse(&self, v: &[T], planes: usize) -> (Vec<T>, Vec<T>) {
        let (nx, nz, kx, kz) = (self.nx, self.nz, self.kx, self.kz);
        let mut a = vec![T::zero(); planes * nx * 2 * kz];
        gemm(
            T::one(),
            MatRef::new(v, planes * nx, nz),
            MatRef::new(&self.ez, nz, 2 * kz),
            T::zero(),
            MatMut::new(&mut a, planes * nx, 2 * kz),
        );
        let nm = self.n_modes();
        let mut re = vec![T::zero(); planes * nm];
        let mut im = vec![T::zero(); planes * nm];
        let mut p = vec![T::zero(); 4 * kx * kz];
        for q in 0..planes {
            gemm(
                T::one(),
                MatRef::new(&self.exs, 2 * kx, nx),
                MatRef::new(&a[q * nx * 2 * kz..(q + 1) * nx * 2 * kz], nx, 2 * kz),
                T::zero(),
                MatMut::new(&mut p, 2 * kx, 2 * kz),
            );
            let (r, i) = (&mut re[q * nm..(q + 1) * nm], &mut im[q * nm..(q + 1) * nm]);
            split_blocks(&p, kx, kz, r, i);
        }
        (re, im)
    }

    /// Adjoint-style synthesis: for each plane, `Exsᵀ·M(U)·Ezᵀ·scale` where
    /// `M(U) = [[U_re, U_im], [U_im, −U_re]]`. With `scale = 1/(nx·nz)` this is the
    /// real part of the inverse DFT restricted to the retained modes.
    fn synthesise(&self, ure: &[T], uim: &[T], planes: usize, scale: T) -> Vec<T> {
        let (nx, nz, kx, kz) = (self.nx, self.nz, self.kx, self.kz);
        let nm = self.n_modes();
        let mut b = vec![T::zero(); planes * nx * 2 * kz];
        let mut m = vec![T::zero(); 4 * kx * kz];
        for q in 0..planes {
            join_blocks(&ure[q * nm..(q + 1) * nm], &uim[q * nm..(q + 1) * nm], kx, kz, &mut m);
            gemm(
                T::one(),
                MatRef::new(&self.exs, 2 * kx, nx).t(),
                MatRef::new(&m, 2 * kx, 2 * kz),
                T::zero(),
                MatMut::new(&mut b[q * nx * 2 * kz..(q + 1) * nx * 2 * kz], nx, 2 * kz),
            );
        }
        let mut u = vec![T::zero(); planes * nx * nz];
        gemm(
            scale,
            MatRef::new(&b, planes * nx, 2 * kz),
            MatRef::new(&self.ez, nz, 2 * kz).t(),
            T::zero(),
            MatMut::new(&mut u, planes * nx, nz),
        );
        u
    }
}

/// `P = [[P00, P01], [P10, P11]]` (each `K_x × K_z`) → `(P00 − P11, P01 + P10)`.
fn split_blocks<T: Real>(p: &[T], kx: usize, kz: usize, re: &mut [T], im: &mut [T]) {
    let w = 2 * kz;
    for a in 0..kx {
        for c in 0..kz {
            let p00 = p[a * w + c];
            let p01 = p[a * w + kz + c];
            let p10 = p[(kx + a) * w + c];
            let p11 = p[(kx + a) * w + kz + c];
            re[a * kz + c] = p00 - p11;
            im[a * kz + c] = p01 + p10;
        }
    }
}

/// Builds `M(U) = [[U_re, U_im], [U_im, −U_re]]`.
fn join_blocks<T: Real>(re: &[T], im: &[T], kx: usize, kz: usize, m: &mut [T]) {
    let w = 2 * kz;
    for a in 0..kx {
        for c in 0..kz {
            let (r, i) = (re[a * kz + c], im[a * kz + c]);
            m[a * w + c] = r;
            m[a * w + kz + c] = i;
            m[(kx + a) * w + c] = i;
            m[(kx + a) * w + kz + c] = -r;
        }
    }
}

/// Cached retained input coefficients, needed for the weight gradient.
#[derive(Debug, Clone)]
pub struct SpectralCtx<T> {
    batch: usize,
    vre: Vec<T>,
    vim: Vec<T>,
}

/// Splits an activation shape `[c × nx × nz]` or `[c × b × nx × nz]` into `(c, b)`.
fn layout(shape: &[usize], nx: usize, nz: usize) -> Result<(usize, usize)> {
    match *shape {
        [c, x, z] if x == nx && z == nz => Ok((c, 1)),
        [c, b, x, z] if x == nx && z == nz => Ok((c, b)),
        _ => Err(Error::Contract(format!(
            "spectral layer planned for {nx}×{nz} received shape {shape:?}"
        ))),
    }
}

/// Applies the spectral convolution to `v` of shape `[c_in × (b ×) nx × nz]`.
pub fn spectral_forward<T: Real>(
    plan: &SpectralPlan<T>,
    w: &SpectralWeights<T>,
    v: &Tensor<T>,
) -> Result<(Tensor<T>, SpectralCtx<T>)> {
    let (c_in, batch) = layout(v.shape(), plan.nx, plan.nz)?;
    check_weights(plan, w, c_in)?;
    let c_out = w.c_out();
    let nm = plan.n_modes();
    let (vre, vim) = plan.analyse(v.data(), c_in * batch);

    let mut ure = vec![T::zero(); c_out * batch * nm];
    let mut uim = vec![T::zero(); c_out * batch * nm];
    for o in 0..c_out {
        for i in 0..c_in {
            let rr = &w.re.data()[(o * c_in + i) * nm..(o * c_in + i + 1) * nm];
            let ri = &w.im.data()[(o * c_in + i) * nm..(o * c_in + i + 1) * nm];
            for b in 0..batch {
                let src = (i * batch + b) * nm;
                let dst = (o * batch + b) * nm;
                let (xr, xi) = (&vre[src..src + nm], &vim[src..src + nm]);
                let (yr, yi) = (&mut ure[dst..dst + nm], &mut uim[dst..dst + nm]);
                for k in 0..nm {
                    yr[k] += rr[k] * xr[k] - ri[k] * xi[k];
                    yi[k] += rr[k] * xi[k] + ri[k] * xr[k];
                }
            }
        }
    }
    let scale = T::from_f64(1.0 / (plan.nx * plan.nz) as f64);
    let u = plan.synthesise(&ure, &uim, c_out * batch, scale);
    let mut shape = v.shape().to_vec();
    shape[0] = c_out;
    Ok((Tensor::from_vec(&shape, u)?, SpectralCtx { batch, vre, vim }))
}

/// Gradients with respect to the input and the weights.
pub fn spectral_backward<T: Real>(
    plan: &SpectralPlan<T>,
    w: &SpectralWeights<T>,
    ctx: &SpectralCtx<T>,
    grad_u: &Tensor<T>,
) -> Result<(Tensor<T>, SpectralWeights<T>)> {
    let (c_out, batch) = layout(grad_u.shape(), plan.nx, plan.nz)?;
    let c_in = w.c_in();
    if c_out != w.c_out() || batch != ctx.batch || ctx.vre.len() != c_in * batch * plan.n_modes() {
        return Err(Error::Contract("spectral backward context does not match the gradient".into()));
    }
    let (nx, nz, kx, kz) = (plan.nx, plan.nz, plan.kx, plan.kz);
    let nm = plan.n_modes();
    let inv_n = T::from_f64(1.0 / (nx * nz) as f64);

    // u = B·Ezᵀ/N, so dB = g·Ez/N; then dM = Exs·dB and dU follows from M(U).
    let (dure, duim) = {
        let planes = c_out * batch;
        let mut db = vec![T::zero(); planes * nx * 2 * kz];
        gemm(
            inv_n,
            MatRef::new(grad_u.data(), planes * nx, nz),
            MatRef::new(&plan.ez, nz, 2 * kz),
            T::zero(),
            MatMut::new(&mut db, planes * nx, 2 * kz),
        );
        let mut re = vec![T::zero(); planes * nm];
        let mut im = vec![T::zero(); planes * nm];
        let mut dm = vec![T::zero(); 4 * kx * kz];
        for q in 0..planes {
            gemm(
                T::one(),
                MatRef::new(&plan.exs, 2 * kx, nx),
                MatRef::new(&db[q * nx * 2 * kz..(q + 1) * nx * 2 * kz], nx, 2 * kz),
                T::zero(),
                MatMut::new(&mut dm, 2 * kx, 2 * kz),
            );
            split_blocks(&dm, kx, kz, &mut re[q * nm..(q + 1) * nm], &mut im[q * nm..(q + 1) * nm]);
        }
        (re, im)
    };

    let mut grad_w = SpectralWeights::zeros(c_in, c_out, w.modes_x, w.modes_z);
    let mut dvre = vec![T::zero(); c_in * batch * nm];
    let mut dvim = vec![T::zero(); c_in * batch * nm];
    for o in 0..c_out {
        for i in 0..c_in {
            let pair = (o * c_in + i) * nm;
            let rr = &w.re.data()[pair..pair + nm];
            let ri = &w.im.data()[pair..pair + nm];
            let mut gr = vec![T::zero(); nm];
            let mut gi = vec![T::zero(); nm];
            for b in 0..batch {
                let up = (o * batch + b) * nm;
                let dn = (i * batch + b) * nm;
                let (dr, di) = (&dure[up..up + nm], &duim[up..up + nm]);
                let (xr, xi) = (&ctx.vre[dn..dn + nm], &ctx.vim[dn..dn + nm]);
                for k in 0..nm {
                    // ∇r += ∇U·conj(V)
                    gr[k] += dr[k] * xr[k] + di[k] * xi[k];
                    gi[k] += di[k] * xr[k] - dr[k] * xi[k];
                }
                let (vr, vi) = (&mut dvre[dn..dn + nm], &mut dvim[dn..dn + nm]);
                for k in 0..nm {
                    // ∇V += conj(r)·∇U
                    vr[k] += rr[k] * dr[k] + ri[k] * di[k];
                    vi[k] += rr[k] * di[k] - ri[k] * dr[k];
                }
            }
            grad_w.re.data_mut()[pair..pair + nm].copy_from_slice(&gr);
            grad_w.im.data_mut()[pair..pair + nm].copy_from_slice(&gi);
        }
    }
    // V̂ = split(Exs·A) and A = v·Ez, so dA = Exsᵀ·M(∇V̂) and dv = dA·Ezᵀ.
    let dv = plan.synthesise(&dvre, &dvim, c_in * batch, T::one());
    let mut shape = grad_u.shape().to_vec();
    shape[0] = c_in;
    Ok((Tensor::from_vec(&shape, dv)?, grad_w))
}

fn check_weights<T: Real>(plan: &SpectralPlan<T>, w: &SpectralWeights<T>, c_in: usize) -> Result<()> {
    if w.modes_x != plan.modes_x || w.modes_z != plan.modes_z {
        return Err(Error::Contract(format!(
            "weights carry modes ({}, {}) but the plan uses ({}, {})",
            w.modes_x, w.modes_z, plan.modes_x, plan.modes_z
        )));
    }
    if w.c_in() != c_in {
        return Err(Error::Contract(format!(
            "weights expect {} input channels, input has {c_in}",
            w.c_in()
        )));
    }
    Ok(())
}

/// One-shot convenience wrapper that builds the plan for the input's grid.
pub fn spectral_conv<T: Real>(v: &Tensor<T>, w: &SpectralWeights<T>) -> Result<Tensor<T>> {
    let s = v.shape();
    if s.len() < 3 {
        return Err(Error::Contract(format!("spectral input needs a grid, got shape {s:?}")));
    }
    let (nx, nz) = (s[s.len() - 2], s[s.len() - 1]);
    let plan = SpectralPlan::new(nx, nz, w.modes_x, w.modes_z)?;
    Ok(spectral_forward(&plan, w, v)?.0)
}

/// Deterministic random weights for tests and initialisation helpers.
pub fn seeded_weights<T: Real>(c_in: usize, c_out: usize, mx: usize, mz: usize, scale: f64, seed: u64) -> SpectralWeights<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpectralWeights::random(c_in, c_out, mx, mz, scale, &mut rng)
}
