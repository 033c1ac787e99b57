//! Transform identities and spectral-convolution properties.

use num_complex::Complex64;
use plumecast::grad::check::{check_function, probe, FD_EPS};
use plumecast::grad::Tensor;
use plumecast::spectral::conv::{negated_index, seeded_weights};
use plumecast::spectral::*;
use proptest::prelude::*;

fn random_field(nx: usize, nz: usize, seed: u64) -> Vec<f64> {
    probe(&[nx * nz], seed).into_vec()
}

#[test]
fn fft_round_trip_on_64_by_32() {
    let f = random_field(64, 32, 1);
    let back = ifft2(&fft2(&f, 64, 32).unwrap()).unwrap();
    let err = f.iter().zip(&back).map(|(a, b)| (Complex64::new(*a, 0.0) - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn parseval_identity() {
    let f = random_field(64, 32, 2);
    let s = fft2(&f, 64, 32).unwrap();
    let lhs: f64 = f.iter().map(|v| v * v).sum();
    let rhs: f64 = s.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / (64.0 * 32.0);
    assert!(((lhs - rhs) / lhs).abs() < 1e-10);
}

/// Reference spectral convolution through full FFTs. Returns the real output and
/// the largest discarded imaginary part.
fn reference(v: &Tensor<f64>, w: &SpectralWeights<f64>) -> (Vec<f64>, f64) {
    let (c_in, nx, nz) = (v.dim(0), v.dim(1), v.dim(2));
    let fx = retained_frequencies(nx, w.modes_x);
    let fz = retained_frequencies(nz, w.modes_z);
    let spectra: Vec<Spectrum> = (0..c_in)
        .map(|i| fft2(&v.data()[i * nx * nz..(i + 1) * nx * nz], nx, nz).unwrap())
        .collect();
    let mut out = Vec::new();
    let mut imag: f64 = 0.0;
    let (kxl, kzl) = (fx.len(), fz.len());
    for o in 0..w.c_out() {
        let mut u = Spectrum {
            nx,
            nz,
            data: vec![Complex64::new(0.0, 0.0); nx * nz],
        };
        for (jx, &kx) in fx.iter().enumerate() {
            for (jz, &kz) in fz.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, s) in spectra.iter().enumerate() {
                    let idx = ((o * c_in + i) * kxl + jx) * kzl + jz;
                    acc += Complex64::new(w.re.data()[idx], w.im.data()[idx]) * s.get(kx, kz);
                }
                u.data[kx * nz + kz] = acc;
            }
        }
        for c in ifft2(&u).unwrap() {
            out.push(c.re);
            imag = imag.max(c.im.abs());
        }
    }
    (out, imag)
}

fn conj_symmetrise(w: &mut SpectralWeights<f64>) {
    let (kx, kz) = (2 * w.modes_x - 1, 2 * w.modes_z - 1);
    let pairs = w.c_out() * w.c_in();
    let (re, im) = (w.re.data().to_vec(), w.im.data().to_vec());
    for p in 0..pairs {
        for a in 0..kx {
            for c in 0..kz {
                let i = (p * kx + a) * kz + c;
                let j = (p * kx + negated_index(a, w.modes_x)) * kz + negated_index(c, w.modes_z);
                w.re.data_mut()[i] = 0.5 * (re[i] + re[j]);
                w.im.data_mut()[i] = 0.5 * (im[i] - im[j]);
            }
        }
    }
}

#[test]
fn gemm_route_matches_fft_route() {
    let v = probe(&[3, 16, 8], 3);
    let w = seeded_weights::<f64>(3, 2, 4, 3, 1.0, 4);
    let got = spectral_conv(&v, &w).unwrap();
    let (want, _) = reference(&v, &w);
    let err = got.data().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn conjugate_symmetric_weights_give_real_output() {
    let v = probe(&[2, 16, 16], 5);
    let mut w = seeded_weights::<f64>(2, 2, 5, 4, 1.0, 6);
    conj_symmetrise(&mut w);
    let (_, imag) = reference(&v, &w);
    assert!(imag < 1e-10, "{imag}");
}

#[test]
fn zero_weights_give_zero_output() {
    let v = probe(&[2, 8, 8], 7);
    let w = SpectralWeights::<f64>::zeros(2, 3, 2, 2);
    let u = spectral_conv(&v, &w).unwrap();
    assert_eq!(u.shape(), &[3, 8, 8]);
    assert!(u.data().iter().all(|&x| x == 0.0));
}

#[test]
fn dc_weight_scales_constant_input() {
    let v = Tensor::<f64>::full(&[1, 16, 8], 3.0);
    let mut w = SpectralWeights::zeros(1, 1, 3, 3);
    w.re.data_mut()[0] = 2.0;
    let u = spectral_conv(&v, &w).unwrap();
    assert!(u.data().iter().all(|&x| (x - 6.0).abs() < 1e-12));
}

#[test]
fn modes_above_cutoff_are_removed() {
    let (nx, nz) = (16, 16);
    let v = Tensor::<f64>::from_fn(&[1, nx, nz], |i| {
        let (x, z) = ((i / nz) as f64, (i % nz) as f64);
        (2.0 * std::f64::consts::PI * (5.0 * x / nx as f64 + 6.0 * z / nz as f64)).cos()
    });
    let w = seeded_weights::<f64>(1, 1, 4, 4, 1.0, 8);
    let u = spectral_conv(&v, &w).unwrap();
    assert!(u.max_abs() < 1e-12);
}

#[test]
fn identity_weights_project_idempotently() {
    let v = probe(&[2, 32, 16], 9);
    let w = SpectralWeights::<f64>::identity(2, 5, 3);
    let once = spectral_conv(&v, &w).unwrap();
    let twice = spectral_conv(&once, &w).unwrap();
    let err = once.data().iter().zip(twice.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn gradients_match_finite_differences() {
    let (nx, nz) = (8, 8);
    let v = probe(&[2, 2, nx, nz], 10);
    let w = seeded_weights::<f64>(2, 3, 2, 3, 0.5, 11);
    let plan = SpectralPlan::new(nx, nz, 2, 3).unwrap();
    let (u, ctx) = spectral_forward(&plan, &w, &v).unwrap();
    let c = probe(u.shape(), 12);
    let (dv, dw) = spectral_backward(&plan, &w, &ctx, &c).unwrap();
    let f = |a: &[Tensor<f64>]| {
        let mut wk = w.clone();
        wk.re = a[1].clone();
        wk.im = a[2].clone();
        let (u, _) = spectral_forward(&plan, &wk, &a[0]).unwrap();
        u.data().iter().zip(c.data()).map(|(x, y)| x * y).sum()
    };
    let err = check_function(&f, &[v.clone(), w.re.clone(), w.im.clone()], &[dv, dw.re, dw.im], FD_EPS);
    assert!(err < 1e-7, "{err}");
}

#[test]
fn batched_equals_per_sample() {
    let (nx, nz) = (16, 8);
    let w = seeded_weights::<f64>(2, 2, 3, 2, 1.0, 13);
    let batch = probe(&[2, 3, nx, nz], 14);
    let plan = SpectralPlan::new(nx, nz, 3, 2).unwrap();
    let (ub, _) = spectral_forward(&plan, &w, &batch).unwrap();
    for b in 0..3 {
        let single = Tensor::from_fn(&[2, nx, nz], |i| {
            let (c, p) = (i / (nx * nz), i % (nx * nz));
            batch.data()[(c * 3 + b) * nx * nz + p]
        });
        let (us, _) = spectral_forward(&plan, &w, &single).unwrap();
        for c in 0..2 {
            for p in 0..nx * nz {
                let a = us.data()[c * nx * nz + p];
                let bb = ub.data()[(c * 3 + b) * nx * nz + p];
                assert!((a - bb).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn mismatched_grid_is_rejected() {
    let plan = SpectralPlan::<f64>::new(16, 8, 2, 2).unwrap();
    let w = SpectralWeights::zeros(1, 1, 2, 2);
    assert!(spectral_forward(&plan, &w, &Tensor::zeros(&[1, 8, 8])).is_err());
    assert!(spectral_forward(&plan, &SpectralWeights::zeros(2, 1, 2, 2), &Tensor::zeros(&[1, 16, 8])).is_err());
    assert!(SpectralPlan::<f64>::new(16, 8, 2, 5).is_err());
}

#[test]
fn single_precision_tracks_double() {
    let v = probe(&[2, 64, 32], 15);
    let w = seeded_weights::<f64>(2, 2, 8, 8, 0.25, 16);
    let u64_ = spectral_conv(&v, &w).unwrap();
    let w32 = SpectralWeights {
        re: w.re.cast::<f32>(),
        im: w.im.cast::<f32>(),
        modes_x: 8,
        modes_z: 8,
    };
    let u32_ = spectral_conv(&v.cast::<f32>(), &w32).unwrap();
    let err = u64_.data().iter().zip(u32_.data()).map(|(a, b)| (a - *b as f64).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4 * u64_.max_abs(), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_in_input_and_weights(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let x1 = probe(&[2, 8, 8], seed);
        let x2 = probe(&[2, 8, 8], seed + 1);
        let w1 = seeded_weights::<f64>(2, 2, 2, 3, 1.0, seed + 2);
        let w2 = seeded_weights::<f64>(2, 2, 2, 3, 1.0, seed + 3);
        let mix = Tensor::from_fn(&[2, 8, 8], |i| alpha * x1.data()[i] + beta * x2.data()[i]);
        let lhs = spectral_conv(&mix, &w1).unwrap();
        let (a, b) = (spectral_conv(&x1, &w1).unwrap(), spectral_conv(&x2, &w1).unwrap());
        for i in 0..lhs.len() {
            prop_assert!((lhs.data()[i] - alpha * a.data()[i] - beta * b.data()[i]).abs() < 1e-10);
        }
        let mut wm = w1.clone();
        for k in 0..wm.re.len() {
            wm.re.data_mut()[k] = alpha * w1.re.data()[k] + beta * w2.re.data()[k];
            wm.im.data_mut()[k] = alpha * w1.im.data()[k] + beta * w2.im.data()[k];
        }
        let lhs = spectral_conv(&x1, &wm).unwrap();
        let c = spectral_conv(&x1, &w2).unwrap();
        for i in 0..lhs.len() {
            prop_assert!((lhs.data()[i] - alpha * a.data()[i] - beta * c.data()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn fft_round_trip_any_power_of_two(px in 1u32..6, pz in 1u32..6, seed in 0u64..1000) {
        let (nx, nz) = (1usize << px, 1usize << pz);
        let f = random_field(nx, nz, seed);
        let back = ifft2(&fft2(&f, nx, nz).unwrap()).unwrap();
        for (a, b) in f.iter().zip(&back) {
            prop_assert!((a - b.re).abs() < 1e-12 && b.im.abs() < 1e-12);
        }
    }
}
