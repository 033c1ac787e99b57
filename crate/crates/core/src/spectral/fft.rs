//! Radix-2 complex FFT used as the reference transform.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 2D spectrum on an `nx × nz` lattice, row-major with `kz` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub nx: usize,
    pub nz: usize,
    pub data: Vec<Complex64>,
}

impl Spectrum {
    pub fn get(&self, kx: usize, kz: usize) -> Complex64 {
        self.data[kx * self.nz + kz]
    }
}

pub fn ensure_power_of_two(name: &str, n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Config(format!("{name}={n} must be a power of two")));
    }
    Ok(())
}

/// In-place unnormalised transform with kernel `e^{∓2πi kn/N}` (minus for forward).
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for k in 0..half {
            let w = Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / len as f64);
            for start in (0..n).step_by(len) {
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

fn transform_2d(data: &mut [Complex64], nx: usize, nz: usize, inverse: bool) {
    for row in data.chunks_mut(nz) {
        fft_in_place(row, inverse);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); nx];
    for kz in 0..nz {
        for x in 0..nx {
            col[x] = data[x * nz + kz];
        }
        fft_in_place(&mut col, inverse);
        for x in 0..nx {
            data[x * nz + kz] = col[x];
        }
    }
}

/// Forward 2D DFT of a real `nx × nz` field (row-major, z fastest), unnormalised.
pub fn fft2(field: &[f64], nx: usize, nz: usize) -> Result<Spectrum> {
    ensure_power_of_two("nx", nx)?;
    ensure_power_of_two("nz", nz)?;
    if field.len() != nx * nz {
        return Err(Error::Contract(format!("field has {} values, expected {}", field.len(), nx * nz)));
    }
    let mut data: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_2d(&mut data, nx, nz, false);
    Ok(Spectrum { nx, nz, data })
}

/// Inverse 2D DFT with the `1/(nx·nz)` normalisation.
pub fn ifft2(spec: &Spectrum) -> Result<Vec<Complex64>> {
    ensure_power_of_two("nx", spec.nx)?;
    ensure_power_of_two("nz", spec.nz)?;
    let mut data = spec.data.clone();
    transform_2d(&mut data, spec.nx, spec.nz, true);
    let scale = 1.0 / (spec.nx * spec.nz) as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut f = vec![0.0; 8 * 4];
        f[0] = 1.0;
        let s = fft2(&f, 8, 4).unwrap();
        assert!(s.data.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn matches_direct_dft() {
        let (nx, nz) = (4, 8);
        let f: Vec<f64> = (0..nx * nz).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let s = fft2(&f, nx, nz).unwrap();
        for kx in 0..nx {
            for kz in 0..nz {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..nx {
                    for z in 0..nz {
                        let th = -2.0 * PI * ((kx * x) as f64 / nx as f64 + (kz * z) as f64 / nz as f64);
                        acc += f[x * nz + z] * Complex64::from_polar(1.0, th);
                    }
                }
                assert!((acc - s.get(kx, kz)).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(fft2(&[0.0; 12], 3, 4), Err(Error::Config(_))));
        assert!(matches!(fft2(&[0.0; 12], 4, 3), Err(Error::Config(_))));
    }
}
