//! Orthonormal full-depth Haar transform on power-of-two lengths.
//!
//! Coefficient layout: index 0 is the global average, then detail levels
//! from coarsest to finest; level `j` occupies `2^j .. 2^(j+1)`.

use super::Vector;
use crate::error::{Error, Result};

pub fn is_power_of_two(n: usize) -> bool {
    n > 0 && n & (n - 1) == 0
}

pub fn haar_forward(x: &Vector) -> Result<Vector> {
    let n = x.dim();
    if !is_power_of_two(n) {
        return Err(Error::HaarDimension(n));
    }
    let mut out = x.as_slice().to_vec();
    let mut scratch = vec![0.0; n];
    let mut len = n;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let a = out[2 * i];
            let b = out[2 * i + 1];
            scratch[i] = (a + b) * r;
            scratch[half + i] = (a - b) * r;
        }
        out[..len].copy_from_slice(&scratch[..len]);
        len = half;
    }
    Ok(Vector::from_raw(out))
}

pub fn haar_inverse(c: &Vector) -> Result<Vector> {
    let n = c.dim();
    if !is_power_of_two(n) {
        return Err(Error::HaarDimension(n));
    }
    let mut out = c.as_slice().to_vec();
    let mut scratch = vec![0.0; n];
    let mut len = 2;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    while len <= n {
        let half = len / 2;
        for i in 0..half {
            let a = out[i];
            let d = out[half + i];
            scratch[2 * i] = (a + d) * r;
            scratch[2 * i + 1] = (a - d) * r;
        }
        out[..len].copy_from_slice(&scratch[..len]);
        len *= 2;
    }
    Ok(Vector::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_gaussian, RngStream};

    #[test]
    fn constant_signal_has_one_coefficient() {
        let c = haar_forward(&Vector::constant(4, 1.0)).unwrap();
        assert_eq!(c.count_nonzero(1e-14), 1);
        assert!((c[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn roundtrip_and_parseval() {
        let mut n = 1;
        let mut stream = 0;
        while n <= 4096 {
            let x = sample_gaussian(&mut RngStream::new(5, stream), n);
            let c = haar_forward(&x).unwrap();
            assert!((c.norm() - x.norm()).abs() <= 1e-12 * (1.0 + x.norm()));
            let back = haar_inverse(&c).unwrap();
            assert!(back.sub(&x).max_abs() <= 1e-12);
            n *= 2;
            stream += 1;
        }
    }

    #[test]
    fn linear() {
        let x = sample_gaussian(&mut RngStream::new(6, 0), 64);
        let y = sample_gaussian(&mut RngStream::new(6, 1), 64);
        let lhs = haar_forward(&x.axpy(-2.5, &y)).unwrap();
        let rhs = haar_forward(&x).unwrap().axpy(-2.5, &haar_forward(&y).unwrap());
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let err = haar_forward(&Vector::zeros(6)).unwrap_err();
        assert!(err.to_string().contains("haar dimension"));
        assert!(haar_inverse(&Vector::zeros(3)).is_err());
    }
}
