//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degrees 3 through 13), degree and squaring count chosen
//! from the 1-norm.

use alloc::vec::Vec;

use super::lu::Lu;
use super::{matmul, Mat, MatError};

// Largest 1-norm for which the [m/m] approximant is accurate to unit roundoff.
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

/// Coefficients of the numerator of the [m/m] Padé approximant to `exp`,
/// normalized so the constant term is 1.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut b = Vec::with_capacity(m + 1);
    b.push(1.0);
    for j in 1..=m {
        let prev = b[j - 1];
        b.push(prev * (m - j + 1) as f64 / (j as f64 * (2 * m - j + 1) as f64));
    }
    b
}

fn pade(a: &Mat, m: usize) -> Result<Mat, MatError> {
    let n = a.rows();
    let b = pade_coefficients(m);
    let a2 = matmul(a, a)?;
    // even powers I, A^2, A^4, ...
    let mut evens = Vec::with_capacity(m / 2 + 1);
    evens.push(Mat::identity(n));
    for k in 1..=(m / 2) {
        let next = matmul(&evens[k - 1], &a2)?;
        evens.push(next);
    }
    let mut odd_sum = Mat::zeros(n, n);
    let mut v = Mat::zeros(n, n);
    for (k, p) in evens.iter().enumerate() {
        if 2 * k < m {
            odd_sum = &odd_sum + &p.scale_real(b[2 * k + 1]);
        }
        v = &v + &p.scale_real(b[2 * k]);
    }
    let u = matmul(a, &odd_sum)?;
    let num = &v + &u;
    let den = &v - &u;
    Lu::factor(&den)?.solve(&num)
}

/// `e^m` for a square matrix.
pub fn expm(m: &Mat) -> Result<Mat, MatError> {
    if !m.is_square() {
        return Err(MatError::NotSquare {
            op: "expm",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(MatError::NonFinite { op: "expm" });
    }
    let norm = m.norm_1();
    if norm == 0.0 {
        return Ok(Mat::identity(m.rows()));
    }
    for &(deg, theta) in &THETA[..4] {
        if norm <= theta {
            return pade(m, deg);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        libm::ceil(libm::log2(norm / theta13)) as i32
    } else {
        0
    };
    let scaled = m.scale_real(libm::exp2(-(s as f64)));
    let mut r = pade(&scaled, 13)?;
    for _ in 0..s {
        r = matmul(&r, &r)?;
    }
    Ok(r)
}
