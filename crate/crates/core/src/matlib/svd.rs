//! One-sided (Hestenes) Jacobi SVD for complex matrices.
//!
//! Used for the 2-norm, rank decisions and null spaces. Jacobi keeps small
//! singular values accurate relative to their own size, which the
//! controllability and kernel-flag tests rely on.

use alloc::vec;
use alloc::vec::Vec;

use super::{Mat, MatError, C64, SINGULAR_RTOL};

const MAX_SWEEPS: usize = 80;

/// Singular values (descending) and matching right singular vectors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// Columns are right singular vectors, ordered like `singular_values`.
    pub v: Mat,
    pub converged: bool,
}

impl Svd {
    pub fn new(m: &Mat) -> Svd {
        let (rows, cols) = m.shape();
        // column-major working copies
        let mut u: Vec<Vec<C64>> = (0..cols)
            .map(|j| (0..rows).map(|i| m[(i, j)]).collect())
            .collect();
        let mut v: Vec<Vec<C64>> = (0..cols)
            .map(|j| {
                let mut e = vec![C64::new(0.0, 0.0); cols];
                e[j] = C64::new(1.0, 0.0);
                e
            })
            .collect();

        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..cols {
                for q in (p + 1)..cols {
                    let alpha: f64 = u[p].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = u[q].iter().map(|z| z.norm_sqr()).sum();
                    let gamma: C64 = u[p].iter().zip(&u[q]).map(|(a, b)| a.conj() * b).sum();
                    let g = gamma.norm();
                    if g == 0.0 || g <= f64::EPSILON * libm::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let phase = (gamma / g).conj();
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = if zeta >= 0.0 {
                        1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                    } else {
                        -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                    };
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = c * t;
                    rotate(&mut u, p, q, phase, c, s);
                    rotate(&mut v, p, q, phase, c, s);
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }

        let norms: Vec<f64> = u
            .iter()
            .map(|col| libm::sqrt(col.iter().map(|z| z.norm_sqr()).sum()))
            .collect();
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
        let singular_values = order.iter().map(|&j| norms[j]).collect();
        let mut vmat = Mat::zeros(cols, cols);
        for (dst, &src) in order.iter().enumerate() {
            for i in 0..cols {
                vmat[(i, dst)] = v[src][i];
            }
        }
        Svd {
            singular_values,
            v: vmat,
            converged,
        }
    }

    pub fn largest(&self) -> f64 {
        self.singular_values[0]
    }

    /// Smallest of the `min(rows, cols)` leading singular values is not
    /// tracked separately; for square inputs this is the last entry.
    pub fn smallest(&self) -> f64 {
        *self.singular_values.last().unwrap()
    }

    /// Number of singular values at or below `rtol * largest`.
    pub fn nullity(&self, rtol: f64) -> usize {
        let cut = rtol * self.largest();
        self.singular_values.iter().filter(|&&s| s <= cut).count()
    }
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b * phase;
        *a = x * c - y * s;
        *b = x * s + y * c;
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    Svd::new(m).singular_values
}

/// Induced 2-norm (largest singular value).
pub fn two_norm(m: &Mat) -> f64 {
    Svd::new(m).largest()
}

/// Orthonormal basis (as columns) of the right null space of `m`, treating
/// singular values at or below `rtol * largest` as zero. `None` when the
/// null space is trivial.
pub fn null_space(m: &Mat, rtol: f64) -> Option<Mat> {
    let svd = Svd::new(m);
    let k = svd.nullity(rtol);
    if k == 0 {
        return None;
    }
    let cols = m.cols();
    Some(svd.v.block(0, cols - k, cols, k))
}

/// Row vector `l` with `l·m = 0` and `l·1 = 1`.
///
/// The zero eigenvalue must be simple: exactly one singular value of `m`
/// may fall below the `1e-12` relative threshold.
pub fn left_null_vector(m: &Mat) -> Result<Mat, MatError> {
    if !m.is_square() {
        return Err(MatError::NotSquare {
            op: "left_null_vector",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let q = m.rows();
    let svd = Svd::new(&m.transpose());
    let nullity = svd.nullity(SINGULAR_RTOL);
    if nullity != 1 {
        return Err(MatError::ZeroNotSimple { nullity });
    }
    let v = svd.v.col(q - 1);
    let sum: C64 = v.as_slice().iter().sum();
    let mass: f64 = v.as_slice().iter().map(|z| z.norm()).sum();
    if sum.norm() <= SINGULAR_RTOL * mass {
        return Err(MatError::NotNormalizable);
    }
    let inv = C64::new(1.0, 0.0) / sum;
    let mut l = v.transpose().scale(inv);
    // drop rounding residue so l·1 = 1 holds to the last bit where possible
    let residue: C64 = l.as_slice().iter().sum::<C64>() - C64::new(1.0, 0.0);
    let (idx, _) =
        l.as_slice().iter().enumerate().fold(
            (0, -1.0),
            |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best },
        );
    l[(0, idx)] -= residue;
    Ok(l)
}
