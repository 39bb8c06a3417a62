use alloc::vec::Vec;

use super::{Mat, MatError, C64, SINGULAR_RTOL};

/// Packed LU factors with row permutation, `P·A = L·U`.
pub(crate) struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

impl Lu {
    pub(crate) fn factor(a: &Mat) -> Result<Lu, MatError> {
        if !a.is_square() {
            return Err(MatError::NotSquare {
                op: "lu",
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if !a.is_finite() {
            return Err(MatError::NonFinite { op: "lu" });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;

        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            min_pivot = min_pivot.min(pmag);
            max_pivot = max_pivot.max(pmag);
            if pmag == 0.0 {
                return Err(MatError::Singular);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    let ukj = lu[(k, j)];
                    lu[(i, j)] -= factor * ukj;
                }
            }
        }
        if min_pivot < SINGULAR_RTOL * max_pivot {
            return Err(MatError::Singular);
        }
        Ok(Lu { lu, perm })
    }

    pub(crate) fn solve(&self, b: &Mat) -> Result<Mat, MatError> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(MatError::DimensionMismatch {
                op: "solve",
                left: self.lu.shape(),
                right: b.shape(),
            });
        }
        let mut x = Mat::zeros(n, b.cols());
        for (i, &pi) in self.perm.iter().enumerate() {
            for j in 0..b.cols() {
                x[(i, j)] = b[(pi, j)];
            }
        }
        for j in 0..b.cols() {
            // forward: unit lower
            for i in 0..n {
                let mut s = x[(i, j)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s;
            }
            // back: upper
            for i in (0..n).rev() {
                let mut s: C64 = x[(i, j)];
                for k in (i + 1)..n {
                    s -= self.lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Solve `a·x = b` by partial-pivoting LU.
///
/// Fails with [`MatError::Singular`] when the smallest pivot magnitude drops
/// below `1e-12` times the largest.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat, MatError> {
    Lu::factor(a)?.solve(b)
}
