//! General eigenvalues: Householder reduction to Hessenberg form followed by
//! single-shift complex QR with Wilkinson shifts and bottom-up deflation.

use alloc::vec;
use alloc::vec::Vec;

use super::{Mat, MatError, C64};

/// Iterations allowed per deflated eigenvalue before giving up.
const ITERS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues sorted by ascending real part; real parts equal to within
/// `1e-9` of the spectral scale are ordered by ascending imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<C64>,
}

impl SpectrumSummary {
    pub fn from_unsorted(mut eigenvalues: Vec<C64>) -> Self {
        sort_spectrum(&mut eigenvalues);
        SpectrumSummary { eigenvalues }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &C64> {
        self.eigenvalues.iter()
    }
}

fn sort_spectrum(ev: &mut [C64]) {
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    let scale = ev
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.norm()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    let mut start = 0;
    while start < ev.len() {
        let anchor = ev[start].re;
        let mut end = start + 1;
        while end < ev.len() && ev[end].re - anchor <= tol {
            end += 1;
        }
        ev[start..end].sort_by(|a, b| a.im.total_cmp(&b.im));
        start = end;
    }
}

fn hessenberg(h: &mut Mat) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for k in 0..(n - 2) {
        let mut v: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let alpha = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
        let tail: f64 = v[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        v[0] += phase * alpha;
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vv;
        // H <- P H, rows k+1..n
        for c in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * h[(k + 1 + r, c)])
                .sum();
            let f = dot * tau;
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, c)] -= vr * f;
            }
        }
        // H <- H P, cols k+1..n
        for r in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(c, vc)| h[(r, k + 1 + c)] * vc).sum();
            let f = dot * tau;
            for (c, vc) in v.iter().enumerate() {
                h[(r, k + 1 + c)] -= f * vc.conj();
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

/// Both eigenvalues of `[[a, b], [c, d]]`, computed without cancellation.
fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let mean = (a + d) * 0.5;
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let (p, m) = (mean + disc, mean - disc);
    let (big, direct) = if p.norm() >= m.norm() { (p, m) } else { (m, p) };
    // det/big avoids cancellation in the small root, but det itself carries
    // rounding of order |ad| + |bc|; keep the direct root when that is worse
    let det = a * d - b * c;
    let det_mass = (a * d).norm() + (b * c).norm();
    let small = if det_mass < big.norm_sqr() {
        det / big
    } else {
        direct
    };
    (big, small)
}

/// All eigenvalues of a square matrix, ordered as in [`SpectrumSummary`].
pub fn eigenvalues(m: &Mat) -> Result<SpectrumSummary, MatError> {
    if !m.is_square() {
        return Err(MatError::NotSquare {
            op: "eigenvalues",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(MatError::NonFinite { op: "eigenvalues" });
    }
    let n = m.rows();
    let mut h = m.clone();
    hessenberg(&mut h);

    let zero = C64::new(0.0, 0.0);
    let mut out = vec![zero; n];
    let norm_scale = h.max_abs();
    let mut hi = n as isize - 1;
    let mut its = 0usize;
    let mut total = 0usize;

    while hi >= 0 {
        let hiu = hi as usize;
        // locate the start of the active unreduced block
        let mut l = hiu;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if diag == 0.0 {
                diag = norm_scale;
            }
            if sub <= f64::EPSILON * diag {
                h[(l, l - 1)] = zero;
                break;
            }
            l -= 1;
        }

        if l == hiu {
            out[hiu] = h[(hiu, hiu)];
            hi -= 1;
            its = 0;
            continue;
        }
        if l + 1 == hiu {
            let (e1, e2) = eig2(h[(l, l)], h[(l, hiu)], h[(hiu, l)], h[(hiu, hiu)]);
            out[l] = e1;
            out[hiu] = e2;
            hi -= 2;
            its = 0;
            continue;
        }

        its += 1;
        total += 1;
        if its > ITERS_PER_EIGENVALUE {
            return Err(MatError::NoConvergence {
                op: "eigenvalues",
                iterations: total,
            });
        }

        let shift = if its.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[(hiu, hiu)] + C64::new(0.75 * h[(hiu, hiu - 1)].norm(), 0.0)
        } else {
            let (e1, e2) = eig2(
                h[(hiu - 1, hiu - 1)],
                h[(hiu - 1, hiu)],
                h[(hiu, hiu - 1)],
                h[(hiu, hiu)],
            );
            let d = h[(hiu, hiu)];
            if (e1 - d).norm() <= (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };
        qr_step(&mut h, l, hiu, shift);
    }

    Ok(SpectrumSummary::from_unsorted(out))
}

/// One explicitly shifted QR step on the window `lo..=hi` of a Hessenberg
/// matrix.
fn qr_step(h: &mut Mat, lo: usize, hi: usize, shift: C64) {
    for i in lo..=hi {
        h[(i, i)] -= shift;
    }
    let mut rots: Vec<(C64, C64)> = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = libm::hypot(a.norm(), b.norm());
        let (c, s) = if r == 0.0 {
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (a / r, b / r)
        };
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c.conj() * x + s.conj() * y;
            h[(k + 1, j)] = -s * x + c * y;
        }
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        let last = (k + 2).min(hi);
        for i in lo..=last {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s;
            h[(i, k + 1)] = -(x * s.conj()) + y * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += shift;
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Mat) -> Result<f64, MatError> {
    Ok(eigenvalues(m)?.spectral_radius())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn two_node_laplacian() {
        let g = Mat::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]);
        let ev = eigenvalues(&g).unwrap();
        assert!((ev.eigenvalues[0] - c(0.0, 0.0)).norm() < 1e-15);
        assert!((ev.eigenvalues[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn strictly_triangular_is_all_zero() {
        let m = Mat::from_rows(&[
            [0.0, 1.0, 2.0, 3.0],
            [0.0, 0.0, 4.0, 5.0],
            [0.0, 0.0, 0.0, 6.0],
            [0.0; 4],
        ]);
        let ev = eigenvalues(&m).unwrap();
        assert!(ev.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rotated_block_has_imaginary_pair() {
        let d = Mat::from_rows(&[[0.0, -0.5], [1.0, 0.0]]);
        let ev = eigenvalues(&d).unwrap();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        assert!((ev.eigenvalues[0] - c(0.0, -r)).norm() < 1e-15);
        assert!((ev.eigenvalues[1] - c(0.0, r)).norm() < 1e-15);
        assert!((ev.spectral_radius() - r).abs() < 1e-15);
    }

    #[test]
    fn companion_matrix_roots() {
        // roots 1, 2, 3, 4, 5: x^5 - 15x^4 + 85x^3 - 225x^2 + 274x - 120
        let coeffs = [-15.0, 85.0, -225.0, 274.0, -120.0];
        let mut m = Mat::zeros(5, 5);
        for j in 0..5 {
            m[(0, j)] = c(-coeffs[j], 0.0);
        }
        for i in 1..5 {
            m[(i, i - 1)] = c(1.0, 0.0);
        }
        let ev = eigenvalues(&m).unwrap();
        for (k, z) in ev.iter().enumerate() {
            assert!((z - c(k as f64 + 1.0, 0.0)).norm() < 1e-9, "{z}");
        }
    }

    #[test]
    fn ties_break_on_imaginary_part() {
        let s = SpectrumSummary::from_unsorted(alloc::vec![c(1.5, 0.8), c(0.0, 0.0), c(1.5 + 1e-15, -0.8)]);
        assert_eq!(s.eigenvalues[1].im, -0.8);
        assert_eq!(s.eigenvalues[2].im, 0.8);
    }

    #[test]
    fn larger_complex_spectrum() {
        // block diagonal of rotations scaled by r_k, conjugated by a fixed dense matrix
        let mut d = Mat::zeros(6, 6);
        let pairs = [(0.5, 1.0), (-0.3, 2.0), (1.2, 0.25)];
        for (k, &(re, im)) in pairs.iter().enumerate() {
            d[(2 * k, 2 * k)] = c(re, 0.0);
            d[(2 * k + 1, 2 * k + 1)] = c(re, 0.0);
            d[(2 * k, 2 * k + 1)] = c(-im, 0.0);
            d[(2 * k + 1, 2 * k)] = c(im, 0.0);
        }
        let mut p = Mat::identity(6);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    p[(i, j)] = c(0.1 * ((i * 7 + j * 3) % 5) as f64 - 0.2, 0.0);
                }
            }
        }
        let pinv = super::super::solve(&p, &Mat::identity(6)).unwrap();
        let m = &(&pinv * &d) * &p;
        let ev = eigenvalues(&m).unwrap();
        let mut want: Vec<C64> = pairs
            .iter()
            .flat_map(|&(re, im)| [c(re, im), c(re, -im)])
            .collect();
        sort_spectrum(&mut want);
        for (got, w) in ev.iter().zip(&want) {
            assert!((got - w).norm() < 1e-10, "{got} vs {w}");
        }
    }

    #[test]
    fn nearly_nilpotent_pair_stays_small() {
        // trace and determinant are rounding residues; both roots must be tiny
        let m = Mat::from_rows(&[[3.365487, 9.298291], [-1.218128, -3.365487]]);
        let ev = eigenvalues(&m).unwrap();
        let exact = libm::sqrt((3.365487f64 * 3.365487 - 9.298291 * 1.218128).abs());
        assert!(ev.spectral_radius() <= exact + 1e-7, "{:?}", ev.eigenvalues);
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            eigenvalues(&Mat::zeros(1, 2)),
            Err(MatError::NotSquare { .. })
        ));
    }
}
