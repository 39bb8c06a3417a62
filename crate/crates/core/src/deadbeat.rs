//! Normalized deadbeat gain for the sampled pair `(e^{AT}, B)` and the
//! Schur factors of the resulting nilpotent closed loop.
//!
//! With `C = [B, e^{AT}B, ..., e^{A(n-1)T}B]` the deadbeat gain of the
//! sampled pair is `G = e_n' C^{-1} e^{AnT}`, and the impulse gain applied at
//! the coupling instants is `K = G e^{-AT} = e_n' C^{-1} e^{A(n-1)T}`. The
//! closed loop `M = (I - BK) e^{AT}` is nilpotent, `KB = 1`, and `BK` is a
//! projection.

use alloc::vec::Vec;
use core::fmt;

use crate::matlib::{expm, matmul, solve, two_norm, Mat, MatError, Svd, C64};

/// Smallest-to-largest singular value ratio of the controllability matrix
/// below which the design is rejected.
pub const CONTROLLABILITY_RTOL: f64 = 1e-10;
const KB_TOL: f64 = 1e-9;
const NILPOTENT_RTOL: f64 = 1e-8;
const GAIN_AGREEMENT_RTOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-10;
const RECONSTRUCTION_RTOL: f64 = 1e-9;
/// Relative cut for null vectors while building the kernel flag.
const FLAG_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum DesignError {
    InvalidSystem(&'static str),
    /// `(e^{AT}, B)` is not controllable to tolerance.
    LosesControllability {
        sigma_ratio: f64,
    },
    NotNilpotent {
        residual: f64,
    },
    /// Internal cross-checks of the closed-form design failed.
    Inconsistent(&'static str),
    Mat(MatError),
}

impl fmt::Display for DesignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignError::InvalidSystem(why) => write!(f, "invalid agent system: {why}"),
            DesignError::LosesControllability { sigma_ratio } => write!(
                f,
                "period T loses controllability: (e^(AT), B) has singular value ratio {sigma_ratio:.3e}"
            ),
            DesignError::NotNilpotent { residual } => {
                write!(
                    f,
                    "matrix is not nilpotent to tolerance (residual {residual:.3e})"
                )
            }
            DesignError::Inconsistent(what) => write!(f, "internal consistency check failed: {what}"),
            DesignError::Mat(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DesignError {}

impl From<MatError> for DesignError {
    fn from(e: MatError) -> Self {
        DesignError::Mat(e)
    }
}

/// One agent: `x' = A x + B u` with impulses every `period` seconds.
#[derive(Debug, Clone)]
pub struct AgentSystem {
    a: Mat,
    b: Mat,
    period: f64,
}

impl AgentSystem {
    /// Checks shapes, finiteness and `period > 0`.
    ///
    /// Controllability of `(A, B)` is not enforced here: an uncontrollable
    /// pair makes `(e^{AT}, B)` uncontrollable for every period, and
    /// [`design_deadbeat`] reports that case.
    pub fn new(a: Mat, b: Mat, period: f64) -> Result<Self, DesignError> {
        if !a.is_square() {
            return Err(DesignError::InvalidSystem("A must be square"));
        }
        if b.rows() != a.rows() || b.cols() != 1 {
            return Err(DesignError::InvalidSystem("B must be an n x 1 column"));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(DesignError::InvalidSystem("period T must be positive and finite"));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(DesignError::InvalidSystem("non-finite entries"));
        }
        if a.max_imag() != 0.0 || b.max_imag() != 0.0 {
            return Err(DesignError::InvalidSystem("A and B must be real"));
        }
        Ok(AgentSystem { a, b, period })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// `e^{A s}`.
    pub fn flow(&self, s: f64) -> Result<Mat, MatError> {
        expm(&self.a.scale_real(s))
    }

    /// Kalman rank test on `(A, B)` using the controllability tolerance.
    pub fn pair_controllable(&self) -> bool {
        let n = self.dim();
        let mut cols = Vec::with_capacity(n);
        let mut v = self.b.clone();
        for _ in 0..n {
            cols.push(v.clone());
            v = &self.a * &v;
        }
        let k = Mat::hstack(&cols).expect("equal row counts");
        let svd = Svd::new(&k);
        svd.smallest() > CONTROLLABILITY_RTOL * svd.largest()
    }
}

/// Controllability matrix `[B, e^{AT}B, ..., e^{A(n-1)T}B]` of the sampled pair.
pub fn controllability_matrix(sys: &AgentSystem) -> Result<Mat, MatError> {
    let e = sys.flow(sys.period())?;
    Ok(krylov(&e, sys.b(), sys.dim()))
}

fn krylov(e: &Mat, b: &Mat, n: usize) -> Mat {
    let mut cols = Vec::with_capacity(n);
    let mut v = b.clone();
    for _ in 0..n {
        cols.push(v.clone());
        v = e * &v;
    }
    Mat::hstack(&cols).expect("equal row counts")
}

/// Deadbeat gains, closed loop and its Schur factors.
#[derive(Debug, Clone)]
pub struct DeadbeatDesign {
    /// `e^{AT}`.
    pub flow: Mat,
    pub controllability: Mat,
    /// Deadbeat gain of `(e^{AT}, B)`, `1 x n`.
    pub g: Mat,
    /// Impulse gain `G e^{-AT}`, `1 x n`.
    pub k: Mat,
    /// `B K`.
    pub bk: Mat,
    /// `(I - BK) e^{AT}`.
    pub m: Mat,
    /// Unitary with `Q^H M Q = N`.
    pub q: Mat,
    /// Strictly upper triangular.
    pub n: Mat,
    pub kb: f64,
}

impl DeadbeatDesign {
    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    /// `B K e^{AT}`.
    pub fn bk_flow(&self) -> Mat {
        &self.bk * &self.flow
    }

    /// `max ||(BK)^2 - BK||` entrywise.
    pub fn projection_defect(&self) -> f64 {
        (&self.bk * &self.bk).max_abs_diff(&self.bk)
    }
}

pub fn design_deadbeat(sys: &AgentSystem) -> Result<DeadbeatDesign, DesignError> {
    let n = sys.dim();
    let t = sys.period();
    let flow = sys.flow(t)?;
    let back = sys.flow(-t)?;
    let c = krylov(&flow, sys.b(), n);

    let svd = Svd::new(&c);
    let ratio = if svd.largest() > 0.0 {
        svd.smallest() / svd.largest()
    } else {
        0.0
    };
    if ratio.is_nan() || ratio <= CONTROLLABILITY_RTOL {
        return Err(DesignError::LosesControllability { sigma_ratio: ratio });
    }

    let flow_prev = flow.pow(n - 1)?;
    let flow_n = matmul(&flow_prev, &flow)?;
    let g = solve(&c, &flow_n).map_err(controllability_lost)?.row_at(n - 1);
    let k = solve(&c, &flow_prev).map_err(controllability_lost)?.row_at(n - 1);
    let k_via_g = &g * &back;
    let scale = two_norm(&k).max(1.0);
    if k.max_abs_diff(&k_via_g) > GAIN_AGREEMENT_RTOL * scale {
        return Err(DesignError::Inconsistent("the two closed forms for K disagree"));
    }

    let bk = sys.b() * &k;
    let m = &(&Mat::identity(n) - &bk) * &flow;
    let kb = (&k * sys.b())[(0, 0)].re;
    if (kb - 1.0).abs() > KB_TOL {
        return Err(DesignError::Inconsistent("KB differs from 1"));
    }

    let m_norm = two_norm(&m);
    let scale = m_norm.max(two_norm(&flow));
    let residual = two_norm(&m.pow(n)?);
    if residual > NILPOTENT_RTOL * libm::pow(scale, n as f64) {
        return Err(DesignError::Inconsistent("closed loop is not nilpotent"));
    }

    let schur_scale = m_norm.max(two_norm(&bk) * two_norm(&flow));
    let (q, nmat) = schur_nilpotent_scaled(&m, schur_scale).map_err(|e| match e {
        DesignError::NotNilpotent { .. } => DesignError::Inconsistent("Schur flag of the closed loop failed"),
        other => other,
    })?;

    Ok(DeadbeatDesign {
        flow,
        controllability: c,
        g,
        k,
        bk,
        m,
        q,
        n: nmat,
        kb,
    })
}

fn controllability_lost(e: MatError) -> DesignError {
    match e {
        MatError::Singular => DesignError::LosesControllability { sigma_ratio: 0.0 },
        other => DesignError::Mat(other),
    }
}

/// Unitary triangularization of a nilpotent matrix.
///
/// Builds an orthonormal basis adapted to the flag
/// `ker(m) ⊂ ker(m²) ⊂ ... ⊂ C^n`: each new layer consists of the unit
/// vectors orthogonal to the current subspace that `m` maps back into it, so
/// `m` sends every basis vector into the span of the earlier ones and
/// `N = Q^H m Q` is strictly upper triangular. Entries on and below the
/// diagonal are stored as exact zeros after being checked small.
pub fn schur_nilpotent(m: &Mat) -> Result<(Mat, Mat), DesignError> {
    schur_nilpotent_scaled(m, two_norm(m))
}

/// As [`schur_nilpotent`], with null-space and reconstruction cuts taken
/// relative to `scale` instead of `||m||`. Callers that know `m` is a
/// rounding residue of a product (such as `(I - BK) e^{AT}` for `n = 1`)
/// pass the size of the factors.
fn schur_nilpotent_scaled(m: &Mat, scale: f64) -> Result<(Mat, Mat), DesignError> {
    if !m.is_square() {
        return Err(MatError::NotSquare {
            op: "schur_nilpotent",
            rows: m.rows(),
            cols: m.cols(),
        }
        .into());
    }
    let n = m.rows();
    if scale == 0.0 || m.max_abs() == 0.0 {
        return Ok((Mat::identity(n), Mat::zeros(n, n)));
    }

    let mut basis: Vec<Mat> = Vec::with_capacity(n);
    while basis.len() < n {
        let dim = basis.len();
        let layer = if dim == 0 {
            null_space_scaled(m, scale)
        } else {
            let current = Mat::hstack(&basis)?;
            let complement = orthogonal_complement(&current)?;
            // (I - QQ^H) m restricted to the complement of the flag so far
            let mz = m * &complement;
            let proj = &current * &(&current.adjoint() * &mz);
            null_space_scaled(&(&mz - &proj), scale).map(|y| &complement * &y)
        };
        let layer = layer.map_err(|residual| DesignError::NotNilpotent { residual })?;
        let start = basis.len();
        for j in 0..layer.cols() {
            basis.push(layer.col(j));
        }
        reorthogonalize(&mut basis, start);
    }

    let q = Mat::hstack(&basis)?;
    let mut t = &(&q.adjoint() * m) * &q;
    let mut lower = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            lower = lower.max(t[(i, j)].norm());
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    if lower > RECONSTRUCTION_RTOL * scale {
        return Err(DesignError::NotNilpotent {
            residual: lower / scale,
        });
    }
    let unitary_defect = (&q.adjoint() * &q).max_abs_diff(&Mat::identity(n));
    if unitary_defect > UNITARY_TOL {
        return Err(DesignError::Inconsistent("Schur basis lost orthonormality"));
    }
    Ok((q, t))
}

/// Null space of `a` with the cut taken relative to `scale` (the norm of the
/// full matrix) rather than to `a`'s own norm. On failure returns the
/// smallest singular value relative to `scale`.
fn null_space_scaled(a: &Mat, scale: f64) -> Result<Mat, f64> {
    let svd = Svd::new(a);
    let cut = FLAG_RTOL * scale;
    let k = svd.singular_values.iter().filter(|&&s| s <= cut).count();
    if k == 0 {
        return Err(svd.smallest() / scale);
    }
    let cols = a.cols();
    Ok(svd.v.block(0, cols - k, cols, k))
}

/// Orthonormal basis of the complement of the column span of `q`
/// (assumed orthonormal).
fn orthogonal_complement(q: &Mat) -> Result<Mat, MatError> {
    let n = q.rows();
    let k = q.cols();
    let proj = &Mat::identity(n) - &(q * &q.adjoint());
    // P is a Hermitian projection; its leading right singular vectors span range(P)
    let svd = Svd::new(&proj);
    let mut basis: Vec<Mat> = (0..(n - k)).map(|j| svd.v.col(j)).collect();
    reorthogonalize(&mut basis, 0);
    Mat::hstack(&basis)
}

/// Modified Gram-Schmidt (two passes) on `basis[start..]` against everything
/// before it.
fn reorthogonalize(basis: &mut [Mat], start: usize) {
    for _ in 0..2 {
        for j in start..basis.len() {
            let (done, rest) = basis.split_at_mut(j);
            let v = &mut rest[0];
            for u in done.iter() {
                let coeff: C64 = (0..u.rows()).map(|i| u[(i, 0)].conj() * v[(i, 0)]).sum();
                for i in 0..u.rows() {
                    let ui = u[(i, 0)];
                    v[(i, 0)] -= coeff * ui;
                }
            }
            let norm = v.frobenius();
            *v = v.scale_real(1.0 / norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn lc_system() -> AgentSystem {
        AgentSystem::new(
            Mat::from_rows(&[[0.0, -1.0], [1.0, 0.0]]),
            Mat::column(&[1.0, 0.0]),
            FRAC_PI_2,
        )
        .unwrap()
    }

    #[test]
    fn lc_controllability_matrix_is_identity() {
        let c = controllability_matrix(&lc_system()).unwrap();
        assert!(c.max_abs_diff(&Mat::identity(2)) < 1e-15);
    }

    #[test]
    fn scalar_controllability_matrix() {
        let sys = AgentSystem::new(Mat::from_rows(&[[0.3]]), Mat::column(&[2.5]), 1.0).unwrap();
        assert_eq!(controllability_matrix(&sys).unwrap(), Mat::column(&[2.5]));
    }

    #[test]
    fn zero_dynamics_repeat_b() {
        let sys = AgentSystem::new(Mat::zeros(3, 3), Mat::column(&[1.0, 2.0, 3.0]), 0.7).unwrap();
        let c = controllability_matrix(&sys).unwrap();
        for j in 0..3 {
            assert_eq!(c.col(j), Mat::column(&[1.0, 2.0, 3.0]));
        }
        assert!(matches!(
            design_deadbeat(&sys),
            Err(DesignError::LosesControllability { .. })
        ));
        assert!(!sys.pair_controllable());
    }

    #[test]
    fn lc_gains() {
        let d = design_deadbeat(&lc_system()).unwrap();
        assert!(d.k.max_abs_diff(&Mat::row(&[1.0, 0.0])) < 1e-12);
        assert!(d.g.max_abs_diff(&Mat::row(&[0.0, -1.0])) < 1e-12);
        assert!(d.m.max_abs_diff(&Mat::from_rows(&[[0.0, 0.0], [1.0, 0.0]])) < 1e-12);
        assert!(d.m.pow(2).unwrap().max_abs() < 1e-15);
        assert!((d.kb - 1.0).abs() < 1e-15);
        assert!((two_norm(&d.n) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_deadbeat_kills_state_in_one_step() {
        for &(a, t) in &[(0.5, 1.0), (-2.0, 0.3), (0.0, 4.0)] {
            let sys = AgentSystem::new(Mat::from_rows(&[[a]]), Mat::column(&[1.0]), t).unwrap();
            let d = design_deadbeat(&sys).unwrap();
            assert!((d.k[(0, 0)].re - 1.0).abs() < 1e-14);
            assert!(d.m.max_abs() < 1e-14);
            assert_eq!(d.n, Mat::zeros(1, 1));
        }
    }

    #[test]
    fn half_turn_period_is_degenerate() {
        // e^{A pi} = -I, so C = [B, -B]
        let sys = AgentSystem::new(
            Mat::from_rows(&[[0.0, -1.0], [1.0, 0.0]]),
            Mat::column(&[1.0, 0.0]),
            PI,
        )
        .unwrap();
        assert!(sys.pair_controllable());
        let err = design_deadbeat(&sys).unwrap_err();
        assert!(matches!(err, DesignError::LosesControllability { .. }));
        assert!(alloc::format!("{err}").contains("period T loses controllability"));
    }

    #[test]
    fn invalid_systems() {
        let a = Mat::identity(2);
        assert!(AgentSystem::new(a.clone(), Mat::column(&[1.0]), 1.0).is_err());
        assert!(AgentSystem::new(a.clone(), Mat::column(&[1.0, 0.0]), 0.0).is_err());
        assert!(AgentSystem::new(a.clone(), Mat::column(&[1.0, 0.0]), f64::NAN).is_err());
        assert!(AgentSystem::new(Mat::zeros(2, 3), Mat::column(&[1.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn schur_of_zero() {
        let (q, n) = schur_nilpotent(&Mat::zeros(3, 3)).unwrap();
        assert_eq!(q, Mat::identity(3));
        assert_eq!(n, Mat::zeros(3, 3));
    }

    #[test]
    fn schur_of_lower_shift() {
        let m = Mat::from_rows(&[[0.0, 0.0], [1.0, 0.0]]);
        let (q, n) = schur_nilpotent(&m).unwrap();
        assert_eq!(n[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(n[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(n[(1, 1)], C64::new(0.0, 0.0));
        let recon = &(&q.adjoint() * &m) * &q;
        assert!(recon.max_abs_diff(&n) < 1e-15);
        assert!((n[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schur_rejects_non_nilpotent() {
        let m = Mat::from_rows(&[[1.0, 0.0], [0.0, 0.0]]);
        assert!(matches!(
            schur_nilpotent(&m),
            Err(DesignError::NotNilpotent { .. })
        ));
        assert!(matches!(
            schur_nilpotent(&Mat::identity(2)),
            Err(DesignError::NotNilpotent { .. })
        ));
    }

    #[test]
    fn schur_of_conjugated_jordan_block() {
        // Z J Z^{-1}, J the 4x4 nilpotent Jordan block
        let mut j = Mat::zeros(4, 4);
        for i in 0..3 {
            j[(i, i + 1)] = C64::new(1.0, 0.0);
        }
        let z = Mat::from_rows(&[
            [1.0, 0.3, -0.2, 0.1],
            [0.2, 1.1, 0.4, -0.3],
            [-0.1, 0.2, 0.9, 0.5],
            [0.3, -0.4, 0.1, 1.2],
        ]);
        let zinv = solve(&z, &Mat::identity(4)).unwrap();
        let m = &(&z * &j) * &zinv;
        let (q, n) = schur_nilpotent(&m).unwrap();
        assert!((&q.adjoint() * &q).max_abs_diff(&Mat::identity(4)) < 1e-12);
        let recon = &(&q.adjoint() * &m) * &q;
        assert!(two_norm(&(&recon - &n)) <= 1e-9 * two_norm(&m));
        assert!((two_norm(&n) - two_norm(&m)).abs() <= 1e-9 * two_norm(&m));
    }
}
