//! Synchronization analysis of the impulsively coupled network.
//!
//! Between impulses every agent flows freely, `x' = [I ⊗ A] x`; at each
//! `t = kT` the state jumps by `x(kT+) = e^{-μ[Γ ⊗ BK]} x(kT-)`. Sampling
//! right after the jumps gives the LTI recursion
//!
//! ```text
//! x[k+1] = ( e^{-Γμ} ⊗ e^{AT} + (I - e^{-Γμ}) ⊗ M ) x[k],   M = (I - BK) e^{AT}
//! ```
//!
//! which holds because `KB = 1` makes `BK` a projection. Off the consensus
//! subspace this map is block triangular with diagonal blocks
//! `D_i = M + e^{-λ_i μ} BK e^{AT}`, one per nonzero Laplacian eigenvalue, so
//! the network synchronizes iff every `D_i` is Schur stable. The coupling
//! bound
//!
//! ```text
//! μ > ln( ||BK e^{AT}|| · Σ_{k<n} ||N||^k ) / Re(λ_2)
//! ```
//!
//! is sufficient. `N` is the strictly triangular Schur factor of `M`; since
//! `||N|| = ||M||` the bound does not depend on the Schur basis.

mod pulse;
mod simulate;

use alloc::vec::Vec;
use core::fmt;

pub use pulse::{dirac_pulse_oracle, PULSE_STEPS};
pub use simulate::{simulate, simulate_time_varying, Sample, SampleTag, Trajectory};

use crate::deadbeat::{AgentSystem, DeadbeatDesign, DesignError};
use crate::graph::{GraphError, LaplacianSpectrum};
use crate::matlib::{expm, kron, spectral_radius, two_norm, Mat, MatError, C64};

const KB_TOL: f64 = 1e-9;
const PROJECTION_TOL: f64 = 1e-9;
const NORM_AGREEMENT_RTOL: f64 = 1e-9;
/// Margin below 1 required of the block spectral radii.
pub const SYNC_MARGIN: f64 = 1e-9;
pub const DEFAULT_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub enum SyncError {
    /// `KB` is not 1, so `BK` is not a projection and the closed form fails.
    NotNormalized {
        kb: f64,
    },
    ProjectionViolated {
        defect: f64,
    },
    /// `Re(λ_2) <= 0`: the graph has no spanning tree.
    NonPositiveLambda2 {
        re: f64,
    },
    NoSpanningTree {
        index: usize,
    },
    InvalidMu(&'static str),
    InvalidRun(&'static str),
    LeftVectorNotNormalized {
        sum: f64,
    },
    /// `||N||` and `||M||` disagree beyond tolerance.
    SchurNormMismatch {
        norm_n: f64,
        norm_m: f64,
    },
    Design(DesignError),
    Graph(GraphError),
    Mat(MatError),
}

impl fmt::Display for SyncError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyncError::NotNormalized { kb } => write!(f, "KB = {kb} is not 1"),
            SyncError::ProjectionViolated { defect } => {
                write!(f, "BK is not a projection (defect {defect:.3e})")
            }
            SyncError::NonPositiveLambda2 { re } => {
                write!(
                    f,
                    "Re(lambda_2) = {re} is not positive; the graph has no spanning tree"
                )
            }
            SyncError::NoSpanningTree { index } => {
                write!(f, "graph {index} does not contain a spanning tree")
            }
            SyncError::InvalidMu(why) => write!(f, "invalid coupling strength: {why}"),
            SyncError::InvalidRun(why) => write!(f, "invalid run: {why}"),
            SyncError::LeftVectorNotNormalized { sum } => {
                write!(f, "left null vector sums to {sum}, not 1")
            }
            SyncError::SchurNormMismatch { norm_n, norm_m } => {
                write!(f, "||N|| = {norm_n} differs from ||M|| = {norm_m}")
            }
            SyncError::Design(e) => write!(f, "{e}"),
            SyncError::Graph(e) => write!(f, "{e}"),
            SyncError::Mat(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SyncError {}

impl From<MatError> for SyncError {
    fn from(e: MatError) -> Self {
        SyncError::Mat(e)
    }
}

impl From<DesignError> for SyncError {
    fn from(e: DesignError) -> Self {
        SyncError::Design(e)
    }
}

impl From<GraphError> for SyncError {
    fn from(e: GraphError) -> Self {
        SyncError::Graph(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuPolicy {
    Explicit(f64),
    /// `μ = safety × bound`; `safety > 1`.
    Auto {
        safety: f64,
    },
    Infinite,
}

impl MuPolicy {
    pub fn validate(&self) -> Result<(), SyncError> {
        match *self {
            MuPolicy::Explicit(mu) if !(mu.is_finite() && mu >= 0.0) => {
                Err(SyncError::InvalidMu("explicit mu must be finite and nonnegative"))
            }
            MuPolicy::Auto { safety } if !(safety.is_finite() && safety > 1.0) => {
                Err(SyncError::InvalidMu("auto safety factor must exceed 1"))
            }
            _ => Ok(()),
        }
    }
}

/// A resolved coupling strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Finite(f64),
    Infinite,
}

impl Coupling {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Coupling::Finite(mu) => Some(mu),
            Coupling::Infinite => None,
        }
    }
}

/// Communication topology: fixed, or one graph per period (cycled).
#[derive(Debug, Clone)]
pub enum Topology {
    Fixed(LaplacianSpectrum),
    Sequence(Vec<LaplacianSpectrum>),
}

impl Topology {
    pub fn agents(&self) -> usize {
        match self {
            Topology::Fixed(s) => s.agents(),
            Topology::Sequence(seq) => seq[0].agents(),
        }
    }

    /// Graph in force at the jump that ends period `k`.
    pub fn at(&self, k: usize) -> &LaplacianSpectrum {
        match self {
            Topology::Fixed(s) => s,
            Topology::Sequence(seq) => &seq[k % seq.len()],
        }
    }

    pub fn graphs(&self) -> &[LaplacianSpectrum] {
        match self {
            Topology::Fixed(s) => core::slice::from_ref(s),
            Topology::Sequence(seq) => seq,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkRun {
    pub system: AgentSystem,
    pub design: DeadbeatDesign,
    pub topology: Topology,
    pub mu: MuPolicy,
    /// Stacked initial state `[x_1; ...; x_q]`, length `q·n`.
    pub x0: Vec<f64>,
    pub periods: usize,
    pub samples_per_period: usize,
}

impl NetworkRun {
    pub fn new(
        system: AgentSystem,
        design: DeadbeatDesign,
        topology: Topology,
        mu: MuPolicy,
        x0: Vec<f64>,
        periods: usize,
        samples_per_period: usize,
    ) -> Result<Self, SyncError> {
        mu.validate()?;
        let n = system.dim();
        if design.dim() != n {
            return Err(SyncError::InvalidRun("design dimension differs from the system"));
        }
        let graphs = topology.graphs();
        if graphs.is_empty() {
            return Err(SyncError::InvalidRun("empty graph sequence"));
        }
        let q = graphs[0].agents();
        if graphs.iter().any(|g| g.agents() != q) {
            return Err(SyncError::InvalidRun(
                "graphs in a sequence must share the agent count",
            ));
        }
        for (index, g) in graphs.iter().enumerate() {
            if !g.spanning_tree {
                return Err(SyncError::NoSpanningTree { index });
            }
        }
        if x0.len() != q * n {
            return Err(SyncError::InvalidRun("x0 length must equal q * n"));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(SyncError::InvalidRun("x0 has non-finite entries"));
        }
        if samples_per_period == 0 {
            return Err(SyncError::InvalidRun("samples_per_period must be at least 1"));
        }
        if matches!(topology, Topology::Sequence(_)) && mu != MuPolicy::Infinite {
            return Err(SyncError::InvalidRun(
                "time-varying topology requires infinite mu",
            ));
        }
        Ok(NetworkRun {
            system,
            design,
            topology,
            mu,
            x0,
            periods,
            samples_per_period,
        })
    }

    pub fn agents(&self) -> usize {
        self.topology.agents()
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Resolve the policy to a concrete coupling.
    pub fn coupling(&self) -> Result<Coupling, SyncError> {
        match self.mu {
            MuPolicy::Explicit(mu) => Ok(Coupling::Finite(mu)),
            MuPolicy::Infinite => Ok(Coupling::Infinite),
            MuPolicy::Auto { safety } => {
                let spectrum = match &self.topology {
                    Topology::Fixed(s) => s,
                    Topology::Sequence(_) => {
                        return Err(SyncError::InvalidRun("auto mu needs a fixed topology"))
                    }
                };
                let lambda2 = spectrum
                    .lambda2
                    .ok_or(SyncError::InvalidRun("auto mu needs at least two agents"))?;
                auto_mu(&self.design, lambda2, safety).map(Coupling::Finite)
            }
        }
    }
}

/// `safety × bound` when the bound is positive. A nonpositive bound puts no
/// constraint on `μ`; the policy then uses `safety / Re(λ_2)`.
pub fn auto_mu(design: &DeadbeatDesign, lambda2: C64, safety: f64) -> Result<f64, SyncError> {
    let bound = mu_bound(design, lambda2)?;
    if bound > 0.0 {
        Ok(safety * bound)
    } else {
        Ok(safety / lambda2.re)
    }
}

fn check_normalized(design: &DeadbeatDesign) -> Result<(), SyncError> {
    if (design.kb - 1.0).abs() > KB_TOL {
        return Err(SyncError::NotNormalized { kb: design.kb });
    }
    let defect = design.projection_defect();
    let scale = two_norm(&design.bk).max(1.0);
    if defect > PROJECTION_TOL * scale * scale {
        return Err(SyncError::ProjectionViolated { defect });
    }
    Ok(())
}

/// Jump map `e^{-μ[Γ ⊗ BK]}`, evaluated as `I + (e^{-Γμ} - I) ⊗ BK`.
pub fn impulse_jump(laplacian: &Mat, design: &DeadbeatDesign, mu: f64) -> Result<Mat, SyncError> {
    check_normalized(design)?;
    let q = laplacian.rows();
    let n = design.dim();
    let decay = expm(&laplacian.scale_real(-mu))?;
    let jump = &Mat::identity(q * n) + &kron(&(&decay - &Mat::identity(q)), &design.bk);
    Ok(jump)
}

/// One-period map `e^{-Γμ} ⊗ e^{AT} + (I - e^{-Γμ}) ⊗ M`.
pub fn step_matrix(laplacian: &Mat, design: &DeadbeatDesign, mu: f64) -> Result<Mat, SyncError> {
    check_normalized(design)?;
    let q = laplacian.rows();
    let decay = expm(&laplacian.scale_real(-mu))?;
    let rest = &Mat::identity(q) - &decay;
    Ok(&kron(&decay, &design.flow) + &kron(&rest, &design.m))
}

/// One-period map in the `μ = ∞` limit, `1ℓ' ⊗ e^{AT} + (I - 1ℓ') ⊗ M`.
pub fn step_matrix_consensus(left_null: &Mat, design: &DeadbeatDesign) -> Result<Mat, SyncError> {
    let sum: C64 = left_null.as_slice().iter().sum();
    if (sum - C64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(SyncError::LeftVectorNotNormalized { sum: sum.re });
    }
    let q = left_null.cols();
    let avg = &Mat::ones_column(q) * left_null;
    let rest = &Mat::identity(q) - &avg;
    Ok(&kron(&avg, &design.flow) + &kron(&rest, &design.m))
}

/// Norms entering the coupling bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub norm_bk_flow: f64,
    pub norm_n: f64,
    pub norm_m: f64,
    /// `Σ_{k<n} ||N||^k`.
    pub series: f64,
}

pub fn bound_terms(design: &DeadbeatDesign) -> Result<BoundTerms, SyncError> {
    let norm_bk_flow = two_norm(&design.bk_flow());
    let norm_n = two_norm(&design.n);
    let norm_m = two_norm(&design.m);
    let scale = norm_m.max(norm_bk_flow);
    if (norm_n - norm_m).abs() > NORM_AGREEMENT_RTOL * scale {
        return Err(SyncError::SchurNormMismatch { norm_n, norm_m });
    }
    let mut series = 0.0;
    let mut power = 1.0;
    for _ in 0..design.dim() {
        series += power;
        power *= norm_n;
    }
    Ok(BoundTerms {
        norm_bk_flow,
        norm_n,
        norm_m,
        series,
    })
}

/// Sufficient coupling strength: `ln(||BK e^{AT}|| Σ_{k<n} ||N||^k) / Re(λ_2)`.
pub fn mu_bound(design: &DeadbeatDesign, lambda2: C64) -> Result<f64, SyncError> {
    if lambda2.re.is_nan() || lambda2.re <= 0.0 {
        return Err(SyncError::NonPositiveLambda2 { re: lambda2.re });
    }
    let terms = bound_terms(design)?;
    Ok(libm::log(terms.norm_bk_flow * terms.series) / lambda2.re)
}

/// `D_i = M + e^{-λ_i μ} BK e^{AT}` for each given (nonzero) eigenvalue.
pub fn diagonal_blocks(design: &DeadbeatDesign, eigenvalues: &[C64], mu: f64) -> Vec<Mat> {
    let bkf = design.bk_flow();
    eigenvalues
        .iter()
        .map(|&lambda| {
            let w = (-lambda * mu).exp();
            &design.m + &bkf.scale(w)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    /// `None` for infinite coupling.
    pub mu: Option<f64>,
    /// Largest bound over the graphs in force.
    pub mu_bound: f64,
    pub norm_bk_flow: f64,
    pub norm_n: f64,
    pub norm_m: f64,
    /// `λ_2` of the fixed graph, or the one with smallest real part over a
    /// sequence.
    pub lambda2: C64,
    /// Spectral radius of each `D_i`, `i = 2..q` (per graph, concatenated,
    /// for a sequence).
    pub block_radii: Vec<f64>,
    pub phi_radius: f64,
    pub synchronous: bool,
}

pub fn analyze(run: &NetworkRun) -> Result<AnalysisReport, SyncError> {
    let design = &run.design;
    let terms = bound_terms(design)?;
    let coupling = run.coupling()?;

    let mut mu_bound_max = f64::NEG_INFINITY;
    let mut lambda2_min: Option<C64> = None;
    let mut block_radii = Vec::new();
    for (index, spectrum) in run.topology.graphs().iter().enumerate() {
        if !spectrum.spanning_tree {
            return Err(SyncError::NoSpanningTree { index });
        }
        let Some(lambda2) = spectrum.lambda2 else {
            continue;
        };
        mu_bound_max = mu_bound_max.max(mu_bound(design, lambda2)?);
        if lambda2_min.is_none_or(|l| lambda2.re < l.re) {
            lambda2_min = Some(lambda2);
        }
        let nonzero = spectrum.nonzero_eigenvalues();
        match coupling {
            Coupling::Finite(mu) => {
                for d in diagonal_blocks(design, nonzero, mu) {
                    block_radii.push(spectral_radius(&d)?);
                }
            }
            Coupling::Infinite => {
                // D_i -> M, whose Schur factor has an exactly zero diagonal
                let r = spectral_radius(&design.n)?;
                block_radii.extend(core::iter::repeat_n(r, nonzero.len()));
            }
        }
    }
    let lambda2 = lambda2_min.ok_or(SyncError::InvalidRun("network needs at least two agents"))?;
    let phi_radius = block_radii.iter().copied().fold(0.0, f64::max);
    Ok(AnalysisReport {
        mu: coupling.finite(),
        mu_bound: mu_bound_max,
        norm_bk_flow: terms.norm_bk_flow,
        norm_n: terms.norm_n,
        norm_m: terms.norm_m,
        lambda2,
        block_radii,
        phi_radius,
        synchronous: phi_radius < 1.0 - SYNC_MARGIN,
    })
}
