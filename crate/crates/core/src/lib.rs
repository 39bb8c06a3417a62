//! Impulsive deadbeat coupling for networks of identical linear agents.
//!
//! Each agent runs `x_i' = A x_i + B u_i` with a scalar input that fires only
//! at the instants `kT`, driven by relative measurements
//! `z_i = Σ_j γ_ij (x_j - x_i)`. Choosing the impulse gain `K` as the
//! normalized deadbeat gain of the sampled pair `(e^{AT}, B)` makes the
//! network synchronize once the coupling strength `μ` is large enough, and
//! exactly after `n` periods in the limit `μ = ∞`.
//!
//! Modules, bottom up:
//!
//! - [`matlib`]: dense complex kernels (products, Kronecker, `expm`, LU,
//!   Jacobi SVD, Hessenberg QR eigenvalues).
//! - [`deadbeat`]: gain design and the Schur factors of the nilpotent loop.
//! - [`graph`]: Laplacians and the spectral spanning-tree test.
//! - [`sync`]: the one-period network map, coupling bound, block spectral
//!   radii and exact simulation.
//!
//! The crate is `no_std` and only needs `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod deadbeat;
pub mod demo;
pub mod graph;
pub mod matlib;
pub mod sync;

pub use deadbeat::{
    controllability_matrix, design_deadbeat, schur_nilpotent, AgentSystem, DeadbeatDesign, DesignError,
};
pub use graph::{analyze_spectrum, laplacian, CouplingGraph, GraphError, LaplacianSpectrum};
pub use matlib::{Mat, MatError, C64};
pub use sync::{
    analyze, diagonal_blocks, impulse_jump, mu_bound, simulate, simulate_time_varying, step_matrix,
    step_matrix_consensus, AnalysisReport, MuPolicy, NetworkRun, SyncError, Topology, Trajectory,
};
