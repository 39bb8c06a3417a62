//! Coupling graphs, their Laplacians and the spanning-tree check.
//!
//! Orientation: `weights[i][j] = γ_ij` weighs `x_j - x_i` in agent `i`'s
//! measurement, so information flows from `j` to `i`.

use alloc::vec::Vec;
use core::fmt;

use crate::matlib::{eigenvalues, left_null_vector, two_norm, Mat, MatError, C64};

/// Relative tolerance (against `||Γ||`) for the zero / positive-real-part
/// split of the Laplacian spectrum.
pub const SPECTRUM_RTOL: f64 = 1e-9;
const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    NotSquare { rows: usize },
    Empty,
    NegativeWeight { i: usize, j: usize, weight: f64 },
    NonzeroDiagonal { i: usize, weight: f64 },
    NonFinite { i: usize, j: usize },
    RowSum { row: usize, sum: f64 },
    NoSpanningTree,
    Mat(MatError),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::NotSquare { rows } => write!(f, "weight table row {rows} has the wrong length"),
            GraphError::Empty => write!(f, "graph has no agents"),
            GraphError::NegativeWeight { i, j, weight } => {
                write!(f, "negative weight gamma[{i}][{j}] = {weight}")
            }
            GraphError::NonzeroDiagonal { i, weight } => {
                write!(f, "diagonal weight gamma[{i}][{i}] = {weight} must be zero")
            }
            GraphError::NonFinite { i, j } => write!(f, "weight gamma[{i}][{j}] is not finite"),
            GraphError::RowSum { row, sum } => write!(f, "Laplacian row {row} sums to {sum:e}, not zero"),
            GraphError::NoSpanningTree => write!(f, "graph does not contain a spanning tree"),
            GraphError::Mat(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for GraphError {}

impl From<MatError> for GraphError {
    fn from(e: MatError) -> Self {
        GraphError::Mat(e)
    }
}

/// Nonnegative weight table with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    weights: Vec<Vec<f64>>,
}

impl CouplingGraph {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        let q = weights.len();
        if q == 0 {
            return Err(GraphError::Empty);
        }
        for (i, row) in weights.iter().enumerate() {
            if row.len() != q {
                return Err(GraphError::NotSquare { rows: i });
            }
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(GraphError::NonFinite { i, j });
                }
                if i == j && w != 0.0 {
                    return Err(GraphError::NonzeroDiagonal { i, weight: w });
                }
                if w < 0.0 {
                    return Err(GraphError::NegativeWeight { i, j, weight: w });
                }
            }
        }
        Ok(CouplingGraph { weights })
    }

    pub fn agents(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Same graph with every weight multiplied by `s >= 0`.
    pub fn scaled(&self, s: f64) -> Result<Self, GraphError> {
        CouplingGraph::new(
            self.weights
                .iter()
                .map(|row| row.iter().map(|w| w * s).collect())
                .collect(),
        )
    }
}

/// `Γ` with `Σ_j γ_ij` on the diagonal and `-γ_ij` off it.
pub fn laplacian(g: &CouplingGraph) -> Mat {
    let q = g.agents();
    let mut l = Mat::zeros(q, q);
    for i in 0..q {
        let mut degree = 0.0;
        for j in 0..q {
            if i != j {
                let w = g.weight(i, j);
                degree += w;
                l[(i, j)] = C64::new(-w, 0.0);
            }
        }
        l[(i, i)] = C64::new(degree, 0.0);
    }
    l
}

/// Spectral summary of a Laplacian.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    pub laplacian: Mat,
    /// Ascending real part, ties by imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Nonzero eigenvalue of smallest real part; present iff `spanning_tree`
    /// and there are at least two agents.
    pub lambda2: Option<C64>,
    /// Left null row normalized to sum one; present iff `spanning_tree`.
    pub left_null: Option<Mat>,
    pub spanning_tree: bool,
}

impl LaplacianSpectrum {
    pub fn agents(&self) -> usize {
        self.laplacian.rows()
    }

    /// Eigenvalues other than the simple zero (`λ_2, ..., λ_q`).
    pub fn nonzero_eigenvalues(&self) -> &[C64] {
        &self.eigenvalues[1..]
    }

    /// `1 ℓ'`, the limit of `e^{-Γt}`. `None` without a spanning tree.
    pub fn consensus_projector(&self) -> Option<Mat> {
        let l = self.left_null.as_ref()?;
        Some(&Mat::ones_column(self.agents()) * l)
    }

    /// The spectrum or [`GraphError::NoSpanningTree`].
    pub fn require_spanning_tree(self) -> Result<Self, GraphError> {
        if self.spanning_tree {
            Ok(self)
        } else {
            Err(GraphError::NoSpanningTree)
        }
    }
}

/// Ordered eigenvalues, `λ_2`, left null vector, and the spectral form of
/// the spanning-tree condition: a simple eigenvalue at the origin with all
/// others strictly in the right half plane.
pub fn analyze_spectrum(laplacian: &Mat) -> Result<LaplacianSpectrum, GraphError> {
    if !laplacian.is_square() {
        return Err(MatError::NotSquare {
            op: "analyze_spectrum",
            rows: laplacian.rows(),
            cols: laplacian.cols(),
        }
        .into());
    }
    let q = laplacian.rows();
    let row_tol = ROW_SUM_TOL * laplacian.max_abs().max(1.0);
    for i in 0..q {
        let sum: C64 = (0..q).map(|j| laplacian[(i, j)]).sum();
        if sum.norm() > row_tol {
            return Err(GraphError::RowSum {
                row: i,
                sum: sum.norm(),
            });
        }
    }

    let spectrum = eigenvalues(laplacian)?;
    let eigenvalues = spectrum.eigenvalues;
    let tol = SPECTRUM_RTOL * two_norm(laplacian);
    let zeros = eigenvalues.iter().filter(|z| z.norm() <= tol).count();
    let positive = eigenvalues.iter().filter(|z| z.re > tol).count();
    let spanning_tree = zeros == 1 && positive == q - 1;

    let (lambda2, left_null) = if spanning_tree {
        (eigenvalues.get(1).copied(), Some(left_null_vector(laplacian)?))
    } else {
        (None, None)
    };

    Ok(LaplacianSpectrum {
        laplacian: laplacian.clone(),
        eigenvalues,
        lambda2,
        left_null,
        spanning_tree,
    })
}
