#![allow(dead_code, clippy::needless_range_loop)]

use deadbeat_sync::graph::CouplingGraph;
use deadbeat_sync::matlib::{singular_values, solve, two_norm, Mat, C64};
use deadbeat_sync::{design_deadbeat, AgentSystem, DeadbeatDesign};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn real_matrix(rng: &mut impl Rng, rows: usize, cols: usize, half_width: f64) -> Mat {
    let entries: Vec<f64> = (0..rows * cols)
        .map(|_| rng.gen_range(-half_width..half_width))
        .collect();
    Mat::from_real(rows, cols, &entries)
}

pub fn complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    let entries = (0..rows * cols)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Mat::from_vec(rows, cols, entries)
}

/// `I + 0.3 R`, comfortably invertible.
pub fn well_conditioned(rng: &mut impl Rng, n: usize) -> Mat {
    &Mat::identity(n) + &real_matrix(rng, n, n, 0.3)
}

/// Random unitary from Gram-Schmidt on a random complex matrix.
pub fn unitary(rng: &mut impl Rng, n: usize) -> Mat {
    let raw = complex_matrix(rng, n, n);
    let mut cols: Vec<Mat> = Vec::new();
    for j in 0..n {
        let mut v = raw.col(j);
        for _ in 0..2 {
            for u in &cols {
                let coeff = (&u.adjoint() * &v)[(0, 0)];
                v = &v - &u.scale(coeff);
            }
        }
        let norm = v.frobenius();
        cols.push(v.scale_real(1.0 / norm));
    }
    Mat::hstack(&cols).unwrap()
}

/// `Z J Z^{-1}` with `J` strictly upper triangular (a scaled Jordan block
/// when `jordan`).
pub fn nilpotent(rng: &mut impl Rng, n: usize, jordan: bool) -> Mat {
    let mut j = Mat::zeros(n, n);
    for r in 0..n {
        for c in (r + 1)..n {
            if !jordan || c == r + 1 {
                j[(r, c)] = C64::new(
                    rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                    0.0,
                );
            }
        }
    }
    let z = well_conditioned(rng, n);
    let zinv = solve(&z, &Mat::identity(n)).unwrap();
    &(&z * &j) * &zinv
}

pub fn condition_number(m: &Mat) -> f64 {
    let s = singular_values(m);
    s[0] / s[s.len() - 1]
}

/// Random controllable single-input agent with its deadbeat design. Draws
/// whose sampled controllability matrix is ill conditioned, or whose
/// deadbeat gain is huge, are redrawn: both sit next to a loss of
/// controllability and amplify rounding past the absolute tolerances.
pub fn agent(rng: &mut impl Rng, n: usize) -> (AgentSystem, DeadbeatDesign) {
    loop {
        let a = real_matrix(rng, n, n, 1.0);
        let b = real_matrix(rng, n, 1, 1.0);
        let t = rng.gen_range(0.2..1.5);
        let Ok(sys) = AgentSystem::new(a, b, t) else {
            continue;
        };
        let Ok(design) = design_deadbeat(&sys) else {
            continue;
        };
        if condition_number(&design.controllability) < 1e2
            && two_norm(&design.bk) < 20.0
            && two_norm(&design.m) < 20.0
        {
            return (sys, design);
        }
    }
}

/// Random digraph containing a spanning tree: a random rooted tree plus
/// extra edges with probability `extra`.
pub fn spanning_digraph(rng: &mut impl Rng, q: usize, extra: f64) -> CouplingGraph {
    let mut order: Vec<usize> = (0..q).collect();
    for i in (1..q).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut w = vec![vec![0.0; q]; q];
    for pos in 1..q {
        let child = order[pos];
        let parent = order[rng.gen_range(0..pos)];
        w[child][parent] = rng.gen_range(0.2..1.5);
    }
    for i in 0..q {
        for j in 0..q {
            if i != j && w[i][j] == 0.0 && rng.gen_bool(extra) {
                w[i][j] = rng.gen_range(0.2..1.5);
            }
        }
    }
    CouplingGraph::new(w).unwrap()
}

/// Arbitrary digraph, each edge present with probability `p`.
pub fn digraph(rng: &mut impl Rng, q: usize, p: f64) -> CouplingGraph {
    let mut w = vec![vec![0.0; q]; q];
    for i in 0..q {
        for j in 0..q {
            if i != j && rng.gen_bool(p) {
                w[i][j] = rng.gen_range(0.2..1.5);
            }
        }
    }
    CouplingGraph::new(w).unwrap()
}

pub fn symmetric_connected(rng: &mut impl Rng, q: usize) -> CouplingGraph {
    let mut w = vec![vec![0.0; q]; q];
    for i in 1..q {
        let j = rng.gen_range(0..i);
        let x = rng.gen_range(0.2..1.5);
        w[i][j] = x;
        w[j][i] = x;
    }
    for i in 0..q {
        for j in (i + 1)..q {
            if w[i][j] == 0.0 && rng.gen_bool(0.3) {
                let x = rng.gen_range(0.2..1.5);
                w[i][j] = x;
                w[j][i] = x;
            }
        }
    }
    CouplingGraph::new(w).unwrap()
}

pub fn uniform_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Greedy nearest matching of two multisets; returns the worst distance.
pub fn match_multisets(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[idx] = true;
        worst = worst.max(d);
    }
    worst
}
