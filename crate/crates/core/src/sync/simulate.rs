use alloc::vec::Vec;

use super::{step_matrix, step_matrix_consensus, Coupling, NetworkRun, SyncError, Topology};
use crate::matlib::{Mat, C64};

/// Where a sample sits relative to the impulse at a period boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleTag {
    /// Right after a jump (`kT+`); also the initial state.
    Plus,
    /// Right before a jump (`kT-`).
    Minus,
    /// Strictly inside a period.
    Interior,
}

impl SampleTag {
    pub fn symbol(&self) -> &'static str {
        match self {
            SampleTag::Plus => "+",
            SampleTag::Minus => "-",
            SampleTag::Interior => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Period index: boundary samples carry the `k` of `x[k]`, flow samples
    /// the period they lie in.
    pub period: usize,
    pub time: f64,
    pub tag: SampleTag,
    /// Stacked state, length `q·n`.
    pub state: Vec<f64>,
    /// Largest pairwise agent distance at this instant.
    pub disagreement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub agents: usize,
    pub dim: usize,
    pub samples: Vec<Sample>,
    /// `x[k] = x(kT+)`, `k = 0..=periods`.
    pub boundary_states: Vec<Vec<f64>>,
    /// `d[k]`, the largest pairwise distance at `x[k]`.
    pub disagreement: Vec<f64>,
    /// `η[k] = (ℓ' ⊗ I) x[k]`.
    pub consensus: Vec<Vec<f64>>,
}

impl Trajectory {
    /// State of agent `i` within a stacked vector.
    pub fn agent<'a>(&self, state: &'a [f64], i: usize) -> &'a [f64] {
        &state[i * self.dim..(i + 1) * self.dim]
    }
}

fn weighted_average(state: &[f64], left_null: &Mat, n: usize) -> Vec<f64> {
    let q = left_null.cols();
    (0..n)
        .map(|c| (0..q).map(|i| left_null[(0, i)].re * state[i * n + c]).sum())
        .collect()
}

fn apply(m: &Mat, x: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)] * x[j]).sum::<C64>().re)
        .collect()
}

fn apply_blockwise(block: &Mat, x: &[f64], q: usize) -> Vec<f64> {
    let n = block.rows();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..q {
        out.extend(apply(block, &x[i * n..(i + 1) * n]));
    }
    out
}

/// Exact sampled simulation. Period boundaries advance by the one-period
/// map (the `μ = ∞` map for infinite coupling); samples inside a period use
/// `e^{As}` agentwise. A time-varying topology is delegated to
/// [`simulate_time_varying`].
pub fn simulate(run: &NetworkRun) -> Result<Trajectory, SyncError> {
    if let Topology::Sequence(_) = run.topology {
        return simulate_time_varying(run);
    }
    let Topology::Fixed(spectrum) = &run.topology else {
        unreachable!()
    };
    let step = match run.coupling()? {
        Coupling::Finite(mu) => step_matrix(&spectrum.laplacian, &run.design, mu)?,
        Coupling::Infinite => {
            let l = spectrum
                .left_null
                .as_ref()
                .ok_or(SyncError::NoSpanningTree { index: 0 })?;
            step_matrix_consensus(l, &run.design)?
        }
    };
    let reduced = difference_step(&step, run.agents(), run.dim());
    integrate(run, |_| (&step, &reduced))
}

/// Infinite-coupling simulation where the jump ending period `k` uses graph
/// `k` of the sequence (cycled). A fixed topology is treated as a sequence
/// of one.
pub fn simulate_time_varying(run: &NetworkRun) -> Result<Trajectory, SyncError> {
    if run.mu != super::MuPolicy::Infinite {
        return Err(SyncError::InvalidRun(
            "time-varying simulation requires infinite mu",
        ));
    }
    let graphs = run.topology.graphs();
    let mut steps = Vec::with_capacity(graphs.len());
    for (index, g) in graphs.iter().enumerate() {
        let l = g.left_null.as_ref().ok_or(SyncError::NoSpanningTree { index })?;
        let step = step_matrix_consensus(l, &run.design)?;
        let reduced = difference_step(&step, run.agents(), run.dim());
        steps.push((step, reduced));
    }
    integrate(run, |k| {
        let (step, reduced) = &steps[k % steps.len()];
        (step, reduced)
    })
}

/// Step restricted to differences against the last agent: with
/// `x = 1 ⊗ x_ref + U δ`, and since the step maps `1 ⊗ v` to `1 ⊗ E v`,
/// `δ[k+1] = R δ[k]` where block `(i, j)` of `R` is `S_ij - S_{ref,j}`.
/// Propagating `δ` on its own keeps the disagreement free of rounding from
/// a growing common state.
fn difference_step(step: &Mat, q: usize, n: usize) -> Option<Mat> {
    let m = (q - 1) * n;
    if m == 0 {
        return None;
    }
    let mut r = Mat::zeros(m, m);
    let last = m;
    for row in 0..m {
        for col in 0..m {
            r[(row, col)] = step[(row, col)] - step[(last + row % n, col)];
        }
    }
    Some(r)
}

fn max_pairwise_from_differences(delta: &[f64], q: usize, n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..(q - 1) {
        let d2: f64 = delta[i * n..(i + 1) * n].iter().map(|d| d * d).sum();
        worst = worst.max(d2);
        for j in (i + 1)..(q - 1) {
            let d2: f64 = (0..n)
                .map(|c| {
                    let d = delta[i * n + c] - delta[j * n + c];
                    d * d
                })
                .sum();
            worst = worst.max(d2);
        }
    }
    libm::sqrt(worst)
}

/// Reference state and differences, with the stacked state rebuilt from them.
struct Split {
    q: usize,
    n: usize,
    reference: Vec<f64>,
    delta: Vec<f64>,
}

impl Split {
    fn new(x: &[f64], q: usize, n: usize) -> Self {
        let reference = x[(q - 1) * n..].to_vec();
        let delta = (0..(q - 1) * n).map(|k| x[k] - reference[k % n]).collect();
        Split {
            q,
            n,
            reference,
            delta,
        }
    }

    fn state(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..(self.q - 1) * self.n)
            .map(|k| self.reference[k % self.n] + self.delta[k])
            .collect();
        x.extend_from_slice(&self.reference);
        x
    }

    fn disagreement(&self) -> f64 {
        max_pairwise_from_differences(&self.delta, self.q, self.n)
    }

    fn flowed(&self, flow: &Mat) -> Split {
        Split {
            q: self.q,
            n: self.n,
            reference: apply(flow, &self.reference),
            delta: apply_blockwise(flow, &self.delta, self.q - 1),
        }
    }
}

fn integrate<'s>(
    run: &NetworkRun,
    step_for: impl Fn(usize) -> (&'s Mat, &'s Option<Mat>),
) -> Result<Trajectory, SyncError> {
    let q = run.agents();
    let n = run.dim();
    let t = run.system.period();
    let per = run.samples_per_period;

    let mut flows = Vec::with_capacity(per);
    for j in 1..=per {
        flows.push(run.system.flow(t * j as f64 / per as f64)?);
    }

    let mut samples = Vec::with_capacity(1 + run.periods * (per + 1));
    let mut boundary_states = Vec::with_capacity(run.periods + 1);
    let mut disagreement = Vec::with_capacity(run.periods + 1);
    let mut consensus = Vec::with_capacity(run.periods + 1);

    let mut record_boundary = |k: usize, split: &Split, samples: &mut Vec<Sample>| {
        let x = split.state();
        let d = split.disagreement();
        let l = run
            .topology
            .at(k)
            .left_null
            .as_ref()
            .expect("validated spanning tree");
        boundary_states.push(x.clone());
        disagreement.push(d);
        consensus.push(weighted_average(&x, l, n));
        samples.push(Sample {
            period: k,
            time: k as f64 * t,
            tag: SampleTag::Plus,
            state: x,
            disagreement: d,
        });
    };

    let mut split = Split::new(&run.x0, q, n);
    record_boundary(0, &split, &mut samples);

    for k in 0..run.periods {
        for (j, flow) in flows.iter().enumerate() {
            let flowed = split.flowed(flow);
            let last = j + 1 == per;
            let time = if last {
                (k + 1) as f64 * t
            } else {
                (k as f64 + (j + 1) as f64 / per as f64) * t
            };
            samples.push(Sample {
                period: k,
                time,
                tag: if last {
                    SampleTag::Minus
                } else {
                    SampleTag::Interior
                },
                disagreement: flowed.disagreement(),
                state: flowed.state(),
            });
        }
        let (step, reduced) = step_for(k);
        let reference = rows_applied(step, &split.state(), (q - 1) * n);
        split = Split {
            q,
            n,
            reference,
            delta: reduced.as_ref().map_or_else(Vec::new, |r| apply(r, &split.delta)),
        };
        record_boundary(k + 1, &split, &mut samples);
    }

    Ok(Trajectory {
        agents: q,
        dim: n,
        samples,
        boundary_states,
        disagreement,
        consensus,
    })
}

/// Rows `from..` of `m x`.
fn rows_applied(m: &Mat, x: &[f64], from: usize) -> Vec<f64> {
    (from..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)] * x[j]).sum::<C64>().re)
        .collect()
}
