//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::time::Instant;

use common::*;
use deadbeat_sync::demo::{lc_graph, lc_system};
use deadbeat_sync::graph::{analyze_spectrum, laplacian};
use deadbeat_sync::matlib::{expm, kron, two_norm, Mat};
use deadbeat_sync::sync::dirac_pulse_oracle;
use deadbeat_sync::{
    analyze, design_deadbeat, impulse_jump, mu_bound, schur_nilpotent, simulate, step_matrix, MuPolicy,
    NetworkRun, Topology,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lc_run(mu: MuPolicy, x0: Vec<f64>, periods: usize) -> NetworkRun {
    let sys = lc_system();
    let design = design_deadbeat(&sys).unwrap();
    let spectrum = analyze_spectrum(&laplacian(&lc_graph())).unwrap();
    NetworkRun::new(sys, design, Topology::Fixed(spectrum), mu, x0, periods, 4).unwrap()
}

fn lc_gain() -> Outcome {
    let d = design_deadbeat(&lc_system()).unwrap();
    let err = d.k.max_abs_diff(&Mat::row(&[1.0, 0.0]));
    check(
        err <= 1e-10,
        format!(
            "K = [{:.3e}, {:.3e}], error {err:.2e}",
            d.k[(0, 0)].re,
            d.k[(0, 1)].re
        ),
    )
}

fn lc_finite_time() -> Outcome {
    let x0 = uniform_vec(&mut rng(2024), 4);
    let traj = simulate(&lc_run(MuPolicy::Infinite, x0.clone(), 6)).unwrap();
    let scale = euclid(&x0);
    let worst = traj.disagreement[2..].iter().fold(0.0f64, |a, &d| a.max(d));
    let want = [-(x0[0] + x0[2]) / 2.0, -(x0[1] + x0[3]) / 2.0];
    let got = traj.agent(&traj.boundary_states[2], 0);
    let common_err = (got[0] - want[0]).abs().max((got[1] - want[1]).abs());
    check(
        worst <= 1e-9 * scale && common_err <= 1e-9,
        format!("max d[k>=2] = {worst:.2e} (|x0| = {scale:.3}), common state error {common_err:.2e}"),
    )
}

fn lc_bound() -> Outcome {
    let d = design_deadbeat(&lc_system()).unwrap();
    let s = analyze_spectrum(&laplacian(&lc_graph())).unwrap();
    let bound = mu_bound(&d, s.lambda2.unwrap()).unwrap();
    let oracle = std::f64::consts::LN_2 / 2.0;
    let err = (bound - oracle).abs();
    check(err <= 1e-12, format!("bound = {bound:.15}, error {err:.2e}"))
}

impl SweepInstance {
    fn decayed(&self) -> bool {
        self.d30 < self.d1
    }
}

struct SweepInstance {
    synchronous: bool,
    radius: f64,
    d1: f64,
    d30: f64,
    kb: f64,
    projection_defect: f64,
}

fn sweep_instances() -> Vec<SweepInstance> {
    let mut r = rng(4);
    (0..100)
        .map(|_| {
            let n = r.gen_range(1..=4);
            let q = r.gen_range(2..=6);
            let (sys, d) = agent(&mut r, n);
            let s = analyze_spectrum(&laplacian(&spanning_digraph(&mut r, q, 0.3))).unwrap();
            let x0 = uniform_vec(&mut r, q * n);
            let (kb, projection_defect) = (d.kb, d.projection_defect());
            let run = NetworkRun::new(
                sys,
                d,
                Topology::Fixed(s),
                MuPolicy::Auto { safety: 1.01 },
                x0,
                30,
                1,
            )
            .unwrap();
            let report = analyze(&run).unwrap();
            let traj = simulate(&run).unwrap();
            SweepInstance {
                synchronous: report.synchronous,
                radius: report.block_radii.iter().fold(0.0f64, |a, &b| a.max(b)),
                d1: traj.disagreement[1],
                d30: traj.disagreement[30],
                kb,
                projection_defect,
            }
        })
        .collect()
}

fn soundness(sweep: &[SweepInstance], seconds: f64) -> Outcome {
    let unsync = sweep.iter().filter(|s| !s.synchronous).count();
    let no_decay = sweep.iter().filter(|s| !s.decayed()).count();
    let worst = sweep.iter().fold(0.0f64, |a, s| a.max(s.d30 / s.d1));
    let slowest = sweep
        .iter()
        .filter(|s| !s.decayed())
        .fold(0.0f64, |a, s| a.max(s.radius));
    check(
        unsync == 0 && no_decay == 0 && seconds < 30.0,
        format!(
            "{} instances, {unsync} not synchronous, {no_decay} with d[30] >= d[1] \
             (worst ratio {worst:.3}, largest block radius among them {slowest:.4}), {seconds:.2} s",
            sweep.len()
        ),
    )
}

fn projection(sweep: &[SweepInstance]) -> Outcome {
    let kb = sweep.iter().fold(0.0f64, |a, s| a.max((s.kb - 1.0).abs()));
    let proj = sweep.iter().fold(0.0f64, |a, s| a.max(s.projection_defect));
    check(
        kb <= 1e-9 && proj <= 1e-9,
        format!("max |KB-1| = {kb:.2e}, max ||(BK)^2-BK|| = {proj:.2e}"),
    )
}

fn jump_identity() -> Outcome {
    let mut r = rng(6);
    let (mut worst_step, mut worst_dense) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (n, q) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let (_, d) = agent(&mut r, n);
        let l = laplacian(&digraph(&mut r, q, 0.5));
        let mu = r.gen_range(1e-3..=10.0);
        let jump = impulse_jump(&l, &d, mu).unwrap();
        let step = step_matrix(&l, &d, mu).unwrap();
        worst_step = worst_step.max((&jump * &kron(&Mat::identity(q), &d.flow)).max_abs_diff(&step));
        let dense = expm(&kron(&l, &d.bk).scale_real(-mu)).unwrap();
        worst_dense = worst_dense.max(dense.max_abs_diff(&jump));
    }
    check(
        worst_step <= 1e-9 && worst_dense <= 1e-9,
        format!("step identity {worst_step:.2e}, dense exponential {worst_dense:.2e}"),
    )
}

fn pulse_limit() -> Outcome {
    let mut r = rng(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = r.gen_range(1..=4);
        let raw = real_matrix(&mut r, n, n, 1.0);
        let m = raw.scale_real(r.gen_range(0.1..3.0) / two_norm(&raw));
        let y0 = Mat::column(&uniform_vec(&mut r, n));
        let want = &expm(&m).unwrap() * &y0;
        for eps in [1e-2, 1e-3] {
            worst = worst.max(dirac_pulse_oracle(&m, eps, &y0).max_abs_diff(&want));
        }
    }
    check(worst <= 1e-6, format!("max pulse error {worst:.2e}"))
}

fn schur_factors() -> Outcome {
    let mut r = rng(8);
    let (mut unitary, mut recon, mut norm_gap, mut lower) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for _ in 0..50 {
        let n = r.gen_range(1..=6);
        let jordan = r.gen_bool(0.5);
        let m = nilpotent(&mut r, n, jordan);
        let (q, nm) = schur_nilpotent(&m).unwrap();
        let scale = two_norm(&m);
        unitary = unitary.max((&q.adjoint() * &q).max_abs_diff(&Mat::identity(n)));
        recon = recon.max(two_norm(&(&(&(&q.adjoint() * &m) * &q) - &nm)) / scale);
        norm_gap = norm_gap.max((two_norm(&nm) - scale).abs() / scale);
        lower += (0..n)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .filter(|&ij| nm[ij].norm() != 0.0)
            .count();
    }
    check(
        unitary <= 1e-10 && recon <= 1e-9 && norm_gap <= 1e-9 && lower == 0,
        format!("unitarity {unitary:.2e}, reconstruction {recon:.2e}, norm gap {norm_gap:.2e}, nonzero lower entries {lower}"),
    )
}

fn time_varying() -> Outcome {
    let mut r = rng(9);
    let (mut worst_d3, mut worst_rec) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let q = r.gen_range(2..=6);
        let (sys, d) = agent(&mut r, 3);
        let graphs: Vec<_> = (0..r.gen_range(2..=5))
            .map(|_| analyze_spectrum(&laplacian(&spanning_digraph(&mut r, q, 0.3))).unwrap())
            .collect();
        let x0 = uniform_vec(&mut r, q * 3);
        let m = d.m.clone();
        let run = NetworkRun::new(
            sys,
            d,
            Topology::Sequence(graphs),
            MuPolicy::Infinite,
            x0.clone(),
            5,
            1,
        )
        .unwrap();
        let traj = simulate(&run).unwrap();
        worst_d3 = worst_d3.max(traj.disagreement[3] / euclid(&x0));
        for k in 0..run.periods {
            let (now, next) = (&traj.boundary_states[k], &traj.boundary_states[k + 1]);
            for i in 0..q {
                for j in (i + 1)..q {
                    let e = |x: &[f64]| {
                        Mat::column(&(0..3).map(|c| x[i * 3 + c] - x[j * 3 + c]).collect::<Vec<_>>())
                    };
                    worst_rec = worst_rec.max((&m * &e(now)).max_abs_diff(&e(next)));
                }
            }
        }
    }
    check(
        worst_d3 <= 1e-9 && worst_rec <= 1e-9,
        format!("max d[3]/|x0| = {worst_d3:.2e}, recursion error {worst_rec:.2e}"),
    )
}

fn negative_control() -> Outcome {
    let report = analyze(&lc_run(MuPolicy::Explicit(0.0), vec![1.0, 0.0, 0.0, 1.0], 1)).unwrap();
    let radius = report.block_radii.iter().fold(0.0f64, |a, &b| a.max(b));
    check(
        !report.synchronous && (radius - 1.0).abs() <= 1e-9,
        format!("synchronous = {}, block radius {radius:.12}", report.synchronous),
    )
}

#[test]
fn acceptance() {
    let started = Instant::now();
    let sweep = sweep_instances();
    let sweep_seconds = started.elapsed().as_secs_f64();

    let results: Vec<(&str, Outcome)> = vec![
        ("LC deadbeat gain", lc_gain()),
        ("LC finite-time synchronization", lc_finite_time()),
        ("LC coupling bound", lc_bound()),
        ("coupling bound soundness sweep", soundness(&sweep, sweep_seconds)),
        ("gain normalization and projection", projection(&sweep)),
        ("impulse jump factorization", jump_identity()),
        ("narrow pulse limit", pulse_limit()),
        ("Schur form of nilpotent matrices", schur_factors()),
        ("time-varying deadbeat", time_varying()),
        ("uncoupled negative control", negative_control()),
    ];

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
