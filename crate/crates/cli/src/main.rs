mod error;
mod report;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use deadbeat_sync::sync::bound_terms;
use deadbeat_sync::{analyze, mu_bound, simulate};

use error::CliError;
use report::{power_norms, real_row, trajectory_csv, write_atomic, Report};
use spec::{OutputPaths, RunSpec};

#[derive(Parser)]
#[command(
    version,
    about = "Impulsive deadbeat synchronization of identical linear agents"
)]
struct Cli {
    /// Use a built-in spec instead of a file
    #[arg(long, global = true, value_enum)]
    demo: Option<Demo>,
    /// Directory for outputs; relative output paths resolve against it
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print errors only
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Design, analyze and simulate; write the report and trajectory
    Run { spec: Option<PathBuf> },
    /// Print the deadbeat design and the coupling bound only
    Design { spec: Option<PathBuf> },
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    /// Two LC oscillators with infinite coupling
    Lc,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (design_only, path) = match cli.command {
        Some(Command::Run { spec }) => (false, spec),
        Some(Command::Design { spec }) => (true, spec),
        None => (false, None),
    };
    let runs = match load_runs(cli.demo, path.as_deref()) {
        Ok(runs) => runs,
        Err(e) => return fail(None, &e),
    };
    let status = if design_only {
        design(&runs, cli.quiet)
    } else {
        match spec::resolve_outputs(&runs, cli.out_dir.as_deref()) {
            Ok(outputs) => run(&runs, &outputs, cli.quiet),
            Err(e) => Err((None, e)),
        }
    };
    match status {
        Ok(()) => ExitCode::SUCCESS,
        Err((label, e)) => fail(label.as_deref(), &e),
    }
}

fn fail(label: Option<&str>, e: &CliError) -> ExitCode {
    match label {
        Some(l) => eprintln!("error [{l}]: {e}"),
        None => eprintln!("error: {e}"),
    }
    ExitCode::from(e.exit_code())
}

fn load_runs(demo: Option<Demo>, path: Option<&Path>) -> Result<Vec<RunSpec>, CliError> {
    match (demo, path) {
        (Some(Demo::Lc), None) => Ok(vec![spec::demo_lc()]),
        (Some(_), Some(_)) => Err(CliError::malformed("give a spec file or --demo, not both")),
        (None, Some(p)) => spec::load(p),
        (None, None) => Err(CliError::malformed(
            "no spec given (pass a spec file or --demo lc)",
        )),
    }
}

/// Compact human-readable number.
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", items.join(", "))
}

type Failure = (Option<String>, CliError);

fn design(runs: &[RunSpec], quiet: bool) -> Result<(), Failure> {
    for (i, r) in runs.iter().enumerate() {
        let label = r.label(i);
        let fail = |e: CliError| (Some(label.clone()), e);
        let (_, d) = r.design().map_err(fail)?;
        let terms = bound_terms(&d).map_err(|e| fail(e.into()))?;
        let bound = match r.topology().map_err(fail)? {
            Some(topology) => {
                let mut worst: Option<f64> = None;
                for g in topology.graphs() {
                    if let Some(l2) = g.lambda2 {
                        let b = mu_bound(&d, l2).map_err(|e| fail(e.into()))?;
                        worst = Some(worst.map_or(b, |w| w.max(b)));
                    }
                }
                worst
            }
            None => None,
        };
        if quiet {
            continue;
        }
        println!("[{label}] K = {}", list(&real_row(&d.k)));
        println!("[{label}] G = {}", list(&real_row(&d.g)));
        println!("[{label}] KB = {}", num(d.kb));
        for (k, v) in power_norms(&d.m).iter().enumerate() {
            println!("[{label}] ||M^{}|| = {}", k + 1, num(*v));
        }
        println!("[{label}] ||N|| = {}", num(terms.norm_n));
        if let Some(b) = bound {
            println!("[{label}] mu bound = {}", num(b));
        }
    }
    Ok(())
}

struct Done {
    summary: Vec<String>,
}

fn execute(label: &str, r: &RunSpec, out: &OutputPaths) -> Result<Done, CliError> {
    let network = r.network()?;
    let analysis = analyze(&network)?;
    let traj = simulate(&network)?;
    let report = Report::new(label.to_string(), &network, &analysis, &traj);

    let mut written = Vec::new();
    if let Some(p) = &out.trajectory {
        write_atomic(p, &trajectory_csv(&traj))?;
        written.push(p.display().to_string());
    }
    if let Some(p) = &out.report {
        write_atomic(p, &report.to_json())?;
        written.push(p.display().to_string());
    }

    let mu = analysis.mu.map_or_else(|| "infinite".to_string(), num);
    let mut summary = vec![
        format!(
            "K = {}, mu bound = {}, mu = {mu}",
            list(&report.k),
            num(analysis.mu_bound)
        ),
        format!(
            "synchronous = {} (largest block radius {})",
            analysis.synchronous,
            num(analysis.phi_radius)
        ),
        format!("disagreement by period: {}", list(&traj.disagreement)),
    ];
    if !written.is_empty() {
        summary.push(format!("wrote {}", written.join(", ")));
    }
    Ok(Done { summary })
}

fn run(runs: &[RunSpec], outputs: &[OutputPaths], quiet: bool) -> Result<(), Failure> {
    let labels: Vec<String> = runs.iter().enumerate().map(|(i, r)| r.label(i)).collect();
    let results: Vec<Result<Done, CliError>> = if runs.len() == 1 {
        vec![execute(&labels[0], &runs[0], &outputs[0])]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = runs
                .iter()
                .zip(outputs)
                .zip(&labels)
                .map(|((r, o), l)| s.spawn(move || execute(l, r, o)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(CliError::Numerical("run panicked".into())))
                })
                .collect()
        })
    };

    let mut first: Option<Failure> = None;
    for (label, result) in labels.into_iter().zip(results) {
        match result {
            Ok(done) => {
                if !quiet {
                    for line in done.summary {
                        println!("[{label}] {line}");
                    }
                }
            }
            Err(e) => {
                if first.is_none() {
                    first = Some((Some(label), e));
                } else {
                    eprintln!("error [{label}]: {e}");
                }
            }
        }
    }
    first.map_or(Ok(()), Err)
}
