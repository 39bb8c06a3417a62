//! Run specification documents (schema "v1") and their translation into
//! library objects.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use deadbeat_sync::graph::{analyze_spectrum, laplacian, CouplingGraph};
use deadbeat_sync::matlib::Mat;
use deadbeat_sync::{
    design_deadbeat, AgentSystem, DeadbeatDesign, LaplacianSpectrum, MuPolicy, NetworkRun, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "v1";
const DEFAULT_SAFETY: f64 = deadbeat_sync::sync::DEFAULT_SAFETY;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// Row-major `n × n`.
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "T")]
    pub t: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub q: usize,
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuMode {
    Explicit,
    Auto,
    Infinite,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuSpec {
    pub mode: MuMode,
    pub value: Option<f64>,
    pub safety: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Values(Vec<f64>),
    Seeded { seed: u64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub trajectory_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

/// One run. `version` is required at the document's top level and optional
/// inside a `runs` list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub version: Option<String>,
    pub name: Option<String>,
    pub system: SystemSpec,
    pub graph: Option<GraphSpec>,
    pub graph_sequence: Option<Vec<GraphSpec>>,
    pub mu: Option<MuSpec>,
    pub x0: Option<InitialState>,
    pub periods: Option<usize>,
    pub samples_per_period: Option<usize>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchSpec {
    version: String,
    runs: Vec<RunSpec>,
}

/// Parse a document holding either a single run or `{"version", "runs": [...]}`.
pub fn parse_document(text: &str) -> Result<Vec<RunSpec>, CliError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::malformed(format!("invalid JSON: {e}")))?;
    let Some(obj) = value.as_object() else {
        return Err(CliError::malformed("spec must be a JSON object"));
    };
    match obj.get("version").and_then(Value::as_str) {
        Some(SCHEMA_VERSION) => {}
        Some(other) => {
            return Err(CliError::malformed(format!(
                "unsupported version {other:?}, expected \"v1\""
            )))
        }
        None => return Err(CliError::malformed("missing \"version\": \"v1\"")),
    }
    let runs = if obj.contains_key("runs") {
        let batch: BatchSpec =
            serde_json::from_value(value).map_err(|e| CliError::malformed(e.to_string()))?;
        if batch.runs.is_empty() {
            return Err(CliError::malformed("\"runs\" is empty"));
        }
        debug_assert_eq!(batch.version, SCHEMA_VERSION);
        batch.runs
    } else {
        vec![serde_json::from_value(value).map_err(|e| CliError::malformed(e.to_string()))?]
    };
    for (i, run) in runs.iter().enumerate() {
        if let Some(v) = &run.version {
            if v != SCHEMA_VERSION {
                return Err(CliError::malformed(format!("run {i}: unsupported version {v:?}")));
            }
        }
    }
    Ok(runs)
}

pub fn load(path: &Path) -> Result<Vec<RunSpec>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::malformed(format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text)
}

impl SystemSpec {
    pub fn build(&self) -> Result<AgentSystem, CliError> {
        let n = self.b.len();
        if n == 0 {
            return Err(CliError::malformed("system.B is empty"));
        }
        if self.a.len() != n * n {
            return Err(CliError::malformed(format!(
                "system.A has {} entries, expected {} for n = {n}",
                self.a.len(),
                n * n
            )));
        }
        let a = Mat::from_real(n, n, &self.a);
        let b = Mat::column(&self.b);
        Ok(AgentSystem::new(a, b, self.t)?)
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<LaplacianSpectrum, CliError> {
        if self.weights.len() != self.q {
            return Err(CliError::malformed(format!(
                "graph has q = {} but {} weight rows",
                self.q,
                self.weights.len()
            )));
        }
        let g = CouplingGraph::new(self.weights.clone())?;
        Ok(analyze_spectrum(&laplacian(&g))?)
    }
}

impl MuSpec {
    pub fn policy(&self) -> Result<MuPolicy, CliError> {
        let policy = match self.mode {
            MuMode::Explicit => {
                if self.safety.is_some() {
                    return Err(CliError::malformed("mu.safety only applies to mode \"auto\""));
                }
                MuPolicy::Explicit(
                    self.value
                        .ok_or_else(|| CliError::malformed("mu mode \"explicit\" needs a value"))?,
                )
            }
            MuMode::Auto => {
                if self.value.is_some() {
                    return Err(CliError::malformed("mu.value only applies to mode \"explicit\""));
                }
                MuPolicy::Auto {
                    safety: self.safety.unwrap_or(DEFAULT_SAFETY),
                }
            }
            MuMode::Infinite => {
                if self.value.is_some() || self.safety.is_some() {
                    return Err(CliError::malformed(
                        "mu mode \"infinite\" takes no value or safety",
                    ));
                }
                MuPolicy::Infinite
            }
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// `len` values drawn uniformly from `[-1, 1]` by ChaCha8 seeded with `seed`.
pub fn seeded_state(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

impl RunSpec {
    pub fn label(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("run{index}"))
    }

    /// Graphs in force: `graph` or `graph_sequence`, never both. `None` when
    /// the spec has neither.
    pub fn topology(&self) -> Result<Option<Topology>, CliError> {
        match (&self.graph, &self.graph_sequence) {
            (Some(_), Some(_)) => Err(CliError::malformed(
                "give either graph or graph_sequence, not both",
            )),
            (Some(g), None) => Ok(Some(Topology::Fixed(g.build()?.require_spanning_tree()?))),
            (None, Some(seq)) => {
                if seq.is_empty() {
                    return Err(CliError::malformed("graph_sequence is empty"));
                }
                let mut graphs = Vec::with_capacity(seq.len());
                for (i, g) in seq.iter().enumerate() {
                    let s = g.build()?;
                    if !s.spanning_tree {
                        return Err(CliError::SpanningTree(format!(
                            "graph {i} of the sequence does not contain a spanning tree"
                        )));
                    }
                    graphs.push(s);
                }
                Ok(Some(Topology::Sequence(graphs)))
            }
            (None, None) => Ok(None),
        }
    }

    pub fn design(&self) -> Result<(AgentSystem, DeadbeatDesign), CliError> {
        let sys = self.system.build()?;
        let design = design_deadbeat(&sys)?;
        Ok((sys, design))
    }

    /// Everything a simulation needs, validated.
    pub fn network(&self) -> Result<NetworkRun, CliError> {
        let (sys, design) = self.design()?;
        let topology = self
            .topology()?
            .ok_or_else(|| CliError::malformed("run needs graph or graph_sequence"))?;
        let mu = self
            .mu
            .as_ref()
            .ok_or_else(|| CliError::malformed("run needs mu"))?
            .policy()?;
        let len = topology.agents() * sys.dim();
        let x0 = match self
            .x0
            .as_ref()
            .ok_or_else(|| CliError::malformed("run needs x0"))?
        {
            InitialState::Values(v) => {
                if v.len() != len {
                    return Err(CliError::malformed(format!(
                        "x0 has {} entries, expected q * n = {len}",
                        v.len()
                    )));
                }
                v.clone()
            }
            InitialState::Seeded { seed } => seeded_state(*seed, len),
        };
        let periods = self
            .periods
            .ok_or_else(|| CliError::malformed("run needs periods"))?;
        let samples = self
            .samples_per_period
            .ok_or_else(|| CliError::malformed("run needs samples_per_period"))?;
        Ok(NetworkRun::new(sys, design, topology, mu, x0, periods, samples)?)
    }
}

/// Output files for one run after applying `--out-dir` and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub trajectory: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Relative paths resolve against `out_dir` when given. With `out_dir` and
/// no explicit path, files default to `<label>.csv` and `<label>.json`.
pub fn resolve_outputs(runs: &[RunSpec], out_dir: Option<&Path>) -> Result<Vec<OutputPaths>, CliError> {
    let place = |p: &PathBuf| match out_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.clone(),
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(runs.len());
    for (i, run) in runs.iter().enumerate() {
        let label = run.label(i);
        let default = |ext: &str| out_dir.map(|d| d.join(format!("{label}.{ext}")));
        let paths = OutputPaths {
            trajectory: run
                .outputs
                .trajectory_path
                .as_ref()
                .map(place)
                .or_else(|| default("csv")),
            report: run
                .outputs
                .report_path
                .as_ref()
                .map(place)
                .or_else(|| default("json")),
        };
        for p in paths.trajectory.iter().chain(paths.report.iter()) {
            if !seen.insert(p.clone()) {
                return Err(CliError::malformed(format!(
                    "output path {} is used twice",
                    p.display()
                )));
            }
        }
        out.push(paths);
    }
    Ok(out)
}

/// The two-oscillator LC network with infinite coupling.
pub fn demo_lc() -> RunSpec {
    RunSpec {
        version: Some(SCHEMA_VERSION.to_string()),
        name: Some("lc".to_string()),
        system: SystemSpec {
            a: vec![0.0, -1.0, 1.0, 0.0],
            b: vec![1.0, 0.0],
            t: deadbeat_sync::demo::LC_PERIOD,
        },
        graph: Some(GraphSpec {
            q: 2,
            weights: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        }),
        graph_sequence: None,
        mu: Some(MuSpec {
            mode: MuMode::Infinite,
            value: None,
            safety: None,
        }),
        x0: Some(InitialState::Seeded { seed: 1 }),
        periods: Some(4),
        samples_per_period: Some(16),
        outputs: OutputSpec::default(),
    }
}
