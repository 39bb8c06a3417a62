//! JSON reports, CSV trajectories and atomic file output.

use std::io::{self, Write};
use std::path::Path;

use deadbeat_sync::matlib::{two_norm, Mat};
use deadbeat_sync::{AnalysisReport, MuPolicy, NetworkRun, Trajectory};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::CliError;
use crate::spec::SCHEMA_VERSION;

#[derive(Debug, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub name: String,
    pub n: usize,
    pub q: usize,
    pub mu_mode: &'static str,
    /// `null` for infinite coupling.
    pub mu: Option<f64>,
    pub mu_bound: f64,
    pub norm_bk_flow: f64,
    pub norm_n: f64,
    pub norm_m: f64,
    /// `[re, im]`.
    pub lambda2: [f64; 2],
    pub block_radii: Vec<f64>,
    pub phi_radius: f64,
    pub synchronous: bool,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    pub kb: f64,
    /// `||M^k||` for `k = 1..n`.
    pub m_power_norms: Vec<f64>,
    /// Per graph, ascending real part, each `[re, im]`.
    pub laplacian_eigenvalues: Vec<Vec<[f64; 2]>>,
    /// Per graph, the left null vector normalized to sum one.
    pub left_null: Vec<Vec<f64>>,
    /// Largest pairwise distance at each period boundary.
    pub disagreement: Vec<f64>,
}

pub fn real_row(m: &Mat) -> Vec<f64> {
    m.as_slice().iter().map(|z| z.re).collect()
}

pub fn power_norms(m: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.rows());
    let mut p = m.clone();
    for _ in 0..m.rows() {
        out.push(two_norm(&p));
        p = &p * m;
    }
    out
}

pub fn mu_mode(policy: MuPolicy) -> &'static str {
    match policy {
        MuPolicy::Explicit(_) => "explicit",
        MuPolicy::Auto { .. } => "auto",
        MuPolicy::Infinite => "infinite",
    }
}

impl Report {
    pub fn new(name: String, run: &NetworkRun, analysis: &AnalysisReport, traj: &Trajectory) -> Self {
        let d = &run.design;
        let graphs = run.topology.graphs();
        Report {
            version: SCHEMA_VERSION,
            name,
            n: run.dim(),
            q: run.agents(),
            mu_mode: mu_mode(run.mu),
            mu: analysis.mu,
            mu_bound: analysis.mu_bound,
            norm_bk_flow: analysis.norm_bk_flow,
            norm_n: analysis.norm_n,
            norm_m: analysis.norm_m,
            lambda2: [analysis.lambda2.re, analysis.lambda2.im],
            block_radii: analysis.block_radii.clone(),
            phi_radius: analysis.phi_radius,
            synchronous: analysis.synchronous,
            k: real_row(&d.k),
            g: real_row(&d.g),
            kb: d.kb,
            m_power_norms: power_norms(&d.m),
            laplacian_eigenvalues: graphs
                .iter()
                .map(|s| s.eigenvalues.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            left_null: graphs
                .iter()
                .map(|s| s.left_null.as_ref().map(real_row).unwrap_or_default())
                .collect(),
            disagreement: traj.disagreement.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
        self.serialize(&mut ser).expect("report serializes");
        buf.push(b'\n');
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// 17 significant digits: `{:.16e}`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with every float printed to 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(float(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Columns `k, t, plus_minus, agent, x0..x{n-1}, disagreement`; one row per
/// agent per sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("k,t,plus_minus,agent");
    for c in 0..traj.dim {
        out.push_str(&format!(",x{c}"));
    }
    out.push_str(",disagreement\n");
    for s in &traj.samples {
        for i in 0..traj.agents {
            out.push_str(&format!(
                "{},{},{},{}",
                s.period,
                float(s.time),
                s.tag.symbol(),
                i
            ));
            for v in traj.agent(&s.state, i) {
                out.push(',');
                out.push_str(&float(*v));
            }
            out.push(',');
            out.push_str(&float(s.disagreement));
            out.push('\n');
        }
    }
    out
}

/// Write via a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
