//! Output files: verdict JSON and trajectory CSV, written atomically.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use flagstab::{Trajectory, Verdict};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, Result};

/// Pretty JSON whose floats carry 17 significant digits, so identical runs
/// give identical bytes and every f64 round-trips.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", sig17(value))
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{}", sig17(value as f64))
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

/// `d.dddddddddddddddde±x`; non-finite values never reach here (serde_json
/// writes them as `null`).
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Verdict fields in a fixed order.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictJson {
    pub outcome: String,
    pub cond_antipodal: bool,
    pub cond_support_intersect: bool,
    pub cond_cardinality: bool,
    pub m: usize,
    pub chi: u64,
    #[serde(rename = "card_Fk_commutator")]
    pub card_fk_commutator: usize,
    pub kalman_rank: usize,
    pub rank_w: usize,
    pub lie_closure_dim: Option<usize>,
    pub diagnostics: Vec<String>,
}

impl From<&Verdict> for VerdictJson {
    fn from(v: &Verdict) -> Self {
        VerdictJson {
            outcome: v.outcome.to_string(),
            cond_antipodal: v.cond_antipodal,
            cond_support_intersect: v.cond_support_intersect,
            cond_cardinality: v.cond_cardinality,
            m: v.m,
            chi: v.chi,
            card_fk_commutator: v.card_fk_commutator,
            kalman_rank: v.kalman_rank,
            rank_w: v.rank_w,
            lie_closure_dim: v.lie_closure_dim,
            diagnostics: v.diagnostics.clone(),
        }
    }
}

/// Scalar digest of a trajectory.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrajectorySummary {
    pub steps: usize,
    pub dt: f64,
    pub t_final: f64,
    #[serde(rename = "initial_V")]
    pub initial_v: f64,
    #[serde(rename = "final_V")]
    pub final_v: f64,
    pub converged_at: Option<f64>,
    pub max_abs_u: f64,
    pub max_lyapunov_residual: f64,
    #[serde(rename = "max_V_increase")]
    pub max_v_increase: f64,
    /// Largest `|V(t) - V(0)|` over the recorded samples.
    #[serde(rename = "max_V_deviation")]
    pub max_v_deviation: f64,
    pub max_eig_drift: f64,
    pub max_norm_drift: f64,
    pub warnings: Vec<String>,
}

impl TrajectorySummary {
    pub fn of(traj: &Trajectory, dt: f64) -> Self {
        let d = &traj.diagnostics;
        let v0 = traj.lyapunov.first().copied().unwrap_or(0.0);
        TrajectorySummary {
            steps: d.steps,
            dt,
            t_final: traj.times.last().copied().unwrap_or(0.0),
            initial_v: v0,
            final_v: d.final_v,
            converged_at: d.converged_at,
            max_abs_u: d.max_abs_u,
            max_lyapunov_residual: d.max_lyapunov_residual,
            max_v_increase: d.max_v_increase,
            max_v_deviation: traj.lyapunov.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max),
            max_eig_drift: d.max_eig_drift,
            max_norm_drift: d.max_norm_drift,
            warnings: d.warnings.clone(),
        }
    }
}

/// `t,u,V,eig_drift,varrho_0..,ref_0..`, one row per recorded sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states.first().map_or(0, |s| s.dim());
    let mut out = String::from("t,u,V,eig_drift");
    for i in 0..n {
        out.push_str(&format!(",varrho_{i}"));
    }
    for i in 0..n {
        out.push_str(&format!(",ref_{i}"));
    }
    out.push('\n');
    for k in 0..traj.len() {
        let mut row = vec![traj.times[k], traj.control[k], traj.lyapunov[k], traj.eig_drift[k]];
        row.extend(traj.states[k].components().iter());
        row.extend(traj.reference[k].components().iter());
        let cells: Vec<String> = row.iter().map(|&x| sig17(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn output_paths(out_dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (out_dir.join(format!("{name}.verdict.json")), out_dir.join(format!("{name}.traj.csv")))
}
