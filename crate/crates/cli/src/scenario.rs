//! Scenario files: one JSON object per run.
//!
//! ```json
//! {
//!   "name": "ex1-diagonal-target",
//!   "N": 2,
//!   "energies": [0.5657, -0.5657],
//!   "hB_terms": [{"kind": "re", "j": 1, "l": 2, "value": 0.5}],
//!   "rho_d": {"diagonal": [1.0, 0.0]},
//!   "rho0": {"orbit": {"of": {"diagonal": [1.0, 0.0]}, "seed": 1}},
//!   "dt": 0.001,
//!   "T": 200.0
//! }
//! ```
//!
//! `validate` turns a scenario into the plant, states and options the core
//! library consumes. Every rejection names the offending field.

use std::path::Path;
use std::sync::Arc;

use flagstab::{Basis, Density, LabelKind, Options, Outcome, Plant, Tolerances};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_STRIDE: usize = 100;
/// Energies whose mean is below this are taken as already centered.
const CENTERING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub description: Option<String>,
    #[serde(rename = "N")]
    pub levels: usize,
    pub energies: Vec<f64>,
    /// Drift energies of the reference, when they are stated separately.
    /// Must match `energies`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_energies: Option<Vec<f64>>,
    #[serde(rename = "hB_terms")]
    pub hb_terms: Vec<Term>,
    pub rho_d: DensityInput,
    pub rho0: DensityInput,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default)]
    pub tolerances: ScenarioTolerances,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expect: Option<Expectation>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_stride() -> usize {
    DEFAULT_STRIDE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Re,
    Im,
}

/// One off-diagonal control coefficient, `value · λ_{kind, j l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub kind: TermKind,
    pub j: usize,
    pub l: usize,
    pub value: f64,
}

impl Term {
    pub fn re(j: usize, l: usize, value: f64) -> Self {
        Term { kind: TermKind::Re, j, l, value }
    }

    pub fn label(&self) -> LabelKind {
        match self.kind {
            TermKind::Re => LabelKind::OffRe(self.j, self.l),
            TermKind::Im => LabelKind::OffIm(self.j, self.l),
        }
    }
}

/// A density operator given by its matrix, its coherence vector, its
/// diagonal, or as a seeded random point on the orbit of another input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityInput {
    /// Rows of `[re, im]` pairs.
    Matrix(Vec<Vec<[f64; 2]>>),
    Coherence(Vec<f64>),
    Diagonal(Vec<f64>),
    Orbit(OrbitInput),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitInput {
    pub of: Box<DensityInput>,
    /// Falls back to the command-line seed when absent.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

impl DensityInput {
    pub fn orbit(of: DensityInput, seed: u64) -> Self {
        DensityInput::Orbit(OrbitInput { of: Box::new(of), seed: Some(seed) })
    }

    pub fn pure(psi: &[[f64; 2]]) -> Self {
        let rows = psi
            .iter()
            .map(|a| {
                psi.iter()
                    .map(|b| {
                        // a b*
                        [a[0] * b[0] + a[1] * b[1], a[1] * b[0] - a[0] * b[1]]
                    })
                    .collect()
            })
            .collect();
        DensityInput::Matrix(rows)
    }

    /// Builds the operator. `field` prefixes error messages.
    pub fn resolve(&self, basis: &Basis, default_seed: u64, field: &str) -> Result<Density> {
        let n = basis.levels();
        let bad = |msg: String| CliError::Config(format!("{field}: {msg}"));
        match self {
            DensityInput::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(bad(format!("matrix must be {n}x{n}")));
                }
                let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
                Density::new(m).map_err(|e| bad(e.to_string()))
            }
            DensityInput::Coherence(v) => {
                let c = flagstab::Coherence::from_slice(n, v).map_err(|e| bad(e.to_string()))?;
                flagstab::from_coherence(&c, basis).map_err(|e| bad(e.to_string()))
            }
            DensityInput::Diagonal(w) => {
                if w.len() != n {
                    return Err(bad(format!("diagonal needs {n} entries, got {}", w.len())));
                }
                Density::from_diagonal(w).map_err(|e| bad(e.to_string()))
            }
            DensityInput::Orbit(o) => {
                let base = o.of.resolve(basis, default_seed, &format!("{field}.orbit.of"))?;
                Ok(base.conjugate(&random_unitary(n, o.seed.unwrap_or(default_seed))))
            }
        }
    }
}

/// `exp(iH)` for a seeded Gaussian Hermitian `H`. Generic, not Haar.
fn random_unitary(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    g = (&g + g.adjoint()) * Complex64::new(1.5, 0.0);
    let (values, vectors) = flagstab::linalg::hermitian_eigen(&g);
    let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        values.iter().map(|&x| Complex64::from_polar(1.0, x)),
    ));
    &vectors * phases * vectors.adjoint()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioTolerances {
    pub support_tol: f64,
    #[serde(rename = "convergence_V")]
    pub convergence_v: f64,
    pub degeneracy_tol: f64,
}

impl Default for ScenarioTolerances {
    fn default() -> Self {
        ScenarioTolerances { support_tol: 1e-9, convergence_v: 1e-6, degeneracy_tol: 1e-8 }
    }
}

/// What the closed loop is expected to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    /// `V` drops below `convergence_V` and stays there.
    Converges,
    /// `|u| < 1e-9` throughout and `V` constant to 1e-8.
    Silent,
    /// No convergence: final `V` stays above `10 · convergence_V`.
    Stalls,
    #[default]
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    /// One of the verdict outcome names.
    pub outcome: String,
    #[serde(default)]
    pub dynamics: Dynamics,
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub plant: Plant,
    pub rho_d: Density,
    pub rho0: Density,
    pub options: Options,
    pub tolerances: Tolerances,
    pub expected: Option<(Outcome, Dynamics)>,
    pub warnings: Vec<String>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub stride: Option<usize>,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self, overrides: &Overrides) -> Result<Prepared> {
        let cfg = |msg: String| CliError::Config(msg);
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(cfg(format!("name: {:?} is not usable as a file stem", self.name)));
        }
        let n = self.levels;
        if !(2..=flagstab::MAX_LEVELS).contains(&n) {
            return Err(cfg(format!("N: must be in 2..={}, got {n}", flagstab::MAX_LEVELS)));
        }
        let mut warnings = Vec::new();
        let energies = centered(&self.energies, n, "energies", &mut warnings)?;
        for (i, t) in self.hb_terms.iter().enumerate() {
            if !(1 <= t.j && t.j < t.l && t.l <= n) {
                return Err(cfg(format!("hB_terms[{i}]: need 1 <= j < l <= {n}, got j={}, l={}", t.j, t.l)));
            }
            if !t.value.is_finite() {
                return Err(cfg(format!("hB_terms[{i}].value: not finite")));
            }
        }
        let basis = Arc::new(Basis::new(n)?);
        let terms: Vec<_> = self.hb_terms.iter().map(|t| (t.label(), t.value)).collect();
        let plant = Plant::from_terms(basis.clone(), &energies, &terms).map_err(|e| cfg(format!("hB_terms: {e}")))?;
        if let Some(reference) = &self.reference_energies {
            let reference = centered(reference, n, "reference_energies", &mut Vec::new())?;
            plant.check_reference_drift(&reference).map_err(|e| cfg(format!("reference_energies: {e}")))?;
        }
        let seed = overrides.seed.unwrap_or(0);
        let rho_d = self.rho_d.resolve(&basis, seed, "rho_d")?;
        let rho0 = self.rho0.resolve(&basis, seed, "rho0")?;

        let dt = overrides.dt.unwrap_or(self.dt);
        let t_final = overrides.t_final.unwrap_or(self.t_final);
        let stride = overrides.stride.unwrap_or(self.record_stride);
        if !(dt.is_finite() && dt > 0.0) {
            return Err(cfg(format!("dt: must be positive, got {dt}")));
        }
        if !(t_final.is_finite() && t_final >= dt) {
            return Err(cfg(format!("T: must be at least dt = {dt}, got {t_final}")));
        }
        if stride == 0 {
            return Err(cfg("record_stride: must be at least 1".into()));
        }
        let tol = &self.tolerances;
        for (field, v) in [
            ("support_tol", tol.support_tol),
            ("convergence_V", tol.convergence_v),
            ("degeneracy_tol", tol.degeneracy_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(cfg(format!("tolerances.{field}: must be positive, got {v}")));
            }
        }
        let mut options = Options::new(dt, t_final).stride(stride);
        options.convergence_v = tol.convergence_v;
        let tolerances =
            Tolerances { support: tol.support_tol, degeneracy: tol.degeneracy_tol, ..Tolerances::default() };
        let expected = match &self.expect {
            None => None,
            Some(e) => {
                let outcome = e.outcome.parse::<Outcome>().map_err(|err| cfg(format!("expect.outcome: {err}")))?;
                Some((outcome, e.dynamics))
            }
        };
        Ok(Prepared { plant, rho_d, rho0, options, tolerances, expected, warnings })
    }
}

fn centered(energies: &[f64], n: usize, field: &str, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    if energies.len() != n {
        return Err(CliError::Config(format!("{field}: need {n} entries, got {}", energies.len())));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(CliError::Config(format!("{field}: not finite")));
    }
    let mean = energies.iter().sum::<f64>() / n as f64;
    if mean.abs() <= CENTERING_TOL {
        return Ok(energies.to_vec());
    }
    warnings.push(format!("{field}: shifted by {mean} to zero mean"));
    Ok(energies.iter().map(|e| e - mean).collect())
}
