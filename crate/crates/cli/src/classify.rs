//! `flag classify`: orbit data and antipodal states of one density operator.

use flagstab::{antipodal_points, classify, to_coherence, Basis};
use serde::Serialize;

use crate::error::Result;
use crate::report;
use crate::scenario::DensityInput;

#[derive(Debug, Clone, Serialize)]
pub struct FlagReport {
    pub levels: usize,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub m: usize,
    pub chi: u64,
    pub coherence: Vec<f64>,
    /// Coherence vectors of the `chi - 1` antipodal states.
    pub antipodal: Vec<Vec<f64>>,
}

pub fn flag_report(input: &DensityInput, levels: usize, degeneracy_tol: f64, seed: u64) -> Result<FlagReport> {
    let basis = Basis::new(levels)?;
    let rho = input.resolve(&basis, seed, "input")?;
    let info = classify(&rho, degeneracy_tol);
    let set = antipodal_points(&rho, &basis, degeneracy_tol)?;
    Ok(FlagReport {
        levels,
        eigenvalues: info.eigenvalues.clone(),
        multiplicities: info.multiplicities.clone(),
        m: info.orbit_dim_m,
        chi: info.euler_chi,
        coherence: to_coherence(&rho, &basis)?.components().iter().copied().collect(),
        antipodal: set.points.iter().map(|p| p.components().iter().copied().collect()).collect(),
    })
}

impl FlagReport {
    pub fn to_json(&self) -> String {
        report::to_json(self)
    }
}

/// Levels implied by a density input, if it fixes them.
pub fn implied_levels(input: &DensityInput) -> Option<usize> {
    match input {
        DensityInput::Matrix(rows) => Some(rows.len()),
        DensityInput::Diagonal(w) => Some(w.len()),
        DensityInput::Coherence(v) => (2..=flagstab::MAX_LEVELS).find(|n| n * n - 1 == v.len()),
        DensityInput::Orbit(o) => implied_levels(&o.of),
    }
}
