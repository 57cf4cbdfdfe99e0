//! Algebraic convergence tests: ad-bracket chains, Lie closure, Kalman rank,
//! root-space support conditions and the convergence verdict.

use nalgebra::{DMatrix, DVector};

use crate::basis::AdjointGenerator;
use crate::dynamics::PlantSpec;
use crate::error::{Error, Result};
use crate::flag::{antipodal_distance, classify};
use crate::linalg;
use crate::scalar::{lit, tiny, Real};
use crate::state::{to_coherence, CoherenceVector, DensityOperator, Regularity, SupportSet};

/// Relative singular-value threshold for every rank in this module.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Upper bound on bracket depth.
pub const MAX_DEPTH: usize = 40;

/// Largest algebra dimension for which the verdict computes the Lie closure.
pub const MAX_CLOSURE_DIM: usize = 35;

/// Thresholds used by [`theorem1_verdict`] and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisTolerances<T: Real> {
    /// Root-space norm below which a component is outside the support.
    pub support: T,
    pub rank_rel: T,
    /// Euclidean distance to an antipodal point counted as "at" it.
    pub antipodal: T,
    pub degeneracy: T,
    /// Largest eigenvalue difference for two states to share an orbit.
    pub isospectral: T,
}

impl<T: Real> Default for AnalysisTolerances<T> {
    fn default() -> Self {
        AnalysisTolerances {
            support: lit(crate::state::DEFAULT_SUPPORT_TOL),
            rank_rel: lit(RANK_REL_TOL),
            antipodal: lit(crate::flag::DEFAULT_ANTIPODAL_TOL),
            degeneracy: lit(crate::flag::DEFAULT_DEGENERACY_TOL),
            isospectral: lit(1e-7),
        }
    }
}

/// `[B, [A,B], [A,[A,B]], ...]`, optionally preceded by `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketChain<T: Real> {
    /// `generators[k + 1] = [A, generators[k]]` (after the optional `A`).
    pub generators: Vec<DMatrix<T>>,
    /// A-priori Frobenius bound of each generator.
    pub bounds: Vec<T>,
    pub span_dim: usize,
    pub includes_a: bool,
}

impl<T: Real> BracketChain<T> {
    /// The nested commutators only, without `A`.
    pub fn brackets(&self) -> &[DMatrix<T>] {
        if self.includes_a {
            &self.generators[1..]
        } else {
            &self.generators
        }
    }

    pub fn depth(&self) -> usize {
        self.brackets().len().saturating_sub(1)
    }
}

fn vectorize<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// Largest singular value.
fn spectral_norm<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone().singular_values().iter().fold(T::zero(), |acc, &s| if s > acc { s } else { acc })
}

/// Builds the chain up to `depth` nested commutators.
///
/// Both inputs are adjoint generators, so `[A, X]` for `X` in the image of
/// the representation has Frobenius norm at most `‖A‖₂ ‖X‖_F`; this gives the
/// bounds used to separate genuine zeros from rounding.
pub fn bracket_chain<T: Real>(
    a: &AdjointGenerator<T>,
    b: &AdjointGenerator<T>,
    depth: usize,
    include_a: bool,
) -> BracketChain<T> {
    let sigma = spectral_norm(&a.mat);
    let mut generators = Vec::with_capacity(depth + 2);
    let mut bounds = Vec::with_capacity(depth + 2);
    if include_a {
        generators.push(a.mat.clone());
        bounds.push(a.mat.norm());
    }
    let mut g = b.mat.clone();
    let mut bound = b.mat.norm();
    for k in 0..=depth {
        if k > 0 {
            g = linalg::commutator(&a.mat, &g);
            bound *= sigma;
        }
        generators.push(g.clone());
        bounds.push(bound);
    }
    let cols: Vec<_> = generators.iter().zip(&bounds).map(|(g, &bd)| (vectorize(g), bd)).collect();
    let span_dim = linalg::numerical_rank(&linalg::normalized_columns(&cols), lit(RANK_REL_TOL));
    BracketChain { generators, bounds, span_dim, includes_a: include_a }
}

/// Dimension of the smallest matrix Lie algebra containing `A` and `B`.
///
/// Keeps a Frobenius-orthonormal basis, brackets every new pair and adds the
/// part of each bracket orthogonal to the current span.
pub fn lie_closure_dim<T: Real>(a: &AdjointGenerator<T>, b: &AdjointGenerator<T>) -> Result<usize> {
    let n = a.dim();
    let tol = lit::<T>(RANK_REL_TOL);
    let mut basis: Vec<DMatrix<T>> = Vec::new();
    // Residuals are measured against `scale`: the input norm for A and B, and
    // 1 for brackets of unit basis elements, so cancellation noise in a
    // nearly vanishing bracket is never promoted to a new direction.
    let add = |basis: &mut Vec<DMatrix<T>>, m: DMatrix<T>, scale: T| -> bool {
        if scale <= tiny::<T>() {
            return false;
        }
        let mut r = m / scale;
        // Two Gram-Schmidt passes.
        for _ in 0..2 {
            for q in basis.iter() {
                let c = q.dot(&r);
                r -= q * c;
            }
        }
        let rn = r.norm();
        if rn > tol {
            basis.push(r / rn);
            true
        } else {
            false
        }
    };
    add(&mut basis, a.mat.clone(), a.mat.norm());
    add(&mut basis, b.mat.clone(), b.mat.norm());
    let mut done = 0usize;
    let max_rounds = (n * n).max(1);
    let mut rounds = 0usize;
    while done < basis.len() {
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::NoConvergence { iterations: max_rounds });
        }
        let upto = basis.len();
        for i in done..upto {
            for j in 0..i {
                let c = linalg::commutator(&basis[i], &basis[j]);
                add(&mut basis, c, T::one());
            }
        }
        done = upto;
    }
    Ok(basis.len())
}

/// `rank [b, Ab, ..., A^{m-1} b]`.
pub fn kalman_rank<T: Real>(a: &AdjointGenerator<T>, b: &DVector<T>, m: usize) -> usize {
    if m == 0 || b.norm() <= tiny::<T>() {
        return 0;
    }
    let sigma = spectral_norm(&a.mat);
    let mut cols = Vec::with_capacity(m);
    let mut v = b.clone();
    let mut bound = b.norm();
    for k in 0..m {
        if k > 0 {
            v = &a.mat * v;
            bound *= sigma;
        }
        cols.push((v.clone(), bound));
    }
    linalg::numerical_rank(&linalg::normalized_columns(&cols), lit(RANK_REL_TOL))
}

/// `rank {W v_d : W in chain}`.
pub fn rank_w_at<T: Real>(chain: &BracketChain<T>, v_d: &CoherenceVector<T>) -> usize {
    let scale = v_d.components().norm();
    if scale <= tiny::<T>() {
        return 0;
    }
    let cols: Vec<_> =
        chain.generators.iter().zip(&chain.bounds).map(|(g, &bd)| (g * v_d.components(), bd * scale)).collect();
    linalg::numerical_rank(&linalg::normalized_columns(&cols), lit(RANK_REL_TOL))
}

/// `ϱ_dᵀ W ϱ` for every generator of the chain.
pub fn bilinear_forms<T: Real>(chain: &BracketChain<T>, v_d: &CoherenceVector<T>, v: &CoherenceVector<T>) -> Vec<T> {
    chain.generators.iter().map(|g| v_d.components().dot(&(g * v.components()))).collect()
}

/// Support of `[H_B, ρ_d]`, read off `b = Bϱ_d`.
pub fn commutator_support<T: Real>(plant: &PlantSpec<T>, rho_d: &DensityOperator<T>, tol: T) -> Result<SupportSet> {
    let v_d = to_coherence(rho_d, plant.basis())?;
    let b = &plant.b().mat * v_d.components();
    SupportSet::of_coeffs(plant.levels(), &b, tol)
}

/// Sample times along the reference orbit for the support test. Any fixed
/// set of mutually incommensurate times works; zeros of the drifting
/// components are isolated.
#[allow(clippy::approx_constant)] // arbitrary times, not π or √2
const SUPPORT_SAMPLE_TIMES: [f64; 12] = [
    0.0, 0.618_034, 1.414_214, 2.236_068, 3.141_593, 4.123_106, 5.385_165, 6.782_330, 7.937_254, 9.055_385, 11.180_340,
    13.674_794,
];

/// Whether `[H_B, ρ_d(t)]` and `ρ(0)` share a support index for some `t` on
/// the reference orbit.
///
/// The root-space support of the commutator does not move along the orbit,
/// but its Cartan part does once `ρ_d` is off-diagonal, and may vanish at
/// isolated times (for instance when `ρ_d(0)` commutes with `H_B`). The union
/// is taken over `SUPPORT_SAMPLE_TIMES`. The support of `ρ(0)` itself is
/// invariant under the drift.
pub fn support_intersects<T: Real>(
    plant: &PlantSpec<T>,
    rho_d: &DensityOperator<T>,
    rho0: &DensityOperator<T>,
    tol: T,
) -> Result<bool> {
    let v0 = to_coherence(rho0, plant.basis())?;
    let target = crate::state::support(&v0, tol);
    let v_d = to_coherence(rho_d, plant.basis())?;
    for &t in &SUPPORT_SAMPLE_TIMES {
        let vt = &plant.drift_propagator(lit(t)) * v_d.components();
        let b = &plant.b().mat * vt;
        if SupportSet::of_coeffs(plant.levels(), &b, tol)?.intersects(&target) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The three equivalent local-controllability conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma3Report {
    pub m: usize,
    pub kalman_rank: usize,
    pub rank_w: usize,
    pub card: usize,
    pub kalman_ok: bool,
    pub rank_w_ok: bool,
    pub cardinality_ok: bool,
}

impl Lemma3Report {
    pub fn agree(&self) -> bool {
        self.kalman_ok == self.rank_w_ok && self.rank_w_ok == self.cardinality_ok
    }
}

/// Evaluates Kalman rank `= m`, `rank(W^{m-1}ϱ_d) = m` and
/// `Card F_k([H_B, ρ_d]) ≥ m/2`. All three are false when `m = 0`.
pub fn lemma3_equivalence<T: Real>(plant: &PlantSpec<T>, rho_d: &DensityOperator<T>) -> Result<Lemma3Report> {
    lemma3_with(plant, rho_d, &AnalysisTolerances::default())
}

pub fn lemma3_with<T: Real>(
    plant: &PlantSpec<T>,
    rho_d: &DensityOperator<T>,
    tol: &AnalysisTolerances<T>,
) -> Result<Lemma3Report> {
    if plant.regularity() != Regularity::StronglyRegular {
        return Err(Error::NotStronglyRegular);
    }
    let m = classify(rho_d, tol.degeneracy).orbit_dim_m;
    let v_d = to_coherence(rho_d, plant.basis())?;
    let b = &plant.b().mat * v_d.components();
    let card = SupportSet::of_coeffs(plant.levels(), &b, tol.support)?.card_pairs();
    let kalman = kalman_rank(plant.a(), &b, m);
    let rank_w = if m == 0 { 0 } else { rank_w_at(&bracket_chain(plant.a(), plant.b(), m - 1, false), &v_d) };
    Ok(Lemma3Report {
        m,
        kalman_rank: kalman,
        rank_w,
        card,
        kalman_ok: m > 0 && kalman == m,
        rank_w_ok: m > 0 && rank_w == m,
        cardinality_ok: m > 0 && 2 * card >= m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// All three sufficient conditions hold.
    ExpectedConvergence,
    /// `ρ(0)` is an antipodal point of `ρ_d`: an equilibrium of the loop.
    AntipodalObstruction,
    /// `F([H_B, ρ_d]) ∩ F(ρ(0)) = ∅`, so `u(0) = 0`.
    SupportDisjoint,
    /// The cardinality condition fails; convergence is neither predicted nor
    /// excluded.
    InsufficientCardinality,
    /// The drift or coupling hypotheses fail, or `ρ(0)` is off the orbit.
    NotApplicable,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::ExpectedConvergence => "ExpectedConvergence",
            Outcome::AntipodalObstruction => "AntipodalObstruction",
            Outcome::SupportDisjoint => "SupportDisjoint",
            Outcome::InsufficientCardinality => "InsufficientCardinality",
            Outcome::NotApplicable => "NotApplicable",
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Outcome::ExpectedConvergence,
            Outcome::AntipodalObstruction,
            Outcome::SupportDisjoint,
            Outcome::InsufficientCardinality,
            Outcome::NotApplicable,
        ]
        .into_iter()
        .find(|o| o.as_str() == s)
        .ok_or_else(|| Error::Config(format!("unknown outcome {s:?}")))
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Convergence verdict for a target and an initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    /// `ρ(0)` is not antipodal to `ρ_d`.
    pub cond_antipodal: bool,
    /// `F([H_B, ρ_d]) ∩ F(ρ(0)) ≠ ∅`.
    pub cond_support_intersect: bool,
    /// `Card F_k([H_B, ρ_d]) ≥ m/2` and `rank(W^{m-1}ϱ_d) = m`, with `m > 0`.
    /// The two agree for diagonal targets; for a rotating target only the
    /// rank condition still tracks the closed-loop behavior.
    pub cond_cardinality: bool,
    pub m: usize,
    pub chi: u64,
    pub card_fk_commutator: usize,
    pub kalman_rank: usize,
    pub rank_w: usize,
    /// `None` when the algebra is too large for the closure computation.
    pub lie_closure_dim: Option<usize>,
    /// Reasons for `NotApplicable`, and other remarks.
    pub diagnostics: Vec<String>,
}

pub fn theorem1_verdict<T: Real>(
    plant: &PlantSpec<T>,
    rho_d: &DensityOperator<T>,
    rho0: &DensityOperator<T>,
) -> Result<Verdict> {
    theorem1_verdict_with(plant, rho_d, rho0, &AnalysisTolerances::default())
}

/// Checks the hypotheses and the three sufficient conditions.
///
/// When several conditions fail the outcome names the first of: antipodal,
/// support, cardinality.
pub fn theorem1_verdict_with<T: Real>(
    plant: &PlantSpec<T>,
    rho_d: &DensityOperator<T>,
    rho0: &DensityOperator<T>,
    tol: &AnalysisTolerances<T>,
) -> Result<Verdict> {
    for rho in [rho_d, rho0] {
        if rho.levels() != plant.levels() {
            return Err(Error::DimensionMismatch { expected: plant.levels(), found: rho.levels() });
        }
    }
    let basis = plant.basis();
    let mut diagnostics = Vec::new();
    if plant.regularity() != Regularity::StronglyRegular {
        diagnostics.push(format!("drift is {:?}, not strongly regular", plant.regularity()));
    }
    if !plant.nearest_neighbor() {
        diagnostics.push("control does not couple every pair of adjacent levels".into());
    }
    let ed = rho_d.eigenvalues();
    let e0 = rho0.eigenvalues();
    let spread = ed.iter().zip(&e0).fold(T::zero(), |acc, (&a, &b)| {
        let d = (a - b).abs();
        if d > acc {
            d
        } else {
            acc
        }
    });
    if spread > tol.isospectral {
        diagnostics.push(format!("initial state is not isospectral with the target (max eigenvalue gap {spread})"));
    }
    let applicable = diagnostics.is_empty();

    let info = classify(rho_d, tol.degeneracy);
    let m = info.orbit_dim_m;
    let v0 = to_coherence(rho0, basis)?;
    let antipodal = antipodal_distance(&v0, rho_d, basis, tol.degeneracy)?.is_some_and(|d| d <= tol.antipodal);
    let comm = commutator_support(plant, rho_d, tol.support)?;
    let cond_support_intersect = support_intersects(plant, rho_d, rho0, tol.support)?;
    let card = comm.card_pairs();
    let v_d = to_coherence(rho_d, basis)?;
    let kalman = kalman_rank(plant.a(), &(&plant.b().mat * v_d.components()), m);
    let rank_w = if m == 0 { 0 } else { rank_w_at(&bracket_chain(plant.a(), plant.b(), m - 1, false), &v_d) };
    let cond_cardinality = m > 0 && 2 * card >= m && rank_w == m;
    if m > 0 && 2 * card >= m && rank_w < m {
        diagnostics
            .push(format!("Card F_k([H_B, rho_d]) = {card} reaches m/2 but rank W^(m-1) rho_d = {rank_w} < m = {m}"));
    }
    let lie = if basis.dim() <= MAX_CLOSURE_DIM {
        Some(lie_closure_dim(plant.a(), plant.b())?)
    } else {
        diagnostics.push(format!("Lie closure skipped for algebra dimension {}", basis.dim()));
        None
    };
    if m == 0 {
        diagnostics.push("target is maximally mixed; its orbit is a point".into());
    }

    let cond_antipodal = !antipodal;
    let outcome = if !applicable {
        Outcome::NotApplicable
    } else if !cond_antipodal {
        Outcome::AntipodalObstruction
    } else if !cond_support_intersect {
        Outcome::SupportDisjoint
    } else if !cond_cardinality {
        Outcome::InsufficientCardinality
    } else {
        Outcome::ExpectedConvergence
    };
    Ok(Verdict {
        outcome,
        cond_antipodal,
        cond_support_intersect,
        cond_cardinality,
        m,
        chi: info.euler_chi,
        card_fk_commutator: card,
        kalman_rank: kalman,
        rank_w,
        lie_closure_dim: lie,
        diagnostics,
    })
}
