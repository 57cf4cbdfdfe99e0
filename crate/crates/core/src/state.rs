//! Density operators, coherence vectors, the distance functional, support
//! sets and regularity of drift Hamiltonians.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::basis::{algebra_dim, check_levels, ordered_labels, GellMannBasis, LabelKind};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{floor_tol, lit, to_f64, Real};

/// Default threshold on root-space norms when computing supports.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-9;

/// Minimum eigenvalue accepted when reconstructing a state from a coherence
/// vector.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Hermitian, positive semidefinite, unit-trace `N × N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T: Real> {
    rho: DMatrix<Complex<T>>,
}

impl<T: Real> DensityOperator<T> {
    /// Validates Hermiticity, trace, positivity and purity to `1e-10`.
    pub fn new(rho: DMatrix<Complex<T>>) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidDensity(format!("matrix is {}x{}, not square", rho.nrows(), rho.ncols())));
        }
        check_levels(rho.nrows())?;
        let tol = floor_tol::<T>(1e-10);
        let herm = linalg::hermitian_residual(&rho);
        if herm > tol {
            return Err(Error::InvalidDensity(format!("not Hermitian (residual {:e})", to_f64(herm))));
        }
        let tr = linalg::trace(&rho);
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidDensity(format!("trace is {} + {}i, not 1", tr.re, tr.im)));
        }
        let eig = linalg::hermitian_eigenvalues(&rho);
        let min = eig.last().copied().unwrap_or_else(T::zero);
        if min < -tol {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min}")));
        }
        let state = DensityOperator { rho };
        let purity = state.purity();
        if purity > T::one() + tol {
            return Err(Error::InvalidDensity(format!("purity {purity} exceeds 1")));
        }
        Ok(state)
    }

    pub(crate) fn new_unchecked(rho: DMatrix<Complex<T>>) -> Self {
        DensityOperator { rho }
    }

    /// `diag(w_1, ..., w_N)`.
    pub fn from_diagonal(weights: &[T]) -> Result<Self> {
        let n = weights.len();
        let mut rho = DMatrix::from_element(n, n, Complex::new(T::zero(), T::zero()));
        for (k, &w) in weights.iter().enumerate() {
            rho[(k, k)] = Complex::new(w, T::zero());
        }
        Self::new(rho)
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm2 = v.norm_squared();
        if norm2 <= crate::scalar::tiny::<T>() {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let rho = (&v * v.adjoint()).map(|z| z / norm2);
        Self::new(rho)
    }

    /// Maximally mixed state `I / N`.
    pub fn maximally_mixed(levels: usize) -> Result<Self> {
        let w = T::one() / lit::<T>(levels as f64);
        Self::from_diagonal(&vec![w; levels])
    }

    pub fn levels(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.rho
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> T {
        self.rho.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        linalg::hermitian_eigenvalues(&self.rho)
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &DMatrix<Complex<T>>) -> Self {
        DensityOperator { rho: u * &self.rho * u.adjoint() }
    }
}

/// Traceless part of a density operator in Gell-Mann coordinates, with
/// `ρ = I/N + Σ ϱ_a λ_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceVector<T: Real> {
    levels: usize,
    components: DVector<T>,
}

impl<T: Real> CoherenceVector<T> {
    pub fn new(levels: usize, components: DVector<T>) -> Result<Self> {
        check_levels(levels)?;
        let n = algebra_dim(levels);
        if components.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: components.len() });
        }
        Ok(CoherenceVector { levels, components })
    }

    pub fn from_slice(levels: usize, components: &[T]) -> Result<Self> {
        Self::new(levels, DVector::from_column_slice(components))
    }

    pub fn zeros(levels: usize) -> Result<Self> {
        check_levels(levels)?;
        Ok(CoherenceVector { levels, components: DVector::zeros(algebra_dim(levels)) })
    }

    pub(crate) fn from_parts(levels: usize, components: DVector<T>) -> Self {
        debug_assert_eq!(components.len(), algebra_dim(levels));
        CoherenceVector { levels, components }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &DVector<T> {
        &self.components
    }

    pub fn into_components(self) -> DVector<T> {
        self.components
    }

    /// The constant trace component `1/√N`.
    pub fn trace_component(&self) -> T {
        T::one() / lit::<T>(self.levels as f64).sqrt()
    }

    pub fn norm_squared(&self) -> T {
        self.components.norm_squared()
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        self.check_same(other)?;
        Ok(self.components.dot(&other.components))
    }

    /// Euclidean distance between component vectors.
    pub fn euclidean(&self, other: &Self) -> Result<T> {
        self.check_same(other)?;
        Ok((&self.components - &other.components).norm())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.levels != other.levels {
            return Err(Error::DimensionMismatch { expected: self.levels, found: other.levels });
        }
        Ok(())
    }

    /// Purity `tr ρ² = 1/N + ‖ϱ‖²` of the represented state.
    pub fn purity(&self) -> T {
        T::one() / lit::<T>(self.levels as f64) + self.norm_squared()
    }

    /// Applies a real `n × n` matrix to the components.
    pub fn transformed(&self, m: &DMatrix<T>) -> Self {
        CoherenceVector { levels: self.levels, components: m * &self.components }
    }
}

/// `ϱ_a = tr(ρ λ_a)`.
pub fn to_coherence<T: Real>(rho: &DensityOperator<T>, basis: &GellMannBasis<T>) -> Result<CoherenceVector<T>> {
    if rho.levels() != basis.levels() {
        return Err(Error::DimensionMismatch { expected: basis.levels(), found: rho.levels() });
    }
    let n = rho.levels();
    let traceless =
        rho.matrix() - DMatrix::from_diagonal_element(n, n, Complex::new(T::one() / lit::<T>(n as f64), T::zero()));
    let components = basis.expand(&traceless, crate::basis::Convention::Hermitian)?;
    Ok(CoherenceVector { levels: n, components })
}

/// `ρ = I/N + Σ v_a λ_a`, rejecting vectors outside the state space.
pub fn from_coherence<T: Real>(v: &CoherenceVector<T>, basis: &GellMannBasis<T>) -> Result<DensityOperator<T>> {
    if v.levels() != basis.levels() {
        return Err(Error::DimensionMismatch { expected: basis.levels(), found: v.levels() });
    }
    let rho = reconstruct(v, basis);
    let eig = linalg::hermitian_eigenvalues(&rho);
    let min = eig.last().copied().unwrap_or_else(T::zero);
    if min < -floor_tol::<T>(POSITIVITY_TOL) {
        return Err(Error::NotPositive { min_eigenvalue: to_f64(min) });
    }
    Ok(DensityOperator::new_unchecked(rho))
}

/// The Hermitian unit-trace matrix of a coherence vector, without any
/// positivity check.
pub fn reconstruct<T: Real>(v: &CoherenceVector<T>, basis: &GellMannBasis<T>) -> DMatrix<Complex<T>> {
    let n = v.levels();
    basis.combine(v.components())
        + DMatrix::from_diagonal_element(n, n, Complex::new(T::one() / lit::<T>(n as f64), T::zero()))
}

/// `d(ϱ1, ϱ2) = ‖ϱ1‖² - ⟨ϱ1, ϱ2⟩`.
///
/// This is a distance only between states of equal purity, and it is not
/// symmetric in general. Purity is not checked.
pub fn distance<T: Real>(v1: &CoherenceVector<T>, v2: &CoherenceVector<T>) -> Result<T> {
    Ok(v1.norm_squared() - v1.dot(v2)?)
}

/// Diagonal and root-space indices touched by a vector of coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupportSet {
    /// `j` such that the `Diag(j)` component is nonzero.
    pub diag: BTreeSet<usize>,
    /// `(j, l)` whose root-space norm is nonzero.
    pub pairs: BTreeSet<(usize, usize)>,
}

impl SupportSet {
    /// Supports of an arbitrary coefficient vector in the `N`-level basis.
    pub fn of_coeffs<T: Real>(levels: usize, coeffs: &DVector<T>, tol: T) -> Result<Self> {
        let labels = ordered_labels(levels)?;
        if coeffs.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), found: coeffs.len() });
        }
        let mut diag = BTreeSet::new();
        let mut root_sq = std::collections::BTreeMap::<(usize, usize), T>::new();
        for label in &labels {
            let x = coeffs[label.position];
            match label.kind {
                LabelKind::Diag(j) => {
                    if x.abs() > tol {
                        diag.insert(j);
                    }
                }
                LabelKind::OffRe(j, l) | LabelKind::OffIm(j, l) => {
                    *root_sq.entry((j, l)).or_insert_with(T::zero) += x * x;
                }
            }
        }
        let tol_sq = tol * tol;
        let pairs = root_sq.into_iter().filter(|&(_, s)| s > tol_sq).map(|(p, _)| p).collect();
        Ok(SupportSet { diag, pairs })
    }

    /// `Card F_k`.
    pub fn card_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Whether the combined supports share any index.
    pub fn intersects(&self, other: &SupportSet) -> bool {
        !self.diag.is_disjoint(&other.diag) || !self.pairs.is_disjoint(&other.pairs)
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty() && self.pairs.is_empty()
    }
}

/// `F_h` and `F_k` of a coherence vector.
pub fn support<T: Real>(v: &CoherenceVector<T>, tol: T) -> SupportSet {
    SupportSet::of_coeffs(v.levels(), v.components(), tol)
        .expect("coherence vector dimensions are validated on construction")
}

/// Squared norm of each root space `(j, l)`, in label order.
pub fn root_space_norms<T: Real>(v: &CoherenceVector<T>) -> Vec<((usize, usize), T)> {
    let labels = ordered_labels(v.levels()).expect("validated levels");
    let mut out: Vec<((usize, usize), T)> = Vec::new();
    for label in labels {
        if let LabelKind::OffRe(j, l) | LabelKind::OffIm(j, l) = label.kind {
            let x = v.components()[label.position];
            match out.last_mut() {
                Some((p, s)) if *p == (j, l) => *s += x * x,
                _ => out.push(((j, l), x * x)),
            }
        }
    }
    out
}

/// Diagonal (Cartan) components of a coherence vector, ordered by `j`.
pub fn cartan_part<T: Real>(v: &CoherenceVector<T>) -> Vec<T> {
    let labels = ordered_labels(v.levels()).expect("validated levels");
    let mut out = vec![T::zero(); v.levels() - 1];
    for label in labels {
        if let LabelKind::Diag(j) = label.kind {
            out[j - 1] = v.components()[label.position];
        }
    }
    out
}

/// Classification of a diagonal drift Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regularity {
    /// Two energy levels coincide.
    Degenerate,
    /// Distinct levels, but two transitions share a frequency.
    Regular,
    /// Distinct levels and distinct transition frequencies.
    StronglyRegular,
}

/// A Hamiltonian given either by its diagonal energies or by Gell-Mann
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianSpec<T: Real> {
    Diagonal { energies: Vec<T> },
    Coefficients { coeffs: DVector<T> },
}

impl<T: Real> HamiltonianSpec<T> {
    /// Diagonal Hamiltonian; energies must sum to zero to `1e-12`.
    pub fn diagonal(energies: Vec<T>) -> Result<Self> {
        check_levels(energies.len())?;
        let sum = energies.iter().fold(T::zero(), |a, &e| a + e);
        if sum.abs() > floor_tol::<T>(1e-12) {
            return Err(Error::Config(format!("energies sum to {sum}, expected 0")));
        }
        Ok(HamiltonianSpec::Diagonal { energies })
    }

    /// Diagonal Hamiltonian after subtracting the mean energy.
    pub fn centered(energies: &[T]) -> Result<Self> {
        check_levels(energies.len())?;
        let mean = energies.iter().fold(T::zero(), |a, &e| a + e) / lit::<T>(energies.len() as f64);
        Ok(HamiltonianSpec::Diagonal { energies: energies.iter().map(|&e| e - mean).collect() })
    }

    /// Gell-Mann coefficients `h` with `H = h · λ`.
    pub fn coefficients(&self, basis: &GellMannBasis<T>) -> Result<DVector<T>> {
        match self {
            HamiltonianSpec::Coefficients { coeffs } => {
                if coeffs.len() != basis.dim() {
                    return Err(Error::DimensionMismatch { expected: basis.dim(), found: coeffs.len() });
                }
                Ok(coeffs.clone())
            }
            HamiltonianSpec::Diagonal { energies } => {
                if energies.len() != basis.levels() {
                    return Err(Error::DimensionMismatch { expected: basis.levels(), found: energies.len() });
                }
                let n = energies.len();
                let mut h = DMatrix::from_element(n, n, Complex::new(T::zero(), T::zero()));
                for (k, &e) in energies.iter().enumerate() {
                    h[(k, k)] = Complex::new(e, T::zero());
                }
                basis.expand(&h, crate::basis::Convention::Hermitian)
            }
        }
    }

    /// Energies of a diagonal Hamiltonian, or of a coefficient vector that
    /// only has Cartan components.
    pub fn energies(&self, basis: &GellMannBasis<T>) -> Option<Vec<T>> {
        match self {
            HamiltonianSpec::Diagonal { energies } => Some(energies.clone()),
            HamiltonianSpec::Coefficients { coeffs } => {
                let m = basis.combine(coeffs);
                let n = m.nrows();
                let off = (0..n)
                    .flat_map(|r| (0..n).map(move |c| (r, c)))
                    .filter(|&(r, c)| r != c)
                    .any(|(r, c)| crate::scalar::cabs(m[(r, c)]) > T::zero());
                if off {
                    None
                } else {
                    Some((0..n).map(|k| m[(k, k)].re).collect())
                }
            }
        }
    }
}

/// Degenerate / regular / strongly regular classification of energy levels.
///
/// Regular: all levels differ by more than `tol`. Strongly regular: in
/// addition, the transition frequencies `|E_j - E_l|` of distinct pairs all
/// differ by more than `tol`.
pub fn regularity<T: Real>(energies: &[T], tol: T) -> Regularity {
    let n = energies.len();
    let mut gaps = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for l in (j + 1)..n {
            let g = (energies[l] - energies[j]).abs();
            if g <= tol {
                return Regularity::Degenerate;
            }
            gaps.push(g);
        }
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if gaps.windows(2).any(|w| w[1] - w[0] <= tol) {
        Regularity::Regular
    } else {
        Regularity::StronglyRegular
    }
}

/// [`regularity`] for a [`HamiltonianSpec`]; Hamiltonians with off-diagonal
/// parts are reported as degenerate since they are not Cartan elements.
pub fn is_strongly_regular<T: Real>(h: &HamiltonianSpec<T>, basis: &GellMannBasis<T>, tol: T) -> Regularity {
    match h.energies(basis) {
        Some(e) => regularity(&e, tol),
        None => Regularity::Degenerate,
    }
}
