//! Isospectral orbits: eigenvalue multiplicities, orbit dimension, Euler
//! characteristic and antipodal states.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::basis::GellMannBasis;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{lit, Real};
use crate::state::{to_coherence, CoherenceVector, DensityOperator};

/// Default gap below which neighbouring eigenvalues are merged.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Default Euclidean tolerance of [`is_antipodal`].
pub const DEFAULT_ANTIPODAL_TOL: f64 = 1e-7;

/// Largest Euler characteristic for which antipodal points are enumerated.
pub const MAX_CHI: u64 = 3_628_800;

/// Orbit data of a density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagManifoldInfo<T: Real> {
    /// Eigenvalues, descending.
    pub eigenvalues: Vec<T>,
    /// Sizes of the eigenvalue clusters, in eigenvalue order.
    pub multiplicities: Vec<usize>,
    /// `N² - Σ j_i²`.
    pub orbit_dim_m: usize,
    /// `N! / Π j_i!`.
    pub euler_chi: u64,
    pub degeneracy_tol: T,
}

impl<T: Real> FlagManifoldInfo<T> {
    pub fn levels(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Cluster index of each eigenvalue (descending input), single linkage.
fn cluster_labels<T: Real>(eigenvalues: &[T], tol: T) -> Vec<usize> {
    let mut labels = Vec::with_capacity(eigenvalues.len());
    let mut current = 0;
    for (k, &w) in eigenvalues.iter().enumerate() {
        if k > 0 && eigenvalues[k - 1] - w > tol {
            current += 1;
        }
        labels.push(current);
    }
    labels
}

fn multiplicities_of(labels: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &c in labels {
        if c == out.len() {
            out.push(0);
        }
        out[c] += 1;
    }
    out
}

/// Multinomial coefficient `N! / Π j_i!`, saturating at `u64::MAX`.
pub fn multinomial(parts: &[usize]) -> u64 {
    let mut result: u128 = 1;
    let mut seen: u128 = 0;
    for &p in parts {
        for k in 1..=p as u128 {
            seen += 1;
            // Stays integral: product of binomial coefficients.
            result = result * seen / k;
            if result > u64::MAX as u128 {
                return u64::MAX;
            }
        }
    }
    result as u64
}

fn info_from_eigenvalues<T: Real>(eigenvalues: Vec<T>, tol: T) -> (FlagManifoldInfo<T>, Vec<usize>) {
    let labels = cluster_labels(&eigenvalues, tol);
    let multiplicities = multiplicities_of(&labels);
    let n = eigenvalues.len();
    let orbit_dim_m = n * n - multiplicities.iter().map(|j| j * j).sum::<usize>();
    let euler_chi = multinomial(&multiplicities);
    (FlagManifoldInfo { eigenvalues, multiplicities, orbit_dim_m, euler_chi, degeneracy_tol: tol }, labels)
}

/// Classifies the orbit of `rho` under unitary conjugation.
pub fn classify<T: Real>(rho: &DensityOperator<T>, degeneracy_tol: T) -> FlagManifoldInfo<T> {
    info_from_eigenvalues(rho.eigenvalues(), degeneracy_tol).0
}

/// The `χ - 1` antipodal states of a base state.
#[derive(Debug, Clone, PartialEq)]
pub struct AntipodalSet<T: Real> {
    pub base: CoherenceVector<T>,
    pub points: Vec<CoherenceVector<T>>,
}

impl<T: Real> AntipodalSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Euclidean distance from `v` to the nearest antipodal point.
    pub fn nearest_distance(&self, v: &CoherenceVector<T>) -> Option<T> {
        self.points
            .iter()
            .filter_map(|p| p.euclidean(v).ok())
            .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| if d < a { d } else { a })))
    }
}

/// Rearranges `v` into the next lexicographic permutation; false at the last.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Eigenframe of `rho`: per-position eigenvalues, the unitary whose columns
/// are the eigenvectors, and the cluster label of each position.
///
/// An exactly diagonal matrix keeps the identity frame and its own diagonal
/// order; otherwise eigenvalues are sorted in descending order.
struct Frame<T: Real> {
    values: Vec<T>,
    r: DMatrix<Complex<T>>,
    labels: Vec<usize>,
    info: FlagManifoldInfo<T>,
    means: Vec<T>,
}

fn is_diagonal<T: Real>(m: &DMatrix<Complex<T>>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == Complex::new(T::zero(), T::zero())))
}

fn frame<T: Real>(rho: &DensityOperator<T>, degeneracy_tol: T) -> Frame<T> {
    let m = rho.matrix();
    let n = m.nrows();
    let (values, r) = if is_diagonal(m) {
        ((0..n).map(|k| m[(k, k)].re).collect::<Vec<T>>(), DMatrix::identity(n, n))
    } else {
        linalg::hermitian_eigen(m)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted: Vec<T> = order.iter().map(|&i| values[i]).collect();
    let (info, sorted_labels) = info_from_eigenvalues(sorted, degeneracy_tol);
    let mut labels = vec![0; n];
    for (rank, &pos) in order.iter().enumerate() {
        labels[pos] = sorted_labels[rank];
    }
    let mut means = vec![T::zero(); info.multiplicities.len()];
    for (&c, &w) in labels.iter().zip(&values) {
        means[c] += w;
    }
    for (mean, &count) in means.iter_mut().zip(&info.multiplicities) {
        *mean /= lit::<T>(count as f64);
    }
    Frame { values, r, labels, info, means }
}

/// `R σ(W) R†` for every rearrangement except the base one, lexicographic in
/// the cluster sequence.
fn enumerate<T: Real>(
    f: &Frame<T>,
    r: &DMatrix<Complex<T>>,
    basis: &GellMannBasis<T>,
) -> Result<Vec<CoherenceVector<T>>> {
    let n = f.values.len();
    let r_adj = r.adjoint();
    let mut perm = f.labels.clone();
    perm.sort_unstable();
    let mut points = Vec::with_capacity(f.info.euler_chi as usize - 1);
    loop {
        if perm != f.labels {
            let mut w = DMatrix::from_element(n, n, Complex::new(T::zero(), T::zero()));
            for (k, &c) in perm.iter().enumerate() {
                w[(k, k)] = Complex::new(f.means[c], T::zero());
            }
            let rho = DensityOperator::new_unchecked(r * w * &r_adj);
            points.push(to_coherence(&rho, basis)?);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    debug_assert_eq!(points.len() as u64, f.info.euler_chi - 1);
    Ok(points)
}

/// Enumerates `R σ(W) R†` over the multiset-distinct nontrivial rearrangements
/// `σ` of the eigenvalues of `ρ_d = R W R†`, in lexicographic order of the
/// cluster sequence.
///
/// Eigenvalues within a cluster are replaced by the cluster mean. A diagonal
/// `ρ_d` uses the identity frame, so its points are the diagonal
/// rearrangements. For a non-diagonal `ρ_d` with a degenerate eigenvalue the
/// points depend on the basis chosen inside the degenerate eigenspace; use
/// [`is_antipodal`] for a frame-independent membership test.
pub fn antipodal_points<T: Real>(
    rho_d: &DensityOperator<T>,
    basis: &GellMannBasis<T>,
    degeneracy_tol: T,
) -> Result<AntipodalSet<T>> {
    if rho_d.levels() != basis.levels() {
        return Err(Error::DimensionMismatch { expected: basis.levels(), found: rho_d.levels() });
    }
    let f = frame(rho_d, degeneracy_tol);
    if f.info.euler_chi > MAX_CHI {
        return Err(Error::TooLarge { chi: f.info.euler_chi, cap: MAX_CHI });
    }
    let base = to_coherence(rho_d, basis)?;
    let points = enumerate(&f, &f.r, basis)?;
    Ok(AntipodalSet { base, points })
}

/// Euclidean distance from `v` to the nearest antipodal point of `rho_d`,
/// minimized over the frame freedom inside degenerate eigenspaces.
///
/// The frame is aligned with `v` by diagonalizing each degenerate block of
/// `ρ(v)` expressed in an eigenframe of `ρ_d`; for an exact antipodal point
/// this recovers a frame in which it is a rearrangement of `W`.
pub fn antipodal_distance<T: Real>(
    v: &CoherenceVector<T>,
    rho_d: &DensityOperator<T>,
    basis: &GellMannBasis<T>,
    degeneracy_tol: T,
) -> Result<Option<T>> {
    if v.levels() != rho_d.levels() || basis.levels() != rho_d.levels() {
        return Err(Error::DimensionMismatch { expected: rho_d.levels(), found: v.levels() });
    }
    let f = frame(rho_d, degeneracy_tol);
    if f.info.euler_chi > MAX_CHI {
        return Err(Error::TooLarge { chi: f.info.euler_chi, cap: MAX_CHI });
    }
    let n = f.values.len();
    let x = f.r.adjoint() * crate::state::reconstruct(v, basis) * &f.r;
    let mut gauge = DMatrix::from_element(n, n, Complex::new(T::zero(), T::zero()));
    for c in 0..f.means.len() {
        let idx: Vec<usize> = (0..n).filter(|&k| f.labels[k] == c).collect();
        let block = DMatrix::from_fn(idx.len(), idx.len(), |i, j| x[(idx[i], idx[j])]);
        let (_, vecs) = linalg::hermitian_eigen(&block);
        for (i, &ri) in idx.iter().enumerate() {
            for (j, &rj) in idx.iter().enumerate() {
                gauge[(ri, rj)] = vecs[(i, j)];
            }
        }
    }
    let r = &f.r * gauge;
    let points = enumerate(&f, &r, basis)?;
    Ok(points
        .iter()
        .filter_map(|p| p.euclidean(v).ok())
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| if d < a { d } else { a }))))
}

/// Whether `v` lies within Euclidean distance `tol` of an antipodal point of
/// `rho_d`, for some choice of frame inside degenerate eigenspaces.
pub fn is_antipodal<T: Real>(
    v: &CoherenceVector<T>,
    rho_d: &DensityOperator<T>,
    basis: &GellMannBasis<T>,
    tol: T,
) -> Result<bool> {
    let d = antipodal_distance(v, rho_d, basis, lit(DEFAULT_DEGENERACY_TOL))?;
    Ok(d.is_some_and(|d| d <= tol))
}
