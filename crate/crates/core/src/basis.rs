//! Generalized Gell-Mann basis of `su(N)`, its structure constants and the
//! adjoint representation.
//!
//! Ordering: for `l = 2..=N` the basis emits `OffRe(j, l)`, `OffIm(j, l)` for
//! `j = 1..l`, followed by `Diag(l - 1)`. For `N = 3` this is the familiar
//! ordering `λ1..λ8`. The ordering for `N > 3` is a convention of this crate.
//!
//! Level indices inside labels are 1-based; positions are 0-based.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{floor_tol, lit, to_f64, Real};

/// Hard cap on the number of levels. Antipodal enumeration is factorial in N.
pub const MAX_LEVELS: usize = 12;

/// Which basis element a coordinate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelKind {
    /// Cartan element `λ_{h,j}`, `1 <= j <= N-1`.
    Diag(usize),
    /// `(E_jl + E_lj)/√2`, `1 <= j < l <= N`.
    OffRe(usize, usize),
    /// `i(E_lj - E_jl)/√2`, `1 <= j < l <= N`.
    OffIm(usize, usize),
}

impl LabelKind {
    pub fn validate(self, levels: usize) -> Result<()> {
        let ok = match self {
            LabelKind::Diag(j) => j >= 1 && j < levels,
            LabelKind::OffRe(j, l) | LabelKind::OffIm(j, l) => j >= 1 && j < l && l <= levels,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidLabel(format!("{self} is not a label for N = {levels}")))
        }
    }

    /// Root-space pair for off-diagonal labels.
    pub fn pair(self) -> Option<(usize, usize)> {
        match self {
            LabelKind::Diag(_) => None,
            LabelKind::OffRe(j, l) | LabelKind::OffIm(j, l) => Some((j, l)),
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, LabelKind::Diag(_))
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelKind::Diag(j) => write!(f, "h{j}"),
            LabelKind::OffRe(j, l) => write!(f, "re{j}{l}"),
            LabelKind::OffIm(j, l) => write!(f, "im{j}{l}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub kind: LabelKind,
    pub position: usize,
}

/// Labels of the `N`-level basis in canonical order.
pub fn ordered_labels(levels: usize) -> Result<Vec<BasisLabel>> {
    check_levels(levels)?;
    let mut kinds = Vec::with_capacity(levels * levels - 1);
    for l in 2..=levels {
        for j in 1..l {
            kinds.push(LabelKind::OffRe(j, l));
            kinds.push(LabelKind::OffIm(j, l));
        }
        kinds.push(LabelKind::Diag(l - 1));
    }
    Ok(kinds.into_iter().enumerate().map(|(position, kind)| BasisLabel { kind, position }).collect())
}

/// `N² - 1`.
pub fn algebra_dim(levels: usize) -> usize {
    levels * levels - 1
}

pub(crate) fn check_levels(levels: usize) -> Result<()> {
    if (2..=MAX_LEVELS).contains(&levels) {
        Ok(())
    } else {
        Err(Error::Dimension { levels, max: MAX_LEVELS })
    }
}

/// How a traceless matrix is expanded by [`GellMannBasis::expand`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `M = Σ c_a λ_a` for Hermitian `M`.
    Hermitian,
    /// `M = i Σ c_a λ_a` for anti-Hermitian `M`, i.e. the expansion of `M / i`.
    SkewHermitian,
}

/// Sparse structure constants `c_{jk}^l` defined by
/// `[-iλ_j, -iλ_k] = Σ_l c_{jk}^l (-iλ_l)`.
#[derive(Debug, Clone)]
pub struct StructureConstants<T> {
    dim: usize,
    /// For each `j`, the nonzero `(k, l, c_{jk}^l)`.
    rows: Vec<Vec<(usize, usize, T)>>,
}

impl<T: Real> StructureConstants<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize, k: usize, l: usize) -> T {
        self.rows[j].iter().find(|&&(kk, ll, _)| kk == k && ll == l).map(|&(_, _, c)| c).unwrap_or_else(T::zero)
    }

    /// All nonzero entries as `(j, k, l, c)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, T)> + '_ {
        self.rows.iter().enumerate().flat_map(|(j, row)| row.iter().map(move |&(k, l, c)| (j, k, l, c)))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `c[j][k][l]` as a dense tensor.
    pub fn dense(&self) -> Vec<Vec<Vec<T>>> {
        let mut out = vec![vec![vec![T::zero(); self.dim]; self.dim]; self.dim];
        for (j, k, l, c) in self.entries() {
            out[j][k][l] = c;
        }
        out
    }

    /// `ad` matrix of the `j`-th basis element: `(ad_j)_{lk} = c_{jk}^l`.
    pub fn ad(&self, j: usize) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(k, l, c) in &self.rows[j] {
            m[(l, k)] = c;
        }
        m
    }
}

/// Orthonormal Hermitian basis of `su(N)`.
#[derive(Debug, Clone)]
pub struct GellMannBasis<T: Real> {
    levels: usize,
    labels: Vec<BasisLabel>,
    index: HashMap<LabelKind, usize>,
    matrices: Vec<DMatrix<Complex<T>>>,
    /// Nonzero `(row, col, value)` of each basis matrix.
    sparse: Vec<Vec<(usize, usize, Complex<T>)>>,
    lambda0: DMatrix<Complex<T>>,
    structure: StructureConstants<T>,
}

/// Entries this small (relative to 1) are treated as exact zeros when
/// tabulating structure constants.
const STRUCTURE_CLEAN: f64 = 1e-13;

impl<T: Real> GellMannBasis<T> {
    /// Builds the basis for `N` levels, `2 <= N <= 12`.
    pub fn new(levels: usize) -> Result<Self> {
        let labels = ordered_labels(levels)?;
        let zero = Complex::new(T::zero(), T::zero());
        let inv_sqrt2 = T::one() / lit::<T>(2.0).sqrt();
        let mut sparse = Vec::with_capacity(labels.len());
        for label in &labels {
            let entries = match label.kind {
                LabelKind::Diag(j) => {
                    let norm = T::one() / lit::<T>((j * (j + 1)) as f64).sqrt();
                    let mut e: Vec<_> = (0..j).map(|k| (k, k, Complex::new(norm, T::zero()))).collect();
                    e.push((j, j, Complex::new(-lit::<T>(j as f64) * norm, T::zero())));
                    e
                }
                LabelKind::OffRe(j, l) => vec![
                    (j - 1, l - 1, Complex::new(inv_sqrt2, T::zero())),
                    (l - 1, j - 1, Complex::new(inv_sqrt2, T::zero())),
                ],
                LabelKind::OffIm(j, l) => vec![
                    (j - 1, l - 1, Complex::new(T::zero(), -inv_sqrt2)),
                    (l - 1, j - 1, Complex::new(T::zero(), inv_sqrt2)),
                ],
            };
            sparse.push(entries);
        }
        let matrices = sparse
            .iter()
            .map(|entries| {
                let mut m = DMatrix::from_element(levels, levels, zero);
                for &(r, c, v) in entries {
                    m[(r, c)] = v;
                }
                m
            })
            .collect::<Vec<_>>();
        let index = labels.iter().map(|l| (l.kind, l.position)).collect();
        let lambda0 = DMatrix::from_diagonal_element(
            levels,
            levels,
            Complex::new(T::one() / lit::<T>(levels as f64).sqrt(), T::zero()),
        );
        let mut basis = GellMannBasis {
            levels,
            labels,
            index,
            matrices,
            sparse,
            lambda0,
            structure: StructureConstants { dim: 0, rows: Vec::new() },
        };
        basis.structure = basis.tabulate_structure();
        Ok(basis)
    }

    fn tabulate_structure(&self) -> StructureConstants<T> {
        let dim = self.dim();
        let clean = lit::<T>(STRUCTURE_CLEAN);
        let mut rows = vec![Vec::new(); dim];
        for j in 0..dim {
            for k in (j + 1)..dim {
                let coeffs = self.bracket_coeffs(j, k);
                for (l, &c) in coeffs.iter().enumerate() {
                    if c.abs() > clean {
                        rows[j].push((k, l, c));
                        rows[k].push((j, l, -c));
                    }
                }
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(k, l, _)| (k, l));
        }
        StructureConstants { dim, rows }
    }

    /// Expansion of `[λ_a, λ_b] / i`, computed from the matrices.
    fn bracket_coeffs(&self, a: usize, b: usize) -> DVector<T> {
        let comm = linalg::complex_commutator(&self.matrices[a], &self.matrices[b]);
        let i = Complex::new(T::zero(), T::one());
        self.coeffs_unchecked(&comm.map(|z| z / i))
    }

    /// `tr(M λ_a)` for every `a`, taking real parts.
    fn coeffs_unchecked(&self, m: &DMatrix<Complex<T>>) -> DVector<T> {
        DVector::from_iterator(
            self.dim(),
            self.sparse
                .iter()
                .map(|entries| entries.iter().fold(T::zero(), |acc, &(r, c, v)| acc + (m[(c, r)] * v).re)),
        )
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// `n = N² - 1`.
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn matrices(&self) -> &[DMatrix<Complex<T>>] {
        &self.matrices
    }

    pub fn matrix(&self, position: usize) -> &DMatrix<Complex<T>> {
        &self.matrices[position]
    }

    /// `I / √N`.
    pub fn lambda0(&self) -> &DMatrix<Complex<T>> {
        &self.lambda0
    }

    pub fn position(&self, kind: LabelKind) -> Result<usize> {
        kind.validate(self.levels)?;
        Ok(self.index[&kind])
    }

    pub fn structure_constants(&self) -> &StructureConstants<T> {
        &self.structure
    }

    /// Real coefficients of a traceless Hermitian or anti-Hermitian matrix.
    pub fn expand(&self, m: &DMatrix<Complex<T>>, convention: Convention) -> Result<DVector<T>> {
        if m.nrows() != self.levels || m.ncols() != self.levels {
            return Err(Error::DimensionMismatch { expected: self.levels, found: m.nrows() });
        }
        let tol = floor_tol::<T>(1e-10);
        let tr = crate::scalar::cabs(linalg::trace(m));
        if tr > tol {
            return Err(Error::NotTraceless { trace: to_f64(tr) });
        }
        let residual = match convention {
            Convention::Hermitian => linalg::hermitian_residual(m),
            Convention::SkewHermitian => linalg::skew_hermitian_residual(m),
        };
        if residual > tol {
            return Err(Error::ConventionMismatch { residual: to_f64(residual) });
        }
        Ok(match convention {
            Convention::Hermitian => self.coeffs_unchecked(m),
            Convention::SkewHermitian => {
                let i = Complex::new(T::zero(), T::one());
                self.coeffs_unchecked(&m.map(|z| z / i))
            }
        })
    }

    /// `Σ c_a λ_a`.
    pub fn combine(&self, coeffs: &DVector<T>) -> DMatrix<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut m = DMatrix::from_element(self.levels, self.levels, zero);
        for (entries, &c) in self.sparse.iter().zip(coeffs.iter()) {
            if c == T::zero() {
                continue;
            }
            for &(r, col, v) in entries {
                m[(r, col)] += v * c;
            }
        }
        m
    }

    /// Expansion of `[λ_a, λ_b] / i`, read from the structure constants.
    pub fn commutator_coeffs(&self, a: LabelKind, b: LabelKind) -> Result<DVector<T>> {
        let a = self.position(a)?;
        let b = self.position(b)?;
        let mut out = DVector::zeros(self.dim());
        for &(k, l, c) in &self.structure.rows[a] {
            if k == b {
                out[l] = c;
            }
        }
        Ok(out)
    }

    /// Adjoint generator of `H = h · λ`: the real `n × n` matrix `M` with
    /// `M ϱ(ρ) = ϱ(-i[H, ρ])`.
    pub fn adjoint_matrix(&self, h: &DVector<T>) -> Result<AdjointGenerator<T>> {
        if h.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: h.len() });
        }
        let n = self.dim();
        let mut mat = DMatrix::zeros(n, n);
        for (c, row) in self.structure.rows.iter().enumerate() {
            let hc = h[c];
            if hc == T::zero() {
                continue;
            }
            for &(b, a, val) in row {
                mat[(a, b)] += hc * val;
            }
        }
        Ok(AdjointGenerator { mat, source_coeffs: h.clone() })
    }
}

/// `n × n` skew-symmetric matrix representing `-i ad_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointGenerator<T: Real> {
    pub mat: DMatrix<T>,
    pub source_coeffs: DVector<T>,
}

impl<T: Real> AdjointGenerator<T> {
    pub fn zeros(dim: usize) -> Self {
        AdjointGenerator { mat: DMatrix::zeros(dim, dim), source_coeffs: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// `max |M + Mᵀ|`.
    pub fn skew_residual(&self) -> T {
        linalg::max_abs(&(&self.mat + self.mat.transpose()))
    }
}
