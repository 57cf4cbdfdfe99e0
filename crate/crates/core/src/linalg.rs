//! Dense linear-algebra helpers: matrix exponential, numerical rank and
//! Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::scalar::{lit, Real};

/// Largest 1-norm allowed for a Taylor block before scaling kicks in.
const TAYLOR_RADIUS: f64 = 0.5;
const MAX_TAYLOR_TERMS: usize = 40;

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<T: Real>(m: &DMatrix<T>) -> T {
    m.column_iter().map(|c| c.iter().fold(T::zero(), |acc, x| acc + x.abs())).fold(T::zero(), |acc, x| {
        if x > acc {
            x
        } else {
            acc
        }
    })
}

/// Matrix commutator `[a, b] = ab - ba`.
pub fn commutator<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a * b - b * a
}

pub fn complex_commutator<T: Real>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    a * b - b * a
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// Terms are summed until they drop below machine precision relative to the
/// partial sum, so the truncation error is far below `1e-13` for `f64`.
pub fn expm<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    assert!(m.is_square(), "expm requires a square matrix");
    let n = m.nrows();
    let norm = norm1(m);
    let mut squarings = 0u32;
    let mut scale = T::one();
    let radius = lit::<T>(TAYLOR_RADIUS);
    while norm * scale > radius {
        scale *= lit::<T>(0.5);
        squarings += 1;
    }
    let a = m * scale;
    let mut sum = DMatrix::<T>::identity(n, n);
    let mut term = DMatrix::<T>::identity(n, n);
    let eps = T::default_epsilon();
    for k in 1..=MAX_TAYLOR_TERMS {
        term = &term * &a / lit::<T>(k as f64);
        sum += &term;
        if norm1(&term) <= eps * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Computes `exp(g) v` without forming the exponential.
///
/// `g` is split into `s` equal substeps so that each has 1-norm at most 0.5,
/// then the Taylor series of each substep is applied to the vector.
pub fn expm_apply<T: Real>(g: &DMatrix<T>, v: &DVector<T>) -> DVector<T> {
    let norm = norm1(g);
    let radius = lit::<T>(TAYLOR_RADIUS);
    let mut substeps = 1usize;
    while norm > radius * lit::<T>(substeps as f64) {
        substeps *= 2;
    }
    let h = lit::<T>(1.0 / substeps as f64);
    let eps = T::default_epsilon();
    let mut out = v.clone();
    for _ in 0..substeps {
        let scale = out.norm();
        let mut term = out.clone();
        let mut acc = out.clone();
        for k in 1..=MAX_TAYLOR_TERMS {
            term = g * term * (h / lit::<T>(k as f64));
            acc += &term;
            if term.norm() <= eps * scale {
                break;
            }
        }
        out = acc;
    }
    out
}

/// Number of singular values above `rel_tol * sigma_max`.
///
/// Columns are used as given; callers are responsible for any scaling.
pub fn numerical_rank<T: Real>(m: &DMatrix<T>, rel_tol: T) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(T::zero(), |acc, &s| if s > acc { s } else { acc });
    if max <= crate::scalar::tiny::<T>() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Stacks vectors as columns, normalizing each by its a-priori magnitude
/// bound.
///
/// A vector whose norm is below `1e-12 * bound` is treated as numerical noise
/// and replaced by zero; otherwise it is rescaled to unit length. This keeps
/// the rank test insensitive to the geometric growth of Krylov and bracket
/// sequences.
pub fn normalized_columns<T: Real>(vectors: &[(DVector<T>, T)]) -> DMatrix<T> {
    let rows = vectors.first().map(|(v, _)| v.len()).unwrap_or(0);
    let mut out = DMatrix::<T>::zeros(rows, vectors.len());
    let noise = lit::<T>(1e-12);
    for (col, (v, bound)) in vectors.iter().enumerate() {
        let norm = v.norm();
        if norm > noise * *bound && norm > crate::scalar::tiny::<T>() {
            out.set_column(col, &(v / norm));
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Eigenvectors are the columns of the returned unitary.
pub fn hermitian_eigen<T: Real>(m: &DMatrix<Complex<T>>) -> (Vec<T>, DMatrix<Complex<T>>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex<T>>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues<T: Real>(m: &DMatrix<Complex<T>>) -> Vec<T> {
    let mut values: Vec<T> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    values
}

/// Largest entry magnitude of `m - m^H`.
pub fn hermitian_residual<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let diff = m - m.adjoint();
    diff.iter().fold(T::zero(), |acc, z| {
        let a = crate::scalar::cabs(*z);
        if a > acc {
            a
        } else {
            acc
        }
    })
}

/// Largest entry magnitude of `m + m^H`.
pub fn skew_hermitian_residual<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let sum = m + m.adjoint();
    sum.iter().fold(T::zero(), |acc, z| {
        let a = crate::scalar::cabs(*z);
        if a > acc {
            a
        } else {
            acc
        }
    })
}

pub fn trace<T: Real>(m: &DMatrix<Complex<T>>) -> Complex<T> {
    m.diagonal().iter().fold(Complex::new(T::zero(), T::zero()), |acc, &z| acc + z)
}

/// Largest entry magnitude of a real matrix.
pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| if x.abs() > acc { x.abs() } else { acc })
}
