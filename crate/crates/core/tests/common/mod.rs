#![allow(dead_code)]

use std::sync::Arc;

use flagstab::basis::GellMannBasis;
use flagstab::linalg;
use flagstab::{Density, LabelKind, Plant, Regularity};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn basis(n: usize) -> Arc<GellMannBasis<f64>> {
    Arc::new(GellMannBasis::new(n).unwrap())
}

pub fn ginibre(r: &mut impl Rng, n: usize) -> DMatrix<C> {
    DMatrix::from_fn(n, n, |_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

pub fn random_hermitian(r: &mut impl Rng, n: usize) -> DMatrix<C> {
    let g = ginibre(r, n);
    (&g + g.adjoint()).map(|z| z * 0.5)
}

/// `exp(-iH)` for a random Hermitian `H`.
pub fn random_unitary(r: &mut impl Rng, n: usize) -> DMatrix<C> {
    let h = random_hermitian(r, n);
    let (vals, v) = linalg::hermitian_eigen(&h);
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(n, vals.iter().map(|&e| C::from_polar(1.0, -3.0 * e))));
    &v * phases * v.adjoint()
}

/// Full-rank random state.
pub fn random_density(r: &mut impl Rng, n: usize) -> Density {
    let g = ginibre(r, n);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    let mut rho = m.map(|z| z / tr);
    // Exact Hermiticity.
    rho = (&rho + rho.adjoint()).map(|z| z * 0.5);
    Density::new(rho).unwrap()
}

pub fn random_pure(r: &mut impl Rng, n: usize) -> Density {
    let psi: Vec<C> = (0..n).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    Density::pure(&psi).unwrap()
}

/// Random weights on the simplex, descending.
pub fn random_weights(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    w
}

pub fn matrix_from_diag(w: &[f64]) -> DMatrix<C> {
    DMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|&x| c(x, 0.0))))
}

/// Centered energies whose transition frequencies are all at least `0.4`
/// and pairwise separated by at least `0.1`.
pub fn strongly_regular_energies(r: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let mut e = vec![0.0];
        for _ in 1..n {
            let last = *e.last().unwrap();
            e.push(last + r.random_range(0.4..1.4));
        }
        let mean = e.iter().sum::<f64>() / n as f64;
        e.iter_mut().for_each(|x| *x -= mean);
        let mut gaps = vec![];
        for j in 0..n {
            for l in j + 1..n {
                gaps.push(e[l] - e[j]);
            }
        }
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if gaps.windows(2).all(|g| g[1] - g[0] >= 0.1) {
            assert_eq!(flagstab::regularity(&e, 1e-9), Regularity::StronglyRegular);
            return e;
        }
    }
}

/// Off-diagonal control with random coefficients on a random subset of
/// pairs; nearest-neighbour pairs always present when `nn` is set.
pub fn random_control(r: &mut impl Rng, n: usize, nn: bool) -> Vec<(LabelKind, f64)> {
    let mut terms = vec![];
    for j in 1..n {
        for l in j + 1..=n {
            let forced = nn && l == j + 1;
            if forced || r.random_bool(0.5) {
                let amp = r.random_range(0.3..0.8);
                let phase: f64 = r.random_range(0.0..std::f64::consts::TAU);
                terms.push((LabelKind::OffRe(j, l), amp * phase.cos()));
                terms.push((LabelKind::OffIm(j, l), amp * phase.sin()));
            }
        }
    }
    terms
}

pub fn random_plant(r: &mut impl Rng, n: usize, nn: bool) -> Plant {
    let e = strongly_regular_energies(r, n);
    let terms = random_control(r, n, nn);
    Plant::from_terms(basis(n), &e, &terms).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
