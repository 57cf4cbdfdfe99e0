mod common;

use std::collections::BTreeSet;

use common::*;
use flagstab::analysis::lemma3_with;
use flagstab::basis::AdjointGenerator;
use flagstab::{
    bilinear_forms, bracket_chain, commutator_support, kalman_rank, lemma3_equivalence, lie_closure_dim, linalg,
    rank_w_at, reference_orbit, support_intersects, theorem1_verdict, to_coherence, Density, LabelKind, Outcome, Plant,
    SupportSet, Tolerances,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const E3: [f64; 3] = [-1.1, -0.1, 1.2];

fn nn3() -> Plant {
    Plant::from_terms(basis(3), &E3, &[(LabelKind::OffRe(1, 2), 0.5), (LabelKind::OffRe(2, 3), 0.5)]).unwrap()
}

fn full3() -> Plant {
    Plant::from_terms(
        basis(3),
        &E3,
        &[(LabelKind::OffRe(1, 2), 0.5), (LabelKind::OffRe(1, 3), 0.5), (LabelKind::OffRe(2, 3), 0.5)],
    )
    .unwrap()
}

fn blocked_initial() -> Density {
    let h = c(0.5, 0.0);
    let z = c(0.0, 0.0);
    Density::new(DMatrix::from_row_slice(3, 3, &[z, z, z, z, h, h, z, h, h])).unwrap()
}

fn diag(w: &[f64]) -> Density {
    Density::from_diagonal(w).unwrap()
}

#[test]
fn two_level_chain_alternates_and_saturates() {
    let b = basis(2);
    let (h, g) = (0.8, 0.5);
    let a = b.adjoint_matrix(&DVector::from_vec(vec![0.0, 0.0, h])).unwrap();
    let bb = b.adjoint_matrix(&DVector::from_vec(vec![g, 0.0, 0.0])).unwrap();
    let chain = bracket_chain(&a, &bb, 6, false);
    // Oracle: with A = a P_A, B = b P_B, [P_A, P_B] = Q and [P_A, Q] = -P_B,
    // so the chain alternates between the patterns of B and of Q.
    let pa = DMatrix::from_row_slice(3, 3, &[0., -1., 0., 1., 0., 0., 0., 0., 0.]);
    let pb = DMatrix::from_row_slice(3, 3, &[0., 0., 0., 0., 0., -1., 0., 1., 0.]);
    let q = &pa * &pb - &pb * &pa;
    let (sa, sb) = (2f64.sqrt() * h, 2f64.sqrt() * g);
    for (k, gk) in chain.generators.iter().enumerate() {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let pattern = if k % 2 == 0 { &pb } else { &q };
        let want = pattern * (sign * sb * sa.powi(k as i32));
        assert!(linalg::max_abs(&(gk - want)) < 1e-12, "depth {k}");
    }
    assert_eq!(chain.span_dim, 2);
    assert_eq!(lie_closure_dim(&a, &bb).unwrap(), 3);
    assert_eq!(lie_closure_dim(&a, &AdjointGenerator::zeros(3)).unwrap(), 1);
}

#[test]
fn two_level_closure_spans_so3() {
    // Explicit spanning: A, B and [A, B] are linearly independent 3x3 skew
    // matrices, and so(3) has dimension 3.
    let b = basis(2);
    let a = b.adjoint_matrix(&DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap().mat;
    let bb = b.adjoint_matrix(&DVector::from_vec(vec![0.4, 0.0, 0.0])).unwrap().mat;
    let c = linalg::commutator(&a, &bb);
    let stacked = DMatrix::from_columns(&[
        DVector::from_column_slice(a.as_slice()),
        DVector::from_column_slice(bb.as_slice()),
        DVector::from_column_slice(c.as_slice()),
    ]);
    assert_eq!(linalg::numerical_rank(&stacked, 1e-10), 3);
}

#[test]
fn chain_recurrence_holds() {
    let p = full3();
    let chain = bracket_chain(p.a(), p.b(), 6, true);
    let br = chain.brackets();
    for k in 0..br.len() - 1 {
        let want = linalg::commutator(&p.a().mat, &br[k]);
        assert!(linalg::max_abs(&(&br[k + 1] - want)) < 1e-10);
    }
    assert_eq!(chain.generators[0], p.a().mat);
}

#[test]
fn three_level_closure_is_su3_but_chain_never_spans() {
    let mut r = rng(2024);
    for _ in 0..20 {
        let p = random_plant(&mut r, 3, true);
        assert_eq!(lie_closure_dim(p.a(), p.b()).unwrap(), 8);
        let chain = bracket_chain(p.a(), p.b(), 40, true);
        assert!(chain.span_dim < 8, "span {}", chain.span_dim);
    }
}

#[test]
fn kalman_examples() {
    let v1 = diag(&[1.0, 0.0, 0.0]);
    let full = full3();
    let nn = nn3();
    let b_of = |p: &Plant| &p.b().mat * to_coherence(&v1, p.basis()).unwrap().components();
    assert_eq!(kalman_rank(full.a(), &b_of(&full), 4), 4);
    assert!(kalman_rank(nn.a(), &b_of(&nn), 4) < 4);
}

#[test]
fn lemma3_examples() {
    let nn = nn3();
    let middle = lemma3_equivalence(&nn, &diag(&[0.0, 1.0, 0.0])).unwrap();
    assert!(middle.kalman_ok && middle.rank_w_ok && middle.cardinality_ok);
    assert_eq!((middle.card, middle.m), (2, 4));
    let ground = lemma3_equivalence(&nn, &diag(&[1.0, 0.0, 0.0])).unwrap();
    assert!(!ground.kalman_ok && !ground.rank_w_ok && !ground.cardinality_ok);
    let mixed = lemma3_equivalence(&nn, &Density::maximally_mixed(3).unwrap()).unwrap();
    assert!(!mixed.kalman_ok && !mixed.rank_w_ok && !mixed.cardinality_ok);
    assert_eq!(mixed.kalman_rank, 0);
}

/// Random target on the drift's Cartan: random weights with random
/// multiplicity patterns, written in a random level order.
fn random_diagonal_target(r: &mut impl Rng, n: usize) -> Density {
    let mut w = random_weights(r, n);
    match r.random_range(0..4) {
        0 => {}
        1 => {
            w = vec![0.0; n];
            w[0] = 1.0;
        }
        2 => {
            w[1] = w[0];
        }
        _ => {
            let s = r.random_range(0.3..0.9);
            w = vec![(1.0 - s) / n as f64; n];
            w[0] += s;
        }
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    for i in (1..n).rev() {
        let j = r.random_range(0..=i);
        w.swap(i, j);
    }
    diag(&w)
}

#[test]
fn lemma3_conditions_agree_on_random_plants() {
    let mut r = rng(99);
    let mut disagreements = vec![];
    let mut true_count = 0;
    for k in 0..120 {
        let n = [2, 3, 4][k % 3];
        let nn = r.random_bool(0.5);
        let plant = random_plant(&mut r, n, nn);
        let rho_d = random_diagonal_target(&mut r, n);
        let rep = lemma3_equivalence(&plant, &rho_d).unwrap();
        true_count += rep.cardinality_ok as usize;
        if !rep.agree() {
            disagreements.push((n, rep));
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:?}");
    // Both outcomes are exercised.
    assert!(true_count > 10 && true_count < 110, "{true_count}");
}

#[test]
fn rank_w_matches_kalman_at_every_depth() {
    let mut r = rng(5);
    for k in 0..30 {
        let n = [3, 4][k % 2];
        let plant = random_plant(&mut r, n, true);
        let rho_d = random_diagonal_target(&mut r, n);
        let v_d = to_coherence(&rho_d, plant.basis()).unwrap();
        let b = &plant.b().mat * v_d.components();
        let m = lemma3_equivalence(&plant, &rho_d).unwrap().m;
        for alpha in 1..m {
            let chain = bracket_chain(plant.a(), plant.b(), alpha - 1, false);
            assert_eq!(rank_w_at(&chain, &v_d), kalman_rank(plant.a(), &b, alpha));
        }
    }
}

#[test]
fn commutator_support_is_constant_along_the_reference() {
    let mut r = rng(17);
    for _ in 0..10 {
        let n = r.random_range(2..=4);
        let plant = random_plant(&mut r, n, true);
        let rho_d = random_density(&mut r, n);
        let tol = 1e-9;
        let base = commutator_support(&plant, &rho_d, tol).unwrap();
        for _ in 0..10 {
            let t = r.random_range(0.0..50.0);
            let vt = reference_orbit(&rho_d, &plant, t).unwrap();
            let rho_t = flagstab::from_coherence(&vt, plant.basis()).unwrap();
            let s = commutator_support(&plant, &rho_t, tol).unwrap();
            assert_eq!(s.card_pairs(), base.card_pairs());
            assert_eq!(s.pairs, base.pairs);
        }
    }
}

#[test]
fn drift_brackets_keep_the_root_support() {
    // F_k([H_B, ρ_d]) = F_k([H_A, [H_B, ρ_d]]) = ... through depth 5.
    let mut r = rng(23);
    for _ in 0..10 {
        let n = r.random_range(2..=5);
        let plant = random_plant(&mut r, n, false);
        let rho_d = random_density(&mut r, n);
        let mut x = &plant.b().mat * to_coherence(&rho_d, plant.basis()).unwrap().components();
        let first = SupportSet::of_coeffs(n, &x, 1e-9).unwrap().pairs;
        for _ in 0..5 {
            x = &plant.a().mat * x;
            assert_eq!(SupportSet::of_coeffs(n, &x, 1e-9).unwrap().pairs, first);
        }
    }
}

#[test]
fn blocked_state_passes_rank_tests_but_every_bilinear_form_vanishes() {
    let p = full3();
    let rho_d = diag(&[1.0, 0.0, 0.0]);
    let rho0 = blocked_initial();
    let v_d = to_coherence(&rho_d, p.basis()).unwrap();
    let v0 = to_coherence(&rho0, p.basis()).unwrap();
    let b = &p.b().mat * v_d.components();
    assert_eq!(kalman_rank(p.a(), &b, 4), 4);
    let chain = bracket_chain(p.a(), p.b(), 3, false);
    assert_eq!(rank_w_at(&chain, &v_d), 4);
    let forms = bilinear_forms(&chain, &v_d, &v0);
    assert_eq!(forms.len(), 4);
    assert!(forms.iter().all(|f| f.abs() < 1e-10), "{forms:?}");
    // At ϱ(0) the B-chain alone reaches only 3 tangent directions at any
    // depth: its (2,3) part is λ_re23, which commutes with ρ(0) inside that
    // block. The drift supplies the fourth direction.
    for depth in [3, 8, 20] {
        assert_eq!(rank_w_at(&bracket_chain(p.a(), p.b(), depth, false), &v0), 3);
    }
    let with_a = bracket_chain(p.a(), p.b(), 3, true);
    assert_eq!(rank_w_at(&with_a, &v0), 4);
    assert_eq!(rank_w_at(&with_a, &v_d), 4);
    assert!(bilinear_forms(&with_a, &v_d, &v0).iter().all(|f| f.abs() < 1e-10));
    // Orthogonal pure states: the blocked start is itself an antipode.
    assert_eq!(theorem1_verdict(&p, &rho_d, &rho0).unwrap().outcome, Outcome::AntipodalObstruction);
    assert!(!support_intersects(&p, &rho_d, &rho0, 1e-9).unwrap());
    let s0 = flagstab::support(&v0, 1e-9);
    assert_eq!(s0.pairs, BTreeSet::from([(2, 3)]));
    assert_eq!(commutator_support(&p, &rho_d, 1e-9).unwrap().pairs, BTreeSet::from([(1, 2), (1, 3)]));
}

#[test]
fn support_intersection_examples() {
    let p = full3();
    // A non-diagonal target intersects itself through its commutator.
    let mut r = rng(4);
    let rho = random_pure(&mut r, 3);
    assert!(support_intersects(&p, &rho, &rho, 1e-9).unwrap());
    // A diagonal target does not: F([H_B, ρ_d]) is off-diagonal while F(ρ_d)
    // is diagonal.
    let d = diag(&[0.6, 0.3, 0.1]);
    assert!(!support_intersects(&p, &d, &d, 1e-9).unwrap());
}

#[test]
fn block_states_are_disjoint_and_antipodal() {
    let e = [-1.5, -0.6, 0.4, 1.7];
    let terms = [(LabelKind::OffRe(1, 2), 0.5), (LabelKind::OffRe(2, 3), 0.5), (LabelKind::OffRe(3, 4), 0.5)];
    let p = Plant::from_terms(basis(4), &e, &terms).unwrap();
    let s = 1.0 / 2f64.sqrt();
    let rho_d = Density::pure(&[c(s, 0.0), c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let rho0 = Density::pure(&[c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0), c(0.0, s)]).unwrap();
    assert!(!support_intersects(&p, &rho_d, &rho0, 1e-9).unwrap());
    // Isospectral states on complementary blocks are antipodal, which takes
    // precedence in the verdict.
    assert_eq!(theorem1_verdict(&p, &rho_d, &rho0).unwrap().outcome, Outcome::AntipodalObstruction);
}

#[test]
fn support_disjoint_verdict() {
    // Generic diagonal target with nearest-neighbor coupling: the commutator
    // lives on (1,2) and (2,3), the start only carries (1,3) coherence.
    let rho_d = diag(&[0.6, 0.3, 0.1]);
    let (ct, st) = (0.8f64.cos(), 0.8f64.sin());
    let z = c(0.0, 0.0);
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            c(0.6 * ct * ct + 0.1 * st * st, 0.0),
            z,
            c(0.5 * ct * st, 0.0),
            z,
            c(0.3, 0.0),
            z,
            c(0.5 * ct * st, 0.0),
            z,
            c(0.6 * st * st + 0.1 * ct * ct, 0.0),
        ],
    );
    let rho0 = Density::new(m).unwrap();
    let v = theorem1_verdict(&nn3(), &rho_d, &rho0).unwrap();
    assert_eq!(v.outcome, Outcome::SupportDisjoint);
    assert!(v.cond_antipodal && !v.cond_support_intersect && !v.cond_cardinality);
}

#[test]
fn verdict_examples() {
    let b2 = basis(2);
    let p2 = Plant::from_terms(b2, &[0.5, -0.5], &[(LabelKind::OffRe(1, 2), 0.5)]).unwrap();
    let target = diag(&[1.0, 0.0]);
    let start = Density::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
    let v = theorem1_verdict(&p2, &target, &start).unwrap();
    assert_eq!(v.outcome, Outcome::ExpectedConvergence);
    assert!(v.cond_antipodal && v.cond_support_intersect && v.cond_cardinality);
    assert_eq!((v.m, v.chi, v.card_fk_commutator, v.kalman_rank), (2, 2, 1, 2));
    assert_eq!(v.lie_closure_dim, Some(3));

    let anti = theorem1_verdict(&p2, &target, &diag(&[0.0, 1.0])).unwrap();
    assert_eq!(anti.outcome, Outcome::AntipodalObstruction);
    assert!(!anti.cond_antipodal);

    let generic = diag(&[0.6, 0.3, 0.1]);
    let mut r = rng(8);
    let start3 = generic.conjugate(&random_unitary(&mut r, 3));
    let v3 = theorem1_verdict(&nn3(), &generic, &start3).unwrap();
    assert_eq!(v3.outcome, Outcome::InsufficientCardinality);
    assert_eq!((v3.card_fk_commutator, v3.m), (2, 6));
    let v3f = theorem1_verdict(&full3(), &generic, &start3).unwrap();
    assert_eq!(v3f.outcome, Outcome::ExpectedConvergence);
    assert_eq!(v3f.lie_closure_dim, Some(8));
}

#[test]
fn verdict_hypotheses() {
    let missing =
        Plant::from_terms(basis(3), &E3, &[(LabelKind::OffRe(1, 2), 0.5), (LabelKind::OffRe(1, 3), 0.5)]).unwrap();
    let target = diag(&[1.0, 0.0, 0.0]);
    let mut r = rng(1);
    let start = target.conjugate(&random_unitary(&mut r, 3));
    let v = theorem1_verdict(&missing, &target, &start).unwrap();
    assert_eq!(v.outcome, Outcome::NotApplicable);
    assert!(!v.diagnostics.is_empty());

    let equispaced =
        Plant::from_terms(basis(3), &[-1.0, 0.0, 1.0], &[(LabelKind::OffRe(1, 2), 0.5), (LabelKind::OffRe(2, 3), 0.5)])
            .unwrap();
    assert_eq!(theorem1_verdict(&equispaced, &target, &start).unwrap().outcome, Outcome::NotApplicable);

    // Different spectra: the initial state is not on the target's orbit.
    let off = theorem1_verdict(&nn3(), &target, &diag(&[0.5, 0.5, 0.0])).unwrap();
    assert_eq!(off.outcome, Outcome::NotApplicable);
}

#[test]
fn verdict_tolerances_are_respected() {
    let p = full3();
    let target = diag(&[1.0, 0.0, 0.0]);
    // Within 1e-9 of an antipode: counted as antipodal at the default
    // tolerance, not at a much tighter one.
    let eps: f64 = 1e-9;
    let s = (1.0 - eps * eps).sqrt();
    let start = Density::pure(&[c(eps, 0.0), c(s, 0.0), c(0.0, 0.0)]).unwrap();
    assert_eq!(theorem1_verdict(&p, &target, &start).unwrap().outcome, Outcome::AntipodalObstruction);
    let tight = Tolerances { antipodal: 1e-12, ..Tolerances::default() };
    let v = flagstab::theorem1_verdict_with(&p, &target, &start, &tight).unwrap();
    assert_ne!(v.outcome, Outcome::AntipodalObstruction);
    let _ = lemma3_with(&p, &target, &tight).unwrap();
}

#[test]
fn support_test_follows_the_reference_orbit() {
    // ρ_d(0) commutes with H_B, so the commutator vanishes at t = 0; along
    // the orbit it acquires a Cartan part.
    let p = Plant::from_terms(basis(2), &[0.4, -0.4], &[(LabelKind::OffRe(1, 2), 0.5)]).unwrap();
    let s = 1.0 / 2f64.sqrt();
    let rho_d = Density::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
    assert!(commutator_support(&p, &rho_d, 1e-9).unwrap().is_empty());
    let tilted = Density::pure(&[c(0.8, 0.0), c(0.0, 0.6)]).unwrap();
    assert!(support_intersects(&p, &rho_d, &tilted, 1e-9).unwrap());
    // Both on the equator: the Cartan part never meets ρ(0), and indeed
    // u = ⟨ϱ_d, Bϱ⟩ vanishes identically there.
    let equatorial = Density::pure(&[c(s, 0.0), c(0.0, s)]).unwrap();
    assert!(!support_intersects(&p, &rho_d, &equatorial, 1e-9).unwrap());
    assert_eq!(theorem1_verdict(&p, &rho_d, &equatorial).unwrap().outcome, Outcome::SupportDisjoint);
    let tr = flagstab::simulate_closed_loop(&p, &rho_d, &equatorial, &flagstab::Options::new(1e-3, 20.0)).unwrap();
    assert!(tr.diagnostics.max_abs_u < 1e-12);
}

#[test]
fn rotating_target_needs_the_rank_condition() {
    // Off-diagonal target inside the coupled (1,2) block: the cardinality
    // count reaches m/2, the bracket rank at the target does not, and the
    // closed loop stalls away from the target.
    let p = nn3();
    let s = 1.0 / 2f64.sqrt();
    let rho_d = Density::pure(&[c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]).unwrap();
    let rep = lemma3_equivalence(&p, &rho_d).unwrap();
    assert!(rep.cardinality_ok && !rep.rank_w_ok);
    let mut r = rng(21);
    let rho0 = rho_d.conjugate(&random_unitary(&mut r, 3));
    let v = theorem1_verdict(&p, &rho_d, &rho0).unwrap();
    assert_eq!(v.outcome, Outcome::InsufficientCardinality);
    assert_eq!((v.card_fk_commutator, v.rank_w, v.m), (2, 3, 4));
    let tr =
        flagstab::simulate_closed_loop(&p, &rho_d, &rho0, &flagstab::Options::new(1e-3, 250.0).stride(50_000)).unwrap();
    let n = tr.lyapunov.len();
    assert!(tr.diagnostics.final_v > 1e-5);
    assert!((tr.lyapunov[n - 2] - tr.lyapunov[n - 1]).abs() < 1e-8);
}
