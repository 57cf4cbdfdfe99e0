//! The builtin regression battery: two- and three-level case matrix plus a
//! four-level block case.
//!
//! Every scenario states the verdict it should receive and what the closed
//! loop should do. Generic initial states are seeded random points on the
//! target's orbit.

use crate::scenario::{DensityInput, Dynamics, Expectation, Scenario, ScenarioTolerances, Term};

/// Two-level drift `h λ_h1` with `h = 0.8`, i.e. energies `±h/√2`.
const H2: f64 = 0.8;
const E3: [f64; 3] = [-1.1, -0.1, 1.2];
const E4: [f64; 4] = [-1.5, -0.6, 0.4, 1.7];
const G: f64 = 0.5;

const CONVERGE_T: f64 = 200.0;
const SILENT_T: f64 = 50.0;
const STALL_T: f64 = 300.0;

fn e2() -> Vec<f64> {
    let e = H2 / 2f64.sqrt();
    vec![e, -e]
}

fn coupling(pairs: &[(usize, usize)], g: f64) -> Vec<Term> {
    pairs.iter().map(|&(j, l)| Term::re(j, l, g)).collect()
}

fn nn3() -> Vec<Term> {
    coupling(&[(1, 2), (2, 3)], G)
}

fn full3() -> Vec<Term> {
    coupling(&[(1, 2), (1, 3), (2, 3)], G)
}

fn diag(w: &[f64]) -> DensityInput {
    DensityInput::Diagonal(w.to_vec())
}

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[allow(clippy::too_many_arguments)]
fn scenario(
    name: &str,
    description: &str,
    energies: Vec<f64>,
    hb_terms: Vec<Term>,
    rho_d: DensityInput,
    rho0: DensityInput,
    t_final: f64,
    outcome: &str,
    dynamics: Dynamics,
) -> Scenario {
    Scenario {
        name: name.into(),
        description: Some(description.into()),
        levels: energies.len(),
        energies,
        reference_energies: None,
        hb_terms,
        rho_d,
        rho0,
        dt: 1e-3,
        t_final,
        tolerances: ScenarioTolerances::default(),
        record_stride: 100,
        expect: Some(Expectation { outcome: outcome.into(), dynamics }),
    }
}

/// All builtin scenarios, in battery order.
pub fn all() -> Vec<Scenario> {
    use Dynamics::*;
    let v1 = diag(&[1.0, 0.0, 0.0]);
    let v2 = diag(&[0.0, 1.0, 0.0]);
    let g1 = diag(&[0.6, 0.3, 0.1]);
    let plus2 = DensityInput::pure(&[[S, 0.0], [S, 0.0]]);
    let plus12 = DensityInput::pure(&[[S, 0.0], [S, 0.0], [0.0, 0.0]]);
    // g1 with its (1,3) populations rotated into a coherence by 0.8 rad.
    let (c, s) = (0.8f64.cos(), 0.8f64.sin());
    let g1_rot13 = DensityInput::Matrix(vec![
        vec![[0.6 * c * c + 0.1 * s * s, 0.0], [0.0, 0.0], [0.5 * c * s, 0.0]],
        vec![[0.0, 0.0], [0.3, 0.0], [0.0, 0.0]],
        vec![[0.5 * c * s, 0.0], [0.0, 0.0], [0.6 * s * s + 0.1 * c * c, 0.0]],
    ]);

    vec![
        scenario(
            "ex1-diagonal-target",
            "two levels, pure diagonal target, generic start",
            e2(),
            coupling(&[(1, 2)], G),
            diag(&[1.0, 0.0]),
            DensityInput::orbit(diag(&[1.0, 0.0]), 1),
            CONVERGE_T,
            "ExpectedConvergence",
            Converges,
        ),
        scenario(
            "ex1-pseudopure-target",
            "two levels, mixed diagonal target, generic start",
            e2(),
            coupling(&[(1, 2)], G),
            diag(&[0.8, 0.2]),
            DensityInput::orbit(diag(&[0.8, 0.2]), 2),
            CONVERGE_T,
            "ExpectedConvergence",
            Converges,
        ),
        scenario(
            "ex1-antipodal",
            "two levels, start at the other eigenstate",
            e2(),
            coupling(&[(1, 2)], G),
            diag(&[1.0, 0.0]),
            diag(&[0.0, 1.0]),
            SILENT_T,
            "AntipodalObstruction",
            Silent,
        ),
        scenario(
            "ex1-antipodal-mixed",
            "two levels, mixed target, start at its reflection",
            e2(),
            coupling(&[(1, 2)], G),
            diag(&[0.8, 0.2]),
            diag(&[0.2, 0.8]),
            SILENT_T,
            "AntipodalObstruction",
            Silent,
        ),
        scenario(
            "ex1-offdiag-tilted",
            "two levels, equatorial target, start with a population difference: settles on the equator",
            e2(),
            coupling(&[(1, 2)], G),
            plus2.clone(),
            DensityInput::pure(&[[0.8, 0.0], [0.0, 0.6]]),
            STALL_T,
            "InsufficientCardinality",
            Stalls,
        ),
        scenario(
            "ex1-offdiag-equatorial",
            "two levels, target and start both on the equator",
            e2(),
            coupling(&[(1, 2)], G),
            plus2,
            DensityInput::pure(&[[S, 0.0], [0.0, S]]),
            SILENT_T,
            "SupportDisjoint",
            Silent,
        ),
        scenario(
            "ex2-antipodal-pure",
            "three levels, ground-state target, start in the top level",
            E3.to_vec(),
            full3(),
            v1.clone(),
            diag(&[0.0, 0.0, 1.0]),
            SILENT_T,
            "AntipodalObstruction",
            Silent,
        ),
        scenario(
            "ex2-antipodal-generic",
            "three levels, generic diagonal target, start at a permuted diagonal",
            E3.to_vec(),
            nn3(),
            g1.clone(),
            diag(&[0.1, 0.6, 0.3]),
            SILENT_T,
            "AntipodalObstruction",
            Silent,
        ),
        scenario(
            "ex2-ground-nn",
            "three levels, ground-state target, nearest-neighbor control",
            E3.to_vec(),
            nn3(),
            v1.clone(),
            DensityInput::orbit(v1.clone(), 3),
            STALL_T,
            "InsufficientCardinality",
            Stalls,
        ),
        scenario(
            "ex2-ground-full",
            "three levels, ground-state target, fully connected control",
            E3.to_vec(),
            full3(),
            v1.clone(),
            DensityInput::orbit(v1.clone(), 4),
            CONVERGE_T,
            "ExpectedConvergence",
            Converges,
        ),
        scenario(
            "ex2-blocked-23",
            "three levels, ground-state target, start carrying only the (2,3) coherence",
            E3.to_vec(),
            full3(),
            v1.clone(),
            DensityInput::Matrix(vec![
                vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
                vec![[0.0, 0.0], [0.5, 0.0], [0.5, 0.0]],
                vec![[0.0, 0.0], [0.5, 0.0], [0.5, 0.0]],
            ]),
            SILENT_T,
            "AntipodalObstruction",
            Silent,
        ),
        scenario(
            "ex2-middle-level",
            "three levels, middle-level target, nearest-neighbor control",
            E3.to_vec(),
            nn3(),
            v2.clone(),
            DensityInput::orbit(v2.clone(), 5),
            CONVERGE_T,
            "ExpectedConvergence",
            Converges,
        ),
        scenario(
            "ex2-middle-level-full",
            "three levels, middle-level target, fully connected control",
            E3.to_vec(),
            full3(),
            v2.clone(),
            DensityInput::orbit(v2, 6),
            CONVERGE_T,
            "ExpectedConvergence",
            Converges,
        ),
        scenario(
            "ex2-generic-nn",
            "three levels, all-distinct target, nearest-neighbor control",
            E3.to_vec(),
            nn3(),
            g1.clone(),
            DensityInput::orbit(g1.clone(), 7),
            STALL_T,
            "InsufficientCardinality",
            Any,
        ),
        scenario(
            "ex2-generic-full",
            "three levels, all-distinct target, fully connected control",
            E3.to_vec(),
            coupling(&[(1, 2), (1, 3), (2, 3)], 1.2),
            g1.clone(),
            DensityInput::orbit(g1.clone(), 8),
            250.0,
            "ExpectedConvergence",
            Converges,
        ),
        scenario(
            "ex2-support-disjoint",
            "three levels, all-distinct target, start carrying only the (1,3) coherence",
            E3.to_vec(),
            nn3(),
            g1,
            g1_rot13,
            SILENT_T,
            "SupportDisjoint",
            Silent,
        ),
        scenario(
            "ex2-offdiag-target-nn",
            "three levels, target coherent on (1,2), nearest-neighbor control",
            E3.to_vec(),
            nn3(),
            plus12.clone(),
            DensityInput::orbit(plus12.clone(), 9),
            STALL_T,
            "InsufficientCardinality",
            Stalls,
        ),
        scenario(
            "ex2-offdiag-target-full",
            "three levels, target coherent on (1,2), fully connected control: still too few nonzero commutator directions",
            E3.to_vec(),
            full3(),
            plus12.clone(),
            DensityInput::orbit(plus12, 10),
            STALL_T,
            "InsufficientCardinality",
            Stalls,
        ),
        scenario(
            "ex2-missing-23",
            "three levels, no direct (2,3) coupling, target in the (2,3) block, start in the (1,2) block",
            E3.to_vec(),
            coupling(&[(1, 2), (1, 3)], G),
            DensityInput::pure(&[[0.0, 0.0], [0.6, 0.0], [0.0, 0.8]]),
            DensityInput::pure(&[[0.8, 0.0], [0.36, 0.48], [0.0, 0.0]]),
            STALL_T,
            "NotApplicable",
            Stalls,
        ),
        scenario(
            "ex4-block-nonoverlap",
            "four levels, target on levels 1-2, start on levels 3-4",
            E4.to_vec(),
            coupling(&[(1, 2), (2, 3), (3, 4)], G),
            DensityInput::pure(&[[S, 0.0], [S, 0.0], [0.0, 0.0], [0.0, 0.0]]),
            DensityInput::pure(&[[0.0, 0.0], [0.0, 0.0], [S, 0.0], [0.0, S]]),
            SILENT_T,
            "AntipodalObstruction",
            Silent,
        ),
    ]
}

pub fn by_name(name: &str) -> Option<Scenario> {
    all().into_iter().find(|s| s.name == name)
}
