//! Lyapunov feedback stabilization of N-level quantum ensembles in the
//! coherence-vector (adjoint) picture, with the algebraic tools that predict
//! when the feedback converges.
//!
//! Everything is generic over the scalar type through [`Real`]; the aliases
//! at the crate root fix it to `f64`, and the `*32` aliases to `f32`.

pub mod analysis;
pub mod basis;
pub mod dynamics;
pub mod error;
pub mod flag;
pub mod linalg;
pub mod scalar;
pub mod state;

pub use analysis::{
    bilinear_forms, bracket_chain, commutator_support, kalman_rank, lemma3_equivalence, lie_closure_dim, rank_w_at,
    support_intersects, theorem1_verdict, theorem1_verdict_with, AnalysisTolerances, Lemma3Report, Outcome, Verdict,
};
pub use basis::{algebra_dim, ordered_labels, BasisLabel, Convention, LabelKind, MAX_LEVELS};
pub use dynamics::{feedback_u, lyapunov_v, reference_orbit, rotating_frame, simulate_closed_loop, Stepper};
pub use error::{Error, Result};
pub use flag::{antipodal_points, classify, is_antipodal};
pub use scalar::Real;
pub use state::{distance, from_coherence, regularity, support, to_coherence, Regularity, SupportSet};

pub type Basis = basis::GellMannBasis<f64>;
pub type Adjoint = basis::AdjointGenerator<f64>;
pub type Density = state::DensityOperator<f64>;
pub type Coherence = state::CoherenceVector<f64>;
pub type Hamiltonian = state::HamiltonianSpec<f64>;
pub type Plant = dynamics::PlantSpec<f64>;
pub type Options = dynamics::SimulationOptions<f64>;
pub type Trajectory = dynamics::TrajectoryRecord<f64>;
pub type FlagInfo = flag::FlagManifoldInfo<f64>;
pub type Antipodes = flag::AntipodalSet<f64>;
pub type Chain = analysis::BracketChain<f64>;
pub type Tolerances = analysis::AnalysisTolerances<f64>;

pub type Basis32 = basis::GellMannBasis<f32>;
pub type Density32 = state::DensityOperator<f32>;
pub type Coherence32 = state::CoherenceVector<f32>;
pub type Plant32 = dynamics::PlantSpec<f32>;
