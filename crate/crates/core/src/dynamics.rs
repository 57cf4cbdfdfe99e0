//! Vectorized Liouville dynamics `ϱ̇ = (A + uB)ϱ`, the reference orbit and
//! the Lyapunov feedback `u = ⟨ϱ_d, Bϱ⟩`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{AdjointGenerator, GellMannBasis, LabelKind};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{floor_tol, lit, to_f64, Real};
use crate::state::{
    reconstruct, regularity, to_coherence, CoherenceVector, DensityOperator, HamiltonianSpec, Regularity,
};

/// Gap tolerance used to classify drift energies.
pub const REGULARITY_TOL: f64 = 1e-9;

/// A drift `H_A = diag(E)` and an off-diagonal control Hamiltonian `H_B`.
#[derive(Debug, Clone)]
pub struct PlantSpec<T: Real> {
    basis: Arc<GellMannBasis<T>>,
    energies: Vec<T>,
    h_a: DVector<T>,
    h_b: DVector<T>,
    a: AdjointGenerator<T>,
    b: AdjointGenerator<T>,
    nearest_neighbor: bool,
    regularity: Regularity,
}

impl<T: Real> PlantSpec<T> {
    /// `energies` must sum to zero; `h_b` must vanish on diagonal labels.
    pub fn new(basis: Arc<GellMannBasis<T>>, energies: &[T], h_b: DVector<T>) -> Result<Self> {
        if energies.len() != basis.levels() {
            return Err(Error::DimensionMismatch { expected: basis.levels(), found: energies.len() });
        }
        if h_b.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: h_b.len() });
        }
        let h_a_spec = HamiltonianSpec::diagonal(energies.to_vec())?;
        let h_a = h_a_spec.coefficients(&basis)?;
        for label in basis.labels() {
            if label.kind.is_diagonal() && h_b[label.position] != T::zero() {
                return Err(Error::Config(format!(
                    "control Hamiltonian must be off-diagonal, found component on {}",
                    label.kind
                )));
            }
        }
        let nearest_neighbor = (1..basis.levels()).all(|j| {
            let re = basis.position(LabelKind::OffRe(j, j + 1)).map(|p| h_b[p]);
            let im = basis.position(LabelKind::OffIm(j, j + 1)).map(|p| h_b[p]);
            matches!((re, im), (Ok(r), Ok(i)) if r != T::zero() || i != T::zero())
        });
        let a = basis.adjoint_matrix(&h_a)?;
        let b = basis.adjoint_matrix(&h_b)?;
        let regularity = regularity(energies, lit(REGULARITY_TOL));
        Ok(PlantSpec { basis, energies: energies.to_vec(), h_a, h_b, a, b, nearest_neighbor, regularity })
    }

    /// Builds `h_B` from `(label, value)` terms.
    pub fn from_terms(basis: Arc<GellMannBasis<T>>, energies: &[T], terms: &[(LabelKind, T)]) -> Result<Self> {
        let mut h_b = DVector::zeros(basis.dim());
        for &(kind, value) in terms {
            if kind.is_diagonal() {
                return Err(Error::Config(format!("control Hamiltonian must be off-diagonal, found term on {kind}")));
            }
            h_b[basis.position(kind)?] += value;
        }
        Self::new(basis, energies, h_b)
    }

    pub fn basis(&self) -> &GellMannBasis<T> {
        &self.basis
    }

    pub fn basis_arc(&self) -> &Arc<GellMannBasis<T>> {
        &self.basis
    }

    pub fn levels(&self) -> usize {
        self.basis.levels()
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// Gell-Mann coefficients of `H_A`.
    pub fn h_a(&self) -> &DVector<T> {
        &self.h_a
    }

    /// Gell-Mann coefficients of `H_B`.
    pub fn h_b(&self) -> &DVector<T> {
        &self.h_b
    }

    pub fn a(&self) -> &AdjointGenerator<T> {
        &self.a
    }

    pub fn b(&self) -> &AdjointGenerator<T> {
        &self.b
    }

    /// Whether `H_B` couples every pair of adjacent levels.
    pub fn nearest_neighbor(&self) -> bool {
        self.nearest_neighbor
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    /// Rejects a reference drift different from `H_A`.
    pub fn check_reference_drift(&self, reference_energies: &[T]) -> Result<()> {
        let same = reference_energies.len() == self.energies.len()
            && reference_energies.iter().zip(&self.energies).all(|(&r, &e)| (r - e).abs() <= floor_tol::<T>(1e-12));
        if same {
            Ok(())
        } else {
            Err(Error::Config(
                "reference drift must equal the plant drift; feedback cannot compensate a different one".into(),
            ))
        }
    }

    /// `exp(tA)`.
    pub fn drift_propagator(&self, t: T) -> DMatrix<T> {
        linalg::expm(&(&self.a.mat * t))
    }

    fn check_levels(&self, levels: usize) -> Result<()> {
        if levels != self.levels() {
            return Err(Error::DimensionMismatch { expected: self.levels(), found: levels });
        }
        Ok(())
    }
}

/// `ϱ_d(t) = exp(tA) ϱ_d(0)`.
pub fn reference_orbit<T: Real>(rho_d0: &DensityOperator<T>, plant: &PlantSpec<T>, t: T) -> Result<CoherenceVector<T>> {
    plant.check_levels(rho_d0.levels())?;
    let v = to_coherence(rho_d0, plant.basis())?;
    Ok(v.transformed(&plant.drift_propagator(t)))
}

/// `u = ⟨v_d, B v⟩`.
pub fn feedback_u<T: Real>(v_d: &CoherenceVector<T>, v: &CoherenceVector<T>, b: &AdjointGenerator<T>) -> Result<T> {
    check_pair(v_d, v)?;
    if b.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), found: b.dim() });
    }
    Ok(v_d.components().dot(&(&b.mat * v.components())))
}

/// `V = ‖v‖² - ⟨v_d, v⟩`.
pub fn lyapunov_v<T: Real>(v_d: &CoherenceVector<T>, v: &CoherenceVector<T>) -> Result<T> {
    check_pair(v_d, v)?;
    Ok(v.norm_squared() - v_d.components().dot(v.components()))
}

fn check_pair<T: Real>(a: &CoherenceVector<T>, b: &CoherenceVector<T>) -> Result<()> {
    if a.levels() != b.levels() {
        return Err(Error::DimensionMismatch { expected: a.levels(), found: b.levels() });
    }
    Ok(())
}

/// Time stepper for the frozen-control step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepper {
    /// `ϱ ← exp(dt (A + uB)) ϱ`; orthogonal up to rounding.
    #[default]
    Exponential,
    /// Classical Runge-Kutta followed by rescaling to the previous norm.
    Rk4Projected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions<T: Real> {
    pub dt: T,
    pub t_final: T,
    /// Record every `stride`-th step (the last step is always recorded).
    pub record_stride: usize,
    /// When false, `u ≡ 0` (open loop).
    pub feedback: bool,
    pub stepper: Stepper,
    /// Convergence is declared once `V < convergence_v` ...
    pub convergence_v: T,
    /// ... for this many consecutive steps.
    pub convergence_window: usize,
    /// Stop integrating once converged.
    pub stop_on_convergence: bool,
}

impl<T: Real> SimulationOptions<T> {
    pub fn new(dt: T, t_final: T) -> Self {
        SimulationOptions {
            dt,
            t_final,
            record_stride: 1,
            feedback: true,
            stepper: Stepper::Exponential,
            convergence_v: lit(1e-6),
            convergence_window: 100,
            stop_on_convergence: false,
        }
    }

    pub fn open_loop(mut self) -> Self {
        self.feedback = false;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    pub fn stop_on_convergence(mut self, stop: bool) -> Self {
        self.stop_on_convergence = stop;
        self
    }

    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<usize> {
        if !(self.dt > T::zero()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::Config(format!("T = {} must be at least dt = {}", self.t_final, self.dt)));
        }
        let steps = to_f64(self.t_final / self.dt).round();
        if steps > 1e9 {
            return Err(Error::Config(format!("{steps} steps requested")));
        }
        Ok(steps as usize)
    }
}

/// Per-run maxima collected over every step, recorded or not.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDiagnostics<T: Real> {
    pub steps: usize,
    /// `max_k |(V_{k+1} - V_k)/dt + u_k²|`.
    pub max_lyapunov_residual: T,
    /// `max_k (V_{k+1} - V_k)`, zero if `V` never increases.
    pub max_v_increase: T,
    pub max_abs_u: T,
    /// `max_k |‖ϱ_k‖ - ‖ϱ_0‖|`.
    pub max_norm_drift: T,
    /// Largest sorted-eigenvalue deviation over recorded samples.
    pub max_eig_drift: T,
    /// Start of the first window of consecutive steps with `V` below threshold.
    pub converged_at: Option<T>,
    pub final_v: T,
    pub warnings: Vec<String>,
}

/// Samples of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<CoherenceVector<T>>,
    pub reference: Vec<CoherenceVector<T>>,
    pub control: Vec<T>,
    pub lyapunov: Vec<T>,
    pub eig_drift: Vec<T>,
    pub diagnostics: SimulationDiagnostics<T>,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&CoherenceVector<T>> {
        self.states.last()
    }
}

fn eigen_drift<T: Real>(v: &CoherenceVector<T>, basis: &GellMannBasis<T>, initial: &[T]) -> T {
    let eig = linalg::hermitian_eigenvalues(&reconstruct(v, basis));
    eig.iter().zip(initial).fold(T::zero(), |acc, (&a, &b)| if (a - b).abs() > acc { (a - b).abs() } else { acc })
}

fn rk4_step<T: Real>(g: &DMatrix<T>, x: &DVector<T>, dt: T) -> DVector<T> {
    let half = lit::<T>(0.5);
    let k1 = g * x;
    let k2 = g * (x + &k1 * (dt * half));
    let k3 = g * (x + &k2 * (dt * half));
    let k4 = g * (x + &k3 * dt);
    let mut next = x + (k1 + k2 * lit::<T>(2.0) + k3 * lit::<T>(2.0) + k4) * (dt / lit::<T>(6.0));
    let target = x.norm();
    let norm = next.norm();
    if norm > T::zero() {
        next *= target / norm;
    }
    next
}

/// Integrates the closed loop (or the open loop with `feedback = false`) from
/// `rho0`, tracking the reference orbit of `rho_d0`.
///
/// The control is held constant over each step at its value at the step
/// start. Fails with [`Error::Step`] if `dt ‖A + uB‖₁ > 1`.
pub fn simulate_closed_loop<T: Real>(
    plant: &PlantSpec<T>,
    rho_d0: &DensityOperator<T>,
    rho0: &DensityOperator<T>,
    options: &SimulationOptions<T>,
) -> Result<TrajectoryRecord<T>> {
    plant.check_levels(rho_d0.levels())?;
    plant.check_levels(rho0.levels())?;
    let steps = options.validate()?;
    let basis = plant.basis();
    let dt = options.dt;
    let stride = options.record_stride.max(1);
    let a = &plant.a().mat;
    let b = &plant.b().mat;
    let drift_step = linalg::expm(&(a * dt));

    let mut warnings = Vec::new();
    if plant.regularity() != Regularity::StronglyRegular {
        warnings.push(format!("drift is {:?}, not strongly regular", plant.regularity()));
    }

    let mut x = to_coherence(rho0, basis)?.into_components();
    let mut xd = to_coherence(rho_d0, basis)?.into_components();
    let levels = plant.levels();
    let initial_eig = rho0.eigenvalues();
    let initial_norm = x.norm();

    let capacity = steps / stride + 2;
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        reference: Vec::with_capacity(capacity),
        control: Vec::with_capacity(capacity),
        lyapunov: Vec::with_capacity(capacity),
        eig_drift: Vec::with_capacity(capacity),
        diagnostics: SimulationDiagnostics {
            steps: 0,
            max_lyapunov_residual: T::zero(),
            max_v_increase: T::zero(),
            max_abs_u: T::zero(),
            max_norm_drift: T::zero(),
            max_eig_drift: T::zero(),
            converged_at: None,
            final_v: T::zero(),
            warnings,
        },
    };

    let control = |xd: &DVector<T>, x: &DVector<T>| -> T {
        if options.feedback {
            xd.dot(&(b * x))
        } else {
            T::zero()
        }
    };
    let value = |xd: &DVector<T>, x: &DVector<T>| -> T { x.norm_squared() - xd.dot(x) };

    let record = |rec: &mut TrajectoryRecord<T>, t: T, x: &DVector<T>, xd: &DVector<T>, u: T, v: T| {
        let state = CoherenceVector::from_parts(levels, x.clone());
        let drift = eigen_drift(&state, basis, &initial_eig);
        if drift > rec.diagnostics.max_eig_drift {
            rec.diagnostics.max_eig_drift = drift;
        }
        rec.times.push(t);
        rec.states.push(state);
        rec.reference.push(CoherenceVector::from_parts(levels, xd.clone()));
        rec.control.push(u);
        rec.lyapunov.push(v);
        rec.eig_drift.push(drift);
    };

    let mut v = value(&xd, &x);
    let mut below = 0usize;
    let mut window_start = 0usize;
    let mut last_recorded = usize::MAX;
    for k in 0..steps {
        let t = dt * lit::<T>(k as f64);
        let u = control(&xd, &x);
        if k % stride == 0 {
            record(&mut rec, t, &x, &xd, u, v);
            last_recorded = k;
        }
        if u.abs() > rec.diagnostics.max_abs_u {
            rec.diagnostics.max_abs_u = u.abs();
        }
        let g = if u == T::zero() { a.clone() } else { a + b * u };
        let scaled = linalg::norm1(&g) * dt;
        if scaled > T::one() {
            return Err(Error::Step { value: to_f64(scaled), time: to_f64(t) });
        }
        x = match options.stepper {
            Stepper::Exponential => linalg::expm_apply(&(g * dt), &x),
            Stepper::Rk4Projected => rk4_step(&g, &x, dt),
        };
        xd = &drift_step * &xd;

        let v_next = value(&xd, &x);
        let d = &mut rec.diagnostics;
        let residual = ((v_next - v) / dt + u * u).abs();
        if residual > d.max_lyapunov_residual {
            d.max_lyapunov_residual = residual;
        }
        if v_next - v > d.max_v_increase {
            d.max_v_increase = v_next - v;
        }
        let norm_drift = (x.norm() - initial_norm).abs();
        if norm_drift > d.max_norm_drift {
            d.max_norm_drift = norm_drift;
        }
        v = v_next;
        d.steps = k + 1;

        if v < options.convergence_v {
            if below == 0 {
                window_start = k + 1;
            }
            below += 1;
            if below >= options.convergence_window && d.converged_at.is_none() {
                d.converged_at = Some(dt * lit::<T>(window_start as f64));
                if options.stop_on_convergence {
                    break;
                }
            }
        } else {
            below = 0;
        }
    }
    let done = rec.diagnostics.steps;
    if last_recorded != done {
        let t = dt * lit::<T>(done as f64);
        let u = control(&xd, &x);
        record(&mut rec, t, &x, &xd, u, v);
    }
    rec.diagnostics.final_v = v;
    Ok(rec)
}

/// Maps every sample to the frame co-rotating with the drift,
/// `ϱ̂(t) = exp(-tA) ϱ(t)`, and recomputes `V` there.
pub fn rotating_frame<T: Real>(traj: &TrajectoryRecord<T>, plant: &PlantSpec<T>) -> Result<TrajectoryRecord<T>> {
    let mut out = traj.clone();
    for (k, &t) in traj.times.iter().enumerate() {
        plant.check_levels(traj.states[k].levels())?;
        let back = plant.drift_propagator(-t);
        out.states[k] = traj.states[k].transformed(&back);
        out.reference[k] = traj.reference[k].transformed(&back);
        out.lyapunov[k] = lyapunov_v(&out.reference[k], &out.states[k])?;
    }
    Ok(out)
}
