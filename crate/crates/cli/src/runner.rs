//! Runs scenarios: verdict, closed-loop simulation, checks and output files.

use std::path::{Path, PathBuf};

use flagstab::{simulate_closed_loop, theorem1_verdict_with, Outcome, Trajectory, Verdict};
use rayon::prelude::*;
use serde::Serialize;

use crate::builtin;
use crate::error::{CliError, Result};
use crate::report::{self, TrajectorySummary, VerdictJson};
use crate::scenario::{Dynamics, Overrides, Prepared, Scenario};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FLAGSTAB_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "flagstab-out";

/// Silent runs: `|u|` bound and `V` flatness.
pub const SILENT_U: f64 = 1e-9;
pub const SILENT_V: f64 = 1e-8;
/// Lyapunov law per step: `|ΔV/dt + u²| < LYAPUNOV_C · dt`, and `V` never
/// rises by more than `MONOTONE_TOL`.
pub const LYAPUNOV_C: f64 = 5.0;
pub const MONOTONE_TOL: f64 = 1e-10;
/// A stalled run ends above this multiple of the convergence threshold.
pub const STALL_FACTOR: f64 = 10.0;

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Outcome of checking one run against its expectation and the standing
/// verdict/simulation consistency rules.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub verdict: VerdictJson,
    pub simulation: TrajectorySummary,
    pub check: Check,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub verdict: Verdict,
    pub trajectory: Trajectory,
    pub expected: Option<(Outcome, Dynamics)>,
    pub verdict_path: PathBuf,
    pub traj_path: PathBuf,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.report.check.passed
    }

    pub fn summary_line(&self) -> String {
        let s = &self.report.simulation;
        format!(
            "{}: {} final_V={:.3e} max|u|={:.3e}{}",
            self.report.name,
            self.verdict.outcome,
            s.final_v,
            s.max_abs_u,
            if self.passed() { String::new() } else { format!(" MISMATCH {}", self.report.check.failures.join("; ")) }
        )
    }
}

pub fn verdict_of(prepared: &Prepared) -> Result<Verdict> {
    Ok(theorem1_verdict_with(&prepared.plant, &prepared.rho_d, &prepared.rho0, &prepared.tolerances)?)
}

/// Validates, evaluates the verdict, simulates and writes
/// `<name>.verdict.json` and `<name>.traj.csv` under `out_dir`.
pub fn run_scenario(s: &Scenario, overrides: &Overrides, out_dir: &Path) -> Result<RunOutput> {
    let prepared = s.validate(overrides)?;
    let verdict = verdict_of(&prepared)?;
    let trajectory = simulate_closed_loop(&prepared.plant, &prepared.rho_d, &prepared.rho0, &prepared.options)?;
    let summary = TrajectorySummary::of(&trajectory, prepared.options.dt);
    let check = check_run(&prepared, &verdict, &summary);
    let report = RunReport {
        name: s.name.clone(),
        verdict: VerdictJson::from(&verdict),
        simulation: summary,
        check,
        warnings: prepared.warnings.clone(),
    };
    let (verdict_path, traj_path) = report::output_paths(out_dir, &s.name);
    report::write_atomic(&verdict_path, &report::to_json(&report))?;
    report::write_atomic(&traj_path, &report::trajectory_csv(&trajectory))?;
    Ok(RunOutput { report, verdict, trajectory, expected: prepared.expected, verdict_path, traj_path })
}

/// Expectation, Lyapunov law and verdict/simulation consistency.
pub fn check_run(prepared: &Prepared, verdict: &Verdict, sim: &TrajectorySummary) -> Check {
    let mut failures = Vec::new();
    let conv = prepared.options.convergence_v;
    if sim.max_lyapunov_residual >= LYAPUNOV_C * sim.dt {
        failures.push(format!("Lyapunov residual {:.3e} >= {LYAPUNOV_C}*dt", sim.max_lyapunov_residual));
    }
    if sim.max_v_increase > MONOTONE_TOL {
        failures.push(format!("V increased by {:.3e}", sim.max_v_increase));
    }
    let dynamics = |d: Dynamics, failures: &mut Vec<String>| match d {
        Dynamics::Converges if sim.converged_at.is_none() || sim.final_v >= conv => {
            failures.push(format!("expected convergence, final V = {:.3e}", sim.final_v))
        }
        Dynamics::Silent if sim.max_abs_u >= SILENT_U || sim.max_v_deviation >= SILENT_V => failures.push(format!(
            "expected u = 0, max |u| = {:.3e}, V deviation = {:.3e}",
            sim.max_abs_u, sim.max_v_deviation
        )),
        Dynamics::Stalls if sim.converged_at.is_some() || sim.final_v <= STALL_FACTOR * conv => {
            failures.push(format!("expected no convergence, final V = {:.3e}", sim.final_v))
        }
        _ => {}
    };
    // Standing consistency rules.
    match verdict.outcome {
        Outcome::ExpectedConvergence => dynamics(Dynamics::Converges, &mut failures),
        Outcome::AntipodalObstruction | Outcome::SupportDisjoint => dynamics(Dynamics::Silent, &mut failures),
        _ => {}
    }
    if let Some((outcome, d)) = prepared.expected {
        if outcome != verdict.outcome {
            failures.push(format!("expected verdict {outcome}, got {}", verdict.outcome));
        }
        dynamics(d, &mut failures);
    }
    failures.dedup();
    Check { passed: failures.is_empty(), failures }
}

#[derive(Debug, Clone)]
pub struct BatteryReport {
    pub runs: Vec<RunOutput>,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(RunOutput::passed)
    }

    pub fn table(&self) -> String {
        let width = self.runs.iter().map(|r| r.report.name.len()).max().unwrap_or(4).max(8);
        let mut out = format!(
            "{:<width$}  {:<40} {:<24} {:>12} {:>12}  result\n",
            "scenario", "expected", "verdict", "final_V", "max|u|"
        );
        for r in &self.runs {
            let expected = r.expected.map(|(o, d)| format!("{o}/{}", dynamics_name(d))).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<width$}  {:<40} {:<24} {:>12.3e} {:>12.3e}  {}\n",
                r.report.name,
                expected,
                r.verdict.outcome.as_str(),
                r.report.simulation.final_v,
                r.report.simulation.max_abs_u,
                if r.passed() { "pass".to_string() } else { format!("FAIL: {}", r.report.check.failures.join("; ")) }
            ));
        }
        let passed = self.runs.iter().filter(|r| r.passed()).count();
        out.push_str(&format!("{passed}/{} scenarios passed\n", self.runs.len()));
        out
    }
}

fn dynamics_name(d: Dynamics) -> &'static str {
    match d {
        Dynamics::Converges => "converges",
        Dynamics::Silent => "silent",
        Dynamics::Stalls => "stalls",
        Dynamics::Any => "any",
    }
}

/// Builtin scenarios whose names match the glob `filter` (all when `None`).
pub fn select_builtin(filter: Option<&str>) -> Result<Vec<Scenario>> {
    let all = builtin::all();
    let selected: Vec<_> = match filter {
        None => all,
        Some(f) => {
            let pattern =
                glob::Pattern::new(f).map_err(|e| CliError::Config(format!("filter: invalid glob {f:?}: {e}")))?;
            all.into_iter().filter(|s| pattern.matches(&s.name)).collect()
        }
    };
    if selected.is_empty() {
        return Err(CliError::NoMatch(filter.unwrap_or("*").to_string()));
    }
    Ok(selected)
}

/// Runs the selected builtin scenarios in parallel; results keep battery
/// order.
pub fn run_battery(filter: Option<&str>, overrides: &Overrides, out_dir: &Path) -> Result<BatteryReport> {
    let scenarios = select_builtin(filter)?;
    let runs = scenarios.par_iter().map(|s| run_scenario(s, overrides, out_dir)).collect::<Result<Vec<_>>>()?;
    Ok(BatteryReport { runs })
}
