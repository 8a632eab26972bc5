//! Eps-family experiments: run every member and the limit system from the
//! same data, measure how far apart they are and how small `j1` gets.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use radiflow_core::dyadic_norms::flux_norm;
use radiflow_core::limit_systems::{compatibility_project, LimitKind, LimitSolver, LimitState};
use radiflow_core::params::{CouplingFunctions, EpsilonFamily, PhysicalParams};
use radiflow_core::spectral_solver::{l2_norm, FieldState, SolverConfig, SpectralSolver, TorusGrid};
use radiflow_core::stats::fit_rate;

use crate::config::{ExperimentKind, RunConfig};
use crate::error::{AppError, AppResult};
use crate::initial::{random_state, InitSpec};
use crate::persist::{write_trajectory, FieldSet};

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub family: EpsilonFamily,
    pub kappa: f64,
    pub m: f64,
    pub grid: TorusGrid,
    pub cfg: SolverConfig,
    pub coupling: CouplingFunctions,
    pub t_end: f64,
    pub record_every: usize,
    pub init: InitSpec,
    /// Errors are measured on wavenumbers `|k| <= filter_k`.
    pub filter_k: f64,
}

impl ExperimentPlan {
    pub fn from_config(c: &RunConfig) -> AppResult<Self> {
        let base = c.physical_params()?;
        let e = &c.experiment;
        let family = EpsilonFamily::for_regime(base, e.kind.regime(), e.kappa, e.m, &e.eps_ladder)?;
        let grid = TorusGrid::new(c.params.dim, c.grid.n, c.grid.length)?;
        Ok(ExperimentPlan {
            kind: e.kind,
            family,
            kappa: e.kappa,
            m: e.m,
            grid,
            cfg: c.solver_config(),
            coupling: c.coupling(),
            t_end: c.solver.t_end,
            record_every: c.solver.record_every,
            init: InitSpec { amplitude: e.amplitude, k_max: e.k_max, seed: e.seed, with_flux: false },
            filter_k: e.filter_k,
        })
    }

    pub fn limit_kind(&self) -> LimitKind {
        match self.kind {
            ExperimentKind::NonEq => LimitKind::NonEq { kappa: self.kappa, m: self.m },
            ExperimentKind::Degen => LimitKind::DegenNonEq { kappa: self.kappa },
            // the Poisson family has ell -> 0
            ExperimentKind::Poisson => LimitKind::NsPoisson { m: self.m, ell: 0.0 },
            ExperimentKind::ModPressure => LimitKind::ModifiedPressure,
        }
    }

    /// Shared initial data, made compatible with the limit constraint.
    pub fn initial_state(&self) -> AppResult<FieldState> {
        let mut s = random_state(&self.grid, &self.init);
        let mut ls = LimitState { t: 0.0, b: s.b.clone(), u: s.u.clone(), j0: s.j0.clone() };
        compatibility_project(&self.grid, &mut ls, self.limit_kind(), self.family.base())?;
        s.j0 = ls.j0;
        Ok(s)
    }

    /// `eps`, except in the Poisson regime where `j1` scales like `ell`.
    pub fn predicted_scale(&self, p: &PhysicalParams) -> f64 {
        match self.kind {
            ExperimentKind::Poisson => p.ell,
            _ => p.eps,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: PhysicalParams,
    pub states: Vec<FieldState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MemberRun {
    pub eps: f64,
    pub params: PhysicalParams,
    pub result: Result<Trajectory, radiflow_core::Error>,
}

#[derive(Debug, Clone)]
pub struct FamilyRun {
    pub members: Vec<MemberRun>,
    pub limit: Trajectory,
    /// Some member failed; its row is missing from the report.
    pub partial: bool,
}

fn run_member(plan: &ExperimentPlan, p: PhysicalParams, s0: &FieldState) -> radiflow_core::Result<Trajectory> {
    let solver = SpectralSolver::new(plan.grid.clone(), p, plan.coupling, plan.cfg)?;
    solver.preflight(s0)?;
    let mut states = Vec::new();
    solver.run(s0.clone(), plan.t_end, plan.record_every, |s| states.push(s.clone()))?;
    Ok(Trajectory { params: p, states })
}

fn run_limit(plan: &ExperimentPlan, s0: &FieldState) -> radiflow_core::Result<Trajectory> {
    let base = *plan.family.base();
    let solver = LimitSolver::new(plan.grid.clone(), base, plan.limit_kind(), plan.coupling, plan.cfg)?;
    let ls = LimitState { t: 0.0, b: s0.b.clone(), u: s0.u.clone(), j0: s0.j0.clone() };
    let mut states = Vec::new();
    let every = plan.record_every;
    let zero = FieldState::zeros(&plan.grid);
    solver.run(ls, plan.t_end, every, |s| {
        states.push(FieldState { t: s.t, b: s.b.clone(), u: s.u.clone(), j0: s.j0.clone(), j1: zero.j1.clone() })
    })?;
    Ok(Trajectory { params: base, states })
}

/// Runs every member (in parallel) and the limit system. A failing member
/// is recorded and the others continue; a failing limit run is fatal.
/// With `out`, trajectories go to `out/member_XX` and `out/limit`.
pub fn run_family(plan: &ExperimentPlan, out: Option<&Path>) -> AppResult<FamilyRun> {
    let s0 = plan.initial_state()?;
    let limit = run_limit(plan, &s0)?;
    let members: Vec<MemberRun> = (0..plan.family.len())
        .into_par_iter()
        .map(|i| {
            let p = plan.family.params(i);
            MemberRun { eps: p.eps, params: p, result: run_member(plan, p, &s0) }
        })
        .collect();
    let partial = members.iter().any(|m| m.result.is_err());
    if let Some(dir) = out {
        for (i, m) in members.iter().enumerate() {
            if let Ok(t) = &m.result {
                write_trajectory(&dir.join(format!("member_{i:02}")), "full", &plan.grid, &t.params, FieldSet::Full, &t.states)?;
            }
        }
        write_trajectory(&dir.join("limit"), plan.limit_kind().name(), &plan.grid, &limit.params, FieldSet::Limit, &limit.states)?;
    }
    Ok(FamilyRun { members, limit, partial })
}

fn low_pass(grid: &TorusGrid, c: &[Complex64], k_cut: f64) -> Vec<Complex64> {
    (0..grid.total())
        .map(|i| if grid.k_sq(i) <= k_cut * k_cut { c[i] } else { Complex64::new(0.0, 0.0) })
        .collect()
}

fn diff(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Sup-in-time filtered L2 errors of `(b, u, j0)` against the limit.
pub fn limit_errors(grid: &TorusGrid, traj: &Trajectory, limit: &Trajectory, k_cut: f64) -> AppResult<[f64; 3]> {
    if traj.states.len() != limit.states.len() {
        return Err(AppError::Validation("member and limit snapshots are not aligned".into()));
    }
    let mut err = [0.0f64; 3];
    for (s, l) in traj.states.iter().zip(&limit.states) {
        if (s.t - l.t).abs() > 1e-9 * s.t.abs().max(1.0) {
            return Err(AppError::Validation(format!("snapshot times differ: {} vs {}", s.t, l.t)));
        }
        let f = |a: &[Complex64], b: &[Complex64]| low_pass(grid, &diff(a, b), k_cut);
        let eb = f(&s.b, &l.b);
        let eu: Vec<Vec<Complex64>> = s.u.iter().zip(&l.u).map(|(a, b)| f(a, b)).collect();
        let ej = f(&s.j0, &l.j0);
        err[0] = err[0].max(l2_norm(&[&eb]));
        err[1] = err[1].max(l2_norm(&eu.iter().map(|c| c.as_slice()).collect::<Vec<_>>()));
        err[2] = err[2].max(l2_norm(&[&ej]));
    }
    Ok(err)
}

/// Trapezoidal time integral of the split dyadic norm of `j1`.
pub fn j1_smallness(grid: &TorusGrid, traj: &Trajectory) -> f64 {
    let vals: Vec<(f64, f64)> = traj
        .states
        .iter()
        .map(|s| {
            let refs: Vec<&[Complex64]> = s.j1.iter().map(|c| c.as_slice()).collect();
            (s.t, flux_norm(&grid.spectrum(&refs)))
        })
        .collect();
    vals.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub err_b: f64,
    pub err_u: f64,
    pub err_j0: f64,
    pub j1_norm: f64,
    pub predicted_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub slope: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Slopes {
    pub err_b: Option<Slope>,
    pub err_u: Option<Slope>,
    pub err_j0: Option<Slope>,
    /// `j1_norm` against `eps`.
    pub j1_norm: Option<Slope>,
    /// `j1_norm` against `predicted_scale`.
    pub j1_vs_scale: Option<Slope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub kind: String,
    pub limit: String,
    pub rows: Vec<ConvergenceRow>,
    pub slopes: Slopes,
    /// `j1_norm / predicted_scale` per row.
    pub j1_scale_ratio: Vec<f64>,
    pub partial: bool,
    pub failures: Vec<(f64, String)>,
}

fn slope(x: &[f64], y: &[f64]) -> Option<Slope> {
    fit_rate(x, y).ok().map(|f| Slope { slope: f.slope, residual: f.residual })
}

pub fn convergence_report(plan: &ExperimentPlan, run: &FamilyRun) -> AppResult<ConvergenceReport> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for m in &run.members {
        match &m.result {
            Ok(t) => {
                let [err_b, err_u, err_j0] = limit_errors(&plan.grid, t, &run.limit, plan.filter_k)?;
                rows.push(ConvergenceRow {
                    eps: m.eps,
                    err_b,
                    err_u,
                    err_j0,
                    j1_norm: j1_smallness(&plan.grid, t),
                    predicted_scale: plan.predicted_scale(&m.params),
                });
            }
            Err(e) => failures.push((m.eps, e.to_string())),
        }
    }
    let col = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let eps = col(|r| r.eps);
    let slopes = Slopes {
        err_b: slope(&eps, &col(|r| r.err_b)),
        err_u: slope(&eps, &col(|r| r.err_u)),
        err_j0: slope(&eps, &col(|r| r.err_j0)),
        j1_norm: slope(&eps, &col(|r| r.j1_norm)),
        j1_vs_scale: slope(&col(|r| r.predicted_scale), &col(|r| r.j1_norm)),
    };
    Ok(ConvergenceReport {
        kind: plan.kind.name().into(),
        limit: plan.limit_kind().name().into(),
        j1_scale_ratio: rows.iter().map(|r| r.j1_norm / r.predicted_scale).collect(),
        rows,
        slopes,
        partial: run.partial,
        failures,
    })
}

pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const SUMMARY_JSON: &str = "summary.json";

impl ConvergenceReport {
    pub fn write(&self, dir: &Path) -> AppResult<()> {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        let path = dir.join(CONVERGENCE_CSV);
        let mut w = csv::Writer::from_path(&path).map_err(|e| AppError::format(&path, e))?;
        for r in &self.rows {
            w.serialize(r).map_err(|e| AppError::format(&path, e))?;
        }
        w.flush().map_err(|e| AppError::io(&path, e))?;
        let path = dir.join(SUMMARY_JSON);
        let json = serde_json::to_string_pretty(self).map_err(|e| AppError::format(&path, e))?;
        fs::write(&path, json + "\n").map_err(|e| AppError::io(&path, e))
    }
}
