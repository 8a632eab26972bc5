//! The subcommands. Each returns the paths it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use radiflow_core::limit_systems::{compatibility_project, LimitKind, LimitSolver, LimitState};
use radiflow_core::linalg::Mat;
use radiflow_core::linear_modes::{decay_envelope, eigen_spectrum, Verdict};
use radiflow_core::spectral_solver::{FieldState, SpectralSolver, TorusGrid};
use radiflow_core::toy_ode::{
    build_class_e, det_i_plus_rho_p, hydro_block, tilde_nu, verify_decay_ode5, Approach, ToyCoefficients,
};

use crate::config::{ExperimentKind, RunConfig};
use crate::error::{AppError, AppResult};
use crate::harness::{convergence_report, run_family, ExperimentPlan};
use crate::initial::{random_state, InitSpec};
use crate::persist::{write_trajectory, FieldSet};

pub const MODES_CSV: &str = "modes.csv";
pub const TOY_JSONL: &str = "toy.jsonl";
pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";

fn create(path: &Path) -> AppResult<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| AppError::io(path, e))?))
}

fn csv_writer(path: &Path) -> AppResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |e| AppError::format(path, e)
}

/// `count` values from `lo` to `hi`, evenly spaced in log.
pub fn log_ladder(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

pub fn modes(cfg: &RunConfig, out: &Path) -> AppResult<Vec<PathBuf>> {
    let p = cfg.physical_params()?;
    let e = &cfg.experiment;
    let path = out.join(MODES_CSV);
    let mut w = csv_writer(&path)?;
    let mut header = vec!["rho".to_string()];
    header.extend((1..=4).map(|i| format!("re_lambda_{i}")));
    header.extend((1..=4).map(|i| format!("im_lambda_{i}")));
    header.extend(
        ["band", "stable", "predicted_fluid_rate", "predicted_rad_rate_j0", "predicted_rad_rate_j1"]
            .map(String::from),
    );
    w.write_record(&header).map_err(csv_err(&path))?;
    for rho in log_ladder(e.rho_min, e.rho_max, e.rho_count) {
        let spec = eigen_spectrum(rho, &p)?;
        let env = decay_envelope(&p, rho)?;
        let mut rec = vec![format!("{rho:e}")];
        rec.extend(spec.eigenvalues.iter().map(|z| format!("{:e}", z.re)));
        rec.extend(spec.eigenvalues.iter().map(|z| format!("{:e}", z.im)));
        rec.push(env.band.name().to_string());
        rec.push((spec.verdict != Verdict::Unstable).to_string());
        rec.push(format!("{:e}", env.predicted_fluid_rate));
        rec.push(format!("{:e}", env.predicted_rad_rate_j0));
        rec.push(format!("{:e}", env.predicted_rad_rate_j1));
        w.write_record(&rec).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| AppError::io(&path, e))?;
    Ok(vec![path])
}

#[derive(Debug, Serialize)]
struct ToyCoeffsOut {
    alpha: f64,
    beta: f64,
    gamma: f64,
    sigma: f64,
    eta: f64,
}

#[derive(Debug, Serialize)]
struct ToyRecord {
    coeffs: ToyCoeffsOut,
    tilde_nu: f64,
    #[serde(rename = "max_ratio_ODE5")]
    max_ratio_ode5: Option<f64>,
    commutator_residual: f64,
    det_residual: f64,
}

/// Random positive coefficients with `gamma` kept away from `beta`.
pub fn draw_toy_coefficients(rng: &mut ChaCha8Rng) -> ToyCoefficients {
    let beta = rng.gen_range(0.5..3.0);
    let gap = rng.gen_range(0.5..3.0);
    ToyCoefficients {
        alpha: rng.gen_range(0.1..2.0),
        beta,
        gamma: if rng.gen_bool(0.5) { beta + gap } else { beta * (1.0 + gap) },
        sigma: rng.gen_range(0.1..2.0),
        eta: rng.gen_range(0.1..2.0),
    }
}

pub fn toy(cfg: &RunConfig, out: &Path) -> AppResult<Vec<PathBuf>> {
    let path = out.join(TOY_JSONL);
    let mut w = create(&path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
    let rho = 0.5;
    for _ in 0..cfg.experiment.draws {
        let c = draw_toy_coefficients(&mut rng);
        let mut commutator: f64 = 0.0;
        let mut det: f64 = 0.0;
        for approach in [Approach::First, Approach::Second] {
            let sys = build_class_e(c, approach)?;
            commutator = commutator.max(sys.commutator_residual().max_abs());
            let dense = (&Mat::identity(4) + &sys.p.scale(rho)).det();
            det = det.max((det_i_plus_rho_p(rho, &sys) - dense).abs() / dense.abs().max(f64::MIN_POSITIVE));
        }
        let hb = hydro_block(&c);
        let ratio = if hb.d - hb.b > 0.0 {
            let r = 0.9 * hb.rho_max().min(1.0);
            let t_end = 100.0 / ((hb.d - hb.b) * r * r);
            let grid: Vec<f64> = (0..=400).map(|i| t_end * i as f64 / 400.0).collect();
            Some(verify_decay_ode5(&hb, r, Complex64::new(1.0, 0.0), Complex64::new(0.3, -0.2), &grid)?)
        } else {
            None
        };
        let rec = ToyRecord {
            coeffs: ToyCoeffsOut { alpha: c.alpha, beta: c.beta, gamma: c.gamma, sigma: c.sigma, eta: c.eta },
            tilde_nu: tilde_nu(&c),
            max_ratio_ode5: ratio,
            commutator_residual: commutator,
            det_residual: det,
        };
        let line = serde_json::to_string(&rec).map_err(|e| AppError::format(&path, e))?;
        writeln!(w, "{line}").map_err(|e| AppError::io(&path, e))?;
    }
    w.flush().map_err(|e| AppError::io(&path, e))?;
    Ok(vec![path])
}

fn grid_of(cfg: &RunConfig) -> AppResult<TorusGrid> {
    Ok(TorusGrid::new(cfg.params.dim, cfg.grid.n, cfg.grid.length)?)
}

fn init_spec(cfg: &RunConfig, with_flux: bool) -> InitSpec {
    let e = &cfg.experiment;
    InitSpec { amplitude: e.amplitude, k_max: e.k_max, seed: e.seed, with_flux }
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> AppResult<Vec<PathBuf>> {
    let p = cfg.physical_params()?;
    let grid = grid_of(cfg)?;
    let solver = SpectralSolver::new(grid.clone(), p, cfg.coupling(), cfg.solver_config())?;
    let s0 = random_state(&grid, &init_spec(cfg, true));
    solver.preflight(&s0)?;
    let mut states: Vec<FieldState> = Vec::new();
    solver.run(s0, cfg.solver.t_end, cfg.solver.record_every, |s| states.push(s.clone()))?;

    let dir = out.join("simulate");
    write_trajectory(&dir, "full", &grid, &p, FieldSet::Full, &states)?;
    let path = dir.join(DIAGNOSTICS_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "t", "mass", "energy", "l2_b", "l2_u", "l2_j0", "l2_j1", "pj1", "pj1_predicted", "max_b", "imag_residue",
        "x_norm",
    ])
    .map_err(csv_err(&path))?;
    let d0 = solver.diagnostics(&states[0]);
    for s in &states {
        let d = solver.diagnostics(s);
        let predicted = d0.pj1 * (-solver.flux_decay_rate() * d.t).exp();
        let vals = [
            d.t, d.mass, d.energy, d.l2_b, d.l2_u, d.l2_j0, d.l2_j1, d.pj1, predicted, d.max_b, d.imag_residue,
            d.x_norm,
        ];
        w.write_record(vals.iter().map(|v| format!("{v:e}"))).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| AppError::io(&path, e))?;
    Ok(vec![dir.join(crate::persist::SIDECAR), path])
}

pub fn limits(cfg: &RunConfig, kind: ExperimentKind, out: &Path) -> AppResult<Vec<PathBuf>> {
    let mut c = cfg.clone();
    c.experiment.kind = kind;
    let p = c.physical_params()?;
    let grid = grid_of(&c)?;
    let lk = match kind {
        ExperimentKind::NonEq => LimitKind::NonEq { kappa: c.experiment.kappa, m: c.experiment.m },
        ExperimentKind::Degen => LimitKind::DegenNonEq { kappa: c.experiment.kappa },
        ExperimentKind::Poisson => LimitKind::NsPoisson { m: c.experiment.m, ell: 0.0 },
        ExperimentKind::ModPressure => LimitKind::ModifiedPressure,
    };
    let solver = LimitSolver::new(grid.clone(), p, lk, c.coupling(), c.solver_config())?;
    let s0 = random_state(&grid, &init_spec(&c, false));
    let mut ls = LimitState { t: 0.0, b: s0.b, u: s0.u, j0: s0.j0 };
    compatibility_project(&grid, &mut ls, lk, &p)?;
    let mut states = Vec::new();
    let mut rows = Vec::new();
    solver.run(ls, c.solver.t_end, c.solver.record_every, |s| {
        let (b, u, j0) = solver.l2(s);
        rows.push([s.t, b, u, j0, solver.constraint_residual(s)]);
        let j1 = vec![vec![Complex64::new(0.0, 0.0); grid.total()]; grid.dim()];
        states.push(FieldState { t: s.t, b: s.b.clone(), u: s.u.clone(), j0: s.j0.clone(), j1 });
    })?;
    let dir = out.join("limits").join(kind.name());
    write_trajectory(&dir, lk.name(), &grid, &p, FieldSet::Limit, &states)?;
    let path = dir.join(DIAGNOSTICS_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record(["t", "l2_b", "l2_u", "l2_j0", "constraint_residual"]).map_err(csv_err(&path))?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| AppError::io(&path, e))?;
    Ok(vec![dir.join(crate::persist::SIDECAR), path])
}

/// Writes the report even when some members failed; the caller decides
/// what a partial report means for the exit status.
pub fn converge(cfg: &RunConfig, out: &Path) -> AppResult<(Vec<PathBuf>, bool)> {
    let plan = ExperimentPlan::from_config(cfg)?;
    let dir = out.join("converge");
    let run = run_family(&plan, Some(&dir))?;
    let report = convergence_report(&plan, &run)?;
    report.write(&dir)?;
    Ok((
        vec![dir.join(crate::harness::CONVERGENCE_CSV), dir.join(crate::harness::SUMMARY_JSON)],
        report.partial,
    ))
}
