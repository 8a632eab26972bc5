//! Acceptance suite A1..A10. Each test prints one `PASS`/`FAIL` line with the
//! measured value next to its pinned tolerance, then asserts.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radiflow::commands::draw_toy_coefficients;
use radiflow::config::{ExperimentKind, RunConfig};
use radiflow::harness::{convergence_report, run_family, ConvergenceReport, ExperimentPlan};
use radiflow::initial::{random_state, InitSpec};
use radiflow_core::eigen::eigenvalues;
use radiflow_core::limit_systems::{compatibility_project, LimitKind, LimitSolver, LimitState};
use radiflow_core::linalg::Mat;
use radiflow_core::linear_modes::{
    eigen_spectrum, midfreq_dissipation_check, midfreq_threshold_sq, physical_mode_matrix, propagator,
    reduced_matrix, routh_hurwitz_reduced, MidFreqOutcome, ModeState, NEUTRAL_TOL,
};
use radiflow_core::params::{stability_margin, CouplingFunctions, PhysicalParams};
use radiflow_core::spectral_solver::{leray_project, l2_norm, Scheme, SolverConfig, SpectralSolver, TorusGrid};
use radiflow_core::toy_ode::{build_class_e, det_i_plus_rho_p, transformed_system, verify_decay_ode5, Approach, Toy2x2};

const A1_MARGIN_BAND: f64 = 1e-8;
const A1_RUNTIME: Duration = Duration::from_secs(10);
const A2_RUNTIME: Duration = Duration::from_secs(1);
const A3_REL_TOL: f64 = 1e-8;
const A3_RUNTIME: Duration = Duration::from_secs(60);
const A4_RATIO_BOUND: f64 = 1.0 + 1e-6;
const A4_RUNTIME: Duration = Duration::from_secs(10);
const A5_COMMUTATOR_TOL: f64 = 1e-12;
const A5_DET_REL_TOL: f64 = 1e-12;
const A5_SPECTRUM_TOL: f64 = 1e-9;
const A5_RUNTIME: Duration = Duration::from_secs(5);
const A6_FD_TOL: f64 = 1e-8;
const A6_RUNTIME: Duration = Duration::from_secs(5);
const A7_TOL: f64 = 1e-9;
const A7_RUNTIME: Duration = Duration::from_secs(30);
const A8_NONEQ_SLOPE: (f64, f64) = (1.0, 0.2);
const A8_POISSON_SLOPE: (f64, f64) = (1.0, 0.3);
const A8_RUNTIME: Duration = Duration::from_secs(600);
const A10_TOL: f64 = 1e-10;
const A10_RUNTIME: Duration = Duration::from_secs(60);

const LADDER: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

fn verdict(label: &str, ok: bool, detail: String) {
    println!("{label}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[test]
fn acceptance_01_margin_sign_predicts_low_frequency_stability() {
    let start = Instant::now();
    let rhos = logspace(1e-3, 1.0, 50);
    let (mut total, mut agree, mut skipped) = (0usize, 0usize, 0usize);
    let mut first_miss = None;
    for &eps in &logspace(1e-2, 1.0, 20) {
        for &ell in &logspace(1e-3, 10.0, 20) {
            for &ell_s in &logspace(1e-3, 1e2, 20) {
                let p = PhysicalParams::new(eps, ell, ell_s, 0.5, 0.0, 2).unwrap();
                let margin = stability_margin(&p);
                if margin.abs() < A1_MARGIN_BAND {
                    skipped += 1;
                    continue;
                }
                total += 1;
                let min_re = rhos
                    .iter()
                    .map(|&r| eigen_spectrum(r, &p).expect("spectrum").min_re())
                    .fold(f64::INFINITY, f64::min);
                if (min_re >= -NEUTRAL_TOL) == (margin > 0.0) {
                    agree += 1;
                } else if first_miss.is_none() {
                    first_miss = Some((eps, ell, ell_s, margin, min_re));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = agree == total && elapsed < A1_RUNTIME;
    verdict(
        "A1 margin sign vs spectrum",
        ok,
        format!("{agree}/{total} agree, {skipped} in band, {elapsed:.2?}, first miss {first_miss:?}"),
    );
    assert!(ok);
}

#[test]
fn acceptance_02_routh_hurwitz_matches_eigenvalues() {
    let start = Instant::now();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for n in [2.0, 3.0] {
        for kappa in [1.1, 2.0, 5.0] {
            for rho in logspace(0.1, 10.0, 20) {
                let rh = routh_hurwitz_reduced(rho, kappa, n, None);
                let ev = eigenvalues(&reduced_matrix(rho, kappa, n, None)).expect("eigenvalues");
                let all_positive = ev.iter().all(|z| z.re > 0.0);
                checked += 1;
                if rh.stable != all_positive {
                    mismatches.push((n, kappa, rho));
                }
            }
        }
    }
    let mut boundary_exact = true;
    for n in [2.0, 3.0] {
        for rho in logspace(0.1, 10.0, 20) {
            let rh = routh_hurwitz_reduced(rho, 1.0, n, None);
            boundary_exact &= rh.minor == (1.0 + 1.0 / n) * rho.powi(2) * rho.powi(2);
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && boundary_exact && elapsed < A2_RUNTIME;
    verdict(
        "A2 Routh-Hurwitz vs eigensolver",
        ok,
        format!("{checked} points, mismatches {mismatches:?}, kappa=1 closed form exact: {boundary_exact}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn acceptance_03_divergence_free_flux_decays_exactly() {
    let start = Instant::now();
    let grid = TorusGrid::periodic(2, 64).unwrap();
    let p = PhysicalParams::new(0.5, 0.5, 0.5, 1.0, 0.2, 2).unwrap();
    let cfg = SolverConfig { dt: 0.01, scheme: Scheme::Imex2, nonlinear_on: true, smallness_eta: 0.1 };
    let solver =
        SpectralSolver::new(grid.clone(), p, CouplingFunctions::linear([0.5, 0.2, 0.3, 0.4]), cfg).unwrap();
    let s0 = random_state(&grid, &InitSpec { amplitude: 0.01, k_max: 8, seed: 3, with_flux: true });
    solver.preflight(&s0).unwrap();
    let pj1 = |j1: &[Vec<Complex64>]| {
        let (pj, _) = leray_project(&grid, j1);
        l2_norm(&pj.iter().map(|c| c.as_slice()).collect::<Vec<_>>())
    };
    let p0 = pj1(&s0.j1);
    // independent of the solver: (ell / eps)(1 + ell_s)
    let rate = p.ell / p.eps * (1.0 + p.ell_s);
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    solver
        .run(s0, 5.0, 10, |s| {
            let want = (-rate * s.t).exp();
            worst = worst.max((pj1(&s.j1) / p0 - want).abs() / want);
            samples += 1;
        })
        .unwrap();
    let elapsed = start.elapsed();
    let ok = worst < A3_REL_TOL && samples >= 50 && elapsed < A3_RUNTIME;
    verdict(
        "A3 exact P j1 decay",
        ok,
        format!("max rel err {worst:.3e} < {A3_REL_TOL:e} over {samples} samples, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn acceptance_04_two_by_two_lyapunov_decay() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let b = rng.gen_range(-2.0..2.0);
        let sys = Toy2x2 {
            a: rng.gen_range(0.1..3.0),
            b,
            c: rng.gen_range(0.1..3.0),
            d: b + rng.gen_range(0.1..3.0),
        };
        let rho = 0.9 * (sys.a * sys.c).sqrt() / (sys.b + sys.d).abs();
        let t_end = 100.0 / ((sys.d - sys.b) * rho * rho);
        let grid: Vec<f64> = (0..=400).map(|i| t_end * i as f64 / 400.0).collect();
        let x0 = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let y0 = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        worst = worst.max(verify_decay_ode5(&sys, rho, x0, y0, &grid).expect("preconditions hold"));
    }
    let elapsed = start.elapsed();
    let ok = worst <= A4_RATIO_BOUND && elapsed < A4_RUNTIME;
    verdict("A4 2x2 decay bound", ok, format!("max ratio {worst:.9} <= {A4_RATIO_BOUND}, {elapsed:.2?}"));
    assert!(ok);
}

fn nearest_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[test]
fn acceptance_05_class_algebra() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut comm, mut det, mut spec): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let c = draw_toy_coefficients(&mut rng);
        for approach in [Approach::First, Approach::Second] {
            let sys = build_class_e(c, approach).unwrap();
            comm = comm.max(sys.commutator_residual().max_abs());
            for rho in [0.1, 0.5] {
                let dense = (&Mat::identity(4) + &sys.p.scale(rho)).det();
                det = det.max((det_i_plus_rho_p(rho, &sys) - dense).abs() / dense.abs());
                let original = eigenvalues(&c.class_matrix(rho)).unwrap();
                let transformed = eigenvalues(&transformed_system(rho, &sys).unwrap().generator).unwrap();
                spec = spec.max(nearest_distance(&original, &transformed)).max(nearest_distance(&transformed, &original));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = comm < A5_COMMUTATOR_TOL && det < A5_DET_REL_TOL && spec < A5_SPECTRUM_TOL && elapsed < A5_RUNTIME;
    verdict(
        "A5 class algebra",
        ok,
        format!("commutator {comm:.2e}, det rel {det:.2e}, spectrum {spec:.2e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn acceptance_06_midfrequency_functional_nonincreasing() {
    let start = Instant::now();
    let p = PhysicalParams::new(0.2, 1.5, 0.5, 1.0, 0.0, 2).unwrap();
    assert!(stability_margin(&p) > 0.0);
    let rho = 2.0;
    assert!(rho * rho > midfreq_threshold_sq(p.n()));
    let t_grid: Vec<f64> = (0..=400).map(|i| 10.0 * i as f64 / 400.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (mut worst_fd, mut worst_diss) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..50 {
        let s0 = ModeState::new(c(), c(), c(), Complex64::new(0.0, 0.0));
        match midfreq_dissipation_check(&p, rho, &s0, &t_grid) {
            Ok(MidFreqOutcome::Checked { max_violation, w_sq }) => {
                worst_diss = worst_diss.max(max_violation);
                for w in w_sq.windows(2) {
                    worst_fd = worst_fd.max((w[1] - w[0]) / w_sq[0]);
                }
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
    let elapsed = start.elapsed();
    let ok = worst_fd < A6_FD_TOL && elapsed < A6_RUNTIME;
    verdict(
        "A6 mid-frequency functional",
        ok,
        format!("max relative increase {worst_fd:.2e} < {A6_FD_TOL:e}, dissipation-form excess {worst_diss:.2e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn acceptance_07_linear_solver_matches_mode_exponentials() {
    let start = Instant::now();
    let grid = TorusGrid::periodic(2, 32).unwrap();
    let p = PhysicalParams::new(0.2, 1.5, 0.5, 1.0, 0.2, 2).unwrap();
    let cfg = SolverConfig { dt: 0.01, scheme: Scheme::Imex2, nonlinear_on: false, smallness_eta: 0.1 };
    let solver = SpectralSolver::new(grid.clone(), p, CouplingFunctions::zero(), cfg).unwrap();
    let s0 = random_state(&grid, &InitSpec { amplitude: 0.1, k_max: 15, seed: 7, with_flux: true });
    let s1 = solver.run(s0.clone(), 1.0, 100, |_| {}).unwrap();
    let lm = p.ell * p.m_cal();
    let mut worst: f64 = 0.0;
    for i in 0..grid.total() {
        let k = grid.k_sq(i).sqrt();
        let want = propagator(&physical_mode_matrix(k, &p), 1.0).unwrap().apply_complex(&s0.mode_quartet(&grid, i));
        for (a, b) in want.iter().zip(s1.mode_quartet(&grid, i)) {
            worst = worst.max((a - b).norm());
        }
        // divergence-free part: u' + mu k^2 u = (ell M / n) j1, j1' + (ell M / eps) j1 = 0
        let heat = Mat::from_rows([[p.mu * k * k, -lm / p.n()], [0.0, lm / p.eps]]);
        let e = propagator(&heat, 1.0).unwrap();
        let wv = grid.wavevector(i);
        let perp = if k == 0.0 { vec![[1.0, 0.0], [0.0, 1.0]] } else { vec![[-wv[1] / k, wv[0] / k]] };
        for d in perp {
            let tr = |v: &[Vec<Complex64>]| v[0][i] * d[0] + v[1][i] * d[1];
            let want = e.apply_complex(&[tr(&s0.u), tr(&s0.j1)]);
            worst = worst.max((want[0] - tr(&s1.u)).norm()).max((want[1] - tr(&s1.j1)).norm());
        }
    }
    let elapsed = start.elapsed();
    let ok = worst < A7_TOL && elapsed < A7_RUNTIME;
    verdict("A7 linear solver vs exponentials", ok, format!("max mode error {worst:.2e} < {A7_TOL:e}, {elapsed:.2?}"));
    assert!(ok);
}

fn sweep_config(kind: ExperimentKind) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.params.mu = 1.0;
    cfg.params.lam = 0.0;
    cfg.grid.n = 32;
    cfg.solver.dt = 0.01;
    cfg.solver.t_end = 1.0;
    cfg.solver.record_every = 10;
    cfg.solver.nonlinear = false;
    cfg.experiment.kind = kind;
    cfg.experiment.kappa = 2.0;
    cfg.experiment.m = 1.0;
    cfg.experiment.eps_ladder = LADDER.to_vec();
    cfg.experiment.amplitude = 0.1;
    cfg
}

fn sweep(kind: ExperimentKind) -> (ConvergenceReport, Duration) {
    let start = Instant::now();
    let plan = ExperimentPlan::from_config(&sweep_config(kind)).unwrap();
    let run = run_family(&plan, None).unwrap();
    let report = convergence_report(&plan, &run).unwrap();
    (report, start.elapsed())
}

fn noneq_sweep() -> &'static (ConvergenceReport, Duration) {
    static CELL: OnceLock<(ConvergenceReport, Duration)> = OnceLock::new();
    CELL.get_or_init(|| sweep(ExperimentKind::NonEq))
}

#[test]
fn acceptance_08_flux_smallness_rates() {
    let (noneq, t_noneq) = noneq_sweep();
    let (poisson, t_poisson) = sweep(ExperimentKind::Poisson);
    let s_noneq = noneq.slopes.j1_norm.as_ref().map(|s| s.slope);
    let s_poisson = poisson.slopes.j1_vs_scale.as_ref().map(|s| s.slope);
    let within = |s: Option<f64>, (c, w): (f64, f64)| s.is_some_and(|s| (s - c).abs() <= w);
    let elapsed = *t_noneq + t_poisson;
    let ok = !noneq.partial
        && !poisson.partial
        && within(s_noneq, A8_NONEQ_SLOPE)
        && within(s_poisson, A8_POISSON_SLOPE)
        && elapsed < A8_RUNTIME;
    verdict(
        "A8 flux smallness slopes",
        ok,
        format!(
            "nonequilibrium vs eps {s_noneq:?} in {A8_NONEQ_SLOPE:?}, Poisson vs ell {s_poisson:?} in {A8_POISSON_SLOPE:?}, {elapsed:.2?}"
        ),
    );
    assert!(ok);
}

#[test]
fn acceptance_09_limit_errors_decrease_along_ladder() {
    let (noneq, _) = noneq_sweep();
    let rows = &noneq.rows;
    let decreasing = |f: fn(&radiflow::harness::ConvergenceRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let ok = !noneq.partial
        && rows.len() == LADDER.len()
        && decreasing(|r| r.err_b)
        && decreasing(|r| r.err_u)
        && decreasing(|r| r.err_j0);
    let table: Vec<String> =
        rows.iter().map(|r| format!("eps {}: {:.2e}/{:.2e}/{:.2e}", r.eps, r.err_b, r.err_u, r.err_j0)).collect();
    verdict("A9 monotone limit errors", ok, format!("b/u/j0 sup errors {}", table.join("; ")));
    assert!(ok);
}

#[test]
fn acceptance_10_poisson_constraint_preserved() {
    let start = Instant::now();
    let grid = TorusGrid::periodic(2, 32).unwrap();
    let p = PhysicalParams::new(0.1, 1.0, 1.0, 1.0, 0.0, 2).unwrap();
    let kind = LimitKind::NsPoisson { m: 1.0, ell: 0.0 };
    let cfg = SolverConfig { dt: 0.01, scheme: Scheme::Imex2, nonlinear_on: true, smallness_eta: 0.1 };
    let solver =
        LimitSolver::new(grid.clone(), p, kind, CouplingFunctions::linear([0.5, 0.2, 0.3, 0.4]), cfg).unwrap();
    let s0 = random_state(&grid, &InitSpec { amplitude: 0.05, k_max: 6, seed: 10, with_flux: false });
    let mut ls = LimitState { t: 0.0, b: s0.b, u: s0.u, j0: s0.j0 };
    compatibility_project(&grid, &mut ls, kind, &p).unwrap();
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    solver
        .run(ls, 1.0, 5, |s| {
            worst = worst.max(solver.constraint_residual(s));
            samples += 1;
        })
        .unwrap();
    let elapsed = start.elapsed();
    let ok = worst < A10_TOL && samples > 10 && elapsed < A10_RUNTIME;
    verdict(
        "A10 Poisson constraint",
        ok,
        format!("max residual {worst:.2e} < {A10_TOL:e} over {samples} samples, {elapsed:.2?}"),
    );
    assert!(ok);
}
