use num_complex::Complex64;

use radiflow_core::eigen::eigenvalues_sorted;
use radiflow_core::limit_systems::{
    compatibility_project, limit_mode_matrix, solve_elliptic_j0, LimitKind, LimitSolver, LimitState,
};
use radiflow_core::linear_modes::{physical_mode_matrix, propagator};
use radiflow_core::params::{CouplingFunctions, PhysicalParams};
use radiflow_core::spectral_solver::{
    leray_project, l2_norm, FieldState, PhysicalFields, Scheme, SolverConfig, SpectralSolver, TorusGrid,
};

fn smooth_fields(grid: &TorusGrid, amp: f64) -> PhysicalFields {
    let n = grid.total();
    let mut f = PhysicalFields {
        b: vec![0.0; n],
        u: vec![vec![0.0; n]; grid.dim()],
        j0: vec![0.0; n],
        j1: vec![vec![0.0; n]; grid.dim()],
    };
    for i in 0..n {
        let x = grid.point(i);
        f.b[i] = amp * (x[0].sin() + 0.5 * (2.0 * x[1]).cos());
        f.u[0][i] = amp * (x[1].sin() * 0.7 + (x[0] + x[1]).cos() * 0.2);
        f.u[1][i] = amp * (0.4 * (2.0 * x[0]).sin());
        f.j0[i] = amp * 0.3 * (x[0] - x[1]).cos();
        f.j1[0][i] = amp * 0.5 * x[1].cos();
        f.j1[1][i] = amp * (0.2 * x[0].sin() + 0.1 * (x[0] + 2.0 * x[1]).cos());
    }
    f
}

fn params() -> PhysicalParams {
    PhysicalParams::new(0.2, 1.5, 0.5, 1.0, 0.2, 2).unwrap()
}

#[test]
fn linear_rhs_is_the_generator_of_the_propagator() {
    let g = TorusGrid::periodic(2, 16).unwrap();
    let p = params();
    let s0 = FieldState::from_physical(&g, &smooth_fields(&g, 0.1)).unwrap();
    let h = 1e-6;
    let cfg = SolverConfig { dt: h, scheme: Scheme::Imex1, nonlinear_on: false, smallness_eta: 0.1 };
    let solver = SpectralSolver::new(g.clone(), p, CouplingFunctions::zero(), cfg).unwrap();
    let mut s = s0.clone();
    solver.step(&mut s).unwrap();
    let l = solver.linear_rhs(&s0);
    let mut worst: f64 = 0.0;
    for i in 0..g.total() {
        worst = worst.max(((s.b[i] - s0.b[i]) / h - l.b[i]).norm());
        worst = worst.max(((s.j0[i] - s0.j0[i]) / h - l.j0[i]).norm());
        for a in 0..2 {
            worst = worst.max(((s.u[a][i] - s0.u[a][i]) / h - l.u[a][i]).norm());
            worst = worst.max(((s.j1[a][i] - s0.j1[a][i]) / h - l.j1[a][i]).norm());
        }
    }
    assert!(worst < 1e-4, "worst {worst}");
}

#[test]
fn linear_run_matches_mode_exponentials() {
    let g = TorusGrid::periodic(2, 16).unwrap();
    let p = params();
    let s0 = FieldState::from_physical(&g, &smooth_fields(&g, 0.1)).unwrap();
    let cfg = SolverConfig { dt: 0.05, scheme: Scheme::Imex2, nonlinear_on: false, smallness_eta: 0.1 };
    let solver = SpectralSolver::new(g.clone(), p, CouplingFunctions::zero(), cfg).unwrap();
    let s = solver.run(s0.clone(), 1.0, 100, |_| {}).unwrap();
    for i in 0..g.total() {
        let k = g.k_sq(i).sqrt();
        let e = propagator(&physical_mode_matrix(k, &p), 1.0).unwrap();
        let want = e.apply_complex(&s0.mode_quartet(&g, i));
        let got = s.mode_quartet(&g, i);
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).norm() < 1e-12, "mode {i}: {a} vs {b}");
        }
    }
}

#[test]
fn divergence_free_flux_decays_exactly_in_nonlinear_run() {
    let g = TorusGrid::periodic(2, 16).unwrap();
    let p = params();
    let s0 = FieldState::from_physical(&g, &smooth_fields(&g, 0.01)).unwrap();
    let cfg = SolverConfig { dt: 0.01, ..SolverConfig::default() };
    let solver =
        SpectralSolver::new(g.clone(), p, CouplingFunctions::linear([0.5, 0.2, 0.3, 0.4]), cfg).unwrap();
    let pj = |s: &FieldState| l2_norm(&[&leray_project(&g, &s.j1).0[0], &leray_project(&g, &s.j1).0[1]]);
    let p0 = pj(&s0);
    let rate = solver.flux_decay_rate();
    let mut worst: f64 = 0.0;
    solver
        .run(s0, 0.5, 5, |s| {
            let want = p0 * (-rate * s.t).exp();
            worst = worst.max((pj(s) - want).abs() / want);
        })
        .unwrap();
    assert!(worst < 1e-10, "worst {worst}");
}

#[test]
fn leray_projection_is_orthogonal_and_divergence_free() {
    let g = TorusGrid::periodic(2, 16).unwrap();
    let s = FieldState::from_physical(&g, &smooth_fields(&g, 1.0)).unwrap();
    let (pu, qu) = leray_project(&g, &s.u);
    for i in 0..g.total() {
        let k = g.wavevector(i);
        let div = pu[0][i] * k[0] + pu[1][i] * k[1];
        assert!(div.norm() < 1e-12);
        let dot = pu[0][i].conj() * qu[0][i] + pu[1][i].conj() * qu[1][i];
        assert!(dot.norm() < 1e-12);
        assert!((pu[0][i] + qu[0][i] - s.u[0][i]).norm() < 1e-15);
    }
}

#[test]
fn nonlinear_run_is_second_order_in_time() {
    let g = TorusGrid::periodic(2, 16).unwrap();
    let p = params();
    let s0 = FieldState::from_physical(&g, &smooth_fields(&g, 0.05)).unwrap();
    let fns = CouplingFunctions::linear([1.0, 0.5, 0.5, 0.5]);
    let run = |dt: f64| {
        let cfg = SolverConfig { dt, ..SolverConfig::default() };
        SpectralSolver::new(g.clone(), p, fns, cfg).unwrap().run(s0.clone(), 0.4, 1000, |_| {}).unwrap()
    };
    let r = run(0.0025);
    let err = |s: &FieldState| {
        let db: Vec<Complex64> = s.b.iter().zip(&r.b).map(|(a, b)| a - b).collect();
        l2_norm(&[&db])
    };
    let e1 = err(&run(0.04));
    let e2 = err(&run(0.02));
    let order = (e1 / e2).log2();
    assert!(order > 1.7, "observed order {order}");
}

#[test]
fn elliptic_solve_examples() {
    let g = TorusGrid::periodic(2, 8).unwrap();
    let mut b = vec![Complex64::new(0.0, 0.0); g.total()];
    let one = g.index_of([1, 0, 0]).unwrap();
    b[one] = Complex64::new(1.0, 0.0);
    b[0] = Complex64::new(0.7, 0.0);
    let j0 = solve_elliptic_j0(&g, &b, 1.0, 2.0, 2.0, 0.0).unwrap();
    assert!((j0[one].re - 0.8).abs() < 1e-15);
    assert_eq!(j0[0], b[0]);
}

#[test]
fn degenerate_limit_relaxes_at_exact_rate() {
    let g = TorusGrid::periodic(2, 8).unwrap();
    let p = params();
    let kappa = 2.0;
    let mut s = LimitState::zeros(&g);
    s.b[0] = Complex64::new(0.3, 0.0);
    s.j0[0] = Complex64::new(-0.1, 0.0);
    let cfg = SolverConfig { dt: 0.1, scheme: Scheme::Imex1, nonlinear_on: false, smallness_eta: 0.1 };
    let solver =
        LimitSolver::new(g, p, LimitKind::DegenNonEq { kappa }, CouplingFunctions::zero(), cfg).unwrap();
    let s = solver.run(s, 1.0, 100, |_| {}).unwrap();
    let rate = kappa / (p.n() * p.nu());
    let want = 0.3 + (-0.1 - 0.3) * (-rate).exp();
    assert!((s.j0[0].re - want).abs() < 1e-13);
}

#[test]
fn modified_pressure_frequency_matches_two_by_two() {
    let p = params();
    let n = p.n();
    let k = 0.5;
    let ev = eigenvalues_sorted(&limit_mode_matrix(LimitKind::ModifiedPressure, &p, k)).unwrap();
    // lambda^2 - nu k^2 lambda + c k^2 = 0, c = 1 + 1/n
    let c = 1.0 + 1.0 / n;
    let disc = (p.nu() * k * k).powi(2) - 4.0 * c * k * k;
    assert!(disc < 0.0);
    let im = (-disc).sqrt() / 2.0;
    assert!((ev[0].im.abs() - im).abs() < 1e-12);
    assert!((ev[0].re - p.nu() * k * k / 2.0).abs() < 1e-12);
}

#[test]
fn poisson_limit_keeps_constraint_along_nonlinear_run() {
    let g = TorusGrid::periodic(2, 16).unwrap();
    let p = params();
    let kind = LimitKind::NsPoisson { m: 1.0, ell: 0.0 };
    let f = smooth_fields(&g, 0.02);
    let full = FieldState::from_physical(&g, &f).unwrap();
    let mut s = LimitState { t: 0.0, b: full.b, u: full.u, j0: full.j0 };
    compatibility_project(&g, &mut s, kind, &p).unwrap();
    let cfg = SolverConfig { dt: 0.01, ..SolverConfig::default() };
    let solver = LimitSolver::new(g, p, kind, CouplingFunctions::linear([0.5, 0.2, 0.3, 0.4]), cfg).unwrap();
    let mut worst: f64 = 0.0;
    solver.run(s, 0.5, 1, |s| worst = worst.max(solver.constraint_residual(s))).unwrap();
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn zero_state_stays_zero() {
    let g = TorusGrid::periodic(2, 8).unwrap();
    let cfg = SolverConfig::default();
    let fns = CouplingFunctions::linear([1.0; 4]);
    let solver = SpectralSolver::new(g.clone(), params(), fns, cfg).unwrap();
    let s = solver.run(FieldState::zeros(&g), 0.1, 1, |_| {}).unwrap();
    assert_eq!(s, FieldState { t: s.t, ..FieldState::zeros(&g) });
    for kind in [LimitKind::NonEq { kappa: 2.0, m: 1.0 }, LimitKind::ModifiedPressure, LimitKind::Barotropic] {
        let ls = LimitSolver::new(g.clone(), params(), kind, fns, cfg).unwrap();
        let s = ls.run(LimitState::zeros(&g), 0.1, 1, |_| {}).unwrap();
        assert!(s.b.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }
}
