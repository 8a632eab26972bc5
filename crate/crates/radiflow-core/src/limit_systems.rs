//! Limiting models reached as the relaxation parameter goes to zero, solved
//! with the same pseudo-spectral machinery as the full system.
//!
//! All limits keep the continuity equation and the compressible momentum
//! equation; they differ in how the radiative energy `j0` enters:
//!
//! * `NonEq { kappa, m }`: `j0_t + kappa/(n nu) (j0 - b - nu^2/(n m) lap j0) = 0`
//!   and momentum forcing `(1/n)(1 + k4) grad j0`;
//! * `DegenNonEq { kappa }`: same without the diffusion term;
//! * `NsPoisson { m, ell }`: `-nu^2 lap j0 + n (ell^2 + m)(j0 - b) = 0`;
//! * `ModifiedPressure`: no `j0`, pressure gradient
//!   `(1 + 1/n + k3 + k4/n) grad b`;
//! * `Barotropic`: no radiation at all.
//!
//! The linear part of each model is advanced exactly per mode; the nonlinear
//! remainder uses Heun's method with Lie or Strang splitting.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::linear_modes::{forced_heat, propagator};
use crate::params::{CouplingFunctions, PhysicalParams};
use crate::spectral_solver::{
    l2_norm, longitudinal, nonlinear_terms, unit, vec_refs, K4Forcing, Scheme, SolverConfig,
    TorusGrid,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitKind {
    NonEq { kappa: f64, m: f64 },
    DegenNonEq { kappa: f64 },
    NsPoisson { m: f64, ell: f64 },
    ModifiedPressure,
    Barotropic,
}

impl LimitKind {
    pub fn name(&self) -> &'static str {
        match self {
            LimitKind::NonEq { .. } => "noneq",
            LimitKind::DegenNonEq { .. } => "degen",
            LimitKind::NsPoisson { .. } => "poisson",
            LimitKind::ModifiedPressure => "modpressure",
            LimitKind::Barotropic => "barotropic",
        }
    }

    fn has_dynamic_j0(&self) -> bool {
        matches!(self, LimitKind::NonEq { .. } | LimitKind::DegenNonEq { .. })
    }
}

/// Fourier coefficients of `(b, u, j0)`. For the pressure-type limits `j0`
/// is slaved to `b` and only kept for comparison with the full system.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub t: f64,
    pub b: Vec<Complex64>,
    pub u: Vec<Vec<Complex64>>,
    pub j0: Vec<Complex64>,
}

impl LimitState {
    pub fn zeros(grid: &TorusGrid) -> Self {
        let z = vec![ZERO; grid.total()];
        LimitState { t: 0.0, b: z.clone(), u: vec![z.clone(); grid.dim()], j0: z }
    }

    pub fn is_finite(&self) -> bool {
        let ok = |c: &[Complex64]| c.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        ok(&self.b) && ok(&self.j0) && self.u.iter().all(|c| ok(c))
    }
}

/// Multiplier `G(k) = n a / (nu^2 k^2 + n a)` with `a = ell^2 + m`.
fn poisson_symbol(k_sq: f64, nu: f64, n: f64, a: f64) -> f64 {
    n * a / (nu * nu * k_sq + n * a)
}

/// Solves `-nu^2 lap j0 + n (ell^2 + m)(j0 - b) = 0` mode by mode.
pub fn solve_elliptic_j0(
    grid: &TorusGrid,
    b: &[Complex64],
    nu: f64,
    n: f64,
    m: f64,
    ell: f64,
) -> Result<Vec<Complex64>> {
    let a = ell * ell + m;
    if !(a > 0.0 && a.is_finite() && nu > 0.0) {
        return Err(Error::EllipticSolveFailed);
    }
    let j0: Vec<Complex64> =
        (0..grid.total()).map(|i| b[i] * poisson_symbol(grid.k_sq(i), nu, n, a)).collect();
    if j0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EllipticSolveFailed);
    }
    Ok(j0)
}

/// `|| -nu^2 lap j0 + n (ell^2 + m)(j0 - b) ||`.
pub fn poisson_residual(grid: &TorusGrid, s: &LimitState, nu: f64, n: f64, m: f64, ell: f64) -> f64 {
    let a = ell * ell + m;
    let r: Vec<Complex64> = (0..grid.total())
        .map(|i| s.j0[i] * (nu * nu * grid.k_sq(i)) + (s.j0[i] - s.b[i]) * (n * a))
        .collect();
    l2_norm(&[&r])
}

/// Puts `j0` on the constraint manifold of the limit (no-op for the
/// nonequilibrium limits, where `j0` is an independent unknown).
pub fn compatibility_project(grid: &TorusGrid, s: &mut LimitState, kind: LimitKind, p: &PhysicalParams) -> Result<()> {
    match kind {
        LimitKind::NsPoisson { m, ell } => {
            s.j0 = solve_elliptic_j0(grid, &s.b, p.nu(), p.n(), m, ell)?;
        }
        LimitKind::ModifiedPressure | LimitKind::Barotropic => s.j0 = s.b.clone(),
        LimitKind::NonEq { .. } | LimitKind::DegenNonEq { .. } => {}
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct LimitProp {
    /// 3x3 on `(b, d, j0)` or 2x2 on `(b, d)` padded with an identity row.
    block: [[f64; 3]; 3],
    eu: f64,
}

/// Linear mode matrix of the limit at frequency `k`.
pub fn limit_mode_matrix(kind: LimitKind, p: &PhysicalParams, k: f64) -> Mat {
    let n = p.n();
    let nu = p.nu();
    let k2 = k * k;
    let pressure_2x2 = |c: f64| Mat::from_rows([[0.0, k], [-c * k, nu * k2]]);
    match kind {
        LimitKind::NonEq { kappa, m } => {
            let r = kappa / (n * nu);
            Mat::from_rows([
                [0.0, k, 0.0],
                [-k, nu * k2, -k / n],
                [-r, 0.0, r * (1.0 + nu * nu * k2 / (n * m))],
            ])
        }
        LimitKind::DegenNonEq { kappa } => {
            let r = kappa / (n * nu);
            Mat::from_rows([[0.0, k, 0.0], [-k, nu * k2, -k / n], [-r, 0.0, r]])
        }
        LimitKind::NsPoisson { m, ell } => {
            pressure_2x2(1.0 + poisson_symbol(k2, nu, n, ell * ell + m) / n)
        }
        LimitKind::ModifiedPressure => pressure_2x2(1.0 + 1.0 / n),
        LimitKind::Barotropic => pressure_2x2(1.0),
    }
}

#[derive(Debug, Clone)]
struct LimitStep {
    props: Vec<LimitProp>,
    index: Vec<usize>,
}

impl LimitStep {
    fn new(grid: &TorusGrid, p: &PhysicalParams, kind: LimitKind, dt: f64) -> Result<Self> {
        let mut by_ksq: BTreeMap<u64, usize> = BTreeMap::new();
        let mut props = Vec::new();
        let mut index = Vec::with_capacity(grid.total());
        for flat in 0..grid.total() {
            let m = grid.lattice(flat);
            let key = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as u64;
            let id = match by_ksq.get(&key) {
                Some(id) => *id,
                None => {
                    let k = grid.k_sq(flat).sqrt();
                    let e = propagator(&limit_mode_matrix(kind, p, k), dt)?;
                    let mut block = [[0.0; 3]; 3];
                    block[2][2] = 1.0;
                    for r in 0..e.rows() {
                        for c in 0..e.cols() {
                            block[r][c] = e[(r, c)];
                        }
                    }
                    props.push(LimitProp { block, eu: (-p.mu * k * k * dt).exp() });
                    by_ksq.insert(key, props.len() - 1);
                    props.len() - 1
                }
            };
            index.push(id);
        }
        Ok(LimitStep { props, index })
    }

    fn apply(&self, grid: &TorusGrid, s: &mut LimitState) {
        for flat in 0..grid.total() {
            let pr = &self.props[self.index[flat]];
            let (khat, kn) = unit(grid, flat);
            let dl = if kn == 0.0 { ZERO } else { longitudinal(&s.u, &khat, flat) };
            let x = [s.b[flat], dl, s.j0[flat]];
            let mut y = [ZERO; 3];
            for (r, yr) in y.iter_mut().enumerate() {
                for (c, xc) in x.iter().enumerate() {
                    *yr += xc * pr.block[r][c];
                }
            }
            s.b[flat] = y[0];
            s.j0[flat] = y[2];
            for a in 0..grid.dim() {
                let ut = s.u[a][flat] - (-I * dl) * khat[a];
                s.u[a][flat] = ut * pr.eu + (-I * y[1]) * khat[a];
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LimitSolver {
    grid: TorusGrid,
    params: PhysicalParams,
    kind: LimitKind,
    coupling: CouplingFunctions,
    cfg: SolverConfig,
    full: LimitStep,
    half: Option<LimitStep>,
}

impl LimitSolver {
    /// Only `mu`, `lam` and `dim` of `params` are used.
    pub fn new(
        grid: TorusGrid,
        params: PhysicalParams,
        kind: LimitKind,
        coupling: CouplingFunctions,
        cfg: SolverConfig,
    ) -> Result<Self> {
        params.validate()?;
        match kind {
            LimitKind::NonEq { kappa, m } if !(kappa > 0.0 && m > 0.0) => {
                return Err(Error::InvalidParams("need kappa > 0 and m > 0".into()));
            }
            LimitKind::DegenNonEq { kappa } if kappa <= 0.0 => {
                return Err(Error::InvalidParams("need kappa > 0".into()));
            }
            LimitKind::NsPoisson { m, ell } if !(m >= 0.0 && ell >= 0.0 && m + ell * ell > 0.0) => {
                return Err(Error::EllipticSolveFailed);
            }
            _ => {}
        }
        let full = LimitStep::new(&grid, &params, kind, cfg.dt)?;
        let half = match cfg.scheme {
            Scheme::Imex2 => Some(LimitStep::new(&grid, &params, kind, 0.5 * cfg.dt)?),
            Scheme::Imex1 => None,
        };
        Ok(LimitSolver { grid, params, kind, coupling, cfg, full, half })
    }

    pub fn kind(&self) -> LimitKind {
        self.kind
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn nonlinear(&self, s: &LimitState) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
        let p = &self.params;
        let inv_n = 1.0 / p.n();
        let poisson_j0;
        let forcing = match self.kind {
            LimitKind::NonEq { .. } | LimitKind::DegenNonEq { .. } => K4Forcing::GradJ0(&s.j0, inv_n),
            LimitKind::NsPoisson { m, ell } => {
                poisson_j0 = solve_elliptic_j0(&self.grid, &s.b, p.nu(), p.n(), m, ell)?;
                K4Forcing::GradJ0(&poisson_j0, inv_n)
            }
            LimitKind::ModifiedPressure => K4Forcing::GradB(inv_n),
            LimitKind::Barotropic => K4Forcing::None,
        };
        nonlinear_terms(&self.grid, p.mu, p.lam, &self.coupling, &s.b, &s.u, forcing)
    }

    fn heun(&self, s: &mut LimitState) -> Result<()> {
        let dt = self.cfg.dt;
        let (kb1, ku1) = self.nonlinear(s)?;
        let mut mid = s.clone();
        axpy(&mut mid, dt, &kb1, &ku1);
        self.slave(&mut mid)?;
        let (kb2, ku2) = self.nonlinear(&mid)?;
        axpy(s, 0.5 * dt, &kb1, &ku1);
        axpy(s, 0.5 * dt, &kb2, &ku2);
        Ok(())
    }

    fn slave(&self, s: &mut LimitState) -> Result<()> {
        if !self.kind.has_dynamic_j0() {
            compatibility_project(&self.grid, s, self.kind, &self.params)?;
        }
        Ok(())
    }

    /// One step of size `dt`; slaved `j0` is recomputed after every stage.
    pub fn step_limit(&self, s: &mut LimitState) -> Result<()> {
        match (self.cfg.scheme, &self.half) {
            (Scheme::Imex2, Some(half)) if self.cfg.nonlinear_on => {
                half.apply(&self.grid, s);
                self.slave(s)?;
                self.heun(s)?;
                half.apply(&self.grid, s);
            }
            _ => {
                if self.cfg.nonlinear_on {
                    self.heun(s)?;
                }
                self.full.apply(&self.grid, s);
            }
        }
        self.slave(s)?;
        s.t += self.cfg.dt;
        if !s.is_finite() {
            return Err(Error::NaNDetected { field: "limit state" });
        }
        let (bx, _) = self.grid.to_physical(&s.b);
        let max_b = bx.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if max_b >= 1.0 {
            return Err(Error::StepRejected { t: s.t, max_b });
        }
        Ok(())
    }

    pub fn run<F>(&self, mut s: LimitState, t_end: f64, record_every: usize, mut observer: F) -> Result<LimitState>
    where
        F: FnMut(&LimitState),
    {
        let k = (t_end - s.t) / self.cfg.dt;
        let steps = k.round();
        if (steps - k).abs() > 1e-9 * k.abs().max(1.0) {
            return Err(Error::PreconditionViolated("t_end is not a multiple of dt".into()));
        }
        let steps = steps as usize;
        let every = record_every.max(1);
        self.slave(&mut s)?;
        observer(&s);
        for i in 1..=steps {
            self.step_limit(&mut s)?;
            if i % every == 0 || i == steps {
                observer(&s);
            }
        }
        Ok(s)
    }

    /// Constraint residual of the Poisson limit (zero for the other kinds).
    pub fn constraint_residual(&self, s: &LimitState) -> f64 {
        match self.kind {
            LimitKind::NsPoisson { m, ell } => {
                poisson_residual(&self.grid, s, self.params.nu(), self.params.n(), m, ell)
            }
            _ => 0.0,
        }
    }

    pub fn l2(&self, s: &LimitState) -> (f64, f64, f64) {
        (l2_norm(&[&s.b]), l2_norm(&vec_refs(&s.u)), l2_norm(&[&s.j0]))
    }
}

fn axpy(s: &mut LimitState, a: f64, nb: &[Complex64], nu: &[Vec<Complex64>]) {
    for (y, v) in s.b.iter_mut().zip(nb) {
        *y += v * a;
    }
    for (yc, xc) in s.u.iter_mut().zip(nu) {
        for (y, v) in yc.iter_mut().zip(xc) {
            *y += v * a;
        }
    }
}

/// Exact solution of the linear limit for a single longitudinal mode; handy
/// as a reference.
pub fn limit_mode_solution(kind: LimitKind, p: &PhysicalParams, k: f64, x0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let e = propagator(&limit_mode_matrix(kind, p, k), t)?;
    Ok(e.apply_complex(x0))
}

/// Divergence-free velocity decays like the heat equation in every limit.
pub fn transverse_factor(p: &PhysicalParams, k: f64, t: f64) -> f64 {
    forced_heat(p.mu * k * k, 0.0, 0.0, Complex64::new(1.0, 0.0), ZERO, t).0.re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elliptic_example() {
        // nu = 1, n = 2, m = 1, single b mode at |k| = 1: j0 = 2/3 b
        let g = TorusGrid::periodic(2, 8).unwrap();
        let mut b = vec![ZERO; g.total()];
        let idx = g.index_of([1, 0, 0]).unwrap();
        b[idx] = Complex64::new(1.0, 0.0);
        let j0 = solve_elliptic_j0(&g, &b, 1.0, 2.0, 1.0, 0.0).unwrap();
        assert!((j0[idx].re - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_poisson_rejected() {
        let g = TorusGrid::periodic(2, 8).unwrap();
        let b = vec![ZERO; g.total()];
        assert_eq!(solve_elliptic_j0(&g, &b, 1.0, 2.0, 0.0, 0.0), Err(Error::EllipticSolveFailed));
    }
}
