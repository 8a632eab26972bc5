//! Pseudo-spectral IMEX solver on the periodic box.
//!
//! State is kept as Fourier coefficients. The stiff part (everything linear
//! about the rest state, including the radiative relaxation) is advanced
//! exactly: each wavevector splits into the compressible quartet
//! `(b, Λ^{-1}div u, j0, Λ^{-1}div j1)` propagated with a 4x4 matrix
//! exponential and the divergence-free parts of `u` and `j1`, which follow a
//! forced heat equation with a closed-form solution. The nonlinear remainder
//! is evaluated in physical space with 2/3 dealiasing and integrated with
//! Heun's method; the two parts are combined by Lie (first order) or Strang
//! (second order) splitting.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dyadic_norms::{xy_norm_snapshot, FieldSpectrum, NormInputs};
use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::linear_modes::{forced_heat, physical_mode_matrix, propagator};
use crate::params::{CouplingFunctions, PhysicalParams, RegimeKind, RegimeLabel};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Periodic box `[0, L)^dim` sampled on `N^dim` points.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    length: f64,
    fft: FftNd,
    lattice: Vec<[i64; 3]>,
    kvec: Vec<[f64; 3]>,
    ksq: Vec<f64>,
    mask: Vec<bool>,
}

impl TorusGrid {
    /// `n` must be a power of two, at least 8; `dim` is 1 (debug), 2 or 3.
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("{n} points per axis (need a power of two >= 8)")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("box length {length}")));
        }
        let total = n.pow(dim as u32);
        let ks = 2.0 * PI / length;
        let mut lattice = Vec::with_capacity(total);
        let mut kvec = Vec::with_capacity(total);
        let mut ksq = Vec::with_capacity(total);
        let mut mask = Vec::with_capacity(total);
        let cut = (n / 3) as i64;
        for flat in 0..total {
            let mut m = [0i64; 3];
            let mut rem = flat;
            for a in (0..dim).rev() {
                let i = rem % n;
                rem /= n;
                m[a] = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
            }
            let k = [ks * m[0] as f64, ks * m[1] as f64, ks * m[2] as f64];
            lattice.push(m);
            kvec.push(k);
            ksq.push(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
            mask.push(m.iter().all(|x| x.abs() <= cut));
        }
        Ok(TorusGrid { dim, n, length, fft: FftNd::new(dim, n), lattice, kvec, ksq, mask })
    }

    /// `2 pi` box.
    pub fn periodic(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn total(&self) -> usize {
        self.lattice.len()
    }

    pub fn k_scale(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn lattice(&self, flat: usize) -> [i64; 3] {
        self.lattice[flat]
    }

    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        self.kvec[flat]
    }

    pub fn k_sq(&self, flat: usize) -> f64 {
        self.ksq[flat]
    }

    /// Inside the 2/3-rule retained set (Nyquist modes are always dropped).
    pub fn retained(&self, flat: usize) -> bool {
        self.mask[flat]
    }

    /// Flat index of lattice vector `m`, if it lies on the grid.
    pub fn index_of(&self, m: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut flat = 0usize;
        for v in m.iter().take(self.dim) {
            if *v < -n / 2 || *v >= n / 2 {
                return None;
            }
            flat = flat * self.n + v.rem_euclid(n) as usize;
        }
        if m.iter().skip(self.dim).any(|v| *v != 0) {
            return None;
        }
        Some(flat)
    }

    /// Physical coordinates of grid point `flat`.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let h = self.length / self.n as f64;
        let mut x = [0.0; 3];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            x[a] = h * (rem % self.n) as f64;
            rem /= self.n;
        }
        x
    }

    pub fn forward(&self, x: &mut [Complex64]) {
        self.fft.forward(x)
    }

    pub fn inverse(&self, x: &mut [Complex64]) {
        self.fft.inverse(x)
    }

    /// Fourier coefficients of a real field.
    pub fn to_spectral(&self, f: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = f.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.fft.forward(&mut c);
        c
    }

    /// Physical values (real parts) and the largest discarded imaginary part.
    pub fn to_physical(&self, c: &[Complex64]) -> (Vec<f64>, f64) {
        let mut x = c.to_vec();
        self.fft.inverse(&mut x);
        let imag = x.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
        (x.into_iter().map(|z| z.re).collect(), imag)
    }

    pub fn dealias(&self, c: &mut [Complex64]) {
        for (v, keep) in c.iter_mut().zip(&self.mask) {
            if !keep {
                *v = ZERO;
            }
        }
    }

    /// Dense table as a sparse spectrum (scalar or stacked vector components).
    pub fn spectrum(&self, comps: &[&[Complex64]]) -> FieldSpectrum {
        let mut f = FieldSpectrum::new(self.dim);
        f.k_scale = self.k_scale();
        for flat in 0..self.total() {
            f.push(self.lattice[flat], comps.iter().map(|c| c[flat]).collect());
        }
        f
    }
}

/// `sqrt(sum |c_k|^2)` over one or more component tables.
pub fn l2_norm(comps: &[&[Complex64]]) -> f64 {
    comps.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn vec_refs(v: &[Vec<Complex64>]) -> Vec<&[Complex64]> {
    v.iter().map(|c| c.as_slice()).collect()
}

/// Fourier coefficients of `(b, u, j0, j1)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub b: Vec<Complex64>,
    pub u: Vec<Vec<Complex64>>,
    pub j0: Vec<Complex64>,
    pub j1: Vec<Vec<Complex64>>,
}

/// Physical-space values of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalFields {
    pub b: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub j0: Vec<f64>,
    pub j1: Vec<Vec<f64>>,
}

impl FieldState {
    pub fn zeros(grid: &TorusGrid) -> Self {
        let z = vec![ZERO; grid.total()];
        FieldState {
            t: 0.0,
            b: z.clone(),
            u: vec![z.clone(); grid.dim()],
            j0: z.clone(),
            j1: vec![z; grid.dim()],
        }
    }

    /// Transforms physical data; the result is dealiased.
    pub fn from_physical(grid: &TorusGrid, f: &PhysicalFields) -> Result<Self> {
        let d = grid.dim();
        if f.u.len() != d || f.j1.len() != d {
            return Err(Error::InvalidGrid("vector fields need one component per axis".into()));
        }
        let conv = |x: &[f64]| -> Result<Vec<Complex64>> {
            if x.len() != grid.total() {
                return Err(Error::InvalidGrid(format!("field has {} values, grid {}", x.len(), grid.total())));
            }
            let mut c = grid.to_spectral(x);
            grid.dealias(&mut c);
            Ok(c)
        };
        Ok(FieldState {
            t: 0.0,
            b: conv(&f.b)?,
            u: f.u.iter().map(|c| conv(c)).collect::<Result<_>>()?,
            j0: conv(&f.j0)?,
            j1: f.j1.iter().map(|c| conv(c)).collect::<Result<_>>()?,
        })
    }

    pub fn to_physical(&self, grid: &TorusGrid) -> (PhysicalFields, f64) {
        let mut imag: f64 = 0.0;
        let mut conv = |c: &[Complex64]| {
            let (x, im) = grid.to_physical(c);
            imag = imag.max(im);
            x
        };
        let b = conv(&self.b);
        let u = self.u.iter().map(|c| conv(c)).collect();
        let j0 = conv(&self.j0);
        let j1 = self.j1.iter().map(|c| conv(c)).collect();
        (PhysicalFields { b, u, j0, j1 }, imag)
    }

    pub fn is_finite(&self) -> bool {
        let ok = |c: &[Complex64]| c.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        ok(&self.b) && ok(&self.j0) && self.u.iter().all(|c| ok(c)) && self.j1.iter().all(|c| ok(c))
    }

    /// Compressible quartet of mode `flat` in original variables.
    pub fn mode_quartet(&self, grid: &TorusGrid, flat: usize) -> [Complex64; 4] {
        let (khat, _) = unit(grid, flat);
        let d = longitudinal(&self.u, &khat, flat);
        let j1l = longitudinal(&self.j1, &khat, flat);
        [self.b[flat], d, self.j0[flat], j1l]
    }
}

pub(crate) fn unit(grid: &TorusGrid, flat: usize) -> ([f64; 3], f64) {
    let k = grid.wavevector(flat);
    let kn = grid.k_sq(flat).sqrt();
    if kn == 0.0 {
        ([0.0; 3], 0.0)
    } else {
        ([k[0] / kn, k[1] / kn, k[2] / kn], kn)
    }
}

/// `i khat . v`, the coefficient of `Λ^{-1} div v`.
pub(crate) fn longitudinal(v: &[Vec<Complex64>], khat: &[f64; 3], flat: usize) -> Complex64 {
    let mut s = ZERO;
    for (a, c) in v.iter().enumerate() {
        s += c[flat] * khat[a];
    }
    I * s
}

/// Helmholtz split `v = P v + Q v`; the mean mode goes to `P`.
pub fn leray_project(grid: &TorusGrid, v: &[Vec<Complex64>]) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let d = v.len();
    let mut p = v.to_vec();
    let mut q = vec![vec![ZERO; grid.total()]; d];
    for flat in 0..grid.total() {
        let (khat, kn) = unit(grid, flat);
        if kn == 0.0 {
            continue;
        }
        let mut dot = ZERO;
        for a in 0..d {
            dot += v[a][flat] * khat[a];
        }
        for a in 0..d {
            q[a][flat] = dot * khat[a];
            p[a][flat] = v[a][flat] - q[a][flat];
        }
    }
    (p, q)
}

/// Extra momentum forcing proportional to `k4(b)`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum K4Forcing<'a> {
    /// `+ coef k4(b) j1`.
    Flux(&'a [Vec<Complex64>], f64),
    /// `- coef k4(b) grad j0`.
    GradJ0(&'a [Complex64], f64),
    /// `- coef k4(b) grad b`.
    GradB(f64),
    None,
}

/// Physical-space nonlinear remainder for density and velocity:
///
/// ```text
/// N_b = -u.grad b - k1(b) div u
/// N_u = -(u.grad) u + k2(b) A u - k3(b) grad b + (k4 forcing)
/// ```
///
/// with `A u = mu lap u + (lam + mu) grad div u`.
pub(crate) fn nonlinear_terms(
    grid: &TorusGrid,
    mu: f64,
    lam: f64,
    k: &CouplingFunctions,
    b: &[Complex64],
    u: &[Vec<Complex64>],
    forcing: K4Forcing<'_>,
) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
    let d = grid.dim();
    let total = grid.total();
    let deriv = |f: &[Complex64], a: usize| -> Vec<f64> {
        let c: Vec<Complex64> =
            (0..total).map(|i| f[i] * Complex64::new(0.0, grid.wavevector(i)[a])).collect();
        grid.to_physical(&c).0
    };
    let phys = |f: &[Complex64]| grid.to_physical(f).0;

    let bx = phys(b);
    let grad_b: Vec<Vec<f64>> = (0..d).map(|a| deriv(b, a)).collect();
    let ux: Vec<Vec<f64>> = u.iter().map(|c| phys(c)).collect();
    let grad_u: Vec<Vec<Vec<f64>>> = u.iter().map(|c| (0..d).map(|a| deriv(c, a)).collect()).collect();
    // div u and A u in spectral space
    let mut div_hat = vec![ZERO; total];
    for i in 0..total {
        let kv = grid.wavevector(i);
        for a in 0..d {
            div_hat[i] += I * kv[a] * u[a][i];
        }
    }
    let divx = phys(&div_hat);
    let au: Vec<Vec<f64>> = (0..d)
        .map(|c| {
            let v: Vec<Complex64> = (0..total)
                .map(|i| {
                    let kv = grid.wavevector(i);
                    u[c][i] * (-mu * grid.k_sq(i)) + I * kv[c] * div_hat[i] * (lam + mu)
                })
                .collect();
            phys(&v)
        })
        .collect();
    let extra: Option<Vec<Vec<f64>>> = match forcing {
        K4Forcing::Flux(j1, _) => Some(j1.iter().map(|c| phys(c)).collect()),
        K4Forcing::GradJ0(j0, _) => Some((0..d).map(|a| deriv(j0, a)).collect()),
        K4Forcing::GradB(_) | K4Forcing::None => None,
    };

    let mut nb = vec![ZERO; total];
    let mut nu: Vec<Vec<Complex64>> = vec![vec![ZERO; total]; d];
    for i in 0..total {
        let bv = bx[i];
        let (k1, k2, k3, k4) = (k.k(1, bv), k.k(2, bv), k.k(3, bv), k.k(4, bv));
        let mut adv = 0.0;
        for a in 0..d {
            adv += ux[a][i] * grad_b[a][i];
        }
        nb[i] = Complex64::new(-adv - k1 * divx[i], 0.0);
        for c in 0..d {
            let mut conv = 0.0;
            for a in 0..d {
                conv += ux[a][i] * grad_u[c][a][i];
            }
            let mut v = -conv + k2 * au[c][i] - k3 * grad_b[c][i];
            match (&forcing, &extra) {
                (K4Forcing::Flux(_, coef), Some(e)) => v += coef * k4 * e[c][i],
                (K4Forcing::GradJ0(_, coef), Some(e)) => v -= coef * k4 * e[c][i],
                (K4Forcing::GradB(coef), _) => v -= coef * k4 * grad_b[c][i],
                _ => {}
            }
            nu[c][i] = Complex64::new(v, 0.0);
        }
    }
    grid.forward(&mut nb);
    grid.dealias(&mut nb);
    if nb.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NaNDetected { field: "b" });
    }
    for c in nu.iter_mut() {
        grid.forward(c);
        grid.dealias(c);
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NaNDetected { field: "u" });
        }
    }
    Ok((nb, nu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Lie splitting, first order.
    Imex1,
    /// Strang splitting, second order.
    Imex2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub nonlinear_on: bool,
    /// Initial data must satisfy `X <= smallness_eta * nu` for nonlinear runs.
    pub smallness_eta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { dt: 1e-2, scheme: Scheme::Imex2, nonlinear_on: true, smallness_eta: 0.1 }
    }
}

/// Exact linear step for one wavevector magnitude.
#[derive(Debug, Clone)]
struct ModeProp {
    quartet: [[f64; 4]; 4],
    /// `u_T <- eu u_T + w j1_T`, `j1_T <- ej j1_T`.
    eu: f64,
    ej: f64,
    w: f64,
}

#[derive(Debug, Clone)]
struct LinearStep {
    props: Vec<ModeProp>,
    index: Vec<usize>,
}

impl LinearStep {
    fn new(grid: &TorusGrid, p: &PhysicalParams, dt: f64) -> Result<Self> {
        let mut by_ksq: BTreeMap<u64, usize> = BTreeMap::new();
        let mut props = Vec::new();
        let mut index = Vec::with_capacity(grid.total());
        let rj = p.ell * p.m_cal() / p.eps;
        let coupling = p.ell * p.m_cal() / p.n();
        for flat in 0..grid.total() {
            let m = grid.lattice(flat);
            let key = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as u64;
            let id = match by_ksq.get(&key) {
                Some(id) => *id,
                None => {
                    let k = grid.k_sq(flat).sqrt();
                    let e = propagator(&physical_mode_matrix(k, p), dt)?;
                    let mut quartet = [[0.0; 4]; 4];
                    for (r, row) in quartet.iter_mut().enumerate() {
                        for (c, v) in row.iter_mut().enumerate() {
                            *v = e[(r, c)];
                        }
                    }
                    let ru = p.mu * k * k;
                    let (wu, _) = forced_heat(ru, rj, coupling, ZERO, Complex64::new(1.0, 0.0), dt);
                    props.push(ModeProp { quartet, eu: (-ru * dt).exp(), ej: (-rj * dt).exp(), w: wu.re });
                    by_ksq.insert(key, props.len() - 1);
                    props.len() - 1
                }
            };
            index.push(id);
        }
        Ok(LinearStep { props, index })
    }

    fn apply(&self, grid: &TorusGrid, s: &mut FieldState) {
        let d = grid.dim();
        for flat in 0..grid.total() {
            let pr = &self.props[self.index[flat]];
            let (khat, kn) = unit(grid, flat);
            let dl = if kn == 0.0 { ZERO } else { longitudinal(&s.u, &khat, flat) };
            let jl = if kn == 0.0 { ZERO } else { longitudinal(&s.j1, &khat, flat) };
            let x = [s.b[flat], dl, s.j0[flat], jl];
            let mut y = [ZERO; 4];
            for (r, yr) in y.iter_mut().enumerate() {
                for (c, xc) in x.iter().enumerate() {
                    *yr += xc * pr.quartet[r][c];
                }
            }
            s.b[flat] = y[0];
            s.j0[flat] = y[2];
            for a in 0..d {
                // transverse parts: v - khat (khat . v), khat . v = -i (longitudinal)
                let ut = s.u[a][flat] - (-I * dl) * khat[a];
                let jt = s.j1[a][flat] - (-I * jl) * khat[a];
                let ut_new = ut * pr.eu + jt * pr.w;
                let jt_new = jt * pr.ej;
                s.u[a][flat] = ut_new + (-I * y[1]) * khat[a];
                s.j1[a][flat] = jt_new + (-I * y[3]) * khat[a];
            }
        }
    }
}

/// Summary numbers recorded with each snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    /// Mean of `b`.
    pub mass: f64,
    pub energy: f64,
    pub l2_b: f64,
    pub l2_u: f64,
    pub l2_j0: f64,
    pub l2_j1: f64,
    /// `||P j1||`.
    pub pj1: f64,
    pub max_b: f64,
    pub imag_residue: f64,
    /// Regime-free Besov norm (nonequilibrium form).
    pub x_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preflight {
    /// Largest step the explicit part tolerates (infinite if nothing moves).
    pub dt_bound: f64,
    pub x_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralSolver {
    grid: TorusGrid,
    params: PhysicalParams,
    coupling: CouplingFunctions,
    cfg: SolverConfig,
    full: LinearStep,
    half: Option<LinearStep>,
}

impl SpectralSolver {
    pub fn new(
        grid: TorusGrid,
        params: PhysicalParams,
        coupling: CouplingFunctions,
        cfg: SolverConfig,
    ) -> Result<Self> {
        params.validate()?;
        if grid.dim() != params.dim && grid.dim() != 1 {
            return Err(Error::InvalidGrid(format!(
                "grid dimension {} does not match n = {}",
                grid.dim(),
                params.dim
            )));
        }
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(Error::PreconditionViolated(format!("time step {}", cfg.dt)));
        }
        let full = LinearStep::new(&grid, &params, cfg.dt)?;
        let half = match cfg.scheme {
            Scheme::Imex2 => Some(LinearStep::new(&grid, &params, 0.5 * cfg.dt)?),
            Scheme::Imex1 => None,
        };
        Ok(SpectralSolver { grid, params, coupling, cfg, full, half })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Linear part `L(U)` (the stiff operator) evaluated spectrally from the
    /// equations, independently of the propagator.
    pub fn linear_rhs(&self, s: &FieldState) -> FieldState {
        let g = &self.grid;
        let p = &self.params;
        let d = g.dim();
        let n = p.n();
        let lm = p.ell * p.m_cal();
        let mut out = FieldState::zeros(g);
        out.t = s.t;
        for i in 0..g.total() {
            let k = g.wavevector(i);
            let k2 = g.k_sq(i);
            let mut div_u = ZERO;
            let mut div_j1 = ZERO;
            for a in 0..d {
                div_u += I * k[a] * s.u[a][i];
                div_j1 += I * k[a] * s.j1[a][i];
            }
            out.b[i] = -div_u;
            out.j0[i] = (s.b[i] - s.j0[i]) * (p.ell / p.eps) - div_j1 / (n * p.eps);
            for a in 0..d {
                let au = s.u[a][i] * (-p.mu * k2) + I * k[a] * div_u * (p.lam + p.mu);
                out.u[a][i] = au - I * k[a] * s.b[i] + s.j1[a][i] * (lm / n);
                out.j1[a][i] = (-(I * k[a] * s.j0[i]) - s.j1[a][i] * lm) / p.eps;
            }
        }
        out
    }

    /// Explicit remainder `N(U)`; only `b` and `u` are nonzero.
    pub fn nonlinear_rhs(&self, s: &FieldState) -> Result<FieldState> {
        let p = &self.params;
        let (nb, nu) = nonlinear_terms(
            &self.grid,
            p.mu,
            p.lam,
            &self.coupling,
            &s.b,
            &s.u,
            K4Forcing::Flux(&s.j1, p.ell * p.m_cal() / p.n()),
        )?;
        let mut out = FieldState::zeros(&self.grid);
        out.t = s.t;
        out.b = nb;
        out.u = nu;
        Ok(out)
    }

    /// `(L(U), N(U))`.
    pub fn rhs_split(&self, s: &FieldState) -> Result<(FieldState, FieldState)> {
        Ok((self.linear_rhs(s), self.nonlinear_rhs(s)?))
    }

    fn heun(&self, s: &mut FieldState) -> Result<()> {
        let dt = self.cfg.dt;
        let k1 = self.nonlinear_rhs(s)?;
        let mut mid = s.clone();
        axpy(&mut mid, dt, &k1);
        let k2 = self.nonlinear_rhs(&mid)?;
        axpy(s, 0.5 * dt, &k1);
        axpy(s, 0.5 * dt, &k2);
        Ok(())
    }

    /// Advances by one step of size `dt`.
    pub fn step(&self, s: &mut FieldState) -> Result<()> {
        match (self.cfg.scheme, &self.half) {
            (Scheme::Imex2, Some(half)) if self.cfg.nonlinear_on => {
                half.apply(&self.grid, s);
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
        s.t += self.cfg.dt;
        if !s.is_finite() {
            return Err(Error::NaNDetected { field: "state" });
        }
        let (bx, _) = self.grid.to_physical(&s.b);
        let max_b = bx.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if max_b >= 1.0 {
            return Err(Error::StepRejected { t: s.t, max_b });
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end` exactly.
    pub fn steps_to(&self, t_end: f64) -> Result<usize> {
        let k = (t_end / self.cfg.dt).round();
        if (k * self.cfg.dt - t_end).abs() > 1e-9 * t_end.abs().max(1.0) {
            return Err(Error::PreconditionViolated(format!(
                "t_end = {t_end} is not a multiple of dt = {}",
                self.cfg.dt
            )));
        }
        Ok(k as usize)
    }

    /// Runs to `t_end`, handing every `record_every`-th state (and the
    /// initial one) to `observer`.
    pub fn run<F>(&self, mut s: FieldState, t_end: f64, record_every: usize, mut observer: F) -> Result<FieldState>
    where
        F: FnMut(&FieldState),
    {
        let steps = self.steps_to(t_end - s.t)?;
        let every = record_every.max(1);
        observer(&s);
        for k in 1..=steps {
            self.step(&mut s)?;
            if k % every == 0 || k == steps {
                observer(&s);
            }
        }
        Ok(s)
    }

    /// Norm used by the smallness guard.
    pub fn state_norm(&self, s: &FieldState) -> f64 {
        state_norm(&self.grid, &self.params, s)
    }

    /// Checks the explicit step against the current data and the smallness
    /// condition. Purely linear runs are exact and skip both.
    pub fn preflight(&self, s: &FieldState) -> Result<Preflight> {
        let x_norm = self.state_norm(s);
        if !self.cfg.nonlinear_on {
            return Ok(Preflight { dt_bound: f64::INFINITY, x_norm });
        }
        let bound = self.cfg.smallness_eta * self.params.nu();
        if x_norm > bound {
            return Err(Error::SmallnessExceeded { norm: x_norm, bound });
        }
        let (ph, _) = s.to_physical(&self.grid);
        let kmax = self.grid.k_scale() * (self.grid.points_per_axis() / 3) as f64 * (self.grid.dim() as f64).sqrt();
        let umax = ph.u.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut kb = [0.0f64; 4];
        for v in &ph.b {
            for (i, m) in kb.iter_mut().enumerate() {
                *m = m.max(self.coupling.k(i + 1, *v).abs());
            }
        }
        let rate = umax * kmax + kb[0] * kmax + kb[1] * self.params.nu() * kmax * kmax + kb[2] * kmax;
        let dt_bound = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
        if self.cfg.dt > dt_bound {
            return Err(Error::PreconditionViolated(format!(
                "dt = {} exceeds the explicit bound {dt_bound:e}",
                self.cfg.dt
            )));
        }
        Ok(Preflight { dt_bound, x_norm })
    }

    pub fn diagnostics(&self, s: &FieldState) -> Diagnostics {
        let g = &self.grid;
        let (ph, imag) = s.to_physical(g);
        let (pj1, _) = leray_project(g, &s.j1);
        let l2_b = l2_norm(&[&s.b]);
        let l2_u = l2_norm(&vec_refs(&s.u));
        let l2_j0 = l2_norm(&[&s.j0]);
        let l2_j1 = l2_norm(&vec_refs(&s.j1));
        Diagnostics {
            t: s.t,
            mass: s.b[0].re,
            energy: 0.5 * (l2_b * l2_b + l2_u * l2_u + l2_j0 * l2_j0 + l2_j1 * l2_j1),
            l2_b,
            l2_u,
            l2_j0,
            l2_j1,
            pj1: l2_norm(&vec_refs(&pj1)),
            max_b: ph.b.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            imag_residue: imag,
            x_norm: self.state_norm(s),
        }
    }

    /// Decay rate of `P j1`, `ell (1 + ell_s) / eps`.
    pub fn flux_decay_rate(&self) -> f64 {
        self.params.ell * self.params.m_cal() / self.params.eps
    }
}

fn axpy(s: &mut FieldState, a: f64, x: &FieldState) {
    for (y, v) in s.b.iter_mut().zip(&x.b) {
        *y += v * a;
    }
    for (yc, xc) in s.u.iter_mut().zip(&x.u) {
        for (y, v) in yc.iter_mut().zip(xc) {
            *y += v * a;
        }
    }
}

/// `||b||^{l}_{n/2-1} + nu ||b||^{h}_{n/2} + ||(u, j0, j1)||_{n/2-1}`.
pub fn state_norm(grid: &TorusGrid, p: &PhysicalParams, s: &FieldState) -> f64 {
    let b = grid.spectrum(&[&s.b]);
    let u = grid.spectrum(&vec_refs(&s.u));
    let j0 = grid.spectrum(&[&s.j0]);
    let j1 = grid.spectrum(&vec_refs(&s.j1));
    let label = RegimeLabel { kind: RegimeKind::NonEquilibrium, kappa: None, m: None, ell_limit: None };
    let mut q = *p;
    q.dim = grid.dim();
    xy_norm_snapshot(&NormInputs { b: &b, u: &u, j0: &j0, j1: &j1 }, &label, &q)
        .map(|r| r.total)
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(TorusGrid::periodic(2, 12).is_err());
        assert!(TorusGrid::periodic(2, 4).is_err());
        assert!(TorusGrid::periodic(4, 8).is_err());
        assert!(TorusGrid::periodic(2, 16).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let g = TorusGrid::periodic(3, 8).unwrap();
        for flat in 0..g.total() {
            assert_eq!(g.index_of(g.lattice(flat)), Some(flat));
        }
    }

    #[test]
    fn leray_mean_goes_to_p() {
        let g = TorusGrid::periodic(2, 8).unwrap();
        let mut v = vec![vec![ZERO; g.total()]; 2];
        v[0][0] = Complex64::new(1.0, 0.0);
        let (p, q) = leray_project(&g, &v);
        assert_eq!(p[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(q[0][0], ZERO);
    }
}
