//! Fourier-mode analysis of the linearised system.
//!
//! After rescaling time and space by `nu`, a compressible mode
//! `U = (b, d, j0, j1)` at frequency `rho` (with `d = Λ^{-1} div u`,
//! `j1 = Λ^{-1} div j1` and `j0` multiplied by `sqrt(n)`) obeys
//! `U' + M(rho) U = 0` with
//!
//! ```text
//! [  0            rho        0               0              ]
//! [ -rho          rho^2      0              -L M / n        ]
//! [ -sqrt(n) L/e  0          L/e             rho/(e sqrt n)  ]
//! [  0            0         -rho/(e sqrt n)  L M / e         ]
//! ```
//!
//! where `L = nu ell`, `M = 1 + ell_s`, `e = eps`. The divergence-free parts
//! decouple into a scalar heat equation forced by an exponentially decaying
//! radiative flux.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::eigen;
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::linalg::Mat;
use crate::params::{effective_viscosity, PhysicalParams, RegimeKind};
use crate::toy_ode::{build_class_e, Approach, ToyCoefficients};

/// Absolute tolerance under which a real part counts as zero.
pub const NEUTRAL_TOL: f64 = 1e-10;

/// Coefficients of a compressible mode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeState {
    pub b: Complex64,
    pub d: Complex64,
    pub j0: Complex64,
    pub j1: Complex64,
}

impl ModeState {
    pub fn new(b: Complex64, d: Complex64, j0: Complex64, j1: Complex64) -> Self {
        ModeState { b, d, j0, j1 }
    }

    pub fn real(b: f64, d: f64, j0: f64, j1: f64) -> Self {
        let c = |x| Complex64::new(x, 0.0);
        ModeState { b: c(b), d: c(d), j0: c(j0), j1: c(j1) }
    }

    pub fn to_array(&self) -> [Complex64; 4] {
        [self.b, self.d, self.j0, self.j1]
    }

    pub fn from_slice(v: &[Complex64]) -> Self {
        ModeState { b: v[0], d: v[1], j0: v[2], j1: v[3] }
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Coefficients of the abstract class that reproduce `M(rho)`.
pub fn class_coefficients(p: &PhysicalParams) -> ToyCoefficients {
    let n = p.n();
    let l = p.ell_tilde();
    let m = p.m_cal();
    ToyCoefficients {
        alpha: 1.0 / (p.eps * n.sqrt()),
        beta: l / p.eps,
        gamma: l * m / p.eps,
        sigma: l * m / n,
        eta: n.sqrt() * l / p.eps,
    }
}

/// `M(rho)` in rescaled variables.
pub fn mode_matrix(rho: f64, p: &PhysicalParams) -> Mat {
    let n = p.n();
    let sn = n.sqrt();
    let l = p.ell_tilde();
    let m = p.m_cal();
    let e = p.eps;
    Mat::from_rows([
        [0.0, rho, 0.0, 0.0],
        [-rho, rho * rho, 0.0, -l * m / n],
        [-sn * l / e, 0.0, l / e, rho / (e * sn)],
        [0.0, 0.0, -rho / (e * sn), l * m / e],
    ])
}

/// Mode matrix in the original (unscaled) variables at physical frequency
/// `k`: `(1/nu) D^{-1} M(nu k) D` with `D = diag(1, 1, sqrt n, 1)`.
pub fn physical_mode_matrix(k: f64, p: &PhysicalParams) -> Mat {
    let n = p.n();
    let nu = p.nu();
    let lm = p.ell * p.m_cal();
    let e = p.eps;
    Mat::from_rows([
        [0.0, k, 0.0, 0.0],
        [-k, nu * k * k, 0.0, -lm / n],
        [-p.ell / e, 0.0, p.ell / e, k / (n * e)],
        [0.0, 0.0, -k / e, lm / e],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Neutral,
    Unstable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub rho: f64,
    /// Sorted by ascending real part.
    pub eigenvalues: Vec<Complex64>,
    pub verdict: Verdict,
}

impl Spectrum {
    pub fn min_re(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

/// Eigenvalues of `M(rho)`. Modes behave like `exp(-lambda t)`, so stability
/// means every real part is non-negative.
pub fn eigen_spectrum(rho: f64, p: &PhysicalParams) -> Result<Spectrum> {
    let ev = eigen::eigenvalues_sorted(&mode_matrix(rho, p))
        .ok_or_else(|| Error::InvalidParams("eigenvalue iteration did not converge".into()))?;
    let min_re = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let verdict = if min_re < -NEUTRAL_TOL {
        Verdict::Unstable
    } else if min_re <= NEUTRAL_TOL {
        Verdict::Neutral
    } else {
        Verdict::Stable
    };
    Ok(Spectrum { rho, eigenvalues: ev, verdict })
}

/// Coefficients of the characteristic polynomial `X^3 - a1 X^2 + a2 X - a3`
/// of the reduced 3x3 system and the Routh-Hurwitz verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouthHurwitz {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `a1 a2 - a3`.
    pub minor: f64,
    pub stable: bool,
}

/// Reduced matrix for the `(b, d, j0)` block once `j1` has been slaved:
///
/// ```text
/// [  0           rho     0                ]
/// [ -rho         rho^2  -rho / n^{3/2}    ]
/// [ -kappa/sqrt n  0     kappa/n + delta  ]
/// ```
///
/// `delta = rho^2 / (kappa m)` when a finite relaxation `m` is given.
pub fn reduced_matrix(rho: f64, kappa: f64, n: f64, relax_m: Option<f64>) -> Mat {
    let delta = relax_m.map_or(0.0, |m| rho * rho / (kappa * m));
    Mat::from_rows([
        [0.0, rho, 0.0],
        [-rho, rho * rho, -rho / n.powf(1.5)],
        [-kappa / n.sqrt(), 0.0, kappa / n + delta],
    ])
}

/// Routh-Hurwitz test for the reduced system. Without relaxation the minor is
/// evaluated in the factored form `(1 + kappa/n) rho^4 + rho^2 kappa (kappa-1) / n^2`.
pub fn routh_hurwitz_reduced(rho: f64, kappa: f64, n: f64, relax_m: Option<f64>) -> RouthHurwitz {
    let r2 = rho * rho;
    let delta = relax_m.map_or(0.0, |m| r2 / (kappa * m));
    let a1 = kappa / n + r2 + delta;
    let a2 = (1.0 + kappa / n + delta) * r2;
    let a3 = (1.0 + 1.0 / n) * r2 * kappa / n + r2 * delta;
    let minor = if relax_m.is_none() {
        (1.0 + kappa / n) * r2 * r2 + r2 * kappa * (kappa - 1.0) / (n * n)
    } else {
        a1 * a2 - a3
    };
    RouthHurwitz { a1, a2, a3, minor, stable: a1 > 0.0 && a3 > 0.0 && minor > 0.0 }
}

/// `exp(-t M) m0`; fails when the exponential is not representable.
pub fn solve_mode(p: &PhysicalParams, rho: f64, m0: &ModeState, t: f64) -> Result<ModeState> {
    let e = propagator(&mode_matrix(rho, p), t)?;
    Ok(ModeState::from_slice(&e.apply_complex(&m0.to_array())))
}

/// `exp(-t m)`.
pub fn propagator(m: &Mat, t: f64) -> Result<Mat> {
    expm(&m.scale(-t)).ok_or(Error::OverflowAtLargeT { t })
}

/// Exact solution of `u' + ru u = c j`, `j' + rj j = 0` at time `t`.
pub fn forced_heat(ru: f64, rj: f64, coupling: f64, u0: Complex64, j0: Complex64, t: f64) -> (Complex64, Complex64) {
    let eu = (-ru * t).exp();
    let delta = rj - ru;
    // (e^{-ru t} - e^{-rj t}) / (rj - ru), stable through the resonance
    let w = if (delta * t).abs() < 1e-8 {
        t * eu * (1.0 - 0.5 * delta * t)
    } else {
        eu * (-(-delta * t).exp_m1()) / delta
    };
    (u0 * eu + j0 * (coupling * w), j0 * (-rj * t).exp())
}

/// Divergence-free block in rescaled variables: returns `(P u(t), P j1(t))`.
pub fn incompressible_block(
    p: &PhysicalParams,
    rho: f64,
    pu0: Complex64,
    pj0: Complex64,
    t: f64,
) -> (Complex64, Complex64) {
    let ru = p.mu / p.nu() * rho * rho;
    let rj = p.ell_tilde() * p.m_cal() / p.eps;
    let c = p.ell_tilde() * p.m_cal() / p.n();
    forced_heat(ru, rj, c, pu0, pj0, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovVariant {
    Barotropic,
    /// Adds the radiative functional, which needs the dimension.
    HighFreq { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValue {
    pub u_sq: f64,
    pub j_sq: Option<f64>,
}

/// `U^2 = 2|(b,d)|^2 - 2 rho Re(b conj d) + rho^2 |b|^2`; in the high-frequency
/// variant also `J^2 = |j0 - sqrt(n) b|^2 + |j1|^2`.
pub fn lyapunov_u(rho: f64, s: &ModeState, variant: LyapunovVariant) -> LyapunovValue {
    let u_sq = 2.0 * (s.b.norm_sqr() + s.d.norm_sqr()) - 2.0 * rho * (s.b * s.d.conj()).re
        + rho * rho * s.b.norm_sqr();
    let j_sq = match variant {
        LyapunovVariant::Barotropic => None,
        LyapunovVariant::HighFreq { dim } => {
            let zeta0 = s.j0 - s.b * (dim as f64).sqrt();
            Some(zeta0.norm_sqr() + s.j1.norm_sqr())
        }
    };
    LyapunovValue { u_sq, j_sq }
}

/// `rho^2` above which the mid-frequency dissipation inequality is claimed.
pub fn midfreq_threshold_sq(n: f64) -> f64 {
    16.0 * n / (3.0 * (4.0 * n * n - 1.0))
}

/// Matrix `S` of the `(b, d, j0)` subsystem obtained by setting
/// `j1 = rho j0 / (sqrt(n) L M)`, `X' + S X = 0`.
pub fn midfreq_matrix(p: &PhysicalParams, rho: f64) -> Mat {
    let n = p.n();
    let l = p.ell_tilde();
    let m = p.m_cal();
    let e = p.eps;
    Mat::from_rows([
        [0.0, rho, 0.0],
        [-rho, rho * rho, -rho / n.powf(1.5)],
        [-n.sqrt() * l / e, 0.0, l / e * (1.0 + rho * rho / (n * l * l * m))],
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub enum MidFreqOutcome {
    /// `rho` is below the threshold, nothing was checked.
    NotApplicable,
    Checked {
        /// Largest finite-difference excess relative to `W^2(0)`.
        max_violation: f64,
        /// `W^2` along the grid.
        w_sq: Vec<f64>,
    },
}

/// Relative tolerance on the discrete dissipation check.
pub const MIDFREQ_TOL: f64 = 1e-8;

fn midfreq_functional(p: &PhysicalParams, rho: f64, x: &[Complex64]) -> (f64, f64) {
    let n = p.n();
    let s = ModeState::new(x[0], x[1], x[2], Complex64::new(0.0, 0.0));
    let u = lyapunov_u(rho, &s, LyapunovVariant::Barotropic).u_sq;
    let w = u + p.eps / (n * n * p.ell_tilde()) * rho * rho * x[2].norm_sqr();
    let diss = rho * rho / (2.0 * n * n) * (x[0].norm_sqr() + x[1].norm_sqr() + x[2].norm_sqr());
    (w, diss)
}

/// Checks `d/dt W^2 + rho^2/(2 n^2) |(b, d, j0)|^2 <= 0` along the exact
/// solution of the mid-frequency subsystem, sampled on `t_grid`.
///
/// The derivative is the forward difference of `W^2` between grid points and
/// the dissipation is averaged with the trapezoid rule on the same interval.
pub fn midfreq_dissipation_check(
    p: &PhysicalParams,
    rho: f64,
    u0: &ModeState,
    t_grid: &[f64],
) -> Result<MidFreqOutcome> {
    if rho * rho < midfreq_threshold_sq(p.n()) {
        return Ok(MidFreqOutcome::NotApplicable);
    }
    let s = midfreq_matrix(p, rho);
    let x0 = [u0.b, u0.d, u0.j0];
    let mut w_sq = Vec::with_capacity(t_grid.len());
    let mut diss = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let x = propagator(&s, t)?.apply_complex(&x0);
        let (w, d) = midfreq_functional(p, rho, &x);
        w_sq.push(w);
        diss.push(d);
    }
    let scale = w_sq.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut max_violation = f64::NEG_INFINITY;
    for k in 0..t_grid.len().saturating_sub(1) {
        let h = t_grid[k + 1] - t_grid[k];
        if h <= 0.0 {
            continue;
        }
        let v = ((w_sq[k + 1] - w_sq[k]) / h + 0.5 * (diss[k] + diss[k + 1])) / scale;
        max_violation = max_violation.max(v);
        if v > MIDFREQ_TOL {
            return Err(Error::DissipationViolation { t: t_grid[k], excess: v });
        }
    }
    Ok(MidFreqOutcome::Checked { max_violation, w_sq })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandLabel {
    Low,
    Mid,
    High,
}

impl BandLabel {
    pub fn name(&self) -> &'static str {
        match self {
            BandLabel::Low => "low",
            BandLabel::Mid => "mid",
            BandLabel::High => "high",
        }
    }
}

/// Frequency thresholds separating the three bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandThresholds {
    pub low_cut: f64,
    pub high_cut: f64,
}

impl BandThresholds {
    /// `low_cut = sqrt(1 + 1/n)`, `high_cut = max(L M, low_cut)`.
    pub fn default_for(p: &PhysicalParams) -> Self {
        let low_cut = (1.0 + 1.0 / p.n()).sqrt();
        let high_cut = (p.ell_tilde() * p.m_cal()).max(low_cut);
        BandThresholds { low_cut, high_cut }
    }

    pub fn band(&self, rho: f64) -> BandLabel {
        if rho <= self.low_cut {
            BandLabel::Low
        } else if rho >= self.high_cut {
            BandLabel::High
        } else {
            BandLabel::Mid
        }
    }
}

/// Predicted and measured decay rates at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub rho: f64,
    pub band: BandLabel,
    pub predicted_fluid_rate: f64,
    pub predicted_rad_rate_j0: f64,
    pub predicted_rad_rate_j1: f64,
    /// Smallest nonzero real part of the spectrum.
    pub measured_fluid_rate: f64,
    /// All real parts, ascending.
    pub measured_rates: Vec<f64>,
    /// `rho / (L min(1/eps, M))`; the low-frequency analysis needs it small.
    pub low_freq_constraint: f64,
}

/// Rates expected in each band.
///
/// * fluid: `tilde_nu rho^2 / 2` at low frequency, `1` otherwise (the
///   density mode of a parabolic-hyperbolic pair);
/// * `j0`: `L/eps`, increased by `rho^2 / (n L^2 M)` in the middle band;
/// * `j1`: `L M / eps`; at high frequency both radiative rates merge into
///   `L (1 + M) / (2 eps)`.
pub fn predicted_rates(p: &PhysicalParams, rho: f64, band: BandLabel) -> (f64, f64, f64) {
    let l = p.ell_tilde();
    let m = p.m_cal();
    let e = p.eps;
    match band {
        BandLabel::Low => (0.5 * effective_viscosity(p) * rho * rho, l / e, l * m / e),
        BandLabel::Mid => (1.0, l / e * (1.0 + rho * rho / (p.n() * l * l * m)), l * m / e),
        BandLabel::High => {
            let merged = l * (1.0 + m) / (2.0 * e);
            (1.0, merged, merged)
        }
    }
}

pub fn decay_envelope(p: &PhysicalParams, rho: f64) -> Result<EnvelopeReport> {
    let th = BandThresholds::default_for(p);
    let band = th.band(rho);
    let (pf, pj0, pj1) = predicted_rates(p, rho, band);
    let spec = eigen_spectrum(rho, p)?;
    let measured_rates: Vec<f64> = spec.eigenvalues.iter().map(|z| z.re).collect();
    let measured_fluid_rate =
        measured_rates.iter().copied().find(|r| r.abs() > 1e-14).unwrap_or(0.0);
    let l = p.ell_tilde();
    let low_freq_constraint = rho / (l * (1.0 / p.eps).min(p.m_cal()));
    Ok(EnvelopeReport {
        rho,
        band,
        predicted_fluid_rate: pf,
        predicted_rad_rate_j0: pj0,
        predicted_rad_rate_j1: pj1,
        measured_fluid_rate,
        measured_rates,
        low_freq_constraint,
    })
}

/// Damped combinations `(b, d, j0, j1)` of the low-frequency analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticCombination {
    pub b: Complex64,
    pub d: Complex64,
    pub j0: Complex64,
    pub j1: Complex64,
}

/// Which change of unknowns suits a regime: the equilibrium regime keeps the
/// radiative block in the skew part, the others move it into the corrector.
pub fn approach_for(kind: RegimeKind) -> Approach {
    match kind {
        RegimeKind::Equilibrium => Approach::First,
        _ => Approach::Second,
    }
}

/// `(I + rho P) T`, the full change of unknowns at frequency `rho`.
pub fn diagnostic_matrix(rho: f64, p: &PhysicalParams, approach: Approach) -> Result<Mat> {
    let c = class_coefficients(p);
    let sys = build_class_e(c, approach)?;
    Ok(&sys.corrector(rho) * &c.first_change())
}

pub fn diagnostic_combinations(
    rho: f64,
    p: &PhysicalParams,
    approach: Approach,
    s: &ModeState,
) -> Result<DiagnosticCombination> {
    let v = diagnostic_matrix(rho, p, approach)?.apply_complex(&s.to_array());
    Ok(DiagnosticCombination { b: v[0], d: v[1], j0: v[2], j1: v[3] })
}

/// `zeta0 = j0 - sqrt(n) b`, or in the Poisson regime
/// `j0 - sqrt(n) b / (1 + rho^2 / (n L^2 M))`.
pub fn zeta0(rho: f64, p: &PhysicalParams, s: &ModeState, poisson: bool) -> Complex64 {
    let sn = p.n().sqrt();
    if poisson {
        let l = p.ell_tilde();
        s.j0 - s.b * (sn / (1.0 + rho * rho / (p.n() * l * l * p.m_cal())))
    } else {
        s.j0 - s.b * sn
    }
}

/// `zeta1 = j1 - rho j0 / (sqrt(n) L M)`.
pub fn zeta1(rho: f64, p: &PhysicalParams, s: &ModeState) -> Complex64 {
    s.j1 - s.j0 * (rho / (p.n().sqrt() * p.ell_tilde() * p.m_cal()))
}
