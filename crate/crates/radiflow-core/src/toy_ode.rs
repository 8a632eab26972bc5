//! Abstract four-equation linear class and the 2x2 damped model.
//!
//! The class reads `U' + M(rho) U = 0` with
//!
//! ```text
//!          [  0     rho    0      0    ]
//! M(rho) = [ -rho  rho^2   0    -sigma ]
//!          [ -eta    0    beta  a rho  ]
//!          [  0      0   -a rho gamma  ]
//! ```
//!
//! (`a` is `alpha`). A first change of unknowns `T` makes the zeroth-order
//! part diagonal, `T M T^{-1} = A0 + rho (A1 + B1) + rho^2 A2`, and a second one
//! `V = (I + rho P) T U` with `[A0, P] = B1` pushes the bad first-order term
//! `B1` to second order. Two choices of `(A1, B1, P)` are provided: `First`
//! keeps the radiative 2x2 block inside `A1`, `Second` moves it into `B1`
//! (which needs `beta != gamma`).

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::eigen;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::ode::{self, Tolerances};

/// Positive coefficients of the class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub eta: f64,
}

impl ToyCoefficients {
    pub fn validate(&self) -> Result<()> {
        let v = [self.alpha, self.beta, self.gamma, self.sigma, self.eta];
        if v.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(Error::PreconditionViolated(format!("coefficients must be positive: {self:?}")))
        }
    }

    /// `alpha sigma eta / (beta gamma)`, the recurring coupling strength.
    pub fn coupling(&self) -> f64 {
        self.alpha * self.sigma * self.eta / (self.beta * self.gamma)
    }

    /// `alpha + sigma eta / (beta gamma)`.
    pub fn alpha_tilde(&self) -> f64 {
        self.alpha + self.sigma * self.eta / (self.beta * self.gamma)
    }

    /// Original class matrix.
    pub fn class_matrix(&self, rho: f64) -> Mat {
        let ToyCoefficients { alpha, beta, gamma, sigma, eta } = *self;
        Mat::from_rows([
            [0.0, rho, 0.0, 0.0],
            [-rho, rho * rho, 0.0, -sigma],
            [-eta, 0.0, beta, alpha * rho],
            [0.0, 0.0, -alpha * rho, gamma],
        ])
    }

    /// First change of unknowns, `(b, d + sigma/gamma j1, j0 - eta/beta b, j1)`.
    pub fn first_change(&self) -> Mat {
        Mat::from_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, self.sigma / self.gamma],
            [-self.eta / self.beta, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    First,
    Second,
}

/// The split `A0 + rho (A1 + B1) + rho^2 A2` with the corrector `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassE {
    pub coeffs: ToyCoefficients,
    pub approach: Approach,
    pub a0: Mat,
    pub a1: Mat,
    pub b1: Mat,
    pub a2: Mat,
    pub p: Mat,
}

/// Assembles the split for one of the two approaches.
pub fn build_class_e(c: ToyCoefficients, approach: Approach) -> Result<ClassE> {
    c.validate()?;
    let ToyCoefficients { alpha, beta, gamma, sigma, eta } = c;
    let k = c.coupling();
    let at = c.alpha_tilde();
    if approach == Approach::Second && (beta - gamma).abs() < 1e-12 {
        return Err(Error::DegenerateSplit);
    }
    let a0 = Mat::diag(&[0.0, 0.0, beta, gamma]);
    let a2 = Mat::from_rows([
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, -sigma / gamma],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ]);
    let mut p = Mat::from_rows([
        [0.0, 0.0, 0.0, sigma / (gamma * gamma)],
        [0.0, 0.0, alpha * sigma / (beta * gamma), 0.0],
        [0.0, -eta / (beta * beta), 0.0, 0.0],
        [-alpha * eta / (beta * gamma), 0.0, 0.0, 0.0],
    ]);
    let (a1, b1) = match approach {
        Approach::First => (
            Mat::from_rows([
                [0.0, 1.0, 0.0, 0.0],
                [-1.0 - k, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, at],
                [0.0, 0.0, -alpha, 0.0],
            ]),
            Mat::from_rows([
                [0.0, 0.0, 0.0, -sigma / gamma],
                [0.0, 0.0, -alpha * sigma / gamma, 0.0],
                [0.0, -eta / beta, 0.0, 0.0],
                [-alpha * eta / beta, 0.0, 0.0, 0.0],
            ]),
        ),
        Approach::Second => {
            p[(2, 3)] = at / (beta - gamma);
            p[(3, 2)] = alpha / (beta - gamma);
            (
                Mat::from_rows([
                    [0.0, 1.0, 0.0, 0.0],
                    [-1.0 - k, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0, 0.0],
                ]),
                Mat::from_rows([
                    [0.0, 0.0, 0.0, -sigma / gamma],
                    [0.0, 0.0, -alpha * sigma / gamma, 0.0],
                    [0.0, -eta / beta, 0.0, at],
                    [-alpha * eta / beta, 0.0, -alpha, 0.0],
                ]),
            )
        }
    };
    Ok(ClassE { coeffs: c, approach, a0, a1, b1, a2, p })
}

impl ClassE {
    /// `A0 + rho (A1 + B1) + rho^2 A2`, similar to the class matrix.
    pub fn split_matrix(&self, rho: f64) -> Mat {
        let first = &self.a1 + &self.b1;
        let m = &self.a0 + &first.scale(rho);
        &m + &self.a2.scale(rho * rho)
    }

    /// `I + rho P`.
    pub fn corrector(&self, rho: f64) -> Mat {
        &Mat::identity(4) + &self.p.scale(rho)
    }

    /// Residual of the defining commutator relation, `[A0, P] - B1`.
    pub fn commutator_residual(&self) -> Mat {
        &self.a0.commutator(&self.p) - &self.b1
    }

    /// `A3 = (P A0 - A1) P^2 + A2 P`.
    pub fn a3(&self) -> Mat {
        let pa0 = &self.p * &self.a0;
        let p2 = &self.p * &self.p;
        let left = &(&pa0 - &self.a1) * &p2;
        &left + &(&self.a2 * &self.p)
    }

    /// Second-order coefficient of the transformed generator,
    /// `A2 + P B1 + [P, A1]`.
    pub fn second_order(&self) -> Mat {
        let pb1 = &self.p * &self.b1;
        &(&self.a2 + &pb1) + &self.p.commutator(&self.a1)
    }
}

/// Closed form of `det(I + rho P)`.
///
/// `P` has a zero upper-left block, so the determinant equals that of the
/// Schur complement `I + rho P22 - rho^2 P21 P12`, where `P21 P12` is
/// diagonal.
pub fn det_i_plus_rho_p(rho: f64, sys: &ClassE) -> f64 {
    let ToyCoefficients { alpha, beta, gamma, sigma, eta } = sys.coeffs;
    let w = alpha * sigma * eta;
    let d1 = 1.0 + rho * rho * w / (beta.powi(3) * gamma);
    let d2 = 1.0 + rho * rho * w / (beta * gamma.powi(3));
    match sys.approach {
        Approach::First => d1 * d2,
        Approach::Second => {
            let off = alpha * sys.coeffs.alpha_tilde() / (beta - gamma).powi(2);
            d1 * d2 - rho * rho * off
        }
    }
}

/// Generator of the `V` system together with its pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    /// Full generator, `(I + rho P) (A0 + rho(A1+B1) + rho^2 A2) (I + rho P)^{-1}`.
    pub generator: Mat,
    /// `A2 + P B1 + [P, A1]`.
    pub second_order: Mat,
    /// Exact third-order remainder `R`, generator `= A0 + rho A1 + rho^2 G2 + rho^3 R`.
    pub remainder: Mat,
    /// `(P A0 - A1) P^2 + A2 P`, used for size estimates of the remainder.
    pub a3: Mat,
    pub det: f64,
}

/// Builds the `V` system at frequency `rho`.
///
/// The remainder is `(P A2 - G2 P)(I + rho P)^{-1}`; that is the exact term,
/// and it is only of the same size as `(I + rho P) A3 (I + rho P)^{-1}`.
pub fn transformed_system(rho: f64, sys: &ClassE) -> Result<Transformed> {
    let det = det_i_plus_rho_p(rho, sys);
    if det.abs() < 1e-12 {
        return Err(Error::SingularTransform { det });
    }
    let s = sys.corrector(rho);
    let s_inv = s.inverse().ok_or(Error::SingularTransform { det })?;
    let g2 = sys.second_order();
    let r = &(&sys.p * &sys.a2) - &(&g2 * &sys.p);
    let remainder = &r * &s_inv;
    let mut generator = &sys.a0 + &sys.a1.scale(rho);
    generator = &generator + &g2.scale(rho * rho);
    generator = &generator + &remainder.scale(rho.powi(3));
    Ok(Transformed { generator, second_order: g2, remainder, a3: sys.a3(), det })
}

/// `1 - alpha sigma eta / (beta gamma) (1/beta + 1/gamma)`.
pub fn tilde_nu(c: &ToyCoefficients) -> f64 {
    1.0 - c.coupling() * (1.0 / c.beta + 1.0 / c.gamma)
}

/// The 2x2 model
///
/// ```text
/// X' + a rho Y - b rho^2 X = A
/// Y' - c rho X + d rho^2 Y = B
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Toy2x2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Toy2x2 {
    /// Largest `rho` for which the Lyapunov functional is equivalent to the
    /// weighted energy; infinite when `b + d = 0`.
    pub fn rho_max(&self) -> f64 {
        let s = (self.b + self.d).abs();
        if s == 0.0 {
            f64::INFINITY
        } else {
            (self.a * self.c).sqrt() / s
        }
    }

    pub fn check_preconditions(&self, rho: f64) -> Result<()> {
        if !(self.a > 0.0 && self.c > 0.0) {
            return Err(Error::PreconditionViolated("need a > 0 and c > 0".into()));
        }
        if self.d - self.b <= 0.0 {
            return Err(Error::PreconditionViolated("need d - b > 0".into()));
        }
        if rho < 0.0 || rho > self.rho_max() {
            return Err(Error::PreconditionViolated(format!(
                "rho = {rho} outside [0, {}]",
                self.rho_max()
            )));
        }
        Ok(())
    }

    /// Matrix `K` with `(X, Y)' = K (X, Y) + (A, B)`.
    pub fn generator(&self, rho: f64) -> Mat {
        Mat::from_rows([
            [self.b * rho * rho, -self.a * rho],
            [self.c * rho, -self.d * rho * rho],
        ])
    }

    /// Guaranteed decay rate `(d - b) rho^2 / 6` of the functional.
    pub fn decay_rate(&self, rho: f64) -> f64 {
        (self.d - self.b) * rho * rho / 6.0
    }
}

/// `c |X|^2 + a |Y|^2 - rho (d + b) Re(X conj(Y))`.
pub fn lyapunov_2x2(sys: &Toy2x2, rho: f64, x: Complex64, y: Complex64) -> f64 {
    sys.c * x.norm_sqr() + sys.a * y.norm_sqr() - rho * (sys.d + sys.b) * (x * y.conj()).re
}

/// `c |X|^2 + a |Y|^2`.
pub fn weighted_energy(sys: &Toy2x2, x: Complex64, y: Complex64) -> f64 {
    sys.c * x.norm_sqr() + sys.a * y.norm_sqr()
}

fn integrate_2x2(
    sys: &Toy2x2,
    rho: f64,
    x0: Complex64,
    y0: Complex64,
    forcing: (Complex64, Complex64),
    t_grid: &[f64],
) -> Result<Vec<(Complex64, Complex64)>> {
    let k = sys.generator(rho);
    let tol = Tolerances { rtol: 1e-10, atol: 1e-300 };
    let out = ode::integrate(
        |_, y, dy| {
            dy[0] = y[0] * k[(0, 0)] + y[1] * k[(0, 1)] + forcing.0;
            dy[1] = y[0] * k[(1, 0)] + y[1] * k[(1, 1)] + forcing.1;
        },
        0.0,
        &[x0, y0],
        t_grid,
        tol,
    )
    .map_err(|e| Error::PreconditionViolated(format!("integration failed: {e:?}")))?;
    Ok(out.into_iter().map(|v| (v[0], v[1])).collect())
}

/// Largest value of `L(t) / (exp(-(d-b) rho^2 t / 6) L(0))` over `t_grid`.
///
/// The exponential decay bound guarantees the ratio never exceeds one.
pub fn verify_decay_ode5(
    sys: &Toy2x2,
    rho: f64,
    x0: Complex64,
    y0: Complex64,
    t_grid: &[f64],
) -> Result<f64> {
    sys.check_preconditions(rho)?;
    let l0 = lyapunov_2x2(sys, rho, x0, y0).max(0.0).sqrt();
    if l0 == 0.0 {
        return Ok(0.0);
    }
    let traj = integrate_2x2(sys, rho, x0, y0, (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), t_grid)?;
    let rate = sys.decay_rate(rho);
    let mut worst: f64 = 0.0;
    for (t, (x, y)) in t_grid.iter().zip(traj) {
        let l = lyapunov_2x2(sys, rho, x, y).max(0.0).sqrt();
        // compare in log space to stay meaningful after heavy decay
        let ratio = if l == 0.0 { 0.0 } else { (l.ln() + rate * t - l0.ln()).exp() };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Right-hand side of the forced bound
/// `sqrt(3) e^{-k t} (E0 + F (e^{k t} - 1) / k)`, `k = (d-b) rho^2 / 6`,
/// for constant forcing of weighted size `F`.
pub fn forced_bound(sys: &Toy2x2, rho: f64, e0: f64, forcing_size: f64, t: f64) -> f64 {
    let k = sys.decay_rate(rho);
    let integral = if k * t < 1e-12 { forcing_size * t } else { forcing_size * (k * t).exp_m1() / k };
    3f64.sqrt() * (-k * t).exp() * (e0 + integral)
}

/// Largest ratio of `sqrt(c|X|^2 + a|Y|^2)` to the forced bound over `t_grid`.
pub fn verify_forced_ode7(
    sys: &Toy2x2,
    rho: f64,
    x0: Complex64,
    y0: Complex64,
    forcing: (Complex64, Complex64),
    t_grid: &[f64],
) -> Result<f64> {
    sys.check_preconditions(rho)?;
    let e0 = weighted_energy(sys, x0, y0).sqrt();
    let f = weighted_energy(sys, forcing.0, forcing.1).sqrt();
    let traj = integrate_2x2(sys, rho, x0, y0, forcing, t_grid)?;
    let mut worst: f64 = 0.0;
    for (t, (x, y)) in t_grid.iter().zip(traj) {
        let bound = forced_bound(sys, rho, e0, f, *t);
        if bound > 0.0 {
            worst = worst.max(weighted_energy(sys, x, y).sqrt() / bound);
        }
    }
    Ok(worst)
}

/// The fluid 2x2 block left after the change of unknowns, written in the
/// model form. Its `d - b` is [`tilde_nu`].
pub fn hydro_block(c: &ToyCoefficients) -> Toy2x2 {
    let k = c.coupling();
    Toy2x2 {
        a: 1.0,
        b: k / c.gamma,
        c: 1.0 + k,
        d: 1.0 - k / c.beta,
    }
}

/// For each property, the largest `rho` of a decreasing ladder such that the
/// property holds at that `rho` and at every smaller ladder value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RhoLadderReport {
    /// `det(I + rho P) >= 1/2` for the first approach.
    pub invertible_first: Option<f64>,
    /// Same for the second approach (absent when `beta = gamma`).
    pub invertible_second: Option<f64>,
    /// `rho <= sqrt(ac)/|b+d|` for the fluid block.
    pub fluid_lyapunov: Option<f64>,
    /// Slowest eigenvalue of the class matrix decays at least at
    /// `tilde_nu rho^2 / 6`.
    pub fluid_decay: Option<f64>,
}

/// Sweeps `ladder` (sorted decreasing internally) and records where each
/// low-frequency property stops holding.
pub fn rho_ladder(c: &ToyCoefficients, ladder: &[f64]) -> Result<RhoLadderReport> {
    let mut rhos: Vec<f64> = ladder.to_vec();
    rhos.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let first = build_class_e(*c, Approach::First)?;
    let second = build_class_e(*c, Approach::Second).ok();
    let hb = hydro_block(c);
    let nu = tilde_nu(c);

    // scan from the smallest rho upward, stop at the first failure
    let largest = |pred: &dyn Fn(f64) -> bool| -> Option<f64> {
        let mut best = None;
        for &r in rhos.iter().rev() {
            if pred(r) {
                best = Some(r);
            } else {
                break;
            }
        }
        best
    };
    let invertible_first = largest(&|r| det_i_plus_rho_p(r, &first) >= 0.5);
    let invertible_second = second.as_ref().and_then(|s| largest(&|r| det_i_plus_rho_p(r, s) >= 0.5));
    let fluid_lyapunov = if nu > 0.0 { largest(&|r| r <= hb.rho_max()) } else { None };
    let fluid_decay = if nu > 0.0 {
        largest(&|r| {
            eigen::eigenvalues(&c.class_matrix(r))
                .map(|ev| ev.iter().all(|z| z.re >= nu * r * r / 6.0))
                .unwrap_or(false)
        })
    } else {
        None
    };
    Ok(RhoLadderReport { invertible_first, invertible_second, fluid_lyapunov, fluid_decay })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs() -> ToyCoefficients {
        ToyCoefficients { alpha: 1.0, beta: 2.0, gamma: 3.0, sigma: 1.0, eta: 1.0 }
    }

    #[test]
    fn tilde_nu_example() {
        // 1 - (1/6)(1/2 + 1/3) = 1 - 5/36
        assert!((tilde_nu(&coeffs()) - 31.0 / 36.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_split_detected() {
        let mut c = coeffs();
        c.gamma = c.beta;
        assert_eq!(build_class_e(c, Approach::Second), Err(Error::DegenerateSplit));
        assert!(build_class_e(c, Approach::First).is_ok());
    }

    #[test]
    fn split_is_similar_to_class_matrix() {
        let c = coeffs();
        let t = c.first_change();
        let tinv = t.inverse().unwrap();
        for ap in [Approach::First, Approach::Second] {
            let s = build_class_e(c, ap).unwrap();
            for rho in [0.0, 0.3, 1.7] {
                let lhs = &(&t * &c.class_matrix(rho)) * &tinv;
                assert!((&lhs - &s.split_matrix(rho)).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hydro_block_matches_tilde_nu() {
        let c = coeffs();
        let h = hydro_block(&c);
        assert!((h.d - h.b - tilde_nu(&c)).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_2x2_value() {
        let s = Toy2x2 { a: 1.0, b: 0.0, c: 1.0, d: 1.0 };
        let l = lyapunov_2x2(&s, 0.5, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        assert!((l - 1.5).abs() < 1e-15);
    }

    #[test]
    fn precondition_enforced() {
        let s = Toy2x2 { a: 1.0, b: 0.5, c: 1.0, d: 0.2 };
        assert!(s.check_preconditions(0.1).is_err());
        let s = Toy2x2 { a: 1.0, b: 0.0, c: 1.0, d: 1.0 };
        assert!(s.check_preconditions(1.5).is_err());
        assert!(s.check_preconditions(0.9).is_ok());
    }
}
