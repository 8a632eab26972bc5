//! Physical parameters, the linear stability margin and regime detection for
//! families indexed by the relaxation parameter `eps`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Dimensionless parameters of the coupled system.
///
/// `ell` is the absorption coefficient, `ell_s` the scattering ratio, `mu` and
/// `lam` the Lamé viscosities and `dim` the space dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub eps: f64,
    pub ell: f64,
    pub ell_s: f64,
    pub mu: f64,
    pub lam: f64,
    pub dim: usize,
}

impl PhysicalParams {
    pub fn new(eps: f64, ell: f64, ell_s: f64, mu: f64, lam: f64, dim: usize) -> Result<Self> {
        let p = PhysicalParams { eps, ell, ell_s, mu, lam, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.eps, self.ell, self.ell_s, self.mu, self.lam]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams(format!("non-finite entry in {self:?}")));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidParams(format!("eps = {} outside (0, 1]", self.eps)));
        }
        if self.ell <= 0.0 {
            return Err(Error::InvalidParams(format!("ell = {} must be positive", self.ell)));
        }
        if self.ell_s < 0.0 {
            return Err(Error::InvalidParams(format!("ell_s = {} is negative", self.ell_s)));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidParams(format!("mu = {} must be positive", self.mu)));
        }
        if self.lam + 2.0 * self.mu <= 0.0 {
            return Err(Error::InvalidParams("lam + 2 mu must be positive".into()));
        }
        if self.dim < 2 {
            return Err(Error::InvalidParams(format!("dim = {} (need n >= 2)", self.dim)));
        }
        Ok(())
    }

    /// Longitudinal viscosity `lam + 2 mu`.
    pub fn nu(&self) -> f64 {
        self.lam + 2.0 * self.mu
    }

    /// Total attenuation `1 + ell_s`.
    pub fn m_cal(&self) -> f64 {
        1.0 + self.ell_s
    }

    /// Absorption after rescaling time and space by `nu`.
    pub fn ell_tilde(&self) -> f64 {
        self.nu() * self.ell
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    pub fn with_eps(&self, eps: f64, ell: f64, ell_s: f64) -> Self {
        PhysicalParams { eps, ell, ell_s, ..*self }
    }
}

/// `n nu ell - eps (2 + ell_s) / (1 + ell_s)`; positive means linearly stable.
pub fn stability_margin(p: &PhysicalParams) -> f64 {
    p.n() * p.nu() * p.ell - p.eps * (2.0 + p.ell_s) / (1.0 + p.ell_s)
}

/// The same quantity written with the rescaled absorption:
/// `n ell~ - eps (1 + 1/M)`.
pub fn stability_margin_rescaled(p: &PhysicalParams) -> f64 {
    p.n() * p.ell_tilde() - p.eps * (1.0 + 1.0 / p.m_cal())
}

/// Effective viscosity of the low-frequency fluid block,
/// `1 - eps (1 + 1/M) / (n ell~)`. Has the sign of the stability margin.
pub fn effective_viscosity(p: &PhysicalParams) -> f64 {
    1.0 - p.eps * (1.0 + 1.0 / p.m_cal()) / (p.n() * p.ell_tilde())
}

/// Pressure-law perturbations `k_i(b) = c_i b + q_i b^2`, `i = 1..4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingFunctions {
    pub linear: [f64; 4],
    pub quadratic: [f64; 4],
}

impl CouplingFunctions {
    pub fn linear(c: [f64; 4]) -> Self {
        CouplingFunctions { linear: c, quadratic: [0.0; 4] }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `k_i(b)` for `i` in `1..=4`.
    #[inline]
    pub fn k(&self, i: usize, b: f64) -> f64 {
        let j = i - 1;
        b * (self.linear[j] + self.quadratic[j] * b)
    }

    pub fn is_zero(&self) -> bool {
        self.linear.iter().chain(self.quadratic.iter()).all(|c| *c == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    NonEquilibrium,
    DegenerateNonEquilibrium,
    Equilibrium,
    Poisson,
    NegligibleRadiation,
}

impl RegimeKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeKind::NonEquilibrium => "nonequilibrium",
            RegimeKind::DegenerateNonEquilibrium => "degenerate-nonequilibrium",
            RegimeKind::Equilibrium => "equilibrium",
            RegimeKind::Poisson => "poisson",
            RegimeKind::NegligibleRadiation => "negligible-radiation",
        }
    }
}

/// Asymptotic regime with the limiting constants that survive.
///
/// `kappa` is the limit of `n nu ell / eps`, `m` the limit of
/// `nu^2 ell^2 ell_s` and `ell_limit` the limit of `nu ell` when finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeLabel {
    pub kind: RegimeKind,
    pub kappa: Option<f64>,
    pub m: Option<f64>,
    pub ell_limit: Option<f64>,
}

/// One member of an eps-family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyMember {
    pub eps: f64,
    pub ell: f64,
    pub ell_s: f64,
}

/// Parameter sequence with strictly decreasing `eps`, every member stable.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonFamily {
    base: PhysicalParams,
    members: Vec<FamilyMember>,
}

impl EpsilonFamily {
    /// `base` supplies `mu`, `lam` and `dim`; its own `eps`, `ell`, `ell_s` are
    /// ignored.
    pub fn new(base: PhysicalParams, members: Vec<FamilyMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidFamily("empty family".into()));
        }
        for w in members.windows(2) {
            if w[1].eps >= w[0].eps {
                return Err(Error::InvalidFamily(format!(
                    "eps must strictly decrease ({} then {})",
                    w[0].eps, w[1].eps
                )));
            }
        }
        for m in &members {
            let p = base.with_eps(m.eps, m.ell, m.ell_s);
            p.validate().map_err(|e| Error::InvalidFamily(format!("{e}")))?;
            if stability_margin(&p) <= 0.0 {
                return Err(Error::InvalidFamily(format!(
                    "member eps = {} is linearly unstable (margin {:e})",
                    m.eps,
                    stability_margin(&p)
                )));
            }
        }
        Ok(EpsilonFamily { base, members })
    }

    /// Builds the standard family for `kind` on the given eps ladder.
    ///
    /// * nonequilibrium: `ell = kappa eps / (n nu)`, `ell_s = m / (nu ell)^2`
    /// * degenerate: `ell = kappa eps / (n nu)`, `ell_s = 1 / (eps (nu ell)^2)`
    /// * poisson: `ell = sqrt(eps) / nu`, `ell_s = m / (nu ell)^2`
    /// * equilibrium: `ell = 1 / eps`, `ell_s = m`
    pub fn for_regime(
        base: PhysicalParams,
        kind: RegimeKind,
        kappa: f64,
        m: f64,
        ladder: &[f64],
    ) -> Result<Self> {
        let nu = base.nu();
        let n = base.n();
        let members = ladder
            .iter()
            .map(|&eps| {
                let (ell, ell_s) = match kind {
                    RegimeKind::NonEquilibrium => {
                        let ell = kappa * eps / (n * nu);
                        (ell, m / (nu * ell).powi(2))
                    }
                    RegimeKind::DegenerateNonEquilibrium => {
                        let ell = kappa * eps / (n * nu);
                        (ell, 1.0 / (eps * (nu * ell).powi(2)))
                    }
                    RegimeKind::Poisson => {
                        let ell = eps.sqrt() / nu;
                        (ell, m / (nu * ell).powi(2))
                    }
                    RegimeKind::Equilibrium => (1.0 / eps, m),
                    RegimeKind::NegligibleRadiation => {
                        let ell = kappa * eps / (n * nu);
                        (ell, eps * m / (nu * ell).powi(2))
                    }
                };
                FamilyMember { eps, ell, ell_s }
            })
            .collect();
        Self::new(base, members)
    }

    pub fn base(&self) -> &PhysicalParams {
        &self.base
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn params(&self, i: usize) -> PhysicalParams {
        let m = self.members[i];
        self.base.with_eps(m.eps, m.ell, m.ell_s)
    }

    pub fn iter_params(&self) -> impl Iterator<Item = PhysicalParams> + '_ {
        (0..self.members.len()).map(move |i| self.params(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Trend {
    Zero,
    Finite(f64),
    Infinite,
}

/// Slope of `log q` against `log eps` over the last three members.
fn trend(eps: &[f64], q: &[f64], tol: f64, what: &str) -> Result<Trend> {
    let k = eps.len();
    let xs: Vec<f64> = eps[k - 3..].iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = q[k - 3..].iter().map(|v| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / 3.0;
    let ym = ys.iter().sum::<f64>() / 3.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return Err(Error::AmbiguousRegime(format!("{what}: slope undefined")));
    }
    // A power law eps^s tends to 0 for s > 0, to infinity for s < 0.
    if slope.abs() < 0.5 * tol {
        Ok(Trend::Finite(q[k - 1]))
    } else if slope > 2.0 * tol {
        Ok(Trend::Zero)
    } else if slope < -2.0 * tol {
        Ok(Trend::Infinite)
    } else {
        Err(Error::AmbiguousRegime(format!(
            "{what}: log-log slope {slope:.4} too close to the boundary (tol {tol})"
        )))
    }
}

/// Identifies the limiting regime of a family from the behaviour of
/// `n nu ell / eps`, `nu^2 ell^2 ell_s` and `nu ell` along its last three
/// members.
///
/// A quantity counts as converging to a finite limit when its log-log slope
/// against `eps` is below `tol / 2` in magnitude, as diverging or vanishing
/// when the slope exceeds `2 tol`. Anything in between is ambiguous.
pub fn classify_regime(family: &EpsilonFamily, tol: f64) -> Result<RegimeLabel> {
    if family.len() < 3 {
        return Err(Error::InvalidFamily("need at least three members".into()));
    }
    let eps: Vec<f64> = family.members.iter().map(|m| m.eps).collect();
    let ps: Vec<PhysicalParams> = family.iter_params().collect();
    let q_kappa: Vec<f64> = ps.iter().map(|p| p.n() * p.nu() * p.ell / p.eps).collect();
    let q_m: Vec<f64> = ps.iter().map(|p| (p.nu() * p.ell).powi(2) * p.ell_s).collect();
    let q_ell: Vec<f64> = ps.iter().map(|p| p.nu() * p.ell).collect();

    let t_kappa = trend(&eps, &q_kappa, tol, "n nu ell / eps")?;
    let t_m = if q_m.iter().all(|v| *v > 0.0) {
        trend(&eps, &q_m, tol, "nu^2 ell^2 ell_s")?
    } else if q_m.iter().all(|v| *v == 0.0) {
        Trend::Zero
    } else {
        return Err(Error::AmbiguousRegime("ell_s vanishes on part of the family".into()));
    };
    let t_ell = trend(&eps, &q_ell, tol, "nu ell")?;

    let label = |kind, kappa, m, ell_limit| RegimeLabel { kind, kappa, m, ell_limit };
    match t_kappa {
        Trend::Zero => Err(Error::AmbiguousRegime(
            "n nu ell / eps tends to zero, incompatible with stability".into(),
        )),
        Trend::Finite(kappa) => {
            if (kappa - 1.0).abs() < tol {
                return Err(Error::AmbiguousRegime(format!(
                    "kappa = {kappa} sits on the stability boundary"
                )));
            }
            match t_m {
                Trend::Finite(m) => Ok(label(RegimeKind::NonEquilibrium, Some(kappa), Some(m), None)),
                Trend::Infinite => {
                    Ok(label(RegimeKind::DegenerateNonEquilibrium, Some(kappa), None, None))
                }
                Trend::Zero => Ok(label(RegimeKind::NegligibleRadiation, Some(kappa), None, None)),
            }
        }
        Trend::Infinite => match (t_ell, t_m) {
            (Trend::Infinite, _) => Ok(label(RegimeKind::Equilibrium, None, None, None)),
            (_, Trend::Infinite) => Ok(label(RegimeKind::Equilibrium, None, None, None)),
            (Trend::Finite(l), Trend::Finite(m)) => {
                Ok(label(RegimeKind::Poisson, None, Some(m), Some(l)))
            }
            (Trend::Finite(l), Trend::Zero) => {
                Ok(label(RegimeKind::Poisson, None, Some(0.0), Some(l)))
            }
            (Trend::Zero, Trend::Finite(m)) => Ok(label(RegimeKind::Poisson, None, Some(m), None)),
            (Trend::Zero, Trend::Zero) => {
                Ok(label(RegimeKind::NegligibleRadiation, None, None, None))
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn base() -> PhysicalParams {
        PhysicalParams::new(0.1, 1.0, 1.0, 1.0, -1.0, 2).unwrap()
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0, 1.0, 0.0, 2).is_err());
        assert!(PhysicalParams::new(1.5, 1.0, 1.0, 1.0, 0.0, 2).is_err());
        assert!(PhysicalParams::new(0.5, -1.0, 1.0, 1.0, 0.0, 2).is_err());
        assert!(PhysicalParams::new(0.5, 1.0, -1.0, 1.0, 0.0, 2).is_err());
        assert!(PhysicalParams::new(0.5, 1.0, 1.0, 1.0, -3.0, 2).is_err());
        assert!(PhysicalParams::new(0.5, 1.0, 1.0, 1.0, 0.0, 1).is_err());
        assert!(PhysicalParams::new(f64::NAN, 1.0, 1.0, 1.0, 0.0, 2).is_err());
    }

    #[test]
    fn margin_example_values() {
        // n = 2, nu = 1, ell = 1, ell_s = 0, eps = 0.5: 2 - 0.5 * 2 = 1
        let p = PhysicalParams::new(0.5, 1.0, 0.0, 1.0, -1.0, 2).unwrap();
        assert!((stability_margin(&p) - 1.0).abs() < 1e-15);
        // eps = 1, ell = 0.5, ell_s = 0: 1 - 2 = -1
        let p = PhysicalParams::new(1.0, 0.5, 0.0, 1.0, -1.0, 2).unwrap();
        assert!((stability_margin(&p) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let ladder = [0.1, 0.05, 0.025, 0.0125];
        let f = EpsilonFamily::for_regime(base(), RegimeKind::NonEquilibrium, 2.0, 1.0, &ladder)
            .unwrap();
        let l = classify_regime(&f, 0.1).unwrap();
        assert_eq!(l.kind, RegimeKind::NonEquilibrium);
        assert!((l.kappa.unwrap() - 2.0).abs() < 1e-12);
        assert!((l.m.unwrap() - 1.0).abs() < 1e-12);

        let f = EpsilonFamily::for_regime(base(), RegimeKind::Equilibrium, 0.0, 1.0, &ladder)
            .unwrap();
        assert_eq!(classify_regime(&f, 0.1).unwrap().kind, RegimeKind::Equilibrium);

        let f = EpsilonFamily::for_regime(base(), RegimeKind::Poisson, 0.0, 1.0, &ladder).unwrap();
        let l = classify_regime(&f, 0.1).unwrap();
        assert_eq!(l.kind, RegimeKind::Poisson);
        assert!((l.m.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn family_must_decrease() {
        let m = |e| FamilyMember { eps: e, ell: 1.0, ell_s: 1.0 };
        assert!(EpsilonFamily::new(base(), vec![m(0.1), m(0.2)]).is_err());
        assert!(EpsilonFamily::new(base(), vec![m(0.1), m(0.1)]).is_err());
        assert!(EpsilonFamily::new(base(), vec![m(0.2), m(0.1)]).is_ok());
    }
}
