//! Homogeneous Littlewood-Paley blocks and Besov norms for periodic fields.
//!
//! `chi` equals one on `[0, 1/2]`, vanishes beyond `1` and is joined by the
//! quintic smoothstep in between, so it is `C^2` and monotone. The block
//! multiplier is `phi_j(xi) = phi(2^{-j} |xi|)` with `phi(r) = chi(r/2) - chi(r)`;
//! the `phi_j` telescope to one away from the origin. Fields are given by
//! their Fourier coefficients and norms use the normalised Parseval identity
//! `||f||^2 = sum |f_k|^2`. The mean mode belongs to no block and is reported
//! on its own.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::params::{PhysicalParams, RegimeKind, RegimeLabel};

/// One lattice frequency with its (vector) amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMode {
    pub k: [i64; 3],
    pub amp: Vec<Complex64>,
}

/// Sparse table of Fourier coefficients of a scalar or vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpectrum {
    pub dim: usize,
    /// Scale from lattice index to wavenumber, `2 pi / L`.
    pub k_scale: f64,
    pub modes: Vec<SpectralMode>,
}

impl FieldSpectrum {
    pub fn new(dim: usize) -> Self {
        FieldSpectrum { dim, k_scale: 1.0, modes: Vec::new() }
    }

    pub fn push(&mut self, k: [i64; 3], amp: Vec<Complex64>) {
        self.modes.push(SpectralMode { k, amp });
    }

    /// Stacks several fields mode by mode; they must list the same
    /// frequencies in the same order.
    pub fn stack(parts: &[&FieldSpectrum]) -> FieldSpectrum {
        let first = parts[0];
        let mut out = FieldSpectrum { dim: first.dim, k_scale: first.k_scale, modes: Vec::new() };
        for (i, m) in first.modes.iter().enumerate() {
            let mut amp = Vec::new();
            for p in parts {
                debug_assert_eq!(p.modes[i].k, m.k);
                amp.extend_from_slice(&p.modes[i].amp);
            }
            out.modes.push(SpectralMode { k: m.k, amp });
        }
        out
    }

    pub fn wavenumber(&self, k: &[i64; 3]) -> f64 {
        let s: i64 = k.iter().take(self.dim).map(|x| x * x).sum();
        self.k_scale * (s as f64).sqrt()
    }

    /// Whether the coefficient table is that of a real field.
    pub fn is_real(&self, tol: f64) -> bool {
        let mut map = BTreeMap::new();
        for m in &self.modes {
            map.insert(m.k, &m.amp);
        }
        self.modes.iter().all(|m| {
            let neg = [-m.k[0], -m.k[1], -m.k[2]];
            match map.get(&neg) {
                Some(a) => a.iter().zip(&m.amp).all(|(x, y)| (x - y.conj()).norm() <= tol),
                None => m.amp.iter().all(|z| z.norm() <= tol),
            }
        })
    }

    pub fn l2(&self) -> f64 {
        self.modes.iter().flat_map(|m| m.amp.iter()).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Smooth cut-off profile.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DyadicProfile;

impl DyadicProfile {
    pub fn chi(&self, r: f64) -> f64 {
        if r <= 0.5 {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            let x = 2.0 * r - 1.0;
            1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.chi(0.5 * r) - self.chi(r)
    }

    /// Blocks `(j, phi_j(xi))` that see frequency `xi > 0`.
    pub fn weights(&self, xi: f64) -> impl Iterator<Item = (i32, f64)> + '_ {
        let j0 = xi.log2().floor() as i32;
        (j0 - 1..=j0 + 1).filter_map(move |j| {
            let w = self.phi(xi * 2f64.powi(-j));
            (w != 0.0).then_some((j, w))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockNorms {
    /// `||Delta_j f||` for every block that is not identically zero.
    pub blocks: BTreeMap<i32, f64>,
    /// Size of the mean (zero-frequency) coefficient.
    pub mean: f64,
}

pub fn lp_block_norms(f: &FieldSpectrum, profile: &DyadicProfile) -> BlockNorms {
    let mut sq: BTreeMap<i32, f64> = BTreeMap::new();
    let mut mean = 0.0;
    for m in &f.modes {
        let e: f64 = m.amp.iter().map(|z| z.norm_sqr()).sum();
        let xi = f.wavenumber(&m.k);
        if xi == 0.0 {
            mean += e;
            continue;
        }
        for (j, w) in profile.weights(xi) {
            *sq.entry(j).or_insert(0.0) += w * w * e;
        }
    }
    BlockNorms { blocks: sq.into_iter().map(|(j, v)| (j, v.sqrt())).collect(), mean: mean.sqrt() }
}

/// Frequency band over which block norms are summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    All,
    /// `2^j <= 2 eta`.
    Low(f64),
    /// `2^j >= eta / 2`.
    High(f64),
    /// `eta <= 2^j <= eta'`.
    Mid(f64, f64),
}

impl Band {
    pub fn contains(&self, j: i32) -> bool {
        let x = 2f64.powi(j);
        match *self {
            Band::All => true,
            Band::Low(eta) => x <= 2.0 * eta,
            Band::High(eta) => x >= 0.5 * eta,
            Band::Mid(a, b) => a <= x && x <= b,
        }
    }
}

/// `sum_{j in band} 2^{j s} ||Delta_j f||`.
pub fn besov_from_blocks(blocks: &BlockNorms, s: f64, band: Band) -> f64 {
    blocks
        .blocks
        .iter()
        .filter(|(j, _)| band.contains(**j))
        .map(|(j, v)| 2f64.powf(*j as f64 * s) * v)
        .sum()
}

pub fn besov_norm(f: &FieldSpectrum, s: f64, band: Band) -> f64 {
    besov_from_blocks(&lp_block_norms(f, &DyadicProfile), s, band)
}

/// Block-wise approximation of the sum-space norm `B^{s1} + B^{s2}`:
/// each block goes to whichever space weights it less.
pub fn sum_space_norm(f: &FieldSpectrum, s1: f64, s2: f64) -> f64 {
    lp_block_norms(f, &DyadicProfile)
        .blocks
        .iter()
        .map(|(j, v)| {
            let x = *j as f64;
            2f64.powf(x * s1).min(2f64.powf(x * s2)) * v
        })
        .sum()
}

/// Size of the radiative flux used in convergence studies:
/// `B^{n/2-1} + B^{n/2}`, split at frequency one.
pub fn flux_norm(j1: &FieldSpectrum) -> f64 {
    let n = j1.dim as f64;
    sum_space_norm(j1, n / 2.0 - 1.0, n / 2.0)
}

/// Fields entering the regime norms, in original variables.
#[derive(Debug, Clone, Copy)]
pub struct NormInputs<'a> {
    pub b: &'a FieldSpectrum,
    pub u: &'a FieldSpectrum,
    pub j0: &'a FieldSpectrum,
    pub j1: &'a FieldSpectrum,
}

/// Regime norm with its named pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeNorm {
    pub total: f64,
    pub parts: Vec<(&'static str, f64)>,
}

/// Solution-space norm adapted to the regime.
///
/// Common part: `||b||^{l,1/nu}_{n/2-1} + nu ||b||^{h,1/nu}_{n/2}`. Then
///
/// * nonequilibrium and equilibrium: `+ ||(u, j0, j1)||_{n/2-1}`;
/// * degenerate nonequilibrium: `+ ||(u, j1)||_{n/2-1} + ||j0||^{l,1/nu}_{n/2-1}
///   + ||j0||^{h, eps M}_{n/2-1}` plus the intermediate sum with weight
///   `2^{j n/2} max(1, min(2^j, 2^{-j} eps^2 nu M))` over `1/nu <= 2^j <= eps M`;
/// * Poisson: `+ ||(u, j1)||_{n/2-1} + eps/(ell nu) ||j0||^{l,1/nu}_{n/2-1}
///   + nu ||j0||^{l,1/nu}_{n/2} + ||j0||^{h,1/nu}_{n/2-1}`.
///
/// Negligible radiation has no norm of its own.
pub fn xy_norm_snapshot(
    fields: &NormInputs<'_>,
    regime: &RegimeLabel,
    p: &PhysicalParams,
) -> Result<RegimeNorm> {
    let n = p.n();
    let nu = p.nu();
    let eta = 1.0 / nu;
    let s = n / 2.0 - 1.0;
    let bb = lp_block_norms(fields.b, &DyadicProfile);
    let mut parts = Vec::new();
    parts.push(("b_low", besov_from_blocks(&bb, s, Band::Low(eta))));
    parts.push(("b_high", nu * besov_from_blocks(&bb, s + 1.0, Band::High(eta))));
    match regime.kind {
        RegimeKind::NonEquilibrium | RegimeKind::Equilibrium => {
            let rest = FieldSpectrum::stack(&[fields.u, fields.j0, fields.j1]);
            parts.push(("u_j0_j1", besov_norm(&rest, s, Band::All)));
        }
        RegimeKind::DegenerateNonEquilibrium => {
            let rest = FieldSpectrum::stack(&[fields.u, fields.j1]);
            parts.push(("u_j1", besov_norm(&rest, s, Band::All)));
            let bj = lp_block_norms(fields.j0, &DyadicProfile);
            let em = p.eps * p.m_cal();
            parts.push(("j0_low", besov_from_blocks(&bj, s, Band::Low(eta))));
            parts.push(("j0_high", besov_from_blocks(&bj, s, Band::High(em))));
            let weight_cap = p.eps * p.eps * nu * p.m_cal();
            let mid: f64 = bj
                .blocks
                .iter()
                .filter(|(j, _)| Band::Mid(eta, em).contains(**j))
                .map(|(j, v)| {
                    let x = 2f64.powi(*j);
                    x.powf(n / 2.0) * 1f64.max(x.min(weight_cap / x)) * v
                })
                .sum();
            parts.push(("j0_mid", mid));
        }
        RegimeKind::Poisson => {
            let rest = FieldSpectrum::stack(&[fields.u, fields.j1]);
            parts.push(("u_j1", besov_norm(&rest, s, Band::All)));
            let bj = lp_block_norms(fields.j0, &DyadicProfile);
            parts.push(("j0_low", p.eps / (p.ell * nu) * besov_from_blocks(&bj, s, Band::Low(eta))));
            parts.push(("j0_low_grad", nu * besov_from_blocks(&bj, s + 1.0, Band::Low(eta))));
            parts.push(("j0_high", besov_from_blocks(&bj, s, Band::High(eta))));
        }
        RegimeKind::NegligibleRadiation => {
            return Err(Error::UnknownRegime(format!("{}", regime.kind.name())));
        }
    }
    Ok(RegimeNorm { total: parts.iter().map(|(_, v)| v).sum(), parts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single(k: [i64; 3], a: f64) -> FieldSpectrum {
        let mut f = FieldSpectrum::new(2);
        f.push(k, vec![Complex64::new(a, 0.0)]);
        f
    }

    #[test]
    fn profile_is_partition_of_unity() {
        let p = DyadicProfile;
        for i in 1..2000 {
            let xi = 0.013 * i as f64;
            let s: f64 = p.weights(xi).map(|(_, w)| w).sum();
            assert!((s - 1.0).abs() < 1e-14, "xi = {xi}: {s}");
        }
    }

    #[test]
    fn unit_frequency_lives_in_block_zero() {
        let f = single([1, 0, 0], 3.0);
        let b = lp_block_norms(&f, &DyadicProfile);
        assert_eq!(b.blocks.len(), 1);
        assert!((b.blocks[&0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn mean_is_separate() {
        let f = single([0, 0, 0], 2.0);
        let b = lp_block_norms(&f, &DyadicProfile);
        assert!(b.blocks.is_empty());
        assert_eq!(b.mean, 2.0);
    }

    #[test]
    fn bands() {
        assert!(Band::Low(1.0).contains(1));
        assert!(!Band::Low(1.0).contains(2));
        assert!(Band::High(1.0).contains(-1));
        assert!(!Band::High(1.0).contains(-2));
        assert!(Band::Mid(1.0, 4.0).contains(2));
    }
}
