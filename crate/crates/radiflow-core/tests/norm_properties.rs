use num_complex::Complex64;
use proptest::prelude::*;

use radiflow_core::dyadic_norms::{besov_norm, lp_block_norms, Band, DyadicProfile, FieldSpectrum};
use radiflow_core::stats::fit_rate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spectrum(amps: &[(i64, i64, f64, f64)]) -> FieldSpectrum {
    let mut f = FieldSpectrum::new(2);
    for &(a, b, re, im) in amps {
        f.push([a, b, 0], vec![Complex64::new(re, im)]);
    }
    f
}

fn arb_spectrum() -> impl Strategy<Value = FieldSpectrum> {
    prop::collection::vec((-20i64..20, -20i64..20, -1.0f64..1.0, -1.0f64..1.0), 1..40)
        .prop_map(|v| spectrum(&v.into_iter().filter(|m| m.0 != 0 || m.1 != 0).collect::<Vec<_>>()))
}

proptest! {
    #[test]
    fn almost_orthogonality(f in arb_spectrum()) {
        let total = f.l2().powi(2);
        let blocks: f64 = lp_block_norms(&f, &DyadicProfile).blocks.values().map(|v| v * v).sum();
        prop_assert!(blocks >= 0.5 * total - 1e-12 && blocks <= 2.0 * total + 1e-12);
    }

    #[test]
    fn low_high_overlap(f in arb_spectrum(), eta in 0.1f64..30.0, s in -1.0f64..2.0) {
        let full = besov_norm(&f, s, Band::All);
        let lo = besov_norm(&f, s, Band::Low(eta));
        let hi = besov_norm(&f, s, Band::High(eta));
        prop_assert!(lo + hi >= full - 1e-12);
        prop_assert!(full >= lo.max(hi) - 1e-12);
    }

    #[test]
    fn triangle_and_homogeneity(f in arb_spectrum(), g in arb_spectrum(), lam in -3.0f64..3.0) {
        let mut sum = f.clone();
        sum.modes.extend(g.modes.iter().cloned());
        let mut scaled = f.clone();
        for m in &mut scaled.modes {
            for a in &mut m.amp {
                *a *= lam;
            }
        }
        let nf = besov_norm(&f, 0.5, Band::All);
        prop_assert!((besov_norm(&scaled, 0.5, Band::All) - lam.abs() * nf).abs() <= 1e-12 * (1.0 + nf));
        prop_assert!(besov_norm(&sum, 0.5, Band::All) <= nf + besov_norm(&g, 0.5, Band::All) + 1e-12);
    }
}

#[test]
fn single_mode_examples() {
    let a = 0.37;
    let one = spectrum(&[(1, 0, a, 0.0)]);
    assert!((besov_norm(&one, 0.7, Band::All) - a).abs() < 1e-15);
    assert_eq!(besov_norm(&one, 0.7, Band::Low(0.25)), 0.0);
    let four = spectrum(&[(4, 0, a, 0.0)]);
    assert!((besov_norm(&four, 1.0, Band::All) - 4.0 * a).abs() < 1e-14);
}

#[test]
fn noisy_power_law_slope() {
    let eps = [0.1, 0.05, 0.025, 0.0125];
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let err: Vec<f64> = eps.iter().map(|e| e * (1.0 + 0.05 * rng.gen_range(-1.0..1.0))).collect();
        let f = fit_rate(&eps, &err).unwrap();
        assert!((0.9..=1.1).contains(&f.slope), "seed {seed}: {}", f.slope);
    }
}
