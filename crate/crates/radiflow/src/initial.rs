//! Seeded, band-limited random initial data.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radiflow_core::spectral_solver::{l2_norm, FieldState, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    /// L2 size of each scalar field and of each vector field.
    pub amplitude: f64,
    /// Only lattice vectors with `1 <= |m| <= k_max` are excited.
    pub k_max: usize,
    pub seed: u64,
    /// Also excite `j1`; otherwise it starts at rest.
    pub with_flux: bool,
}

/// Real random field with the given L2 norm.
pub fn random_field(grid: &TorusGrid, k_max: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let kk = (k_max * k_max) as i64;
    let mut c = vec![Complex64::new(0.0, 0.0); grid.total()];
    for (i, z) in c.iter_mut().enumerate() {
        let m = grid.lattice(i);
        let r2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        if r2 >= 1 && r2 <= kk {
            *z = Complex64::new(re, im);
        }
    }
    // keep the Hermitian part so the field is real
    let (x, _) = grid.to_physical(&c);
    let mut c = grid.to_spectral(&x);
    for (i, z) in c.iter_mut().enumerate() {
        let m = grid.lattice(i);
        let r2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
        if r2 == 0 || r2 > kk {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let norm = l2_norm(&[&c]);
    if norm > 0.0 {
        for z in &mut c {
            *z *= amplitude / norm;
        }
    }
    c
}

fn random_vector(grid: &TorusGrid, k_max: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<Complex64>> {
    let mut v: Vec<Vec<Complex64>> = (0..grid.dim()).map(|_| random_field(grid, k_max, 1.0, rng)).collect();
    let norm = l2_norm(&v.iter().map(|c| c.as_slice()).collect::<Vec<_>>());
    for c in &mut v {
        for z in c.iter_mut() {
            *z *= amplitude / norm;
        }
    }
    v
}

pub fn random_state(grid: &TorusGrid, spec: &InitSpec) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut s = FieldState::zeros(grid);
    s.b = random_field(grid, spec.k_max, spec.amplitude, &mut rng);
    s.u = random_vector(grid, spec.k_max, spec.amplitude, &mut rng);
    s.j0 = random_field(grid, spec.k_max, spec.amplitude, &mut rng);
    if spec.with_flux {
        s.j1 = random_vector(grid, spec.k_max, spec.amplitude, &mut rng);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_real_and_normalised() {
        let g = TorusGrid::periodic(2, 16).unwrap();
        let spec = InitSpec { amplitude: 0.3, k_max: 3, seed: 9, with_flux: true };
        let a = random_state(&g, &spec);
        assert_eq!(a, random_state(&g, &spec));
        assert!((l2_norm(&[&a.b]) - 0.3).abs() < 1e-14);
        let (_, imag) = g.to_physical(&a.j0);
        assert!(imag < 1e-15);
        assert_eq!(a.b[0], Complex64::new(0.0, 0.0));
    }
}
