//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham 2005).

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Mat;

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA_13: f64 = 5.371920351148152;

/// `exp(a)`, or `None` if the result is not finite.
pub fn expm(a: &Mat) -> Option<Mat> {
    assert!(a.is_square());
    let n = a.rows();
    let norm = a.norm1();
    if !norm.is_finite() {
        return None;
    }
    let s = if norm > THETA_13 {
        let s = (norm / THETA_13).log2().ceil();
        if s > 1000.0 {
            return None;
        }
        s as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(s));
    let id = Mat::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;

    let mut w1 = a6.scale(b[13]);
    w1 = &w1 + &a4.scale(b[11]);
    w1 = &w1 + &a2.scale(b[9]);
    let w1 = &a6 * &w1;
    let mut w2 = a6.scale(b[7]);
    w2 = &w2 + &a4.scale(b[5]);
    w2 = &w2 + &a2.scale(b[3]);
    w2 = &w2 + &id.scale(b[1]);
    let u = &a * &(&w1 + &w2);

    let mut z1 = a6.scale(b[12]);
    z1 = &z1 + &a4.scale(b[10]);
    z1 = &z1 + &a2.scale(b[8]);
    let z1 = &a6 * &z1;
    let mut z2 = a6.scale(b[6]);
    z2 = &z2 + &a4.scale(b[4]);
    z2 = &z2 + &a2.scale(b[2]);
    z2 = &z2 + &id.scale(b[0]);
    let v = &z1 + &z2;

    let lu = (&v - &u).lu()?;
    let mut r = lu.solve_mat(&(&v + &u));
    for _ in 0..s {
        r = &r * &r;
        if !r.is_finite() {
            return None;
        }
    }
    if r.is_finite() {
        Some(r)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_exponential() {
        let a = Mat::diag(&[0.0, -1.0, 2.5, -40.0]);
        let e = expm(&a).unwrap();
        for (i, v) in [0.0f64, -1.0, 2.5, -40.0].iter().enumerate() {
            assert!((e[(i, i)] - v.exp()).abs() <= 1e-14 * v.exp().max(1.0));
        }
    }

    #[test]
    fn rotation_generator() {
        let th = 7.3;
        let a = Mat::from_rows([[0.0, -th], [th, 0.0]]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - th.cos()).abs() < 1e-13);
        assert!((e[(1, 0)] - th.sin()).abs() < 1e-13);
    }

    #[test]
    fn nilpotent_jordan_block() {
        let a = Mat::from_rows([[3.0, 1.0], [0.0, 3.0]]);
        let e = expm(&a).unwrap();
        let e3 = 3.0f64.exp();
        assert!((e[(0, 1)] - e3).abs() < 1e-12 * e3);
        assert!((e[(0, 0)] - e3).abs() < 1e-12 * e3);
    }

    #[test]
    fn overflow_reported() {
        let a = Mat::diag(&[1.0e4]);
        assert!(expm(&a).is_none());
    }
}
