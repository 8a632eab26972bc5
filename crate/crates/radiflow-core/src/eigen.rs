//! Eigenvalues of small real nonsymmetric matrices.
//!
//! Balancing, reduction to upper Hessenberg form by Gaussian elimination with
//! pivoting, then the Francis double-shift QR iteration. This is the classic
//! `elmhes`/`hqr` pair from EISPACK.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Mat;

const MAX_SWEEPS: usize = 120;

/// All eigenvalues of `a`, in no particular order.
///
/// Returns `None` if the QR iteration fails to converge, which in practice only
/// happens for matrices containing non-finite entries.
pub fn eigenvalues(a: &Mat) -> Option<Vec<Complex64>> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Some(Vec::new());
    }
    if !a.is_finite() {
        return None;
    }
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    balance(&mut h);
    hessenberg(&mut h);
    hqr(&mut h)
}

/// Eigenvalues sorted by ascending real part, ties by imaginary part.
pub fn eigenvalues_sorted(a: &Mat) -> Option<Vec<Complex64>> {
    let mut ev = eigenvalues(a)?;
    ev.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(core::cmp::Ordering::Equal))
    });
    Some(ev)
}

fn balance(a: &mut [Vec<f64>]) {
    let n = a.len();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i][j] *= g;
                    }
                    for row in a.iter_mut() {
                        row[i] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    for m in 1..n - 1 {
        let mut x = 0.0;
        let mut i = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in m - 1..n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut() {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..n {
                        let v = a[m][j];
                        a[i][j] -= y * v;
                    }
                    for row in a.iter_mut() {
                        let v = row[i];
                        row[m] += y * v;
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..i - 1 {
            a[i][j] = 0.0;
        }
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr(a: &mut [Vec<f64>]) -> Option<Vec<Complex64>> {
    let n = a.len();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nnu = nn as usize;
            let mut l = nnu;
            while l >= 1 {
                let s = a[l - 1][l - 1].abs() + a[l][l].abs();
                let s = if s == 0.0 { anorm } else { s };
                if a[l][l - 1].abs() <= f64::EPSILON * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[nnu][nnu];
            if l == nnu {
                wr[nnu] = x + t;
                wi[nnu] = 0.0;
                nn -= 1;
                break;
            }
            let y = a[nnu - 1][nnu - 1];
            let w = a[nnu][nnu - 1] * a[nnu - 1][nnu];
            if l + 1 == nnu {
                p = 0.5 * (y - x);
                q = p * p + w;
                let z = q.abs().sqrt();
                let xx = x + t;
                if q >= 0.0 {
                    let z = p + if p >= 0.0 { z } else { -z };
                    wr[nnu - 1] = xx + z;
                    wr[nnu] = if z != 0.0 { xx - w / z } else { xx + z };
                    wi[nnu - 1] = 0.0;
                    wi[nnu] = 0.0;
                } else {
                    wr[nnu - 1] = xx + p;
                    wr[nnu] = xx + p;
                    wi[nnu - 1] = -z;
                    wi[nnu] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_SWEEPS {
                return None;
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=nnu {
                    a[i][i] -= x;
                }
                let s = a[nnu][nnu - 1].abs() + a[nnu - 1][nnu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nnu - 2;
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nnu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k + 1 <= nnu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k + 1 != nnu {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt();
                let s = if p >= 0.0 { s } else { -s };
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nnu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k + 1 != nnu {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k + 1 != nnu {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
            if l + 2 > nnu {
                break;
            }
        }
    }
    Some(wr.into_iter().zip(wi).map(|(r, i)| Complex64::new(r, i)).collect())
}
