//! Bessel functions of the first kind, their zeros, and Gauss-Legendre
//! quadrature rules.
//!
//! `J_n` is evaluated by Miller's downward recurrence with the even-order
//! normalization `J_0 + 2 J_2 + 2 J_4 + ... = 1`, which is stable for every
//! order and argument used here. Zeros are located by scanning for sign
//! changes from below the first zero and polished by bisection with a final
//! secant step; McMahon's expansion serves as a sanity bound.

use crate::error::{CoreError, Result};

/// `J_0(x) .. J_{n_max}(x)` in one pass.
pub fn bessel_j_upto(n_max: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    // start high enough (and odd) that the downward recurrence has converged
    // at n_max; the odd start contributes nothing to the even-order norm
    let start = (n_max.max(ax as usize) + 16 + 2 * (ax.sqrt() as usize)) | 1;
    let mut fkp1 = 0.0_f64; // f_{k+1}
    let mut fk = 1e-30_f64; // f_k, seeded at k = start
    let mut out = vec![0.0; n_max + 1];
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        let fkm1 = (2.0 * k as f64 / ax) * fk - fkp1;
        fkp1 = fk;
        fk = fkm1;
        // fk now holds f_{k-1}
        if (k - 1) % 2 == 0 {
            norm += if k == 1 { fk } else { 2.0 * fk };
        }
        if k - 1 <= n_max {
            out[k - 1] = fk;
        }
        if fk.abs() > 1e200 {
            fkp1 /= 1e200;
            fk /= 1e200;
            norm /= 1e200;
            for v in out.iter_mut() {
                *v /= 1e200;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

pub fn bessel_j(n: usize, x: f64) -> f64 {
    bessel_j_upto(n, x)[n]
}

/// `J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2`, with `J_{-1} = -J_1`.
pub fn bessel_j_prime(n: usize, x: f64) -> f64 {
    let t = bessel_j_upto(n + 1, x);
    if n == 0 {
        -t[1]
    } else {
        0.5 * (t[n - 1] - t[n + 1])
    }
}

/// McMahon's large-zero expansion for `j_{n,m}`; used as a bracketing sanity
/// oracle, not as the solver.
pub fn mcmahon_zero(n: usize, m: usize) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let beta = (m as f64 + 0.5 * n as f64 - 0.25) * std::f64::consts::PI;
    let b8 = 8.0 * beta;
    beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3))
}

/// First `m_max` positive zeros of `J_n`.
pub fn bessel_zeros(n: usize, m_max: usize) -> Result<Vec<f64>> {
    let mut zeros = Vec::with_capacity(m_max);
    // the first zero of J_n sits above n; scan upward for sign changes
    let mut x = if n == 0 { 1.0 } else { n as f64 + 0.5 };
    let step = 0.25;
    let mut prev = bessel_j(n, x);
    let mut guard = 0;
    while zeros.len() < m_max {
        let xn = x + step;
        let cur = bessel_j(n, xn);
        if prev == 0.0 {
            zeros.push(x);
        } else if prev.signum() != cur.signum() {
            zeros.push(refine_zero(n, x, xn)?);
        }
        prev = cur;
        x = xn;
        guard += 1;
        if guard > 100_000 {
            return Err(CoreError::Construction(format!(
                "Bessel zero scan did not converge for (n, m) = ({n}, {})",
                zeros.len() + 1
            )));
        }
    }
    Ok(zeros)
}

fn refine_zero(n: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = bessel_j(n, lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fmid = bessel_j(n, mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if flo.signum() == fmid.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    // derivative-free secant polish inside the final bracket
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (bessel_j(n, a), bessel_j(n, b));
    for _ in 0..8 {
        if fb == fa {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        if !(lo..=hi).contains(&c) {
            break;
        }
        a = b;
        fa = fb;
        b = c;
        fb = bessel_j(n, b);
        if fb == 0.0 {
            break;
        }
    }
    let z = b;
    if !z.is_finite() {
        return Err(CoreError::Construction(format!(
            "zero refinement failed for order {n}"
        )));
    }
    Ok(z)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton from the Chebyshev-like initial guess
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, t);
        nodes[n - 1 - i] = 0.5 * (t + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: power series of `J_n` (accurate for the small
    /// arguments it is used at) plus plain bisection.
    fn series_j(n: usize, x: f64) -> f64 {
        let mut term = (0.5 * x).powi(n as i32);
        for k in 1..=n {
            term /= k as f64;
        }
        let mut acc = term;
        for j in 1..60 {
            term *= -(0.25 * x * x) / (j as f64 * (j + n) as f64);
            acc += term;
        }
        acc
    }

    fn series_bisect_zero(n: usize, mut lo: f64, mut hi: f64) -> f64 {
        let mut flo = series_j(n, lo);
        assert!(flo.signum() != series_j(n, hi).signum());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = series_j(n, mid);
            if flo.signum() == fm.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn j0_first_zero_matches_series_bisection_oracle() {
        let oracle = series_bisect_zero(0, 2.0, 3.0);
        let z = bessel_zeros(0, 1).unwrap()[0];
        assert_relative_eq!(z, oracle, epsilon = 1e-12);
        // frozen oracle value
        assert_relative_eq!(z, 2.404825557695773, epsilon = 1e-12);
    }

    #[test]
    fn j1_first_zero_matches_series_bisection_oracle() {
        let oracle = series_bisect_zero(1, 3.0, 4.5);
        let z = bessel_zeros(1, 1).unwrap()[0];
        assert_relative_eq!(z, oracle, epsilon = 1e-12);
        assert_relative_eq!(z, 3.831705970207512, epsilon = 1e-12);
    }

    #[test]
    fn zeros_agree_with_mcmahon_asymptotics() {
        for n in 0..=8 {
            let zs = bessel_zeros(n, 16).unwrap();
            for (m, &z) in zs.iter().enumerate() {
                let mc = mcmahon_zero(n, m + 1);
                // McMahon is asymptotic in m (slower for larger n); a loose
                // decaying bound suffices as sanity
                let tol = 0.8 / ((m + 1) * (m + 1)) as f64;
                assert!(
                    (z - mc).abs() < tol * z.max(1.0),
                    "n={n} m={} zero={z} mcmahon={mc}",
                    m + 1
                );
            }
        }
    }

    #[test]
    fn miller_values_match_series_at_moderate_argument() {
        for n in 0..6 {
            for &x in &[0.3, 1.7, 4.2, 9.1] {
                assert_relative_eq!(bessel_j(n, x), series_j(n, x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn derivative_identity_holds() {
        // finite-difference cross-check of J_n'
        for n in 0..5 {
            for &x in &[0.9, 3.3, 7.7] {
                let h = 1e-6;
                let fd = (bessel_j(n, x + h) - bessel_j(n, x - h)) / (2.0 * h);
                assert_relative_eq!(bessel_j_prime(n, x), fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre_unit(8);
        // degree 15 monomial on [0,1]: integral = 1/16
        let acc: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(15)).sum();
        assert_relative_eq!(acc, 1.0 / 16.0, epsilon = 1e-14);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
    }
}
