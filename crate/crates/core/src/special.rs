//! Legendre functions of the second kind and spherical Bessel functions.

use std::f64::consts::PI;

/// `Q_l(z)` for `z > 1`, with `z - 1` passed separately so nearly coincident
/// momenta do not lose digits to cancellation.
pub fn legendre_q(l: usize, z: f64, z_minus_one: f64) -> f64 {
    debug_assert!(z_minus_one > 0.0);
    if z >= 2.0 {
        return legendre_q_asymptotic(l, z);
    }
    let q0 = 0.5 * ((2.0 + z_minus_one) / z_minus_one).ln();
    if l == 0 {
        return q0;
    }
    // upward recurrence is stable for 1 < z < 2
    let mut prev = q0;
    let mut cur = z * q0 - 1.0;
    for k in 1..l {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * z * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Hypergeometric representation, convergent for `z > 1` and fast for `z >= 2`:
/// `Q_l(z) = l!/(2l+1)!! z^{-l-1} 2F1((l+1)/2, (l+2)/2; l+3/2; z^{-2})`.
fn legendre_q_asymptotic(l: usize, z: f64) -> f64 {
    let lf = l as f64;
    let mut prefactor = 1.0;
    for k in 1..=l {
        prefactor *= k as f64 / (2.0 * k as f64 + 1.0);
    }
    let x = 1.0 / (z * z);
    let (a, b, c) = ((lf + 1.0) / 2.0, (lf + 2.0) / 2.0, lf + 1.5);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..500 {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    prefactor * z.powi(-(l as i32) - 1) * sum
}

/// `lim_{z->1} (Q_l(z) - Q_0(z)) = -H_l` (harmonic number).
pub fn legendre_q_regular_limit(l: usize) -> f64 {
    -(1..=l).map(|k| 1.0 / k as f64).sum::<f64>()
}

/// Spherical Bessel function `j_l(x)` for `x >= 0`.
pub fn spherical_bessel_j(l: usize, x: f64) -> f64 {
    if x < 0.5 + l as f64 {
        return spherical_bessel_series(l, x);
    }
    let j0 = x.sin() / x;
    if l == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = x.sin() / (x * x) - x.cos() / x;
    for k in 1..l {
        let next = (2.0 * k as f64 + 1.0) / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn spherical_bessel_series(l: usize, x: f64) -> f64 {
    let mut lead = 1.0;
    for k in 0..l {
        lead *= x / (2.0 * k as f64 + 3.0);
    }
    let half_sq = 0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= -half_sq / (k as f64 * (2.0 * (l + k) as f64 + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// `∫_0^∞ Q_0((1+x²)/(2x)) dx/x`, the Landé subtraction constant.
pub const LANDE_INTEGRAL: f64 = PI * PI / 2.0;
