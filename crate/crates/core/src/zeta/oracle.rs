//! Independent reference values for `zeta(1/2 + it)`.
//!
//! The zeta value comes from Euler-Maclaurin summation of the Dirichlet
//! series with twenty Bernoulli correction terms; theta comes from Stirling's
//! series for `ln Gamma`. Neither path shares code with the Riemann-Siegel
//! engine, which is what makes them useful as cross-checks. Cost is linear in
//! `t`, so the oracle is capped at `t = 1e5`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{LabError, Result};

/// Largest height accepted by [`zeta_half`].
pub const ORACLE_MAX_T: f64 = 1.0e5;

// Bernoulli numbers B_2 .. B_40.
const BERNOULLI: [f64; 20] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
    -7709321041217.0 / 510.0,
    2577687858367.0 / 6.0,
    -26315271553053477373.0 / 1919190.0,
    2929993913841559.0 / 6.0,
    -261082718496449122051.0 / 13530.0,
];

/// `zeta(1/2 + it)` for `0 <= t <= 1e5` by Euler-Maclaurin summation.
pub fn zeta_half(t: f64) -> Result<Complex64> {
    if t > ORACLE_MAX_T || !t.is_finite() {
        return Err(LabError::OracleRangeExceeded {
            t,
            max: ORACLE_MAX_T,
        });
    }
    Ok(zeta_em(Complex64::new(0.5, t.abs())))
}

fn zeta_em(s: Complex64) -> Complex64 {
    let m = BERNOULLI.len();
    // keeps |s + 2m| / (2 pi N) <= 1/2 so the correction terms shrink by ~4x each
    let n = ((s.im + 2.0 * m as f64 + 2.0) / PI).ceil().max(10.0) as u64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..n {
        sum += n_pow_neg_s(k, s);
    }
    let nf = n as f64;
    let n_neg_s = n_pow_neg_s(n, s);
    sum += n_neg_s * nf / (s - 1.0);
    sum += 0.5 * n_neg_s;

    // term_k = B_2k / (2k)! * s (s+1) ... (s+2k-2) * N^{-s-2k+1}
    let mut rising = s; // s (s+1) ... (s+2k-2)
    let mut fact = 2.0; // (2k)!
    let mut n_pow = n_neg_s / nf; // N^{-s-2k+1}
    for (i, b) in BERNOULLI.iter().enumerate() {
        let k = i + 1;
        if k > 1 {
            let j = 2.0 * k as f64;
            rising *= (s + (j - 3.0)) * (s + (j - 2.0));
            fact *= (j - 1.0) * j;
            n_pow /= nf * nf;
        }
        sum += rising * n_pow * (b / fact);
    }
    sum
}

fn n_pow_neg_s(n: u64, s: Complex64) -> Complex64 {
    let ln_n = (n as f64).ln();
    let mag = (-s.re * ln_n).exp();
    let phase = -s.im * ln_n;
    Complex64::new(mag * phase.cos(), mag * phase.sin())
}

/// Complex `ln Gamma(z)` for `Re z > 0`, continuous branch.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    const SHIFT_TO: f64 = 20.0;
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < SHIFT_TO {
        shift += w.ln();
        w += 1.0;
    }
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for (i, b) in BERNOULLI.iter().take(10).enumerate() {
        let k = (i + 1) as f64;
        series += pow * (b / (2.0 * k * (2.0 * k - 1.0)));
        pow *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

/// Riemann-Siegel theta from `Im ln Gamma(1/4 + it/2) - (t/2) ln pi`.
pub fn theta(t: f64) -> f64 {
    ln_gamma(Complex64::new(0.25, 0.5 * t)).im - 0.5 * t * PI.ln()
}

/// Hardy's Z-function from the oracle zeta value and the Gamma-based theta.
pub fn hardy_z(t: f64) -> Result<f64> {
    let zeta = zeta_half(t)?;
    let rot = Complex64::from_polar(1.0, theta(t));
    Ok((rot * zeta).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_zero_and_special_value() {
        assert!(zeta_half(14.134725141734693).unwrap().norm() <= 1e-6);
        // zeta(1/2) = -1.4603545088095868
        let z0 = zeta_half(0.0).unwrap();
        assert_abs_diff_eq!(z0.re, -1.4603545088095868, epsilon = 1e-12);
        assert_abs_diff_eq!(z0.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn functional_equation_phase() {
        // e^{2 i theta} zeta(1/2+it) is real up to sign, so the ratio
        // zeta / conj(zeta) equals e^{-2 i theta} with unit modulus
        for &t in &[30.0, 77.7, 500.0, 2000.0] {
            let z = zeta_half(t).unwrap();
            let ratio = z / z.conj();
            assert_abs_diff_eq!(ratio.norm(), 1.0, epsilon = 1e-8);
            let rotated = Complex64::from_polar(1.0, theta(t)) * z;
            assert!(rotated.im.abs() < 1e-8 * (1.0 + rotated.re.abs()));
        }
    }

    #[test]
    fn range_guard() {
        assert!(matches!(
            zeta_half(1.5e5),
            Err(LabError::OracleRangeExceeded { .. })
        ));
    }

    #[test]
    fn ln_gamma_real_axis() {
        // Gamma(5) = 24, Gamma(1/2) = sqrt(pi)
        assert_abs_diff_eq!(
            ln_gamma(Complex64::new(5.0, 0.0)).re,
            24f64.ln(),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            ln_gamma(Complex64::new(0.5, 0.0)).re,
            0.5 * PI.ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn gram_point() {
        // theta vanishes at the first Gram point g_0 = 17.8455995...
        assert_abs_diff_eq!(theta(17.845599540), 0.0, epsilon = 1e-7);
    }
}
