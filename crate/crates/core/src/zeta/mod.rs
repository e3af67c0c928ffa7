//! Hardy's Z-function on the critical line.
//!
//! [`ZetaEngine`] evaluates the Riemann-Siegel theta phase, `Z(t)` through the
//! Riemann-Siegel main sum plus up to five correction terms, and `|zeta(1/2+it)|^2 = Z(t)^2`.
//! The [`oracle`] submodule holds an independent Euler-Maclaurin evaluator used
//! to validate the engine and to integrate `|zeta|^2` below the engine floor.

pub mod oracle;
#[allow(clippy::excessive_precision)]
mod rs_coeffs;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use rs_coeffs::{RS_COEFFS, RS_DEGREE};

/// Default lower bound for Riemann-Siegel evaluation.
pub const DEFAULT_T_MIN: f64 = 10.0;

/// Default number of Riemann-Siegel correction terms (C0..C4).
pub const DEFAULT_CORRECTION_TERMS: usize = 5;

const MAX_CORRECTION_TERMS: usize = 5;

/// A validated ordinate on the critical line.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Height(f64);

impl Height {
    pub fn new(t: f64, t_min: f64) -> Result<Self> {
        if !(t >= t_min) || !t.is_finite() {
            return Err(LabError::HeightTooSmall { t, t_min });
        }
        Ok(Height(t))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// One Riemann oscillator `(2/sqrt(n)) cos(t w_n + psi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    pub n: u64,
    pub amplitude: f64,
    pub frequency: f64,
}

/// The local oscillator spectrum of `Z` near height `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpectrum {
    pub x: Height,
    /// `tau(x) = sqrt(x / 2 pi)`.
    pub cutoff: f64,
    /// `psi(x) = -x/2 - pi/8`.
    pub phase_constant: f64,
    pub terms: Vec<Oscillator>,
}

/// Riemann-Siegel evaluator for `theta`, `Z` and `|zeta|^2` on the critical line.
///
/// The engine is immutable and `Sync`; every method is a pure function of its
/// arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEngine {
    t_min: f64,
    correction_terms: usize,
}

impl Default for ZetaEngine {
    fn default() -> Self {
        ZetaEngine {
            t_min: DEFAULT_T_MIN,
            correction_terms: DEFAULT_CORRECTION_TERMS,
        }
    }
}

impl ZetaEngine {
    pub fn new(t_min: f64, correction_terms: usize) -> Result<Self> {
        if !(t_min >= DEFAULT_T_MIN) {
            return Err(LabError::InvalidConfig(format!(
                "t_min = {t_min} is below the hard floor {DEFAULT_T_MIN}"
            )));
        }
        if correction_terms > MAX_CORRECTION_TERMS {
            return Err(LabError::InvalidConfig(format!(
                "at most {MAX_CORRECTION_TERMS} Riemann-Siegel correction terms are available, got {correction_terms}"
            )));
        }
        Ok(ZetaEngine {
            t_min,
            correction_terms,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn correction_terms(&self) -> usize {
        self.correction_terms
    }

    fn check(&self, t: f64) -> Result<()> {
        Height::new(t, self.t_min).map(|_| ())
    }

    /// Riemann-Siegel theta via its asymptotic expansion.
    ///
    /// Truncated after the `t^-7` term; the first omitted term is below
    /// `1.6e-10 / t^9`.
    pub fn theta(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(theta_asymptotic(t))
    }

    /// Hardy's Z-function.
    pub fn z_value(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.z_unchecked(t))
    }

    /// `|zeta(1/2 + it)|^2`.
    pub fn zeta_sq(&self, t: f64) -> Result<f64> {
        let z = self.z_value(t)?;
        Ok(z * z)
    }

    /// Derivative of theta, the local quasi-frequency of `Z`.
    pub fn theta_prime(&self, t: f64) -> f64 {
        0.5 * (t / (2.0 * PI)).ln() - 1.0 / (48.0 * t * t)
    }

    /// Z(t) without the height check. Callers guarantee `t >= t_min`.
    pub(crate) fn z_unchecked(&self, t: f64) -> f64 {
        let tau = (t / (2.0 * PI)).sqrt();
        let n_terms = tau.floor() as usize;
        let theta = theta_asymptotic(t);
        let tables = log_tables(n_terms);
        let mut main = 0.0;
        for &(ln_n, inv_sqrt) in &tables[1..=n_terms] {
            main += inv_sqrt * (theta - t * ln_n).cos();
        }
        main *= 2.0;
        if self.correction_terms == 0 {
            return main;
        }
        let p = tau - n_terms as f64;
        let x = p - 0.5;
        let inv_tau = 1.0 / tau;
        let mut correction = 0.0;
        let mut scale = 1.0;
        for coeffs in RS_COEFFS.iter().take(self.correction_terms) {
            correction += scale * horner(coeffs, x);
            scale *= inv_tau;
        }
        let sign = if n_terms % 2 == 1 { 1.0 } else { -1.0 };
        main + sign * inv_tau.sqrt() * correction
    }

    /// The oscillators of the Riemann-Siegel main sum near height `x`.
    ///
    /// Frequencies are `ln(tau(x) / n)`, the local rate of `t ln(tau/n)`
    /// implied by linearising `theta(t) - t ln n` around `x`.
    pub fn local_spectrum(&self, x: f64) -> Result<OscillatorSpectrum> {
        let height = Height::new(x, self.t_min)?;
        let tau = (x / (2.0 * PI)).sqrt();
        // exact for perfect squares like x = 2 pi 10^4, where tau rounds near an integer
        let n_max = {
            let f = tau.floor();
            if (tau - tau.round()).abs() < 1e-9 {
                tau.round() as u64
            } else {
                f as u64
            }
        };
        let terms = (1..=n_max)
            .map(|n| Oscillator {
                n,
                amplitude: 2.0 / (n as f64).sqrt(),
                frequency: (tau / n as f64).ln().max(0.0),
            })
            .collect();
        Ok(OscillatorSpectrum {
            x: height,
            cutoff: tau,
            phase_constant: -x / 2.0 - PI / 8.0,
            terms,
        })
    }
}

pub(crate) fn theta_asymptotic(t: f64) -> f64 {
    let inv = 1.0 / t;
    let inv2 = inv * inv;
    0.5 * t * (t / (2.0 * PI)).ln() - 0.5 * t - PI / 8.0
        + inv
            * (1.0 / 48.0
                + inv2 * (7.0 / 5760.0 + inv2 * (31.0 / 80640.0 + inv2 * 127.0 / 430080.0)))
}

fn horner(coeffs: &[f64; RS_DEGREE + 1], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

// (ln n, n^-1/2) for n up to the largest main-sum length requested so far.
fn log_tables(n_terms: usize) -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    // 2^14 terms covers t up to ~1.7e9
    const CAP: usize = 1 << 14;
    let table = TABLE.get_or_init(|| {
        (0..=CAP)
            .map(|n| {
                if n == 0 {
                    (0.0, 0.0)
                } else {
                    let nf = n as f64;
                    (nf.ln(), 1.0 / nf.sqrt())
                }
            })
            .collect()
    });
    assert!(
        n_terms <= CAP,
        "height beyond the supported Riemann-Siegel range"
    );
    table
}

/// Locate sign changes of `f` on `[a, b]` by a uniform scan with step `step`,
/// refining each bracketed zero by bisection to absolute width `tol`.
pub fn locate_zeros<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, step: f64, tol: f64) -> Vec<f64> {
    let mut zeros = Vec::new();
    let n = ((b - a) / step).ceil() as usize;
    let mut x0 = a;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = (a + i as f64 * step).min(b);
        let f1 = f(x1);
        if f0 == 0.0 {
            zeros.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    zeros
}
