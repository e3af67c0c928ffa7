//! Quadrature over critical-line integrands.
//!
//! [`integrate`] is an adaptive Simpson scheme whose initial panels are tied
//! to the local quasi-period of `Z`, so oscillatory integrands start out
//! resolved instead of forcing the recursion to discover every wiggle. The
//! Hardy-Littlewood integral `I(T)` has its own persistent store in
//! [`store`].

mod gauss;
pub mod store;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub use gauss::GaussLegendre;
pub use store::{Checkpoint, CheckpointTable, HlStore, StoreParams, StoreStatus};

/// Tolerances and refinement limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_panels_per_oscillation: u32,
    pub max_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            min_panels_per_oscillation: 8,
            max_depth: 40,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.rel_tol > 0.0) {
            problems.push(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.abs_tol > 0.0) {
            problems.push(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if self.min_panels_per_oscillation < 4 {
            problems.push(format!(
                "min_panels_per_oscillation must be at least 4, got {}",
                self.min_panels_per_oscillation
            ));
        }
        if self.max_depth == 0 {
            problems.push("max_depth must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LabError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Result of a quadrature: the estimate, its error estimate, and whether
/// every panel met its tolerance before hitting `max_depth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub err_est: f64,
    pub converged: bool,
}

/// Local quasi-frequency of `Z` at height `t`: `theta'(t) ~ ln(t / 2 pi) / 2`.
///
/// Clamped below at 1/2 so low heights still get a finite panel width.
pub fn quasi_frequency(t: f64) -> f64 {
    (0.5 * (t.max(2.0 * PI) / (2.0 * PI)).ln()).max(0.5)
}

/// Largest initial panel width for an integrand containing `Z^2` on `[a, b]`.
pub fn critical_line_panel_width(b: f64, spec: &QuadratureSpec) -> f64 {
    2.0 * PI / (quasi_frequency(b) * spec.min_panels_per_oscillation as f64)
}

/// Adaptive Simpson quadrature of `g` over `[a, b]` with critical-line
/// panel seeding.
///
/// Panels are processed in a fixed order and summed by pairwise reduction,
/// so the result is bit-for-bit reproducible.
pub fn integrate<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    integrate_seeded(g, a, b, spec, critical_line_panel_width(b, spec))
}

/// Adaptive Simpson quadrature with an explicit upper bound on the initial
/// panel width.
pub fn integrate_seeded<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    max_panel_width: f64,
) -> Result<Quadrature> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(LabError::InvalidInterval { a, b });
    }
    spec.validate()?;
    let n_panels = (((b - a) / max_panel_width).ceil() as usize).max(2);
    let width = (b - a) / n_panels as f64;
    let edge = |i: usize| {
        if i == n_panels {
            b
        } else {
            a + i as f64 * width
        }
    };

    // coarse pass: one Simpson estimate per panel
    let mut panels = Vec::with_capacity(n_panels);
    let mut f_left = g(a);
    for i in 0..n_panels {
        let (lo, hi) = (edge(i), edge(i + 1));
        let mid = 0.5 * (lo + hi);
        let f_mid = g(mid);
        let f_right = g(hi);
        let whole = (hi - lo) / 6.0 * (f_left + 4.0 * f_mid + f_right);
        panels.push(Panel {
            lo,
            hi,
            f_lo: f_left,
            f_mid,
            f_hi: f_right,
            whole,
        });
        f_left = f_right;
    }
    let magnitude = pairwise_sum(&panels.iter().map(|p| p.whole.abs()).collect::<Vec<_>>());
    let tol = spec.abs_tol.max(spec.rel_tol * magnitude);

    let mut values = Vec::with_capacity(n_panels);
    let mut errors = Vec::with_capacity(n_panels);
    let mut converged = true;
    for p in &panels {
        let local_tol = tol * (p.hi - p.lo) / (b - a);
        let mut state = Refinement {
            err: 0.0,
            converged: true,
        };
        let v = simpson_recurse(&g, p, local_tol, spec.max_depth, &mut state);
        converged &= state.converged;
        values.push(v);
        errors.push(state.err);
    }
    Ok(Quadrature {
        value: pairwise_sum(&values),
        err_est: pairwise_sum(&errors),
        converged,
    })
}

#[derive(Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_mid: f64,
    f_hi: f64,
    whole: f64,
}

struct Refinement {
    err: f64,
    converged: bool,
}

fn simpson_recurse<F: Fn(f64) -> f64>(
    g: &F,
    p: &Panel,
    tol: f64,
    depth_left: u32,
    state: &mut Refinement,
) -> f64 {
    let lm = 0.5 * (p.lo + p.mid_x());
    let rm = 0.5 * (p.mid_x() + p.hi);
    let f_lm = g(lm);
    let f_rm = g(rm);
    let mid = p.mid_x();
    let left = Panel {
        lo: p.lo,
        hi: mid,
        f_lo: p.f_lo,
        f_mid: f_lm,
        f_hi: p.f_mid,
        whole: (mid - p.lo) / 6.0 * (p.f_lo + 4.0 * f_lm + p.f_mid),
    };
    let right = Panel {
        lo: mid,
        hi: p.hi,
        f_lo: p.f_mid,
        f_mid: f_rm,
        f_hi: p.f_hi,
        whole: (p.hi - mid) / 6.0 * (p.f_mid + 4.0 * f_rm + p.f_hi),
    };
    let delta = left.whole + right.whole - p.whole;
    if delta.abs() <= 15.0 * tol || depth_left == 0 || mid <= p.lo || mid >= p.hi {
        if delta.abs() > 15.0 * tol {
            state.converged = false;
        }
        state.err += delta.abs() / 15.0;
        return left.whole + right.whole + delta / 15.0;
    }
    simpson_recurse(g, &left, 0.5 * tol, depth_left - 1, state)
        + simpson_recurse(g, &right, 0.5 * tol, depth_left - 1, state)
}

impl Panel {
    fn mid_x(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeta::{oracle, ZetaEngine};
    use approx::assert_relative_eq;

    #[test]
    fn constant_integrand() {
        let q = integrate(|_| 1.0, 0.0, PI / 2.0, &QuadratureSpec::default()).unwrap();
        assert!((q.value - PI / 2.0).abs() <= 1e-12);
        assert!(q.converged);
    }

    #[test]
    fn lemma_one_integrand() {
        let l = 1000.0;
        let u = PI / 2.0;
        let base = PI * l;
        let q = integrate(
            |t| (t - base) * t.sin().powi(2),
            base,
            base + u,
            &QuadratureSpec::default(),
        )
        .unwrap();
        let expected = u * (PI / 8.0 + 1.0 / (2.0 * PI));
        assert!((q.value - expected).abs() <= 1e-9);
    }

    #[test]
    fn z_squared_matches_oracle_simpson() {
        // independent reference: composite Simpson on oracle samples
        let n = 4000;
        let h = 1.0 / n as f64;
        let f = |t: f64| oracle::zeta_half(t).unwrap().norm_sqr();
        let mut reference = f(100.0) + f(101.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            reference += w * f(100.0 + i as f64 * h);
        }
        reference *= h / 3.0;
        let e = ZetaEngine::default();
        let q = integrate(
            |t| e.zeta_sq(t).unwrap(),
            100.0,
            101.0,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!(
            (q.value - reference).abs() <= 1e-6,
            "{} vs {}",
            q.value,
            reference
        );
    }

    #[test]
    fn panel_width_respects_quasi_period() {
        let spec = QuadratureSpec::default();
        let w = critical_line_panel_width(1.0e4, &spec);
        let theta_prime = 0.5 * (1.0e4 / (2.0 * PI)).ln();
        assert!(w <= 2.0 * PI / (theta_prime * 8.0) + 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let spec = QuadratureSpec::default();
        assert!(matches!(
            integrate(|x| x, 1.0, 1.0, &spec),
            Err(LabError::InvalidInterval { .. })
        ));
        let bad = QuadratureSpec {
            min_panels_per_oscillation: 2,
            ..spec
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn depth_limit_is_flagged() {
        let spec = QuadratureSpec {
            max_depth: 1,
            rel_tol: 1e-15,
            abs_tol: 1e-300,
            ..Default::default()
        };
        let q = integrate_seeded(|x: f64| (50.0 * x).sin().abs(), 0.0, 3.0, &spec, 3.0).unwrap();
        assert!(!q.converged);
        assert!(q.value.is_finite());
    }

    #[test]
    fn relative_tolerance_on_polynomial() {
        let q = integrate_seeded(
            |x: f64| x.powi(5),
            0.0,
            2.0,
            &QuadratureSpec::default(),
            0.5,
        )
        .unwrap();
        assert_relative_eq!(q.value, 64.0 / 6.0, max_relative = 1e-10);
    }
}
