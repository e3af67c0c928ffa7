//! The operational ladder `phi_1`.
//!
//! `phi_1(T)` is the solution `y` of `V(y) = I(T)`, where `I` is the
//! Hardy-Littlewood integral from the checkpoint store and
//! `V(y) = y ln y + (gamma - ln 2 pi) y + c0`. Differentiating that relation
//! gives `phi_1'(T) = Z(T)^2 / V'(phi_1(T))`.

mod primes;

use std::f64::consts::{E, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::HlStore;
use crate::zeta::ZetaEngine;

pub use primes::{prime_pi, PRIME_PI_MAX};

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

const NEWTON_MAX_ITER: usize = 100;

/// Tunable constants of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    /// Additive constant in `V`.
    pub c0: f64,
    pub newton_tol: f64,
    pub k_max: usize,
    /// `V` is only used above this point, where it is strictly increasing.
    pub y_floor: f64,
}

impl Default for LadderParams {
    fn default() -> Self {
        LadderParams {
            c0: 0.0,
            newton_tol: 1e-12,
            k_max: 5,
            y_floor: E,
        }
    }
}

impl LadderParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.newton_tol > 0.0) {
            problems.push(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            ));
        }
        if !self.c0.is_finite() {
            problems.push(format!("c0 must be finite, got {}", self.c0));
        }
        if self.k_max == 0 {
            problems.push("k_max must be at least 1".to_string());
        }
        // V' vanishes at y = 2 pi e^{-1-gamma}
        if !(self.y_floor > 2.0 * PI * (-1.0 - EULER_GAMMA).exp()) {
            problems.push(format!(
                "y_floor {} is not in the increasing range of V",
                self.y_floor
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LabError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// `phi_1` together with the integral store it is built on.
#[derive(Debug, Clone)]
pub struct LadderModel {
    params: LadderParams,
    store: Arc<HlStore>,
    engine: ZetaEngine,
}

/// `[T^(r), (T+U)^(r)]`, the level-`r` reverse image of `[T, T+U]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IteratedInterval {
    pub level: usize,
    pub t: f64,
    pub u: f64,
    pub lo: f64,
    pub hi: f64,
}

impl IteratedInterval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Open-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

/// The base segment and its iterated images for levels `0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisconnectedSet {
    pub components: Vec<IteratedInterval>,
}

impl DisconnectedSet {
    /// Distances between consecutive components.
    pub fn gaps(&self) -> Vec<f64> {
        self.components
            .windows(2)
            .map(|w| w[1].lo - w[0].hi)
            .collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|c| c.lo <= x && x <= c.hi)
    }
}

impl LadderModel {
    pub fn new(store: Arc<HlStore>, engine: ZetaEngine, params: LadderParams) -> Result<Self> {
        params.validate()?;
        Ok(LadderModel {
            params,
            store,
            engine,
        })
    }

    pub fn params(&self) -> &LadderParams {
        &self.params
    }

    pub fn store(&self) -> &Arc<HlStore> {
        &self.store
    }

    pub fn engine(&self) -> &ZetaEngine {
        &self.engine
    }

    pub fn v(&self, y: f64) -> Result<f64> {
        self.check_floor(y)?;
        Ok(self.v_raw(y))
    }

    pub fn v_prime(&self, y: f64) -> Result<f64> {
        self.check_floor(y)?;
        Ok(self.v_prime_raw(y))
    }

    fn check_floor(&self, y: f64) -> Result<()> {
        if y >= self.params.y_floor && y.is_finite() {
            Ok(())
        } else {
            Err(LabError::DomainError {
                y,
                floor: self.params.y_floor,
            })
        }
    }

    fn v_raw(&self, y: f64) -> f64 {
        y * y.ln() + (EULER_GAMMA - (2.0 * PI).ln()) * y + self.params.c0
    }

    fn v_prime_raw(&self, y: f64) -> f64 {
        y.ln() + 1.0 + EULER_GAMMA - (2.0 * PI).ln()
    }

    /// `I(T)` from the store.
    pub fn hl_integral(&self, t: f64) -> Result<f64> {
        self.store.value(t)
    }

    /// `V^{-1}(x)`.
    pub fn v_inverse(&self, x: f64) -> Result<f64> {
        let floor = self.params.y_floor;
        if !(x >= self.v_raw(floor)) {
            return Err(LabError::DomainError { y: x, floor });
        }
        // bracket: V(floor) <= x, grow hi until V(hi) >= x
        let (mut lo, mut hi) = (floor, 2.0 * floor);
        while self.v_raw(hi) < x {
            lo = hi;
            hi *= 2.0;
        }
        // V is convex, so Newton from the right decreases monotonically onto the root
        let mut y = hi;
        for i in 0..NEWTON_MAX_ITER {
            let f = self.v_raw(y) - x;
            if f == 0.0 {
                return Ok(y);
            }
            if f > 0.0 {
                hi = hi.min(y);
            } else {
                lo = lo.max(y);
            }
            let mut next = y - f / self.v_prime_raw(y);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - y).abs();
            // converged once steps reach the rounding floor, beyond newton_tol
            if step <= 2.0 * f64::EPSILON * y || hi - lo <= 2.0 * f64::EPSILON * y {
                return Ok(next);
            }
            y = next;
            if i + 1 == NEWTON_MAX_ITER {
                let residual = (self.v_raw(y) - x) / x.abs().max(1.0);
                if residual.abs() <= self.params.newton_tol {
                    return Ok(y);
                }
                return Err(LabError::ConvergenceFailure {
                    iterations: NEWTON_MAX_ITER,
                    residual,
                });
            }
        }
        unreachable!("loop returns on its last iteration")
    }

    /// `phi_1(T) = V^{-1}(I(T))`.
    pub fn phi1(&self, t: f64) -> Result<f64> {
        self.v_inverse(self.hl_integral(t)?)
    }

    /// `phi_1'(T) = Z(T)^2 / V'(phi_1(T))`.
    pub fn phi1_prime(&self, t: f64) -> Result<f64> {
        let y = self.phi1(t)?;
        Ok(self.phi1_prime_at(t, y))
    }

    /// Derivative when `phi_1(t)` is already known.
    pub(crate) fn phi1_prime_at(&self, t: f64, phi1_t: f64) -> f64 {
        let z = self.engine.z_unchecked(t);
        z * z / self.v_prime_raw(phi1_t)
    }

    /// `phi_1` applied `k` times.
    pub fn forward(&self, w: f64, k: usize) -> Result<f64> {
        let mut x = w;
        for _ in 0..k {
            x = self.phi1(x)?;
        }
        Ok(x)
    }

    /// `phi_1^r(w)` for `r = 0..=k` and the chain weight
    /// `prod_{r<k} phi_1'(phi_1^r(w))`.
    pub fn orbit(&self, w: f64, k: usize) -> Result<(Vec<f64>, f64)> {
        let mut points = Vec::with_capacity(k + 1);
        points.push(w);
        let mut weight = 1.0;
        let mut x = w;
        for _ in 0..k {
            let next = self.phi1(x)?;
            weight *= self.phi1_prime_at(x, next);
            points.push(next);
            x = next;
        }
        Ok((points, weight))
    }

    /// Jacobian of `phi_1^k` at `w`.
    pub fn chain_weight(&self, w: f64, k: usize) -> Result<f64> {
        Ok(self.orbit(w, k)?.1)
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k > self.params.k_max {
            Err(LabError::LevelTooLarge {
                k,
                k_max: self.params.k_max,
            })
        } else {
            Ok(())
        }
    }

    /// `T^(k) = phi_1^{-k}(T)`.
    pub fn reverse_iterate(&self, t: f64, k: usize) -> Result<f64> {
        self.check_level(k)?;
        let mut x = t;
        for _ in 0..k {
            x = self.reverse_once(x)?;
        }
        Ok(x)
    }

    // I(S) = V(T) on [T, T + 4(1-gamma) T / ln T], widened once to 8x
    fn reverse_once(&self, t: f64) -> Result<f64> {
        let target = self.v(t)?;
        let width = 4.0 * (1.0 - EULER_GAMMA) * t / t.ln();
        match self.store.invert(target, t, t + width) {
            Err(LabError::BracketFailure { .. }) => self.store.invert(target, t, t + 2.0 * width),
            other => other,
        }
    }

    /// Largest admissible `U` at height `T`: `T / ln^2 T`.
    pub fn u_max(t: f64) -> f64 {
        let l = t.ln();
        t / (l * l)
    }

    fn check_u(&self, t: f64, u: f64) -> Result<()> {
        let max = Self::u_max(t);
        if !(u > 0.0 && u <= max) {
            return Err(LabError::UTooLarge { u, t, max });
        }
        Ok(())
    }

    pub fn iterated_interval(&self, t: f64, u: f64, r: usize) -> Result<IteratedInterval> {
        self.check_u(t, u)?;
        let lo = self.reverse_iterate(t, r)?;
        let hi = self.reverse_iterate(t + u, r)?;
        if !(lo < hi) {
            return Err(LabError::InvalidInterval { a: lo, b: hi });
        }
        Ok(IteratedInterval {
            level: r,
            t,
            u,
            lo,
            hi,
        })
    }

    pub fn disconnected_set(&self, t: f64, u: f64, k: usize) -> Result<DisconnectedSet> {
        self.check_u(t, u)?;
        self.check_level(k)?;
        let mut components = Vec::with_capacity(k + 1);
        let (mut lo, mut hi) = (t, t + u);
        for level in 0..=k {
            if level > 0 {
                lo = self.reverse_once(lo)?;
                hi = self.reverse_once(hi)?;
            }
            components.push(IteratedInterval {
                level,
                t,
                u,
                lo,
                hi,
            });
        }
        for w in components.windows(2) {
            if !(w[0].hi < w[1].lo) || !(w[1].lo < w[1].hi) {
                return Err(LabError::InvalidInterval {
                    a: w[1].lo,
                    b: w[1].hi,
                });
            }
        }
        Ok(DisconnectedSet { components })
    }

    /// `(T^(r) - (T+U)^(r-1)) / ((1 - gamma) pi(T))` with the exact prime count.
    pub fn gap_ratio(&self, t: f64, u: f64, r: usize) -> Result<f64> {
        Ok(self.gap(t, u, r)? / ((1.0 - EULER_GAMMA) * prime_pi(t.floor())? as f64))
    }

    /// The raw gap `T^(r) - (T+U)^(r-1)`.
    pub fn gap(&self, t: f64, u: f64, r: usize) -> Result<f64> {
        if r == 0 {
            return Err(LabError::LevelMismatch("gap needs r >= 1".into()));
        }
        self.check_u(t, u)?;
        let lo = self.reverse_iterate(t, r)?;
        let prev_hi = self.reverse_iterate(t + u, r - 1)?;
        Ok(lo - prev_hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{QuadratureSpec, StoreParams};

    fn model() -> LadderModel {
        let store = HlStore::open(
            ZetaEngine::default(),
            QuadratureSpec::default(),
            StoreParams::default(),
            None,
        )
        .unwrap();
        LadderModel::new(
            Arc::new(store),
            ZetaEngine::default(),
            LadderParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn euler_gamma_matches_harmonic_limit() {
        // H_n - ln n - 1/(2n) + 1/(12 n^2) converges to gamma with O(n^-4) error
        let n = 10_000u32;
        let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        let nf = n as f64;
        let g = h - nf.ln() - 1.0 / (2.0 * nf) + 1.0 / (12.0 * nf * nf);
        assert!((g - EULER_GAMMA).abs() < 1e-9);
    }

    #[test]
    fn v_plug_in_values() {
        let m = model();
        assert!((m.v(E).unwrap() - (-0.7086)).abs() < 1e-4);
        assert!((m.v_prime(E).unwrap() - 0.7393).abs() < 1e-4);
        assert!(m.v(2.0 * E).unwrap() > m.v(E).unwrap());
        assert!(matches!(m.v(2.0), Err(LabError::DomainError { .. })));
    }

    #[test]
    fn v_inverse_round_trip() {
        let m = model();
        for y in [3.0, 17.5, 1.0e3, 7.7e5, 2.0e6] {
            let back = m.v_inverse(m.v(y).unwrap()).unwrap();
            assert!((back - y).abs() <= 1e-13 * y, "{y} -> {back}");
        }
    }

    #[test]
    fn phi1_defining_equation_and_monotonicity() {
        let m = model();
        let t = 1.0e4;
        let y = m.phi1(t).unwrap();
        let i = m.hl_integral(t).unwrap();
        assert!(((m.v(y).unwrap() - i) / i).abs() <= 1e-12);
        assert!(y < t);
        assert!(m.phi1(t).unwrap() < m.phi1(t + 1.0).unwrap());
    }

    #[test]
    fn phi1_prime_matches_central_difference() {
        let m = model();
        let (t, h) = (5000.0, 1e-3);
        let fd = (m.phi1(t + h).unwrap() - m.phi1(t - h).unwrap()) / (2.0 * h);
        let d = m.phi1_prime(t).unwrap();
        assert!((fd - d).abs() <= 1e-4, "{fd} vs {d}");
    }

    #[test]
    fn phi1_prime_vanishes_at_zero() {
        let m = model();
        assert!(m.phi1_prime(14.134725141734693).unwrap() <= 1e-8);
        for i in 0..1000 {
            assert!(m.phi1_prime(100.0 + 0.37 * i as f64).unwrap() >= 0.0);
        }
    }

    #[test]
    fn reverse_iterate_inverts_phi1() {
        let m = model();
        let t = 3000.0;
        assert_eq!(m.reverse_iterate(t, 0).unwrap(), t);
        let t1 = m.reverse_iterate(t, 1).unwrap();
        assert!(((m.phi1(t1).unwrap() - t) / t).abs() <= 1e-9);
        let t2 = m.reverse_iterate(t, 2).unwrap();
        let t2b = m.reverse_iterate(t1, 1).unwrap();
        assert!(((t2 - t2b) / t2).abs() <= 1e-9);
        assert!(matches!(
            m.reverse_iterate(t, 6),
            Err(LabError::LevelTooLarge { .. })
        ));
    }

    #[test]
    fn disconnected_set_is_ordered() {
        let m = model();
        let t = PI * 1.0e3;
        let set = m.disconnected_set(t, PI / 4.0, 3).unwrap();
        assert_eq!(set.components.len(), 4);
        assert_eq!(
            (set.components[0].lo, set.components[0].hi),
            (t, t + PI / 4.0)
        );
        for g in set.gaps() {
            assert!(g > 10.0 * PI / 4.0);
        }
        let iv = m.iterated_interval(t, PI / 4.0, 2).unwrap();
        assert_eq!(iv.lo, set.components[2].lo);
        let back = m.forward(iv.lo, 2).unwrap();
        assert!((back - t).abs() <= 1e-9 * t);
        assert!(matches!(
            m.iterated_interval(t, 1.0e3, 1),
            Err(LabError::UTooLarge { .. })
        ));
    }

    #[test]
    fn chain_weight_composition() {
        let m = model();
        let w = m.reverse_iterate(PI * 1.0e3, 2).unwrap() + 0.1;
        assert_eq!(m.chain_weight(w, 0).unwrap(), 1.0);
        assert_eq!(m.chain_weight(w, 1).unwrap(), m.phi1_prime(w).unwrap());
        let direct = m.phi1_prime(w).unwrap() * m.phi1_prime(m.phi1(w).unwrap()).unwrap();
        let chained = m.chain_weight(w, 2).unwrap();
        assert!(((chained - direct) / direct).abs() <= 1e-9);
    }

    #[test]
    fn c0_shift_is_small() {
        let base = model();
        let shifted = |c0: f64| {
            let m = LadderModel::new(
                base.store.clone(),
                ZetaEngine::default(),
                LadderParams {
                    c0,
                    ..LadderParams::default()
                },
            )
            .unwrap();
            m.phi1(2.0e4).unwrap()
        };
        let d = (shifted(1.0) - shifted(0.0)).abs();
        assert!(d < 2.0 / 2.0e4f64.ln() && d > 0.0);
    }
}
