//! Mean-value nodes and the factorization identity.
//!
//! For an admissible `f` on `[T, T+U]` and a level `k`, the node generator
//! picks two points in the level-`k` interval `[T^(k), (T+U)^(k)]`:
//!
//! * `d`, a mean-value point of `w -> f(phi_1^k(w)) J_k(w)`,
//! * `e`, a mean-value point of `w -> J_k(w)`,
//!
//! with `J_k(w) = prod_{r<k} phi_1'(phi_1^r(w))`. Substituting
//! `t = phi_1^k(w)` shows the two integrals equal `U F` and `U`, so
//! `f(alpha_0) prod phi_1'(alpha_r) / phi_1'(beta_r) = F` holds exactly, where
//! `alpha_r = phi_1^{k-r}(d)` and `beta_r = phi_1^{k-r}(e)`. Replacing
//! `phi_1'` by `|zeta|^2` gives the asymptotic form.

mod functions;

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::ladder::{IteratedInterval, LadderModel};
use crate::quadrature::{integrate, QuadratureSpec};

pub use functions::{closed_form_mean, AdmissibleFunction, FunctionId};

/// Grid size of the crossing scan in [`mvt_node`].
pub const MVT_SCAN_POINTS: usize = 1024;
/// Nodes with `|zeta(1/2 + i beta)|^2` below this are rejected.
pub const DEGENERATE_ZETA_SQ: f64 = 1e-12;
/// Crossings tried for `e` before giving up on a degenerate `beta`.
pub const MAX_NODE_RETRIES: usize = 8;

/// `F(U, T; f)`, the mean of `f` over `[T, T+U]`, by quadrature.
pub fn f_mean(f: &AdmissibleFunction, t: f64, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    f.certify(t, u)?;
    let q = integrate(|x| f.eval(x), t, t + u, spec)?;
    let mean = q.value / u;
    if !(mean > 0.0) {
        return Err(LabError::NotAdmissible {
            id: f.label().to_string(),
            t,
            u,
            reason: format!("mean {mean:e} is not positive"),
        });
    }
    Ok(mean)
}

/// A mean-value point `c` of `g` on `(a, b)`: `g(c) (b - a) = int_a^b g`.
///
/// Picks the leftmost sign change of `g - mean` on a 1024-point grid and
/// refines it by bisection. A constant `g` yields the midpoint.
pub fn mvt_node<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    let mean = mvt_mean(&g, a, b, spec)?;
    nth_crossing(&g, a, b, mean, 0)
}

fn mvt_mean<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(a < b) {
        return Err(LabError::InvalidInterval { a, b });
    }
    Ok(integrate(g, a, b, spec)?.value / (b - a))
}

/// The `skip`-th crossing (0 = leftmost) of `g` through `mean` inside `(a, b)`.
fn nth_crossing<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, mean: f64, skip: usize) -> Result<f64> {
    for density in [1, 4] {
        let n = MVT_SCAN_POINTS * density;
        let h = |x: f64| g(x) - mean;
        let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let hs: Vec<f64> = xs.iter().map(|&x| h(x)).collect();
        let scale = mean.abs().max(f64::MIN_POSITIVE);
        if hs.iter().all(|v| v.abs() <= 1e-14 * scale) {
            return Ok(0.5 * (a + b));
        }
        let mut found = 0;
        for i in 0..n {
            let (x0, x1, h0, h1) = (xs[i], xs[i + 1], hs[i], hs[i + 1]);
            let interior_zero = h0 == 0.0 && i > 0;
            if interior_zero
                || (h0 != 0.0 && (h0 < 0.0) != (h1 < 0.0) && !(h1 == 0.0 && i + 1 == n))
            {
                if found == skip {
                    if interior_zero {
                        return Ok(x0);
                    }
                    if h1 == 0.0 {
                        return Ok(x1);
                    }
                    return Ok(bisect(&h, x0, x1, h0));
                }
                found += 1;
            }
        }
    }
    Err(LabError::NoCrossing { a, b })
}

fn bisect<H: Fn(f64) -> f64>(h: &H, mut lo: f64, mut hi: f64, h_lo: f64) -> f64 {
    let lo_negative = h_lo < 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid);
        if hm == 0.0 {
            return mid;
        }
        if (hm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if h(lo).abs() <= h(hi).abs() {
        lo
    } else {
        hi
    }
}

/// The `e` side of the node generator: it depends only on `(T, U, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaNodes {
    pub t: f64,
    pub u: f64,
    pub k: usize,
    pub e: f64,
    /// `beta_1 .. beta_k`.
    pub beta: Vec<f64>,
    /// `phi_1'(beta_r)`.
    pub beta_weight: Vec<f64>,
    /// `|zeta(1/2 + i beta_r)|^2`.
    pub beta_zeta_sq: Vec<f64>,
    /// Crossings skipped because a `beta` sat on a zeta zero.
    pub retries: usize,
}

/// Output of the node generator for one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeVector {
    pub f_id: String,
    pub k: usize,
    pub t: f64,
    pub u: f64,
    pub d: f64,
    pub e: f64,
    /// `alpha_0 .. alpha_k`.
    pub alpha: Vec<f64>,
    /// `beta_1 .. beta_k`.
    pub beta: Vec<f64>,
    /// `phi_1'(alpha_r)` for `r = 1..=k`.
    pub alpha_weight: Vec<f64>,
    pub beta_weight: Vec<f64>,
    /// `|zeta(1/2 + i alpha_r)|^2` for `r = 1..=k`.
    pub alpha_zeta_sq: Vec<f64>,
    pub beta_zeta_sq: Vec<f64>,
    /// `f(alpha_0)`.
    pub f_alpha0: f64,
}

impl NodeVector {
    /// `prod phi_1'(alpha_r) / phi_1'(beta_r)`.
    pub fn weight_ratio(&self) -> f64 {
        self.alpha_weight
            .iter()
            .zip(&self.beta_weight)
            .map(|(a, b)| a / b)
            .product()
    }

    /// `prod |zeta(alpha_r)|^2 / |zeta(beta_r)|^2`.
    pub fn zeta_ratio(&self) -> f64 {
        self.alpha_zeta_sq
            .iter()
            .zip(&self.beta_zeta_sq)
            .map(|(a, b)| a / b)
            .product()
    }

    pub fn min_zeta_beta(&self) -> f64 {
        self.beta_zeta_sq
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

// Runs a fallible integrand inside infallible numerics, keeping the first error.
struct Captured {
    err: RefCell<Option<LabError>>,
}

impl Captured {
    fn new() -> Self {
        Captured {
            err: RefCell::new(None),
        }
    }

    fn run(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn check<T>(self, value: T) -> Result<T> {
        match self.err.into_inner() {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }
}

fn check_level(ladder: &LadderModel, k: usize) -> Result<()> {
    if k == 0 {
        return Err(LabError::LevelMismatch(
            "node generation needs k >= 1".into(),
        ));
    }
    if k > ladder.params().k_max {
        return Err(LabError::LevelTooLarge {
            k,
            k_max: ladder.params().k_max,
        });
    }
    Ok(())
}

// phi_1^k(w) together with J_k(w)
fn push_forward(ladder: &LadderModel, w: f64, k: usize) -> Result<(f64, f64)> {
    let (points, weight) = ladder.orbit(w, k)?;
    Ok((points[k], weight))
}

/// Compute `e` and the `beta` nodes for `(T, U, k)`.
pub fn beta_nodes(
    ladder: &LadderModel,
    t: f64,
    u: f64,
    k: usize,
    spec: &QuadratureSpec,
) -> Result<BetaNodes> {
    check_level(ladder, k)?;
    let level = ladder.iterated_interval(t, u, k)?;
    let cap = Captured::new();
    let g = |w: f64| cap.run(ladder.chain_weight(w, k));
    let mean = mvt_mean(&g, level.lo, level.hi, spec);
    let mean = cap.check(mean)??;
    let mut last = (f64::NAN, f64::NAN);
    for retry in 0..=MAX_NODE_RETRIES {
        let cap = Captured::new();
        let g = |w: f64| cap.run(ladder.chain_weight(w, k));
        let e = nth_crossing(&g, level.lo, level.hi, mean, retry);
        let e = cap.check(e)??;
        let (points, _) = ladder.orbit(e, k)?;
        let beta: Vec<f64> = (1..=k).map(|r| points[k - r]).collect();
        let beta_zeta_sq: Vec<f64> = beta
            .iter()
            .map(|&b| ladder.engine().zeta_sq(b))
            .collect::<Result<_>>()?;
        let (worst, at) =
            beta_zeta_sq
                .iter()
                .zip(&beta)
                .fold((f64::INFINITY, f64::NAN), |acc, (&z, &b)| {
                    if z < acc.0 {
                        (z, b)
                    } else {
                        acc
                    }
                });
        if worst >= DEGENERATE_ZETA_SQ {
            // phi_1(beta_r) = beta_{r-1}, with beta_0 = phi_1^k(e)
            let beta_weight = (1..=k)
                .map(|r| {
                    let z = beta_zeta_sq[r - 1];
                    z / ladder.v_prime(points[k - r + 1]).expect("above floor")
                })
                .collect();
            return Ok(BetaNodes {
                t,
                u,
                k,
                e,
                beta,
                beta_weight,
                beta_zeta_sq,
                retries: retry,
            });
        }
        log::debug!("beta node {at} has |zeta|^2 = {worst:e}; trying the next crossing");
        last = (at, worst);
    }
    Err(LabError::DegenerateNode {
        node: last.0,
        value: last.1,
        retries: MAX_NODE_RETRIES,
    })
}

/// The node generator for `f`, reusing precomputed `beta` nodes.
pub fn generate_nodes_with(
    ladder: &LadderModel,
    f: &AdmissibleFunction,
    betas: &BetaNodes,
    spec: &QuadratureSpec,
) -> Result<NodeVector> {
    let (t, u, k) = (betas.t, betas.u, betas.k);
    check_level(ladder, k)?;
    f.certify(t, u)?;
    let level = ladder.iterated_interval(t, u, k)?;
    let cap = Captured::new();
    let g = |w: f64| cap.run(push_forward(ladder, w, k).map(|(x, weight)| f.eval(x) * weight));
    let d = mvt_node(g, level.lo, level.hi, spec);
    let d = cap.check(d)??;
    let (points, _) = ladder.orbit(d, k)?;
    let alpha: Vec<f64> = (0..=k).map(|r| points[k - r]).collect();
    let alpha_zeta_sq: Vec<f64> = alpha[1..]
        .iter()
        .map(|&a| ladder.engine().zeta_sq(a))
        .collect::<Result<_>>()?;
    let alpha_weight = (1..=k)
        .map(|r| alpha_zeta_sq[r - 1] / ladder.v_prime(alpha[r - 1]).expect("above floor"))
        .collect();
    Ok(NodeVector {
        f_id: f.label().to_string(),
        k,
        t,
        u,
        d,
        e: betas.e,
        f_alpha0: f.eval(alpha[0]),
        alpha,
        beta: betas.beta.clone(),
        alpha_weight,
        beta_weight: betas.beta_weight.clone(),
        alpha_zeta_sq,
        beta_zeta_sq: betas.beta_zeta_sq.clone(),
    })
}

/// The node generator.
pub fn generate_nodes(
    ladder: &LadderModel,
    f: &AdmissibleFunction,
    t: f64,
    u: f64,
    k: usize,
    spec: &QuadratureSpec,
) -> Result<NodeVector> {
    let betas = beta_nodes(ladder, t, u, k, spec)?;
    generate_nodes_with(ladder, f, &betas, spec)
}

/// Where the mean in a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanSource {
    Quadrature,
    ClosedForm,
}

/// Both sides of the factorization formula for one `(f, T, U, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub f_id: String,
    pub k: usize,
    /// `T / pi`.
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub alpha0: f64,
    pub residual_exact: f64,
    pub deviation_zeta: f64,
    pub min_zeta_beta: f64,
    #[serde(skip)]
    pub detail: Option<ReportDetail>,
}

/// Values behind a [`FactorizationReport`] that the CSV row omits.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportDetail {
    pub t: f64,
    pub mean: f64,
    pub mean_source: MeanSource,
    pub f_alpha0: f64,
    pub lhs_exact: f64,
    pub lhs_zeta: f64,
    pub rhs: f64,
}

impl FactorizationReport {
    pub fn from_nodes(nodes: &NodeVector, mean: f64, mean_source: MeanSource) -> Self {
        let rhs = mean / nodes.f_alpha0;
        let lhs_exact = nodes.weight_ratio();
        let lhs_zeta = nodes.zeta_ratio();
        FactorizationReport {
            f_id: nodes.f_id.clone(),
            k: nodes.k,
            l: nodes.t / std::f64::consts::PI,
            u: nodes.u,
            alpha0: nodes.alpha[0],
            residual_exact: lhs_exact / rhs - 1.0,
            deviation_zeta: lhs_zeta / rhs - 1.0,
            min_zeta_beta: nodes.min_zeta_beta(),
            detail: Some(ReportDetail {
                t: nodes.t,
                mean,
                mean_source,
                f_alpha0: nodes.f_alpha0,
                lhs_exact,
                lhs_zeta,
                rhs,
            }),
        }
    }
}

/// Build nodes and compare both sides using the quadrature mean.
pub fn factorization_check(
    ladder: &LadderModel,
    f: &AdmissibleFunction,
    t: f64,
    u: f64,
    k: usize,
    spec: &QuadratureSpec,
) -> Result<FactorizationReport> {
    let mean = f_mean(f, t, u, spec)?;
    let nodes = generate_nodes(ladder, f, t, u, k, spec)?;
    Ok(FactorizationReport::from_nodes(
        &nodes,
        mean,
        MeanSource::Quadrature,
    ))
}

/// Relative agreement required between closed-form and quadrature means.
pub const CLOSED_FORM_AGREEMENT: f64 = 1e-10;

/// The factorization check for one of the six named functions on
/// `[pi L, pi L + U]`, using its closed-form mean.
pub fn lemma_family(
    ladder: &LadderModel,
    id: FunctionId,
    l: f64,
    u: f64,
    k: usize,
    spec: &QuadratureSpec,
) -> Result<FactorizationReport> {
    let t = std::f64::consts::PI * l;
    let f = AdmissibleFunction::named(id, t);
    let closed = closed_form_mean(id, u);
    let quad = f_mean(&f, t, u, spec)?;
    check_closed_form(id, closed, quad)?;
    let nodes = generate_nodes(ladder, &f, t, u, k, spec)?;
    let mut report = FactorizationReport::from_nodes(&nodes, closed, MeanSource::ClosedForm);
    // keep the caller's L rather than T / pi, which need not round-trip
    report.l = l;
    Ok(report)
}

pub(crate) fn check_closed_form(id: FunctionId, closed: f64, quad: f64) -> Result<()> {
    let rel = (closed - quad).abs() / closed.abs();
    if rel > CLOSED_FORM_AGREEMENT {
        return Err(LabError::MeanMismatch {
            id: id.to_string(),
            closed,
            quadrature: quad,
        });
    }
    Ok(())
}

/// True when every node sits in its level interval.
pub fn nodes_in_place(nodes: &NodeVector, levels: &[IteratedInterval]) -> bool {
    let base = (nodes.t, nodes.t + nodes.u);
    let alpha0_ok = base.0 < nodes.alpha[0] && nodes.alpha[0] < base.1;
    alpha0_ok
        && (1..=nodes.k).all(|r| {
            levels
                .iter()
                .find(|iv| iv.level == r)
                .is_some_and(|iv| iv.contains(nodes.alpha[r]) && iv.contains(nodes.beta[r - 1]))
        })
}

#[cfg(test)]
mod tests;
