//! Crossbreeding checks and convergence sweeps.
//!
//! Every check is evaluated in one of two variants. `Exact` weights the
//! nodes by `phi_1'`, where the factorization identity holds by construction
//! and each hybrid formula collapses to a trigonometric closure. `Zeta`
//! weights them by `|zeta(1/2 + it)|^2`, the asymptotic form whose deviation
//! should shrink as `L` grows.

mod sweep;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::factorization::{
    beta_nodes, check_closed_form, closed_form_mean, f_mean, generate_nodes_with,
    AdmissibleFunction, BetaNodes, FactorizationReport, FunctionId, MeanSource, NodeVector,
};
use crate::ladder::LadderModel;
use crate::quadrature::QuadratureSpec;

pub use sweep::{
    decade_of, sample_heights, zeta_budget, Check, ConvergenceSweep, DecadeMedian, SweepPlan,
    SweepPoint, Verdict, BUDGET_FROM_L, EXACT_SWEEP_TOL,
};

/// Which node weight a check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Zeta,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Exact => "exact",
            Variant::Zeta => "zeta",
        })
    }
}

impl FromStr for Variant {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Variant::Exact),
            "zeta" => Ok(Variant::Zeta),
            _ => Err(LabError::InvalidConfig(format!(
                "unknown variant {s:?} (expected exact or zeta)"
            ))),
        }
    }
}

/// The two linear first-stage pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pair {
    /// `f1 + f2`, target `U / 2`.
    Linear,
    /// `f3 + f4`, target `U^2 / 3`.
    Quadratic,
}

impl Pair {
    pub fn functions(self) -> (FunctionId, FunctionId) {
        match self {
            Pair::Linear => (FunctionId::F1, FunctionId::F2),
            Pair::Quadratic => (FunctionId::F3, FunctionId::F4),
        }
    }

    pub fn target(self, u: f64) -> f64 {
        match self {
            Pair::Linear => 0.5 * u,
            Pair::Quadratic => u * u / 3.0,
        }
    }
}

/// Both sides of one hybrid formula at one height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridReport {
    pub formula: String,
    pub variant: Variant,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub levels: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `A / B` with the 3/4 factor removed from `B`; present for the complete hybrid formulas.
    pub a_over_b: Option<f64>,
    /// Smallest `|zeta(1/2 + i beta)|^2` among the nodes used.
    pub min_zeta_beta: f64,
}

impl HybridReport {
    pub fn deviation(&self) -> f64 {
        (self.ratio - 1.0).abs()
    }
}

/// `prod_{r<=k} |zeta(1/2 + i beta_r)|^2` written through the sin^2/cos^2
/// hybrid, next to the directly computed product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaProduct {
    pub variant: Variant,
    pub k: usize,
    pub expression: f64,
    pub direct: f64,
    pub ratio: f64,
    /// Set when a `beta` node is too close to a zeta zero for the comparison to mean anything.
    pub degenerate: bool,
}

type NodeKey = (u64, u64, usize, FunctionId);
type BetaKey = (u64, u64, usize);

/// Node generator with caches, shared by every check at the same heights.
#[derive(Debug)]
pub struct Lab {
    ladder: Arc<LadderModel>,
    spec: QuadratureSpec,
    betas: Mutex<HashMap<BetaKey, Arc<BetaNodes>>>,
    nodes: Mutex<HashMap<NodeKey, Arc<NodeVector>>>,
}

impl Lab {
    pub fn new(ladder: Arc<LadderModel>, spec: QuadratureSpec) -> Self {
        Lab {
            ladder,
            spec,
            betas: Mutex::new(HashMap::new()),
            nodes: Mutex::new(HashMap::new()),
        }
    }

    pub fn ladder(&self) -> &LadderModel {
        &self.ladder
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// `beta` nodes for the segment `[pi L, pi L + U]` at level `k`.
    pub fn betas(&self, l: f64, u: f64, k: usize) -> Result<Arc<BetaNodes>> {
        let key = (l.to_bits(), u.to_bits(), k);
        if let Some(b) = self.betas.lock().unwrap().get(&key) {
            return Ok(b.clone());
        }
        let b = Arc::new(beta_nodes(&self.ladder, PI * l, u, k, &self.spec)?);
        self.betas.lock().unwrap().insert(key, b.clone());
        Ok(b)
    }

    /// Full node vector for a named function on `[pi L, pi L + U]`.
    pub fn nodes(&self, id: FunctionId, l: f64, u: f64, k: usize) -> Result<Arc<NodeVector>> {
        let key = (l.to_bits(), u.to_bits(), k, id);
        if let Some(n) = self.nodes.lock().unwrap().get(&key) {
            return Ok(n.clone());
        }
        let betas = self.betas(l, u, k)?;
        let f = AdmissibleFunction::named(id, PI * l);
        let n = Arc::new(generate_nodes_with(&self.ladder, &f, &betas, &self.spec)?);
        self.nodes.lock().unwrap().insert(key, n.clone());
        Ok(n)
    }

    /// `f(alpha_0) * prod_r w(alpha_r) / w(beta_r)` in the chosen variant.
    pub fn term(&self, id: FunctionId, l: f64, u: f64, k: usize, variant: Variant) -> Result<f64> {
        let n = self.nodes(id, l, u, k)?;
        Ok(n.f_alpha0 * ratio(&n, variant))
    }

    /// The factorization check for a named function with its closed-form mean.
    pub fn lemma(&self, id: FunctionId, l: f64, u: f64, k: usize) -> Result<FactorizationReport> {
        let f = AdmissibleFunction::named(id, PI * l);
        let closed = closed_form_mean(id, u);
        check_closed_form(id, closed, f_mean(&f, PI * l, u, &self.spec)?)?;
        let n = self.nodes(id, l, u, k)?;
        let mut report = FactorizationReport::from_nodes(&n, closed, MeanSource::ClosedForm);
        report.l = l;
        Ok(report)
    }

    /// The lemma check as a ratio `lhs / rhs` in the chosen variant.
    pub fn lemma_ratio(
        &self,
        id: FunctionId,
        l: f64,
        u: f64,
        k: usize,
        variant: Variant,
    ) -> Result<HybridReport> {
        let n = self.nodes(id, l, u, k)?;
        let rhs = closed_form_mean(id, u) / n.f_alpha0;
        let lhs = ratio(&n, variant);
        Ok(HybridReport {
            formula: format!("lemma-{id}"),
            variant,
            l,
            u,
            levels: vec![k],
            lhs,
            rhs,
            ratio: lhs / rhs,
            a_over_b: None,
            min_zeta_beta: n.min_zeta_beta(),
        })
    }

    /// First crossbreeding stage: `term_a + term_b` against `U/2` or `U^2/3`.
    pub fn crossbreed_linear(
        &self,
        pair: Pair,
        l: f64,
        u: f64,
        k_a: usize,
        k_b: usize,
        variant: Variant,
    ) -> Result<HybridReport> {
        let (a, b) = pair.functions();
        let lhs = self.term(a, l, u, k_a, variant)? + self.term(b, l, u, k_b, variant)?;
        let rhs = pair.target(u);
        Ok(HybridReport {
            formula: format!(
                "crossbreed-{}",
                match pair {
                    Pair::Linear => "f1f2",
                    Pair::Quadratic => "f3f4",
                }
            ),
            variant,
            l,
            u,
            levels: vec![k_a, k_b],
            lhs,
            rhs,
            ratio: lhs / rhs,
            a_over_b: None,
            min_zeta_beta: self.min_beta(l, u, &[k_a, k_b])?,
        })
    }

    /// The complete hybrid formula: `(t1 + t2)^2` against `3/4 (t3 + t4)`.
    pub fn chf_check(
        &self,
        l: f64,
        u: f64,
        levels: &[usize],
        variant: Variant,
    ) -> Result<HybridReport> {
        let k = four_levels(levels)?;
        let ids = [
            FunctionId::F1,
            FunctionId::F2,
            FunctionId::F3,
            FunctionId::F4,
        ];
        let t: Vec<f64> = ids
            .iter()
            .zip(k)
            .map(|(&id, k)| self.term(id, l, u, k, variant))
            .collect::<Result<_>>()?;
        let a = (t[0] + t[1]).powi(2);
        let b = t[2] + t[3];
        Ok(HybridReport {
            formula: "chf".into(),
            variant,
            l,
            u,
            levels: k.to_vec(),
            lhs: a,
            rhs: 0.75 * b,
            ratio: a / (0.75 * b),
            a_over_b: Some(a / b),
            min_zeta_beta: self.min_beta(l, u, &k)?,
        })
    }

    /// The sin^2 / cos^2 hybrid: `t5 + t6` against 1.
    pub fn sincos_chf(
        &self,
        l: f64,
        u: f64,
        k5: usize,
        k6: usize,
        variant: Variant,
    ) -> Result<HybridReport> {
        let lhs = self.term(FunctionId::F5, l, u, k5, variant)?
            + self.term(FunctionId::F6, l, u, k6, variant)?;
        Ok(HybridReport {
            formula: "sincos".into(),
            variant,
            l,
            u,
            levels: vec![k5, k6],
            lhs,
            rhs: 1.0,
            ratio: lhs,
            a_over_b: None,
            min_zeta_beta: self.min_beta(l, u, &[k5, k6])?,
        })
    }

    // sin^2(alpha_0^5) prod w(alpha^5) + cos^2(alpha_0^6) prod w(alpha^6), at level k
    fn beta_denominator(&self, l: f64, u: f64, k: usize, variant: Variant) -> Result<f64> {
        let n5 = self.nodes(FunctionId::F5, l, u, k)?;
        let n6 = self.nodes(FunctionId::F6, l, u, k)?;
        Ok(n5.f_alpha0 * alpha_product(&n5, variant) + n6.f_alpha0 * alpha_product(&n6, variant))
    }

    /// The beta product written through the sin^2/cos^2 hybrid.
    pub fn beta_product_expr(
        &self,
        l: f64,
        u: f64,
        k: usize,
        variant: Variant,
    ) -> Result<BetaProduct> {
        let expression = self.beta_denominator(l, u, k, variant)?;
        let betas = self.betas(l, u, k)?;
        let direct: f64 = match variant {
            Variant::Exact => betas.beta_weight.iter().product(),
            Variant::Zeta => betas.beta_zeta_sq.iter().product(),
        };
        let degenerate = betas
            .beta_zeta_sq
            .iter()
            .any(|&z| z < crate::factorization::DEGENERATE_ZETA_SQ);
        Ok(BetaProduct {
            variant,
            k,
            expression,
            direct,
            ratio: expression / direct,
            degenerate,
        })
    }

    /// The secondary complete hybrid formula: each `f1..f4` alpha product is
    /// divided by the sin^2/cos^2 expression at its own level, then the
    /// complete hybrid formula is formed from the quotients.
    pub fn secondary_chf_check(
        &self,
        l: f64,
        u: f64,
        levels: &[usize],
        variant: Variant,
    ) -> Result<HybridReport> {
        let k = four_levels(levels)?;
        let ids = [
            FunctionId::F1,
            FunctionId::F2,
            FunctionId::F3,
            FunctionId::F4,
        ];
        let mut q = [0.0; 4];
        for i in 0..4 {
            let n = self.nodes(ids[i], l, u, k[i])?;
            let numerator = n.f_alpha0 * alpha_product(&n, variant);
            q[i] = numerator / self.beta_denominator(l, u, k[i], variant)?;
        }
        let a = (q[0] + q[1]).powi(2);
        let b = q[2] + q[3];
        Ok(HybridReport {
            formula: "secondary".into(),
            variant,
            l,
            u,
            levels: k.to_vec(),
            lhs: a,
            rhs: 0.75 * b,
            ratio: a / (0.75 * b),
            a_over_b: Some(a / b),
            min_zeta_beta: self.min_beta(l, u, &k)?,
        })
    }

    fn min_beta(&self, l: f64, u: f64, levels: &[usize]) -> Result<f64> {
        let mut m = f64::INFINITY;
        for &k in levels {
            m = m.min(
                self.betas(l, u, k)?
                    .beta_zeta_sq
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min),
            );
        }
        Ok(m)
    }

    /// Run one check at one height.
    pub fn run(&self, check: &Check, l: f64, u: f64, variant: Variant) -> Result<HybridReport> {
        match *check {
            Check::Lemma { f, k } => self.lemma_ratio(f, l, u, k, variant),
            Check::Linear { pair, k_a, k_b } => {
                self.crossbreed_linear(pair, l, u, k_a, k_b, variant)
            }
            Check::Chf { levels } => self.chf_check(l, u, &levels, variant),
            Check::Sincos { k5, k6 } => self.sincos_chf(l, u, k5, k6, variant),
            Check::Secondary { levels } => self.secondary_chf_check(l, u, &levels, variant),
        }
    }
}

fn ratio(n: &NodeVector, variant: Variant) -> f64 {
    match variant {
        Variant::Exact => n.weight_ratio(),
        Variant::Zeta => n.zeta_ratio(),
    }
}

fn alpha_product(n: &NodeVector, variant: Variant) -> f64 {
    match variant {
        Variant::Exact => n.alpha_weight.iter().product(),
        Variant::Zeta => n.alpha_zeta_sq.iter().product(),
    }
}

fn four_levels(levels: &[usize]) -> Result<[usize; 4]> {
    match levels {
        [k] => Ok([*k; 4]),
        [a, b, c, d] => Ok([*a, *b, *c, *d]),
        _ => Err(LabError::LevelMismatch(format!(
            "expected one level or four (k1..k4), got {}",
            levels.len()
        ))),
    }
}

/// Number of level assignments `(k1, k2, k3, k4)` with `1 <= k_i <= k0`.
pub fn formula_count(k0: u64) -> u128 {
    (k0 as u128).pow(4)
}

/// `(F1 + F2)^2 / (F3 + F4)` from the closed forms; equals 3/4 for every `U`.
pub fn three_quarters(u: f64) -> f64 {
    let s = closed_form_mean(FunctionId::F1, u) + closed_form_mean(FunctionId::F2, u);
    let q = closed_form_mean(FunctionId::F3, u) + closed_form_mean(FunctionId::F4, u);
    s * s / q
}

/// The functions taking part in the secondary hybrid formula.
pub fn secondary_family() -> [FunctionId; 6] {
    [
        FunctionId::F5,
        FunctionId::F6,
        FunctionId::F1,
        FunctionId::F2,
        FunctionId::F3,
        FunctionId::F4,
    ]
}
