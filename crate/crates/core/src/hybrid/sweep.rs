use std::f64::consts::PI;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Lab, Pair, Variant};
use crate::error::{LabError, Result};
use crate::factorization::FunctionId;

/// Tolerance on `|ratio - 1|` for exact-variant sweeps.
pub const EXACT_SWEEP_TOL: f64 = 1e-5;

/// A check that can be swept over `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Check {
    Lemma { f: FunctionId, k: usize },
    Linear { pair: Pair, k_a: usize, k_b: usize },
    Chf { levels: [usize; 4] },
    Sincos { k5: usize, k6: usize },
    Secondary { levels: [usize; 4] },
}

impl Check {
    pub fn name(&self) -> String {
        match self {
            Check::Lemma { f, .. } => format!("lemma-{f}"),
            Check::Linear {
                pair: Pair::Linear, ..
            } => "crossbreed-f1f2".into(),
            Check::Linear {
                pair: Pair::Quadratic,
                ..
            } => "crossbreed-f3f4".into(),
            Check::Chf { .. } => "chf".into(),
            Check::Sincos { .. } => "sincos".into(),
            Check::Secondary { .. } => "secondary".into(),
        }
    }

    pub fn levels(&self) -> Vec<usize> {
        match *self {
            Check::Lemma { k, .. } => vec![k],
            Check::Linear { k_a, k_b, .. } => vec![k_a, k_b],
            Check::Chf { levels } | Check::Secondary { levels } => levels.to_vec(),
            Check::Sincos { k5, k6 } => vec![k5, k6],
        }
    }
}

/// How sample heights are drawn around each anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub anchors: Vec<f64>,
    /// Heights per anchor, the anchor itself included.
    pub samples_per_anchor: usize,
    /// Offsets are integers in `[1, spread * anchor)`.
    pub spread: f64,
    pub seed: u64,
    /// Budget constant for zeta-variant deviations; `None` skips the budget test.
    pub kappa: Option<f64>,
}

impl SweepPlan {
    pub fn single(anchors: Vec<f64>) -> Self {
        SweepPlan {
            anchors,
            samples_per_anchor: 1,
            spread: 0.1,
            seed: 0,
            kappa: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.anchors.windows(2).any(|w| !(w[0] < w[1])) {
            problems.push("L values must be strictly increasing".to_string());
        }
        if self.anchors.iter().any(|&l| !(l >= 4.0) || !l.is_finite()) {
            problems.push("every L must be finite and at least 4".to_string());
        }
        if self.samples_per_anchor == 0 {
            problems.push("samples per anchor must be at least 1".to_string());
        }
        if !(self.spread > 0.0 && self.spread < 1.0) {
            problems.push(format!("spread must lie in (0, 1), got {}", self.spread));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0) {
                problems.push(format!("kappa must be positive, got {k}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LabError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Integer heights around each anchor, sorted and without duplicates.
pub fn sample_heights(plan: &SweepPlan) -> Vec<f64> {
    let mut out = Vec::new();
    for &anchor in &plan.anchors {
        out.push(anchor);
        let extra = plan.samples_per_anchor - 1;
        if extra == 0 {
            continue;
        }
        let range = ((plan.spread * anchor).floor() as usize).max(extra + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ anchor.to_bits());
        let mut offsets: Vec<usize> = sample(&mut rng, range - 1, extra)
            .into_iter()
            .map(|o| o + 1)
            .collect();
        offsets.sort_unstable();
        out.extend(offsets.into_iter().map(|o| anchor + o as f64));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// `floor(log10 L)`.
pub fn decade_of(l: f64) -> i32 {
    let mut d = l.log10().floor() as i32;
    // guard log10 rounding at exact powers of ten
    if 10f64.powi(d + 1) <= l {
        d += 1;
    } else if 10f64.powi(d) > l {
        d -= 1;
    }
    d
}

/// One sweep sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(rename = "L")]
    pub l: f64,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn deviation(&self) -> Option<f64> {
        self.ratio.map(|r| (r - 1.0).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecadeMedian {
    pub decade: i32,
    pub count: usize,
    /// Median of `|ratio - 1|`.
    pub median: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// Reports for one check across increasing `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSweep {
    pub formula: String,
    pub variant: Variant,
    #[serde(rename = "U")]
    pub u: f64,
    pub levels: Vec<usize>,
    pub points: Vec<SweepPoint>,
    pub decade_medians: Vec<DecadeMedian>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
    /// Points at `L >= 1e4` whose deviation exceeds `kappa ln ln(pi L) / ln(pi L)`.
    #[serde(default)]
    pub budget_violations: usize,
}

/// `kappa ln ln(pi L) / ln(pi L)`.
pub fn zeta_budget(kappa: f64, l: f64) -> f64 {
    let x = (PI * l).ln();
    kappa * x.ln() / x
}

/// Heights from which the zeta-variant budget is enforced.
pub const BUDGET_FROM_L: f64 = 1.0e4;

impl ConvergenceSweep {
    pub fn from_points(
        check: &Check,
        variant: Variant,
        u: f64,
        points: Vec<SweepPoint>,
        kappa: Option<f64>,
    ) -> Self {
        let mut decades: Vec<(i32, Vec<f64>)> = Vec::new();
        for p in &points {
            if let Some(dev) = p.deviation() {
                let d = decade_of(p.l);
                match decades.last_mut() {
                    Some((dd, v)) if *dd == d => v.push(dev),
                    _ => decades.push((d, vec![dev])),
                }
            }
        }
        let decade_medians: Vec<DecadeMedian> = decades
            .into_iter()
            .map(|(decade, mut v)| DecadeMedian {
                decade,
                count: v.len(),
                median: median(&mut v),
            })
            .collect();
        let budget_violations = match kappa {
            Some(k) => points
                .iter()
                .filter(|p| p.l >= BUDGET_FROM_L)
                .filter(|p| p.deviation().is_none_or(|d| !(d <= zeta_budget(k, p.l))))
                .count(),
            None => 0,
        };
        let all_ok = !points.is_empty() && points.iter().all(|p| p.error.is_none());
        let pass = all_ok
            && match variant {
                Variant::Exact => points
                    .iter()
                    .all(|p| p.deviation().is_some_and(|d| d <= EXACT_SWEEP_TOL)),
                Variant::Zeta => {
                    budget_violations == 0
                        && match (decade_medians.first(), decade_medians.last()) {
                            (Some(lo), Some(hi)) => hi.median < lo.median,
                            _ => false,
                        }
                }
            };
        ConvergenceSweep {
            formula: check.name(),
            variant,
            u,
            levels: check.levels(),
            points,
            decade_medians,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            kappa,
            budget_violations,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl Lab {
    /// Run `check` at every sampled height. Points run in parallel on the
    /// current rayon pool; results come back in increasing `L`.
    pub fn sweep(
        &self,
        check: &Check,
        plan: &SweepPlan,
        u: f64,
        variant: Variant,
    ) -> Result<ConvergenceSweep> {
        plan.validate()?;
        let heights = sample_heights(plan);
        if let (Some(&top), Some(&k)) = (heights.last(), check.levels().iter().max()) {
            // extend the integral table once, before workers start reading it
            self.ladder().reverse_iterate(PI * top + u, k)?;
        }
        let points: Vec<SweepPoint> = heights
            .par_iter()
            .map(|&l| match self.run(check, l, u, variant) {
                Ok(r) => SweepPoint {
                    l,
                    lhs: Some(r.lhs),
                    rhs: Some(r.rhs),
                    ratio: Some(r.ratio),
                    error: None,
                },
                Err(e) => SweepPoint {
                    l,
                    lhs: None,
                    rhs: None,
                    ratio: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        Ok(ConvergenceSweep::from_points(
            check, variant, u, points, plan.kappa,
        ))
    }
}
