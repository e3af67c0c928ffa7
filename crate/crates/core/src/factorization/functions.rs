use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Samples used to certify that a function is nonnegative and not identically zero.
pub const CERTIFICATE_POINTS: usize = 1000;

/// The six named test functions on `[pi L, pi L + U]`, with `s = t - pi L`:
/// `s sin^2 t`, `s cos^2 t`, `s^2 sin^2 t`, `s^2 cos^2 t`, `sin^2 t`, `cos^2 t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionId {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
}

impl FunctionId {
    pub const ALL: [FunctionId; 6] = [
        FunctionId::F1,
        FunctionId::F2,
        FunctionId::F3,
        FunctionId::F4,
        FunctionId::F5,
        FunctionId::F6,
    ];

    /// 1-based index.
    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(l: usize) -> Option<Self> {
        Self::ALL.get(l.checked_sub(1)?).copied()
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.index())
    }
}

impl FromStr for FunctionId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.strip_prefix('f').unwrap_or(s);
        digits
            .parse::<usize>()
            .ok()
            .and_then(Self::from_index)
            .ok_or_else(|| {
                LabError::InvalidConfig(format!("unknown function {s:?} (expected f1..f6)"))
            })
    }
}

/// `(1/U) int_0^U` of the named function, in closed form.
pub fn closed_form_mean(id: FunctionId, u: f64) -> f64 {
    let s2 = (2.0 * u).sin();
    let c2 = (2.0 * u).cos();
    let sin_sq = u.sin().powi(2);
    match id {
        FunctionId::F1 => 0.25 * u - 0.25 * s2 + 0.25 * sin_sq / u,
        FunctionId::F2 => 0.25 * u + 0.25 * s2 - 0.25 * sin_sq / u,
        FunctionId::F3 => u * u / 6.0 - 0.25 * (u * u - 0.5) * s2 / u - 0.25 * c2,
        FunctionId::F4 => u * u / 6.0 + 0.25 * (u * u - 0.5) * s2 / u + 0.25 * c2,
        FunctionId::F5 => 0.5 - s2 / (4.0 * u),
        FunctionId::F6 => 0.5 + s2 / (4.0 * u),
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A candidate input to the node generator.
#[derive(Clone)]
pub struct AdmissibleFunction {
    label: String,
    named: Option<FunctionId>,
    eval: Evaluator,
}

impl fmt::Debug for AdmissibleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdmissibleFunction")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl AdmissibleFunction {
    /// One of the six named functions with `s` measured from `base`.
    pub fn named(id: FunctionId, base: f64) -> Self {
        let eval: Evaluator = match id {
            FunctionId::F1 => Arc::new(move |t: f64| (t - base) * t.sin().powi(2)),
            FunctionId::F2 => Arc::new(move |t: f64| (t - base) * t.cos().powi(2)),
            FunctionId::F3 => Arc::new(move |t: f64| (t - base).powi(2) * t.sin().powi(2)),
            FunctionId::F4 => Arc::new(move |t: f64| (t - base).powi(2) * t.cos().powi(2)),
            FunctionId::F5 => Arc::new(|t: f64| t.sin().powi(2)),
            FunctionId::F6 => Arc::new(|t: f64| t.cos().powi(2)),
        };
        AdmissibleFunction {
            label: id.to_string(),
            named: Some(id),
            eval,
        }
    }

    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AdmissibleFunction {
            label: label.into(),
            named: None,
            eval: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn id(&self) -> Option<FunctionId> {
        self.named
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// Sampled check: `f >= 0` at 1000 points of `[T, T+U]`, positive somewhere, finite.
    pub fn certify(&self, t: f64, u: f64) -> Result<()> {
        let not_admissible = |reason: String| LabError::NotAdmissible {
            id: self.label.clone(),
            t,
            u,
            reason,
        };
        if !(u > 0.0) || !u.is_finite() {
            return Err(not_admissible(format!(
                "segment length {u} is not positive"
            )));
        }
        let mut max = 0.0f64;
        for i in 0..CERTIFICATE_POINTS {
            let x = t + u * i as f64 / (CERTIFICATE_POINTS - 1) as f64;
            let v = self.eval(x);
            if !v.is_finite() || v < 0.0 {
                return Err(not_admissible(format!("f({x}) = {v}")));
            }
            max = max.max(v);
        }
        if max > 0.0 {
            Ok(())
        } else {
            Err(not_admissible("identically zero on the sample grid".into()))
        }
    }
}
