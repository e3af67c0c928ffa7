//! Run configuration: a flat `key = value` file, overridable key by key.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hybrid::{Lab, SweepPlan};
use crate::ladder::{LadderModel, LadderParams};
use crate::quadrature::{HlStore, QuadratureSpec, StoreParams};
use crate::zeta::{ZetaEngine, DEFAULT_CORRECTION_TERMS, DEFAULT_T_MIN};

/// Budget constant for zeta-variant deviations, fixed from the pilot sweep.
pub const DEFAULT_KAPPA: f64 = 1e-4;

/// Every tunable of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub t_min: f64,
    pub rs_terms: usize,
    pub c0: f64,
    pub k_max: usize,
    pub newton_tol: f64,
    pub u_default: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_panels_per_oscillation: u32,
    pub max_depth: u32,
    pub stride: f64,
    pub kappa: f64,
    pub samples_per_anchor: usize,
    pub spread: f64,
    pub seed: u64,
}

impl Default for LabConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        let l = LadderParams::default();
        LabConfig {
            t_min: DEFAULT_T_MIN,
            rs_terms: DEFAULT_CORRECTION_TERMS,
            c0: l.c0,
            k_max: l.k_max,
            newton_tol: l.newton_tol,
            u_default: PI / 4.0,
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            min_panels_per_oscillation: q.min_panels_per_oscillation,
            max_depth: q.max_depth,
            stride: StoreParams::default().stride,
            kappa: DEFAULT_KAPPA,
            samples_per_anchor: 20,
            spread: 0.1,
            seed: 1,
        }
    }
}

pub const KEYS: [&str; 15] = [
    "t_min",
    "rs_terms",
    "c0",
    "k_max",
    "newton_tol",
    "u_default",
    "rel_tol",
    "abs_tol",
    "min_panels_per_oscillation",
    "max_depth",
    "stride",
    "kappa",
    "samples_per_anchor",
    "spread",
    "seed",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

impl LabConfig {
    /// Parse a config file body. Blank lines and `#` comments are ignored.
    /// All problems are reported together.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = LabConfig::default();
        let mut problems = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = cfg.apply(k.trim(), v.trim()) {
                        problems.push(format!("line {}: {e}", n + 1));
                    }
                }
                None => problems.push(format!(
                    "line {}: expected key = value, got {line:?}",
                    n + 1
                )),
            }
        }
        if let Err(LabError::InvalidConfig(msg)) = cfg.validate() {
            problems.push(msg);
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(LabError::InvalidConfig(problems.join("; ")))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.apply(key, value).map_err(LabError::InvalidConfig)
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "t_min" => self.t_min = parse_num(key, value)?,
            "rs_terms" => self.rs_terms = parse_num(key, value)?,
            "c0" => self.c0 = parse_num(key, value)?,
            "k_max" => self.k_max = parse_num(key, value)?,
            "newton_tol" => self.newton_tol = parse_num(key, value)?,
            "u_default" => self.u_default = parse_num(key, value)?,
            "rel_tol" => self.rel_tol = parse_num(key, value)?,
            "abs_tol" => self.abs_tol = parse_num(key, value)?,
            "min_panels_per_oscillation" => {
                self.min_panels_per_oscillation = parse_num(key, value)?
            }
            "max_depth" => self.max_depth = parse_num(key, value)?,
            "stride" => self.stride = parse_num(key, value)?,
            "kappa" => self.kappa = parse_num(key, value)?,
            "samples_per_anchor" => self.samples_per_anchor = parse_num(key, value)?,
            "spread" => self.spread = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Check every field, collecting all problems into one error.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut take = |r: Result<()>| {
            if let Err(LabError::InvalidConfig(m)) = r {
                problems.push(m);
            }
        };
        take(ZetaEngine::new(self.t_min, self.rs_terms).map(|_| ()));
        take(self.quadrature().validate());
        take(self.ladder_params().validate());
        take(self.store_params().validate());
        if !(self.u_default > 0.0 && self.u_default < PI / 2.0) {
            problems.push(format!(
                "u_default must lie in (0, pi/2), got {}",
                self.u_default
            ));
        }
        if !(self.kappa > 0.0) {
            problems.push(format!("kappa must be positive, got {}", self.kappa));
        }
        if self.samples_per_anchor == 0 {
            problems.push("samples_per_anchor must be at least 1".into());
        }
        if !(self.spread > 0.0 && self.spread < 1.0) {
            problems.push(format!("spread must lie in (0, 1), got {}", self.spread));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LabError::InvalidConfig(problems.join("; ")))
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            min_panels_per_oscillation: self.min_panels_per_oscillation,
            max_depth: self.max_depth,
        }
    }

    pub fn ladder_params(&self) -> LadderParams {
        LadderParams {
            c0: self.c0,
            newton_tol: self.newton_tol,
            k_max: self.k_max,
            ..LadderParams::default()
        }
    }

    pub fn store_params(&self) -> StoreParams {
        StoreParams {
            t_min: self.t_min,
            stride: self.stride,
            ..StoreParams::default()
        }
    }

    pub fn engine(&self) -> Result<ZetaEngine> {
        ZetaEngine::new(self.t_min, self.rs_terms)
    }

    /// A sweep plan over `anchors` using this config's sampling settings.
    pub fn sweep_plan(&self, anchors: Vec<f64>) -> SweepPlan {
        SweepPlan {
            anchors,
            samples_per_anchor: self.samples_per_anchor,
            spread: self.spread,
            seed: self.seed,
            kappa: Some(self.kappa),
        }
    }

    /// Open the integral store (in memory when `cache` is `None`) and build the lab.
    pub fn build_lab(&self, cache: Option<PathBuf>) -> Result<Lab> {
        self.validate()?;
        let engine = self.engine()?;
        let store = HlStore::open(engine, self.quadrature(), self.store_params(), cache)?;
        let ladder = LadderModel::new(Arc::new(store), engine, self.ladder_params())?;
        Ok(Lab::new(Arc::new(ladder), self.quadrature()))
    }

    /// Render as a config file that [`LabConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let v = serde_json::to_value(self).expect("plain struct");
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", v[key]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = LabConfig::default();
        cfg.validate().unwrap();
        assert_eq!(LabConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn parse_with_comments() {
        let cfg = LabConfig::parse("# pilot\nc0 = 1.5\n\nk_max=3  # shallow\n").unwrap();
        assert_eq!(cfg.c0, 1.5);
        assert_eq!(cfg.k_max, 3);
    }

    #[test]
    fn errors_are_aggregated() {
        let err = LabConfig::parse("c0 = x\nbogus = 1\nrel_tol = -1\nu_default = 2\n").unwrap_err();
        let msg = err.to_string();
        for needle in ["c0", "bogus", "rel_tol", "u_default"] {
            assert!(msg.contains(needle), "{msg}");
        }
    }

    #[test]
    fn set_overrides() {
        let mut cfg = LabConfig::default();
        cfg.set("newton_tol", "1e-10").unwrap();
        assert_eq!(cfg.newton_tol, 1e-10);
        assert!(cfg.set("nope", "1").is_err());
    }
}
