//! CSV and JSON report files.
//!
//! Report bodies depend only on the computed values, so identical runs
//! produce identical bytes. Wall-clock time and environment details go to a
//! `<name>.meta.json` sidecar instead.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::factorization::FactorizationReport;
use crate::hybrid::{ConvergenceSweep, HybridReport, SweepPoint, Variant};

/// JSON schema for sweep reports.
pub const SWEEP_SCHEMA: &str = include_str!("../schema/sweep.schema.json");
pub const FACTORIZATION_SCHEMA: &str = include_str!("../schema/factorization.schema.json");
pub const HYBRID_SCHEMA: &str = include_str!("../schema/hybrid.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(LabError::InvalidConfig(format!(
                "unknown format {s:?} (expected csv or json)"
            ))),
        }
    }
}

fn encode<E: std::fmt::Display>(e: E) -> LabError {
    LabError::Encode(e.to_string())
}

fn csv_string<T: Serialize>(rows: &[T], headers: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(headers).map_err(encode)?;
    for r in rows {
        w.serialize(r).map_err(encode)?;
    }
    String::from_utf8(w.into_inner().map_err(encode)?).map_err(encode)
}

fn csv_rows<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(encode)
}

const FACTORIZATION_HEADERS: [&str; 8] = [
    "f_id",
    "k",
    "L",
    "U",
    "alpha0",
    "residual_exact",
    "deviation_zeta",
    "min_zeta_beta",
];

/// One row per report: `f_id,k,L,U,alpha0,residual_exact,deviation_zeta,min_zeta_beta`.
pub fn factorization_csv(reports: &[FactorizationReport]) -> Result<String> {
    csv_string(reports, &FACTORIZATION_HEADERS)
}

pub fn parse_factorization_csv(text: &str) -> Result<Vec<FactorizationReport>> {
    csv_rows(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HybridRow {
    formula: String,
    variant: Variant,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "U")]
    u: f64,
    levels: String,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    a_over_b: Option<f64>,
    min_zeta_beta: f64,
}

const HYBRID_HEADERS: [&str; 10] = [
    "formula",
    "variant",
    "L",
    "U",
    "levels",
    "lhs",
    "rhs",
    "ratio",
    "a_over_b",
    "min_zeta_beta",
];

fn join_levels(levels: &[usize]) -> String {
    levels
        .iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn split_levels(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|k| {
            k.parse()
                .map_err(|_| LabError::Encode(format!("bad level {k:?}")))
        })
        .collect()
}

pub fn hybrid_csv(reports: &[HybridReport]) -> Result<String> {
    let rows: Vec<HybridRow> = reports
        .iter()
        .map(|r| HybridRow {
            formula: r.formula.clone(),
            variant: r.variant,
            l: r.l,
            u: r.u,
            levels: join_levels(&r.levels),
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
            a_over_b: r.a_over_b,
            min_zeta_beta: r.min_zeta_beta,
        })
        .collect();
    csv_string(&rows, &HYBRID_HEADERS)
}

pub fn parse_hybrid_csv(text: &str) -> Result<Vec<HybridReport>> {
    csv_rows::<HybridRow>(text)?
        .into_iter()
        .map(|r| {
            Ok(HybridReport {
                formula: r.formula,
                variant: r.variant,
                l: r.l,
                u: r.u,
                levels: split_levels(&r.levels)?,
                lhs: r.lhs,
                rhs: r.rhs,
                ratio: r.ratio,
                a_over_b: r.a_over_b,
                min_zeta_beta: r.min_zeta_beta,
            })
        })
        .collect()
}

pub fn hybrid_json(reports: &[HybridReport]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(reports).map_err(encode)?;
    s.push('\n');
    Ok(s)
}

pub fn sweep_json(sweep: &ConvergenceSweep) -> Result<String> {
    let mut s = serde_json::to_string_pretty(sweep).map_err(encode)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_sweep_json(text: &str) -> Result<ConvergenceSweep> {
    serde_json::from_str(text).map_err(encode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepRow {
    formula: String,
    variant: Variant,
    #[serde(rename = "U")]
    u: f64,
    levels: String,
    #[serde(rename = "L")]
    l: f64,
    lhs: Option<f64>,
    rhs: Option<f64>,
    ratio: Option<f64>,
    error: Option<String>,
}

const SWEEP_HEADERS: [&str; 9] = [
    "formula", "variant", "U", "levels", "L", "lhs", "rhs", "ratio", "error",
];

/// The sweep's points, one CSV row each.
pub fn sweep_csv(sweep: &ConvergenceSweep) -> Result<String> {
    let levels = join_levels(&sweep.levels);
    let rows: Vec<SweepRow> = sweep
        .points
        .iter()
        .map(|p| SweepRow {
            formula: sweep.formula.clone(),
            variant: sweep.variant,
            u: sweep.u,
            levels: levels.clone(),
            l: p.l,
            lhs: p.lhs,
            rhs: p.rhs,
            ratio: p.ratio,
            error: p.error.clone(),
        })
        .collect();
    csv_string(&rows, &SWEEP_HEADERS)
}

/// Points read back from [`sweep_csv`] output.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepPoint>> {
    Ok(csv_rows::<SweepRow>(text)?
        .into_iter()
        .map(|r| SweepPoint {
            l: r.l,
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
            error: r.error,
        })
        .collect())
}

/// Anything the CLI writes.
#[derive(Debug, Clone)]
pub enum Report {
    Factorization(Vec<FactorizationReport>),
    Hybrid(Vec<HybridReport>),
    Sweep(ConvergenceSweep),
}

impl Report {
    /// The JSON schema this report's JSON rendering follows.
    pub fn schema(&self) -> &'static str {
        match self {
            Report::Factorization(_) => FACTORIZATION_SCHEMA,
            Report::Hybrid(_) => HYBRID_SCHEMA,
            Report::Sweep(_) => SWEEP_SCHEMA,
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match (self, format) {
            (Report::Factorization(r), Format::Csv) => factorization_csv(r),
            (Report::Factorization(r), Format::Json) => {
                let mut s = serde_json::to_string_pretty(r).map_err(encode)?;
                s.push('\n');
                Ok(s)
            }
            (Report::Hybrid(r), Format::Csv) => hybrid_csv(r),
            (Report::Hybrid(r), Format::Json) => hybrid_json(r),
            (Report::Sweep(s), Format::Csv) => sweep_csv(s),
            (Report::Sweep(s), Format::Json) => sweep_json(s),
        }
    }
}

/// Run metadata kept out of the report body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub generated_unix: u64,
    pub tool_version: String,
    pub cache_fingerprint: Option<String>,
    pub report: String,
}

/// `<path>.meta.json` next to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        }
    }
    fs::write(path, body).map_err(|e| LabError::io(path, e))
}

/// Write `report` to `path` and its sidecar next to it.
pub fn emit_report(
    report: &Report,
    format: Format,
    path: &Path,
    cache_fingerprint: Option<&str>,
) -> Result<()> {
    write_file(path, &report.render(format)?)?;
    let meta = Sidecar {
        generated_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        cache_fingerprint: cache_fingerprint.map(str::to_string),
        report: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let mut body = serde_json::to_string_pretty(&meta).map_err(encode)?;
    body.push('\n');
    write_file(&sidecar_path(path), &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::{Check, ConvergenceSweep};

    fn sample_sweep() -> ConvergenceSweep {
        let points = vec![
            SweepPoint {
                l: 1000.0,
                lhs: Some(0.3),
                rhs: Some(0.30000001),
                ratio: Some(0.3 / 0.30000001),
                error: None,
            },
            SweepPoint {
                l: 10007.0,
                lhs: None,
                rhs: None,
                ratio: None,
                error: Some("node adjacent to a zeta zero, \"quoted\"".into()),
            },
        ];
        ConvergenceSweep::from_points(
            &Check::Chf { levels: [1; 4] },
            Variant::Zeta,
            0.25,
            points,
            Some(1.0),
        )
    }

    #[test]
    fn sweep_round_trips() {
        let s = sample_sweep();
        assert_eq!(parse_sweep_json(&sweep_json(&s).unwrap()).unwrap(), s);
        assert_eq!(parse_sweep_csv(&sweep_csv(&s).unwrap()).unwrap(), s.points);
    }

    #[test]
    fn empty_sweep_is_valid_json() {
        let s = ConvergenceSweep::from_points(
            &Check::Sincos { k5: 1, k6: 1 },
            Variant::Exact,
            0.5,
            vec![],
            None,
        );
        let text = sweep_json(&s).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn factorization_rows_round_trip() {
        let r = FactorizationReport {
            f_id: "f3".into(),
            k: 2,
            l: 1000.0,
            u: std::f64::consts::FRAC_PI_4,
            alpha0: 3142.1234567891234,
            residual_exact: -1.2345e-11,
            deviation_zeta: 3.3e-5,
            min_zeta_beta: 0.12,
            detail: None,
        };
        let text = factorization_csv(std::slice::from_ref(&r)).unwrap();
        assert!(text.starts_with("f_id,k,L,U,alpha0,residual_exact,deviation_zeta,min_zeta_beta\n"));
        assert_eq!(parse_factorization_csv(&text).unwrap(), vec![r]);
    }

    #[test]
    fn hybrid_rows_round_trip() {
        let r = HybridReport {
            formula: "chf".into(),
            variant: Variant::Exact,
            l: 1e4,
            u: 0.5,
            levels: vec![1, 2, 1, 2],
            lhs: 0.1,
            rhs: 0.2,
            ratio: 0.5,
            a_over_b: Some(0.375),
            min_zeta_beta: 2.0,
        };
        assert_eq!(
            parse_hybrid_csv(&hybrid_csv(std::slice::from_ref(&r)).unwrap()).unwrap(),
            vec![r]
        );
    }

    #[test]
    fn emit_writes_body_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out").join("sweep.json");
        emit_report(
            &Report::Sweep(sample_sweep()),
            Format::Json,
            &path,
            Some("abc"),
        )
        .unwrap();
        let body = fs::read_to_string(&path).unwrap();
        assert_eq!(parse_sweep_json(&body).unwrap(), sample_sweep());
        let meta: Sidecar = serde_json::from_str(
            &fs::read_to_string(dir.path().join("out/sweep.meta.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(meta.report, "sweep.json");
        assert!(matches!(
            emit_report(
                &Report::Sweep(sample_sweep()),
                Format::Json,
                Path::new("/proc/nope/x.json"),
                None
            ),
            Err(LabError::Io { .. })
        ));
    }
}
