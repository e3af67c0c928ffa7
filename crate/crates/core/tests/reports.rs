use std::f64::consts::PI;
use std::sync::OnceLock;

use jsonschema::JSONSchema;
use ladderlab::factorization::FunctionId;
use ladderlab::hybrid::{Check, ConvergenceSweep, Lab, SweepPlan, Variant};
use ladderlab::report::{
    emit_report, parse_factorization_csv, parse_hybrid_csv, parse_sweep_csv, parse_sweep_json,
    sidecar_path, Format, Report,
};
use ladderlab::LabConfig;

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| LabConfig::default().build_lab(None).unwrap())
}

fn sample_reports() -> Vec<Report> {
    let lab = lab();
    let u = PI / 4.0;
    let lemma = vec![
        lab.lemma(FunctionId::F1, 1000.0, u, 1).unwrap(),
        lab.lemma(FunctionId::F6, 1000.0, u, 2).unwrap(),
    ];
    let hybrid = vec![
        lab.chf_check(1000.0, u, &[1, 2, 1, 2], Variant::Exact)
            .unwrap(),
        lab.sincos_chf(1000.0, u, 1, 1, Variant::Zeta).unwrap(),
    ];
    let mut plan = SweepPlan::single(vec![1000.0, 2000.0]);
    plan.samples_per_anchor = 3;
    plan.kappa = Some(1e-4);
    let sweep = lab
        .sweep(
            &Check::Secondary { levels: [1; 4] },
            &plan,
            u,
            Variant::Zeta,
        )
        .unwrap();
    let empty = ConvergenceSweep::from_points(
        &Check::Chf { levels: [1; 4] },
        Variant::Exact,
        u,
        vec![],
        None,
    );
    vec![
        Report::Factorization(lemma),
        Report::Hybrid(hybrid),
        Report::Sweep(sweep),
        Report::Sweep(empty),
    ]
}

fn validator(schema: &str) -> JSONSchema {
    let schema: serde_json::Value = serde_json::from_str(schema).unwrap();
    JSONSchema::compile(&schema).unwrap()
}

#[test]
fn every_json_report_matches_its_schema() {
    for report in sample_reports() {
        let v = validator(report.schema());
        let doc: serde_json::Value =
            serde_json::from_str(&report.render(Format::Json).unwrap()).unwrap();
        let msgs: Vec<String> = match v.validate(&doc) {
            Ok(()) => Vec::new(),
            Err(errors) => errors.map(|e| e.to_string()).collect(),
        };
        assert!(msgs.is_empty(), "{msgs:?}");
    }
}

#[test]
fn schema_rejects_unknown_fields() {
    let report = &sample_reports()[2];
    let mut doc: serde_json::Value =
        serde_json::from_str(&report.render(Format::Json).unwrap()).unwrap();
    doc["extra"] = serde_json::json!(1);
    assert!(!validator(report.schema()).is_valid(&doc));
}

#[test]
fn empty_sweep_has_empty_points() {
    let report = &sample_reports()[3];
    let doc: serde_json::Value =
        serde_json::from_str(&report.render(Format::Json).unwrap()).unwrap();
    assert_eq!(doc["points"], serde_json::json!([]));
    assert_eq!(doc["verdict"], "FAIL");
}

#[test]
fn csv_round_trips() {
    for report in sample_reports() {
        let csv = report.render(Format::Csv).unwrap();
        match &report {
            Report::Factorization(rows) => {
                let back = parse_factorization_csv(&csv).unwrap();
                assert_eq!(back.len(), rows.len());
                for (a, b) in back.iter().zip(rows) {
                    assert_eq!(
                        (
                            &a.f_id,
                            a.k,
                            a.l,
                            a.u,
                            a.alpha0,
                            a.residual_exact,
                            a.deviation_zeta,
                            a.min_zeta_beta
                        ),
                        (
                            &b.f_id,
                            b.k,
                            b.l,
                            b.u,
                            b.alpha0,
                            b.residual_exact,
                            b.deviation_zeta,
                            b.min_zeta_beta
                        )
                    );
                }
            }
            Report::Hybrid(rows) => assert_eq!(&parse_hybrid_csv(&csv).unwrap(), rows),
            Report::Sweep(s) => {
                assert_eq!(&parse_sweep_csv(&csv).unwrap(), &s.points);
                assert_eq!(
                    &parse_sweep_json(&report.render(Format::Json).unwrap()).unwrap(),
                    s
                );
            }
        }
    }
}

#[test]
fn emitted_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let report = &sample_reports()[1];
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    emit_report(report, Format::Json, &a, Some("abc")).unwrap();
    emit_report(&sample_reports()[1], Format::Json, &b, Some("abc")).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(&a)).unwrap()).unwrap();
    assert_eq!(meta["cache_fingerprint"], "abc");
    assert!(meta["generated_unix"].as_u64().unwrap() > 0);
}
