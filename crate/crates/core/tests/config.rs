use num_complex::Complex64;
use stokes_spectra::cli::config::{DomainSpec, Tolerances};
use stokes_spectra::cli::{emit_config, parse_config, ConfigError, RunConfig};
use stokes_spectra::poly::BoundaryPoint;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn couette_config() -> RunConfig {
    RunConfig {
        potential: vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0)]],
        a: BoundaryPoint::finite(-1.0, 0.0),
        b: BoundaryPoint::finite(1.0, 0.0),
        domain: DomainSpec {
            lower_left: c(-1.2, -3.2),
            upper_right: c(1.2, 0.6),
            excluded: vec![],
            exclude_singular: Some(0.05),
        },
        k: vec![20.0, 40.0],
        tolerances: Tolerances {
            eps_quant: Some(1e-8),
            grid_n: Some(64),
            ..Default::default()
        },
        out: "results".into(),
        lambda: Some(c(0.0, -0.5)),
        oracle_region: None,
    }
}

#[test]
fn emit_then_parse_is_identity() {
    let cfg = couette_config();
    assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
}

#[test]
fn empty_matrix_is_rejected() {
    let mut cfg = couette_config();
    cfg.potential.clear();
    assert!(matches!(parse_config(&emit_config(&cfg)), Err(ConfigError::Validation(_))));
}

#[test]
fn coincident_endpoints_are_rejected() {
    let mut cfg = couette_config();
    cfg.b = cfg.a;
    assert!(matches!(cfg.validate(), Err(ConfigError::Validation(_))));
}

#[test]
fn nonpositive_k_is_rejected() {
    let mut cfg = couette_config();
    cfg.k = vec![-3.0];
    assert!(matches!(cfg.validate(), Err(ConfigError::Validation(_))));
}

#[test]
fn malformed_json_reports_position() {
    match parse_config("{\n  \"potential\": [,\n}") {
        Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let text = emit_config(&couette_config()).replacen('{', "{\"bogus\": 1,", 1);
    assert!(matches!(parse_config(&text), Err(ConfigError::Parse { .. })));
}
