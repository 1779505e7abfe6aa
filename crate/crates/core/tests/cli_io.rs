use std::fs;
use std::path::Path;

use awbgk::cli_io::{
    format_float, load_config, parse_config, write_csv, write_echo, write_json, DiagnosticsWriter, IcType, RunConfig,
    DIAGNOSTICS_HEADER,
};
use awbgk::macroscopics::ClosureMode;
use awbgk::momentum_grid::GridKind;
use awbgk::solver::{Diagnostics, TransportScheme};
use awbgk::Error;

fn parse(text: &str) -> awbgk::Result<RunConfig> {
    parse_config(text, Path::new("test.json"))
}

fn config_key(r: awbgk::Result<RunConfig>) -> String {
    match r {
        Err(Error::Config { key, .. }) => key,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn minimal_config_takes_defaults() {
    let c = parse(r#"{"physics": {"beta0": 2.0}}"#).unwrap();
    assert_eq!(c, RunConfig::with_beta0(2.0));
    assert_eq!(c.grid.kind, GridKind::Sinh);
    assert_eq!(c.grid.n_axis, 32);
    assert_eq!(c.grid.n_x, 64);
    assert_eq!(c.grid.length, 10.0);
    assert_eq!(c.scheme.closure_mode, ClosureMode::Matched);
    assert_eq!(c.scheme.transport, TransportScheme::Spectral);
    assert_eq!(c.ic.kind, IcType::Wave);
    assert_eq!(c.q_max(), 15.0);
}

#[test]
fn full_config_round_trips() {
    let text = r#"{
        "physics": {"beta0": 1.0},
        "grid": {"kind": "uniform", "q_max": 12.0, "n_axis": 16, "n_x": 8, "L": 2.5, "tol_grid": 1e-3},
        "time": {"dt": 0.05, "t_end": 1.0, "output_every": 2},
        "scheme": {"closure_mode": "formula", "transport": "upwind2"},
        "ic": {"type": "two_maxwellian", "velocity": [0.3, 0.0, 0.0], "density": 2.0},
        "output": {"directory": "runs/a", "max_order": 2}
    }"#;
    let c = parse(text).unwrap();
    assert_eq!(c.grid.kind, GridKind::Uniform);
    assert_eq!(c.grid.length, 2.5);
    assert_eq!(c.scheme.transport, TransportScheme::Upwind2);
    assert_eq!(c.ic.kind, IcType::TwoMaxwellian);
    let back = serde_json::to_string(&c).unwrap();
    assert_eq!(parse(&back).unwrap(), c);
}

#[test]
fn validation_errors_name_the_key() {
    assert_eq!(config_key(parse(r#"{"physics": {"beta0": -1}}"#)), "physics.beta0");
    assert_eq!(config_key(parse(r#"{"physics": {"beta0": 1}, "grid": {"n_axis": 15}}"#)), "grid.n_axis");
    assert_eq!(config_key(parse(r#"{"physics": {"beta0": 1}, "grid": {"n_x": 3}}"#)), "grid.n_x");
    assert_eq!(config_key(parse(r#"{"physics": {"beta0": 1}, "time": {"dt": 0}}"#)), "time.dt");
    assert_eq!(config_key(parse(r#"{"physics": {"beta0": 1}, "ic": {"amplitude": 0.5}}"#)), "ic.amplitude");
    assert_eq!(
        config_key(parse(r#"{"physics": {"beta0": 1}, "grid": {"n_x": 4}, "ic": {"mode_number": 3}}"#)),
        "ic.mode_number"
    );
}

#[test]
fn n_axis_message() {
    match parse(r#"{"physics": {"beta0": 1}, "grid": {"n_axis": 31}}"#) {
        Err(e @ Error::Config { .. }) => assert!(e.to_string().contains("n_axis must be even")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn under_resolved_grid_fails_full_validation() {
    let c = parse(r#"{"physics": {"beta0": 1}, "grid": {"kind": "uniform", "n_axis": 8}}"#).unwrap();
    assert!(matches!(c.validate_with_grid(), Err(Error::Config { .. })));
}

#[test]
fn parse_errors_carry_position() {
    match parse("{\n  \"physics\": {\"beta0\": 1},\n  \"grid\": {\"bogus\": 1}\n}") {
        Err(Error::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("bogus"));
            assert!(!message.contains(" at line "));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("{"), Err(Error::Parse { .. })));
    assert!(matches!(parse("{}"), Err(Error::Parse { .. })));
}

#[test]
fn load_and_echo_are_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let text = "{ \"physics\" : { \"beta0\" : 1.5 } }\n";
    fs::write(&path, text).unwrap();
    let (config, raw) = load_config(&path).unwrap();
    assert_eq!(config.physics.beta0, 1.5);
    let out = dir.path().join("out/nested");
    write_echo(&out, &raw).unwrap();
    assert_eq!(fs::read_to_string(out.join("config.echo.json")).unwrap(), text);
    assert!(matches!(load_config(&dir.path().join("missing.json")), Err(Error::Config { .. })));
}

#[test]
fn diagnostics_rows_round_trip() {
    let d = Diagnostics {
        t: 0.1,
        mass: 1.0000000000000002,
        momentum: [0.0, -1e-300, 3.5],
        energy: 2.25,
        h: -0.5,
        e_f: 1e-7,
        closure_residual: 0.0,
        min_f: 5e-324,
    };
    let mut w = DiagnosticsWriter::new(Vec::new()).unwrap();
    w.write(&d).unwrap();
    let text = String::from_utf8(w.into_inner()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(DIAGNOSTICS_HEADER));
    let values: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(
        values,
        vec![d.t, d.mass, 0.0, -1e-300, 3.5, d.energy, d.h, d.e_f, 0.0, d.min_f]
    );
    assert_eq!(format_float(1.5), "1.5e0");
}

#[test]
fn csv_and_json_writers() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    write_csv(&csv, &["x", "y"], &[vec![1.0, 2.0], vec![0.5, -3.0]]).unwrap();
    assert_eq!(fs::read_to_string(&csv).unwrap(), "x,y\n1e0,2e0\n5e-1,-3e0\n");
    let json = dir.path().join("a.json");
    write_json(&json, &RunConfig::with_beta0(1.0)).unwrap();
    let text = fs::read_to_string(&json).unwrap();
    assert!(text.ends_with("}\n"));
    assert_eq!(parse(&text).unwrap(), RunConfig::with_beta0(1.0));
}
