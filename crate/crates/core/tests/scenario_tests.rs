use cotangent_lab::catalog;
use cotangent_lab::error::Error;
use cotangent_lab::scenario::{Scenario, ScenarioFile};

fn err_text(src: &str) -> String {
    Scenario::from_json(src).unwrap_err().to_string()
}

#[test]
fn catalog_entries_round_trip_through_json() {
    for id in catalog::IDS {
        let file = catalog::file(id).unwrap();
        let back = ScenarioFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file, "{id}");
        let s = Scenario::from_file(back).unwrap();
        assert_eq!(s.name(), id);
    }
}

#[test]
fn expression_errors_cite_their_json_path() {
    let src = r#"{"schema": "cotangent-lab/scenario/v1", "name": "bad",
        "chart": {"dim": 3, "coords": ["x", "y", "z"]},
        "pi": [["x", "1"], ["w + 1"]], "hamiltonian": "y"}"#;
    let msg = err_text(src);
    assert!(msg.contains("pi[1][0]"), "{msg}");
}

#[test]
fn structural_errors_cite_their_json_path() {
    let src = r#"{"schema": "cotangent-lab/scenario/v1", "name": "bad",
        "chart": {"dim": 2, "coords": ["q", "p"], "bounds": [[0, "zz"], [0, 1]]},
        "pi": [["1"]], "hamiltonian": "q"}"#;
    let msg = err_text(src);
    assert!(msg.contains("chart.bounds"), "{msg}");
}

#[test]
fn unknown_fields_and_wrong_shapes_are_rejected() {
    let unknown = r#"{"schema": "cotangent-lab/scenario/v1", "name": "x", "chart": {"dim": 2, "coords": ["q", "p"]},
        "pi": [["1"]], "hamiltonian": "q", "hamiltonain": "p"}"#;
    assert!(err_text(unknown).contains("hamiltonain"));
    let shape = r#"{"schema": "cotangent-lab/scenario/v1", "name": "x", "chart": {"dim": 3, "coords": ["a", "b", "c"]},
        "pi": [["1"]], "hamiltonian": "a"}"#;
    assert!(Scenario::from_json(shape).is_err());
    let schema = r#"{"schema": "something/else", "name": "x", "chart": {"dim": 2, "coords": ["q", "p"]},
        "pi": [["1"]], "hamiltonian": "q"}"#;
    assert!(Scenario::from_json(schema).is_err());
}

#[test]
fn hex_and_decimal_numbers_are_both_accepted() {
    let src = r#"{"schema": "cotangent-lab/scenario/v1", "name": "x",
        "chart": {"dim": 2, "coords": ["q", "p"], "bounds": [["-0x1.8p+0", "0x1.8p+0"], [-1.5, 1.5]]},
        "pi": [["1"]], "hamiltonian": "q"}"#;
    let s = Scenario::from_json(src).unwrap();
    assert_eq!(s.region(), vec![(-1.5, 1.5), (-1.5, 1.5)]);
}

#[test]
fn singular_coefficients_surface_as_evaluation_errors() {
    let src = r#"{"schema": "cotangent-lab/scenario/v1", "name": "x", "chart": {"dim": 2, "coords": ["q", "p"]},
        "pi": [["1/q"]], "hamiltonian": "q"}"#;
    let s = Scenario::from_json(src).unwrap();
    let e = s.pi.matrix_at(&[0.0, 1.0]).unwrap_err();
    assert!(e.is_singularity() && matches!(e, Error::Eval(_)));
}

#[test]
fn connections_are_loaded_and_torsion_is_detected() {
    let src = r#"{"schema": "cotangent-lab/scenario/v1", "name": "x", "chart": {"dim": 2, "coords": ["q", "p"]},
        "pi": [["1"]], "hamiltonian": "q",
        "connection": {"christoffels": [[["0", "q"], ["0", "0"]], [["0", "0"], ["0", "0"]]]}}"#;
    let s = Scenario::from_json(src).unwrap();
    assert!(!s.connection.is_torsion_free());
    assert_eq!(s.connection.get(0, 0, 1).eval(&[2.0, 0.0]).unwrap(), 2.0);
}
