//! One fixture per diagnostic rule: each triggers exactly its rule at the
//! expected span.

use std::collections::BTreeMap;

use stf::merge::{merge_imports, MapResolver};
use stf::parse;
use stf::validate::{validate, DatasetProvider, Diagnostic, FsDatasetProvider, NoDatasets};

fn run(src: &str, provider: &dyn DatasetProvider) -> (String, Vec<Diagnostic>) {
    let (m, diags) = parse(src);
    assert!(diags.is_empty(), "fixture has syntax errors: {diags:?}");
    let merged = merge_imports(&m.unwrap(), "fixture.stf", &MapResolver(BTreeMap::new())).unwrap();
    (src.to_string(), validate(&merged, provider))
}

/// Assert the fixture triggers only `rule`, exactly `count` times, and that
/// the first diagnostic's span covers text starting with `at`.
fn assert_only(src: &str, provider: &dyn DatasetProvider, rule: &str, count: usize, at: &str) {
    let (src, diags) = run(src, provider);
    let rules: Vec<&str> = diags.iter().map(|d| d.rule).collect();
    assert_eq!(
        rules,
        vec![rule; count],
        "expected only {rule} x{count}, got {diags:#?}"
    );
    let span = diags[0].span;
    let covered = &src[span.start..span.end.min(src.len())];
    assert!(
        covered.starts_with(at),
        "span covers {covered:?}, expected it to start with {at:?}"
    );
}

#[test]
fn e001_duplicate_thing_name() {
    assert_only(
        "thing Dup { }\nthing Dup { property x : Int = 0 }",
        &NoDatasets,
        "E001",
        1,
        "thing Dup { property",
    );
}

#[test]
fn e001_duplicate_configuration_name() {
    assert_only(
        "configuration C { }\nconfiguration C { }",
        &NoDatasets,
        "E001",
        1,
        "configuration C { }",
    );
}

#[test]
fn e002_port_undeclared_message() {
    assert_only(
        "thing T { port p { receives nope } }",
        &NoDatasets,
        "E002",
        1,
        "port p",
    );
}

#[test]
fn e003_event_not_receivable() {
    assert_only(
        "thing T { message m() port p { sends m } \
         statechart S init A { state A { transition -> A event p.m } } }",
        &NoDatasets,
        "E003",
        1,
        "transition -> A event p.m",
    );
}

#[test]
fn e004_unknown_feature_property() {
    assert_only(
        r#"thing T { property y : Bool = false
            data_analytics { dataset "d.csv" features nope labels y model knn { k = 3 } } }"#,
        &NoDatasets,
        "E004",
        1,
        "data_analytics",
    );
}

#[test]
fn e005_da_action_without_block() {
    assert_only(
        "thing T { statechart S init A { state A { on_entry { da_predict } } } }",
        &NoDatasets,
        "E005",
        1,
        "da_predict",
    );
}

#[test]
fn e006_classifier_with_float_label() {
    assert_only(
        r#"thing T { property x : Float = 0.0 property y : Float = 0.0
            data_analytics { dataset "d.csv" features x labels y
                model logistic_regression { learning_rate = 0.1 } } }"#,
        &NoDatasets,
        "E006",
        1,
        "data_analytics",
    );
}

#[test]
fn e006_regression_algorithm_with_bool_label() {
    assert_only(
        r#"thing T { property x : Float = 0.0 property y : Bool = false
            data_analytics { dataset "d.csv" features x labels y
                model linear_regression { lambda = 0.01 } } }"#,
        &NoDatasets,
        "E006",
        1,
        "data_analytics",
    );
}

#[test]
fn e007_connector_message_set_incompatible() {
    assert_only(
        "thing A { message m() port p { sends m } } \
         thing B { message m() port q { sends m } } \
         configuration C { instance a : A instance b : B connector a.p <-> b.q }",
        &NoDatasets,
        "E007",
        2, // both directions send 'm' into a port that receives nothing
        "connector a.p <-> b.q",
    );
}

#[test]
fn e008_unreachable_state() {
    assert_only(
        "thing T { statechart S init A { state A { } state B { transition -> A } } }",
        &NoDatasets,
        "E008",
        1,
        "state B",
    );
}

#[test]
fn e008_unknown_initial_state() {
    assert_only(
        "thing T { statechart S init Nowhere { state A { } } }",
        &NoDatasets,
        "E008",
        1, // reachability is skipped when the initial state is unknown
        "statechart S",
    );
}

#[test]
fn e009_type_error_in_assignment() {
    assert_only(
        "thing T { property b : Bool = false \
         statechart S init A { state A { transition -> A { b = 1 + 2 } } } }",
        &NoDatasets,
        "E009",
        1,
        "b = 1 + 2",
    );
}

#[test]
fn e009_send_arity_mismatch() {
    assert_only(
        "thing T { message m(a : Int) port p { sends m } \
         statechart S init A { state A { transition -> A { p ! m() } } } }",
        &NoDatasets,
        "E009",
        1,
        "p ! m()",
    );
}

#[test]
fn e010_window_without_sequential() {
    assert_only(
        r#"thing T { property x : Float = 0.0
            data_analytics { dataset "d.csv" features x labels x
                window 2 horizon 1
                automl { metric rmse folds 5 } } }"#,
        &NoDatasets,
        "E010",
        1,
        "data_analytics",
    );
}

#[test]
fn e011_pretrained_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let model_json = r#"{
      "format_version": 1,
      "algorithm": "linear_regression",
      "task": "regression",
      "schema": {"features": ["a"], "labels": ["b"]},
      "scaler": [{"kind": "none", "p1": 0.0, "p2": 0.0}],
      "encoder": {
        "features": [{"name": "a", "ty": "numeric", "categories": [], "impute": null}],
        "labels": [{"name": "b", "ty": "numeric", "categories": []}],
        "base_feature_names": ["a"],
        "window": null
      },
      "parameters": {"linear": {"weights": [[2.0]], "intercepts": [1.0]}},
      "trained_on": 0
    }"#;
    std::fs::write(dir.path().join("pre.json"), model_json).unwrap();
    let src = r#"thing T { property x : Float = 0.0 property y : Float = 0.0
        data_analytics { dataset "d.csv" features x labels y
            model linear_regression { lambda = 0.0 }
            pretrained "pre.json" } }"#;
    assert_only(
        src,
        &FsDatasetProvider::new(dir.path()),
        "E011",
        1,
        "data_analytics",
    );
}

#[test]
fn e012_da_action_in_guard() {
    assert_only(
        r#"thing T { property x : Float = 0.0 property y : Float = 0.0
            data_analytics { dataset "d.csv" features x labels y
                model linear_regression { lambda = 0.0 } }
            statechart S init A { state A { transition -> A guard da_train } } }"#,
        &NoDatasets,
        "E012",
        1,
        "da_train",
    );
}

#[test]
fn w101_predict_without_train_or_pretrained() {
    assert_only(
        r#"thing T { property x : Float = 0.0 property y : Float = 0.0
            data_analytics { dataset "d.csv" features x labels y
                model linear_regression { lambda = 0.0 } }
            statechart S init A { state A { on_entry { da_predict } } } }"#,
        &NoDatasets,
        "W101",
        1,
        "da_predict",
    );
}

#[test]
fn w102_receiving_port_never_connected() {
    assert_only(
        "thing T { message m() port p { receives m } } \
         configuration C { instance t : T }",
        &NoDatasets,
        "W102",
        1,
        "port p",
    );
}

#[test]
fn w103_train_without_preprocess() {
    assert_only(
        r#"thing T { property x : Float = 0.0 property y : Float = 0.0
            data_analytics { dataset "d.csv" features x labels y
                model linear_regression { lambda = 0.0 } }
            statechart S init A { state A { on_entry { da_train } } } }"#,
        &NoDatasets,
        "W103",
        1,
        "da_train",
    );
}

#[test]
fn h201_dataset_too_small() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.csv"), "x,y\n1,true\n2,false\n3,true\n").unwrap();
    assert_only(
        r#"thing T { property x : Float = 0.0 property y : Bool = false
            data_analytics { dataset "d.csv" features x labels y model knn { k = 1 } } }"#,
        &FsDatasetProvider::new(dir.path()),
        "H201",
        1,
        "data_analytics",
    );
}

#[test]
fn h202_expert_mode_without_hyperparams() {
    assert_only(
        r#"thing T { property x : Float = 0.0 property y : Bool = false
            data_analytics { dataset "d.csv" features x labels y model gaussian_nb { } } }"#,
        &NoDatasets,
        "H202",
        1,
        "data_analytics",
    );
}

#[test]
fn h203_zscore_on_constant_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x,y\n");
    for i in 0..12 {
        csv.push_str(&format!("5,{}\n", if i % 2 == 0 { "true" } else { "false" }));
    }
    std::fs::write(dir.path().join("d.csv"), csv).unwrap();
    assert_only(
        r#"thing T { property x : Float = 0.0 property y : Bool = false
            data_analytics { dataset "d.csv" features x labels y
                scaling zscore
                model knn { k = 1 } } }"#,
        &FsDatasetProvider::new(dir.path()),
        "H203",
        1,
        "data_analytics",
    );
}

#[test]
fn pretrained_matching_schema_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let model_json = r#"{
      "format_version": 1,
      "algorithm": "linear_regression",
      "task": "regression",
      "schema": {"features": ["x"], "labels": ["y"]},
      "scaler": [{"kind": "none", "p1": 0.0, "p2": 0.0}],
      "encoder": {
        "features": [{"name": "x", "ty": "numeric", "categories": [], "impute": null}],
        "labels": [{"name": "y", "ty": "numeric", "categories": []}],
        "base_feature_names": ["x"],
        "window": null
      },
      "parameters": {"linear": {"weights": [[2.0]], "intercepts": [1.0]}},
      "trained_on": 0
    }"#;
    std::fs::write(dir.path().join("pre.json"), model_json).unwrap();
    let src = r#"thing T { property x : Float = 0.0 property y : Float = 0.0
        data_analytics { dataset "d.csv" features x labels y
            model linear_regression { lambda = 0.0 }
            pretrained "pre.json" }
        statechart S init A { state A { on_entry { da_predict } } } }"#;
    let (_, diags) = run(src, &FsDatasetProvider::new(dir.path()));
    assert!(diags.is_empty(), "{diags:#?}");
}

#[test]
fn diagnostics_render_format() {
    let (m, _) = parse("thing T { port p { receives nope } }");
    let diags = validate(&m.unwrap(), &NoDatasets);
    let line = diags[0].render("model.stf");
    assert!(line.starts_with("model.stf:1:11: error[E002]:"), "{line}");
}

#[test]
fn validate_is_deterministic() {
    let src = "thing T { port p { receives a sends b } \
        statechart S init X { state A { } } } \
        configuration C { instance t : T connector t.p <-> t.q }";
    let (m, _) = parse(src);
    let m = m.unwrap();
    let a = validate(&m, &NoDatasets);
    let b = validate(&m, &NoDatasets);
    assert_eq!(a, b);
    // errors come out ordered by span
    assert!(a.windows(2).all(|w| w[0].span.start <= w[1].span.start));
}
