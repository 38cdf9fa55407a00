//! Runtime semantics tests: tick latency, tie-breaks, discard/drop notes,
//! halting faults, quiescence, DA action lifecycle, and the
//! interpreter-vs-bundle-file equivalence on small fixtures.

use std::path::Path;

use stf::compile::{compile, Bundle, CompileOptions};
use stf::parse;
use stf::sim::scenario::parse_scenario;
use stf::sim::{run_bundle, RunOptions, RunOutcome};

fn build(src: &str, config: &str) -> Bundle {
    let (m, d) = parse(src);
    assert!(d.is_empty(), "fixture has syntax errors: {d:?}");
    compile(&m.unwrap(), config, &CompileOptions::default()).unwrap()
}

fn build_with_root(src: &str, config: &str, root: &Path) -> Bundle {
    let (m, d) = parse(src);
    assert!(d.is_empty(), "fixture has syntax errors: {d:?}");
    let opts = CompileOptions {
        default_backend: Some("simulator".into()),
        data_root: Some(root.to_path_buf()),
    };
    compile(&m.unwrap(), config, &opts).unwrap()
}

fn run(bundle: &Bundle, scenario: &str, root: &Path) -> RunOutcome {
    let opts = RunOptions {
        seed: 0,
        max_ticks: 100,
        data_root: root.to_path_buf(),
        injections: parse_scenario(scenario).unwrap(),
    };
    run_bundle(bundle, &opts).unwrap()
}

fn events(outcome: &RunOutcome) -> Vec<serde_json::Value> {
    outcome
        .trace
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Events of a given kind as (tick, instance) pairs.
fn picks(outcome: &RunOutcome, kind: &str) -> Vec<(u64, String)> {
    events(outcome)
        .into_iter()
        .filter(|e| e["kind"] == kind)
        .map(|e| (e["tick"].as_u64().unwrap(), e["instance"].as_str().unwrap().to_string()))
        .collect()
}

const PINGPONG: &str = "thing Client { \
      message kick() message ping() message pong() \
      port c { receives kick pong sends ping } \
      property got : Int = 0 \
      statechart S init Idle { \
        state Idle { transition -> Waiting event c.kick { c ! ping() } } \
        state Waiting { transition -> Idle event c.pong { got = got + 1 } } } } \
    thing Server { \
      message ping() message pong() \
      port s { receives ping sends pong } \
      statechart S init Up { \
        state Up { transition -> Up event s.ping { s ! pong() } } } } \
    configuration Net { \
      instance cl : Client instance sv : Server \
      connector cl.c <-> sv.s }";

#[test]
fn one_tick_latency_roundtrip() {
    let b = build(PINGPONG, "Net");
    let out = run(&b, "1 cl c kick\n", Path::new("."));
    // kick at 1 → ping sent at 1, server receives at 2, pong sent at 2,
    // client receives at 3.
    let sends = picks(&out, "send");
    assert_eq!(sends, vec![(1, "cl".into()), (2, "sv".into())]);
    let recvs = picks(&out, "receive");
    assert_eq!(
        recvs,
        vec![(1, "cl".into()), (2, "sv".into()), (3, "cl".into())]
    );
    assert_eq!(out.error_events, 0);
}

#[test]
fn trace_is_deterministic() {
    let b = build(PINGPONG, "Net");
    let a = run(&b, "1 cl c kick\n3 cl c kick\n", Path::new("."));
    let c = run(&b, "1 cl c kick\n3 cl c kick\n", Path::new("."));
    assert_eq!(a.trace, c.trace);
}

#[test]
fn bundle_file_equals_in_memory_bundle() {
    let b = build(PINGPONG, "Net");
    let reloaded = Bundle::from_json(&b.to_json()).unwrap();
    let a = run(&b, "1 cl c kick\n", Path::new("."));
    let c = run(&reloaded, "1 cl c kick\n", Path::new("."));
    assert_eq!(a.trace, c.trace);
}

#[test]
fn unmatched_message_discarded_with_note() {
    // pong arrives while the client is Idle: no transition for it there.
    let b = build(PINGPONG, "Net");
    let out = run(&b, "1 cl c pong\n", Path::new("."));
    let es = events(&out);
    let note = es.iter().find(|e| e["kind"] == "note").unwrap();
    assert!(note["text"].as_str().unwrap().contains("discarded"));
    // state unchanged: only the two initial state_enter events
    assert_eq!(picks(&out, "state_enter").len(), 2);
}

#[test]
fn textual_order_tie_break() {
    let src = "thing T { message m() port p { receives m } \
        property which : Int = 0 \
        statechart S init A { state A { \
          transition -> A event p.m { which = 1 } \
          transition -> A event p.m { which = 2 } } } } \
        configuration C { instance t : T }";
    let b = build(src, "C");
    let out = run(&b, "1 t p m\n", Path::new("."));
    let es = events(&out);
    let assign = es.iter().find(|e| e["kind"] == "assign").unwrap();
    assert_eq!(assign["value"], 1);
}

#[test]
fn false_guard_falls_through_to_next_transition() {
    let src = "thing T { message m(x : Int) port p { receives m } \
        property which : Int = 0 \
        statechart S init A { state A { \
          transition -> A event p.m guard x > 10 { which = 1 } \
          transition -> A event p.m { which = 2 } } } } \
        configuration C { instance t : T }";
    let b = build(src, "C");
    let out = run(&b, "1 t p m 5\n", Path::new("."));
    let es = events(&out);
    let assign = es.iter().find(|e| e["kind"] == "assign").unwrap();
    assert_eq!(assign["value"], 2);
}

#[test]
fn eventless_transitions_chain_one_per_tick() {
    let src = "thing T { statechart S init A { \
        state A { transition -> B } state B { transition -> C } state C { } } } \
        configuration C { instance t : T }";
    let b = build(src, "C");
    let out = run(&b, "", Path::new("."));
    let enters = picks(&out, "state_enter");
    // A at tick 0 (setup), B fired during tick 0's visit, C during tick 1.
    assert_eq!(enters, vec![(0, "t".into()), (0, "t".into()), (1, "t".into())]);
}

#[test]
fn quiescence_with_empty_scenario() {
    let src = "thing T { statechart S init A { state A { } } } \
        configuration C { instance t : T }";
    let b = build(src, "C");
    let out = run(&b, "", Path::new("."));
    let es = events(&out);
    assert_eq!(es.len(), 1);
    assert_eq!(es[0]["kind"], "state_enter");
}

#[test]
fn division_by_zero_halts_instance() {
    let src = "thing T { message m() port p { receives m } \
        property x : Int = 0 \
        statechart S init A { state A { \
          transition -> A event p.m { x = 1 / x } } } } \
        configuration C { instance t : T }";
    let b = build(src, "C");
    let out = run(&b, "1 t p m\n3 t p m\n", Path::new("."));
    assert_eq!(out.error_events, 1);
    let es = events(&out);
    let err = es.iter().find(|e| e["kind"] == "error").unwrap();
    assert!(err["message"].as_str().unwrap().contains("division by zero"));
    // the second injection is never processed: instance halted
    assert_eq!(picks(&out, "receive").len(), 1);
}

#[test]
fn unconnected_send_dropped_with_note() {
    let src = "thing T { message m() port p { receives m sends m } \
        statechart S init A { state A { \
          transition -> A event p.m { p ! m() } } } } \
        configuration C { instance t : T }";
    let b = build(src, "C");
    let out = run(&b, "1 t p m\n", Path::new("."));
    let es = events(&out);
    let note = es.iter().find(|e| e["kind"] == "note").unwrap();
    assert!(note["text"].as_str().unwrap().contains("not connected"));
}

#[test]
fn locals_shadow_and_while_loops_run() {
    let src = "thing T { message m() port p { receives m } \
        property total : Int = 0 \
        statechart S init A { state A { \
          transition -> A event p.m { \
            var i = 0 \
            while i < 4 { total = total + i i = i + 1 } } } } } \
        configuration C { instance t : T }";
    let b = build(src, "C");
    let out = run(&b, "1 t p m\n", Path::new("."));
    let es = events(&out);
    let last_total = es
        .iter()
        .rfind(|e| e["kind"] == "assign" && e["target"] == "total")
        .unwrap();
    assert_eq!(last_total["value"], 6); // 0+1+2+3
}

const DA_THING: &str = r#"thing Learner {
      message obs(xv : Float, yv : Float) message ask(xv : Float)
      port p { receives obs ask }
      property x : Float = 0.0
      property y : Float = 0.0
      data_analytics {
        dataset "line.csv"
        features x labels y
        model linear_regression { lambda = 0.0 }
      }
      statechart S init Run {
        state Run {
          transition -> Run event p.obs { x = xv y = yv da_save }
          transition -> Train event p.ask { x = xv }
        }
        state Train {
          on_entry { da_preprocess da_train da_predict }
          transition -> Run
        }
      }
    }
    configuration C { instance l : Learner }"#;

#[test]
fn da_lifecycle_save_preprocess_train_predict() {
    let dir = tempfile::tempdir().unwrap();
    let b = build_with_root(DA_THING, "C", dir.path());
    // stream y = 2x + 1 observations, then ask for x = 3
    let mut scenario = String::new();
    for (i, x) in (0..12).enumerate() {
        scenario.push_str(&format!("{} l p obs {}.0,{}.0\n", i + 1, x, 2 * x + 1));
    }
    scenario.push_str("20 l p ask 3.0\n");
    let out = run(&b, &scenario, dir.path());
    assert_eq!(out.error_events, 0, "trace: {}", out.trace);
    let es = events(&out);
    assert_eq!(es.iter().filter(|e| e["kind"] == "da_save").count(), 12);
    let prep = es.iter().find(|e| e["kind"] == "da_preprocess").unwrap();
    assert_eq!(prep["rows"], 12);
    let train = es.iter().find(|e| e["kind"] == "da_train").unwrap();
    assert_eq!(train["report"]["algorithm"], "linear_regression");
    let pred = es.iter().find(|e| e["kind"] == "da_predict").unwrap();
    let yhat = pred["assigned"]["y"].as_f64().unwrap();
    assert!((yhat - 7.0).abs() < 1e-6, "predicted {yhat}");
    // the dataset file was persisted with a header and 12 rows
    let text = std::fs::read_to_string(dir.path().join("line.csv")).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert_eq!(text.lines().next().unwrap(), "x,y");
}

#[test]
fn da_errors_are_events_not_crashes() {
    let src = r#"thing T {
        message go()
        port p { receives go }
        property x : Float = 0.0
        property y : Float = 0.0
        data_analytics { dataset "absent.csv" features x labels y
          model linear_regression { lambda = 0.0 } }
        statechart S init A {
          state A { transition -> A event p.go { da_predict da_train da_preprocess } } } }
        configuration C { instance t : T }"#;
    let dir = tempfile::tempdir().unwrap();
    let b = build_with_root(src, "C", dir.path());
    let out = run(&b, "1 t p go\n2 t p go\n", dir.path());
    let es = events(&out);
    let msgs: Vec<&str> = es
        .iter()
        .filter(|e| e["kind"] == "error")
        .map(|e| e["message"].as_str().unwrap())
        .collect();
    assert_eq!(msgs.len(), 6); // three failures per injection, instance not halted
    assert!(msgs[0].contains("model not ready"));
    assert!(msgs[1].contains("no prepared data"));
    assert!(msgs[2].contains("dataset file not found"));
}

#[test]
fn pretrained_model_predicts_without_training() {
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
    std::fs::write(dir.path().join("line_model.json"), model_json).unwrap();
    let src = r#"thing T {
        message ask(xv : Float)
        port p { receives ask }
        property x : Float = 0.0
        property y : Float = 0.0
        data_analytics { dataset "d.csv" features x labels y
          model linear_regression { lambda = 0.0 }
          pretrained "line_model.json" }
        statechart S init A {
          state A { transition -> A event p.ask { x = xv da_predict } } } }
        configuration C { instance t : T }"#;
    let b = build_with_root(src, "C", dir.path());
    assert!(b.pretrained.contains_key("line_model.json"));
    let out = run(&b, "1 t p ask 3.0\n", dir.path());
    assert_eq!(out.error_events, 0, "{}", out.trace);
    let es = events(&out);
    assert!(es.iter().all(|e| e["kind"] != "da_train"));
    let pred = es.iter().find(|e| e["kind"] == "da_predict").unwrap();
    assert!((pred["assigned"]["y"].as_f64().unwrap() - 7.0).abs() < 1e-9);
}
