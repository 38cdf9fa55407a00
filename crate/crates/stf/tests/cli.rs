//! End-to-end tests of the `stf` binary: exit codes, determinism, and the
//! bundle/interpreter equivalence through the real CLI surface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn stf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stf"))
        .args(args)
        .current_dir(cwd)
        .env_remove("STF_DATA_ROOT")
        .output()
        .expect("spawn stf")
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

const GOOD: &str = r#"
thing Blinker {
  message tick()
  port clock {
    receives tick
  }
  property n : Int = 0
  statechart B init Off {
    state Off {
      transition -> On event clock.tick {
        n = n + 1
      }
    }
    state On {
      transition -> Off event clock.tick
    }
  }
}
configuration Main {
  instance b : Blinker
}
"#;

#[test]
fn version_prints_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = stf(&["version"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("stf "));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = stf(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("good.stf"), GOOD).unwrap();
    std::fs::write(dir.path().join("bad.stf"), "thing X {").unwrap();

    let ok = stf(&["check", "good.stf"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("good.stf: ok"));

    let bad = stf(&["check", "bad.stf"], dir.path());
    assert_eq!(bad.status.code(), Some(1));

    let missing = stf(&["check", "nope.stf"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn check_report_format_emits_json_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    // duplicate thing name → E001
    let src = format!("{GOOD}\nthing Blinker {{ }}\n");
    std::fs::write(dir.path().join("dup.stf"), src).unwrap();
    let out = stf(&["check", "dup.stf", "--format", "report"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let v = stdout
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["rule"] == "E001")
        .expect("an E001 diagnostic");
    assert_eq!(v["severity"], "error");
    assert!(v["line"].as_u64().is_some());
}

#[test]
fn synth_is_deterministic_and_rejects_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let a = stf(&["synth", "prices", "--seed", "7", "-n", "50"], dir.path());
    let b = stf(&["synth", "prices", "--seed", "7", "-n", "50"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "same seed must give identical bytes");
    let c = stf(&["synth", "prices", "--seed", "8", "-n", "50"], dir.path());
    assert_ne!(a.stdout, c.stdout, "different seed must differ");

    let bad = stf(&["synth", "weather", "--seed", "1"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn run_interpreter_and_generated_bundle_produce_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.stf"), GOOD).unwrap();
    std::fs::write(dir.path().join("s.scn"), "1 b clock tick\n2 b clock tick\n").unwrap();

    let gen = stf(&["generate", "m.stf", "-o", "m.json"], dir.path());
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));

    let run_src = stf(
        &["run", "m.stf", "--scenario", "s.scn", "--seed", "3", "--trace-out", "a.trace"],
        dir.path(),
    );
    assert_eq!(run_src.status.code(), Some(0), "{}", String::from_utf8_lossy(&run_src.stderr));
    let run_bundle = stf(
        &["run", "m.json", "--scenario", "s.scn", "--seed", "3", "--trace-out", "b.trace"],
        dir.path(),
    );
    assert_eq!(run_bundle.status.code(), Some(0));

    let a = std::fs::read(dir.path().join("a.trace")).unwrap();
    let b = std::fs::read(dir.path().join("b.trace")).unwrap();
    assert_eq!(a, b, "interpreter and bundle traces must be byte-identical");
    assert!(String::from_utf8_lossy(&a).contains(r#""kind":"state_enter""#));
}

#[test]
fn strict_turns_runtime_error_events_into_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let src = r#"
thing Crash {
  message go()
  port p {
    receives go
  }
  property x : Int = 0
  statechart C init S {
    state S {
      transition -> S event p.go {
        x = 1 / 0
      }
    }
  }
}
configuration Main {
  instance c : Crash
}
"#;
    std::fs::write(dir.path().join("m.stf"), src).unwrap();
    std::fs::write(dir.path().join("s.scn"), "1 c p go\n").unwrap();

    let lax = stf(&["run", "m.stf", "--scenario", "s.scn", "--trace-out", "t.trace"], dir.path());
    assert_eq!(lax.status.code(), Some(0), "errors are trace events by default");
    let strict = stf(
        &["run", "m.stf", "--scenario", "s.scn", "--strict", "--trace-out", "t.trace"],
        dir.path(),
    );
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn run_is_deterministic_across_invocations() {
    let root = repo_root();
    let dir = tempfile::tempdir().unwrap();
    let model = root.join("corpus/nialm.stf");
    let scn = root.join("corpus/scenarios/nialm.scn");
    for (i, name) in ["x.trace", "y.trace"].iter().enumerate() {
        let out = stf(
            &[
                "run",
                model.to_str().unwrap(),
                "--scenario",
                scn.to_str().unwrap(),
                "--seed",
                "1",
                "--trace-out",
                name,
            ],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "run {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let x = std::fs::read(dir.path().join("x.trace")).unwrap();
    let y = std::fs::read(dir.path().join("y.trace")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn data_root_env_overrides_model_directory() {
    let root = repo_root();
    let dir = tempfile::tempdir().unwrap();
    // copy the model next to nothing; point STF_DATA_ROOT at the corpus dir
    let model_copy = dir.path().join("nialm.stf");
    std::fs::copy(root.join("corpus/nialm.stf"), &model_copy).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_stf"))
        .args([
            "run",
            "nialm.stf",
            "--scenario",
            root.join("corpus/scenarios/nialm.scn").to_str().unwrap(),
            "--trace-out",
            "t.trace",
        ])
        .current_dir(dir.path())
        .env("STF_DATA_ROOT", root.join("corpus"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("t.trace")).unwrap();
    assert!(trace.contains(r#""kind":"da_train""#));
}

#[test]
fn generate_pack_emits_manifest_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.stf"), GOOD).unwrap();
    let out = stf(
        &["generate", "m.stf", "--target", "pack:reference", "-o", "pack"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["bundle.json", "run.sh", "DEPLOYMENT.md"] {
        assert!(dir.path().join("pack").join(f).exists(), "missing {f}");
    }
    let unknown = stf(
        &["generate", "m.stf", "--target", "pack:nope", "-o", "pack2"],
        dir.path(),
    );
    assert_eq!(unknown.status.code(), Some(2));
}
