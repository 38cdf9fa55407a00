//! Command-line front end: `check`, `generate`, `run`, `synth`, `version`.
//!
//! Exit codes: 0 success, 1 model errors (parse/merge/validation, or a
//! missing backend), 2 usage errors (bad arguments, unreadable inputs,
//! unknown names), 3 runtime or generation failures.
//!
//! Relative dataset paths resolve against the model (or bundle) file's
//! directory unless `STF_DATA_ROOT` is set.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::compile::{compile, Bundle, CompileError, CompileOptions};
use crate::merge::{merge_imports, FsResolver};
use crate::model::Model;
use crate::sim::scenario::parse_scenario;
use crate::sim::{run_bundle, RunOptions};
use crate::templates::{generate_sources, reference_pack};
use crate::validate::{validate, FsDatasetProvider, Severity};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODEL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Human-readable text.
    Text,
    /// Machine-readable JSON records.
    Report,
}

#[derive(Parser, Debug)]
#[command(
    name = "stf",
    version,
    about = "Compiler toolchain and deterministic runtime for statechart models with DA/ML blocks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Parse, merge imports, and validate model files.
    Check {
        /// Model files (.stf); each is checked independently.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compile a model into a deployment bundle or a template-pack tree.
    Generate {
        file: PathBuf,
        /// Configuration to compile; defaults to the model's only one.
        #[arg(long)]
        config: Option<String>,
        /// `bundle` or `pack:reference`.
        #[arg(long, default_value = "bundle")]
        target: String,
        /// Output file (bundle) or directory (pack).
        #[arg(short, long)]
        out: PathBuf,
        /// Backend assumed for DA things without a backend annotation.
        #[arg(long)]
        default_backend: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Execute a model (.stf) or bundle (.json) against a scenario.
    Run {
        input: PathBuf,
        /// Scenario script: lines `tick instance port message arg1,arg2,...`.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        max_ticks: u64,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Exit 3 if the trace contains any error event.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        default_backend: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Generate a synthetic corpus dataset (pingpong, nialm, prices).
    Synth {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of rows / ticks.
        #[arg(short, default_value_t = 1000)]
        n: usize,
        /// Output CSV path; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the tool version.
    Version,
}

pub fn main_with(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.cmd {
        Cmd::Check { files, format } => cmd_check(&files, format),
        Cmd::Generate { file, config, target, out, default_backend, format } => {
            cmd_generate(&file, config.as_deref(), &target, &out, default_backend, format)
        }
        Cmd::Run {
            input,
            scenario,
            seed,
            config,
            max_ticks,
            trace_out,
            strict,
            default_backend,
            format,
        } => cmd_run(
            &input,
            scenario.as_deref(),
            seed,
            config.as_deref(),
            max_ticks,
            trace_out.as_deref(),
            strict,
            default_backend,
            format,
        ),
        Cmd::Synth { name, seed, n, out } => cmd_synth(&name, seed, n, out.as_deref()),
        Cmd::Version => {
            println!("stf {}", env!("CARGO_PKG_VERSION"));
            EXIT_OK
        }
    }
}

fn data_root_for(path: &Path) -> PathBuf {
    if let Ok(root) = std::env::var("STF_DATA_ROOT") {
        return PathBuf::from(root);
    }
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Read, parse, and flatten a model file. `Err` carries an exit code after
/// printing what went wrong.
fn load_model(path: &Path) -> Result<Model, i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("stf: cannot read '{}': {e}", path.display());
            return Err(EXIT_USAGE);
        }
    };
    let file = path.display().to_string();
    let (model, diags) = crate::parser::parse(&text);
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("{}", d.render(&file));
        }
        return Err(EXIT_MODEL);
    }
    let model = model.expect("parse without errors yields a model");
    match merge_imports(&model, &file, &FsResolver) {
        Ok(m) => Ok(m),
        Err(e) => {
            eprintln!("{file}: error[import]: {e}");
            Err(EXIT_MODEL)
        }
    }
}

/// Validate a flattened model, printing diagnostics. Returns `Err(1)` when
/// any error-severity diagnostic exists.
fn check_model(model: &Model, path: &Path, format: Format) -> Result<(), i32> {
    let provider = FsDatasetProvider::new(data_root_for(path));
    let diags = validate(model, &provider);
    let file = path.display().to_string();
    for d in &diags {
        match format {
            Format::Text => println!("{}", d.render(&file)),
            Format::Report => {
                println!(
                    "{}",
                    serde_json::json!({
                        "file": file,
                        "line": d.span.line,
                        "col": d.span.col,
                        "severity": d.severity.to_string(),
                        "rule": d.rule,
                        "message": d.message,
                    })
                );
            }
        }
    }
    if diags.iter().any(|d| d.severity == Severity::Error) {
        Err(EXIT_MODEL)
    } else {
        Ok(())
    }
}

fn cmd_check(files: &[PathBuf], format: Format) -> i32 {
    let mut code = EXIT_OK;
    for path in files {
        let model = match load_model(path) {
            Ok(m) => m,
            Err(c) => {
                code = code.max(c);
                continue;
            }
        };
        if check_model(&model, path, format).is_err() {
            code = code.max(EXIT_MODEL);
            continue;
        }
        // Platform completeness is informational at check time; generate
        // enforces it.
        for t in crate::merge::platform_completeness(&model) {
            println!(
                "{}: note: thing '{t}' has a data-analytics block but no backend annotation",
                path.display()
            );
        }
        if format == Format::Text {
            println!("{}: ok", path.display());
        }
    }
    code
}

fn pick_config(model: &Model, requested: Option<&str>) -> Result<String, i32> {
    match requested {
        Some(name) => {
            if model.configurations.iter().any(|c| c.name == name) {
                Ok(name.to_string())
            } else {
                eprintln!("stf: configuration '{name}' not found");
                Err(EXIT_USAGE)
            }
        }
        None => match model.configurations.as_slice() {
            [only] => Ok(only.name.clone()),
            [] => {
                eprintln!("stf: model declares no configuration");
                Err(EXIT_MODEL)
            }
            many => {
                eprintln!(
                    "stf: model declares {} configurations; pick one with --config",
                    many.len()
                );
                Err(EXIT_USAGE)
            }
        },
    }
}

fn build_bundle(
    path: &Path,
    config: Option<&str>,
    default_backend: Option<String>,
    format: Format,
) -> Result<Bundle, i32> {
    let model = load_model(path)?;
    check_model(&model, path, format)?;
    let config = pick_config(&model, config)?;
    let opts = CompileOptions {
        default_backend,
        data_root: Some(data_root_for(path)),
    };
    compile(&model, &config, &opts).map_err(|e| {
        eprintln!("stf: {e}");
        match e {
            // an unresolved backend is a model-completeness problem
            CompileError::MissingBackend(_) => EXIT_MODEL,
            _ => EXIT_RUNTIME,
        }
    })
}

fn cmd_generate(
    file: &Path,
    config: Option<&str>,
    target: &str,
    out: &Path,
    default_backend: Option<String>,
    format: Format,
) -> i32 {
    let bundle = match build_bundle(file, config, default_backend, format) {
        Ok(b) => b,
        Err(c) => return c,
    };
    match target {
        "bundle" => {
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                if let Err(e) = std::fs::create_dir_all(parent) {
                    eprintln!("stf: cannot create '{}': {e}", parent.display());
                    return EXIT_RUNTIME;
                }
            }
            if let Err(e) = std::fs::write(out, bundle.to_json()) {
                eprintln!("stf: cannot write '{}': {e}", out.display());
                return EXIT_RUNTIME;
            }
            match format {
                Format::Text => println!(
                    "wrote {} ({} things, {} instances, model {})",
                    out.display(),
                    bundle.things.len(),
                    bundle.configuration.instances.len(),
                    &bundle.manifest.model_sha256[..12]
                ),
                Format::Report => println!(
                    "{}",
                    serde_json::json!({
                        "out": out.display().to_string(),
                        "things": bundle.things.len(),
                        "instances": bundle.configuration.instances.len(),
                        "model_sha256": bundle.manifest.model_sha256,
                    })
                ),
            }
            EXIT_OK
        }
        other => {
            let Some(pack_name) = other.strip_prefix("pack:") else {
                eprintln!("stf: unknown target '{other}' (use 'bundle' or 'pack:reference')");
                return EXIT_USAGE;
            };
            if pack_name != "reference" {
                eprintln!("stf: unknown template pack '{pack_name}'");
                return EXIT_USAGE;
            }
            let pack = reference_pack();
            match generate_sources(&pack, &bundle, out) {
                Ok(files) => {
                    match format {
                        Format::Text => {
                            for f in &files {
                                println!("wrote {}", out.join(f).display());
                            }
                        }
                        Format::Report => println!(
                            "{}",
                            serde_json::json!({
                                "out": out.display().to_string(),
                                "pack": pack.name,
                                "manifest": files
                                    .iter()
                                    .map(|f| f.display().to_string())
                                    .collect::<Vec<_>>(),
                            })
                        ),
                    }
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("stf: {e}");
                    EXIT_RUNTIME
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    input: &Path,
    scenario: Option<&Path>,
    seed: u64,
    config: Option<&str>,
    max_ticks: u64,
    trace_out: Option<&Path>,
    strict: bool,
    default_backend: Option<String>,
    format: Format,
) -> i32 {
    let bundle = if input.extension().and_then(|e| e.to_str()) == Some("json") {
        let text = match std::fs::read_to_string(input) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("stf: cannot read '{}': {e}", input.display());
                return EXIT_USAGE;
            }
        };
        match Bundle::from_json(&text) {
            Ok(b) => b,
            Err(e) => {
                eprintln!("stf: {e}");
                return EXIT_RUNTIME;
            }
        }
    } else {
        match build_bundle(input, config, default_backend, format) {
            Ok(b) => b,
            Err(c) => return c,
        }
    };

    let injections = match scenario {
        None => Vec::new(),
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("stf: cannot read '{}': {e}", path.display());
                    return EXIT_USAGE;
                }
            };
            match parse_scenario(&text) {
                Ok(i) => i,
                Err(e) => {
                    eprintln!("stf: {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            }
        }
    };

    let opts = RunOptions {
        seed,
        max_ticks,
        data_root: data_root_for(input),
        injections,
    };
    let outcome = match run_bundle(&bundle, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("stf: {e}");
            return EXIT_RUNTIME;
        }
    };

    match trace_out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &outcome.trace) {
                eprintln!("stf: cannot write '{}': {e}", path.display());
                return EXIT_RUNTIME;
            }
        }
        None => print!("{}", outcome.trace),
    }

    // Post-run DA summary (stderr keeps the stdout trace machine-clean).
    if !outcome.train_reports.is_empty() {
        match format {
            Format::Text => {
                for (instance, report) in &outcome.train_reports {
                    eprintln!("da summary: instance={instance} {report}");
                }
            }
            Format::Report => {
                let reports: Vec<serde_json::Value> = outcome
                    .train_reports
                    .iter()
                    .map(|(i, r)| serde_json::json!({"instance": i, "report": r}))
                    .collect();
                eprintln!(
                    "{}",
                    serde_json::json!({"error_events": outcome.error_events, "training": reports})
                );
            }
        }
    }

    if strict && outcome.error_events > 0 {
        eprintln!(
            "stf: trace contains {} error event(s) (--strict)",
            outcome.error_events
        );
        return EXIT_RUNTIME;
    }
    EXIT_OK
}

fn cmd_synth(name: &str, seed: u64, n: usize, out: Option<&Path>) -> i32 {
    let Some(csv) = crate::corpus::generate(name, seed, n) else {
        eprintln!("stf: unknown scenario '{name}' (expected pingpong, nialm, or prices)");
        return EXIT_USAGE;
    };
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                if let Err(e) = std::fs::create_dir_all(parent) {
                    eprintln!("stf: cannot create '{}': {e}", parent.display());
                    return EXIT_RUNTIME;
                }
            }
            if let Err(e) = std::fs::write(path, csv) {
                eprintln!("stf: cannot write '{}': {e}", path.display());
                return EXIT_RUNTIME;
            }
            EXIT_OK
        }
        None => {
            print!("{csv}");
            EXIT_OK
        }
    }
}
