//! Template packs: text templates with `{{slot}}` placeholders filled from
//! a compiled bundle, emitting a ready-to-run source tree.
//!
//! Slots come from a fixed registry computed per bundle (see
//! [`slot_registry`]); referencing a slot outside the registry is a
//! generation error naming the slot and the template. The emitted file set
//! must exactly match the pack manifest.
//!
//! The built-in reference pack delegates execution to the bundle runner:
//! it emits the bundle itself, a launcher script, and human-readable
//! deployment notes (state tables, message signatures, DA configuration).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::compile::{Bundle, CDaMode};

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateFile {
    /// Relative output path.
    pub path: String,
    /// UTF-8 body with `{{slot}}` placeholders.
    pub body: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplatePack {
    pub name: String,
    pub files: Vec<TemplateFile>,
    /// Relative paths the pack promises to emit.
    pub manifest: Vec<String>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TemplateError {
    #[error("template '{template}' references unknown slot '{{{{{slot}}}}}'")]
    UnknownSlot { template: String, slot: String },
    #[error("template '{template}' has an unterminated '{{{{' placeholder")]
    Unterminated { template: String },
    #[error("pack '{pack}' manifest mismatch: manifest lists {manifest:?} but templates emit {emitted:?}")]
    ManifestMismatch { pack: String, manifest: Vec<String>, emitted: Vec<String> },
    #[error("cannot write '{path}': {message}")]
    Io { path: String, message: String },
}

/// All slots available to templates, computed from one bundle.
pub fn slot_registry(bundle: &Bundle) -> BTreeMap<String, String> {
    let mut slots = BTreeMap::new();
    slots.insert("bundle_json".into(), bundle.to_json());
    slots.insert("config_name".into(), bundle.configuration.name.clone());
    slots.insert("tool_version".into(), bundle.manifest.tool_version.clone());
    slots.insert("model_sha256".into(), bundle.manifest.model_sha256.clone());
    slots.insert(
        "default_backend".into(),
        bundle.manifest.default_backend.clone().unwrap_or_default(),
    );

    let mut instances = String::new();
    for i in &bundle.configuration.instances {
        writeln!(instances, "{} : {}", i.name, bundle.things[i.thing].name).unwrap();
    }
    slots.insert("instance_table".into(), instances);

    let mut connectors = String::new();
    for c in &bundle.configuration.connectors {
        let end = |(ii, pi): (usize, usize)| {
            let inst = &bundle.configuration.instances[ii];
            format!("{}.{}", inst.name, bundle.things[inst.thing].ports[pi].name)
        };
        writeln!(connectors, "{} <-> {}", end(c.a), end(c.b)).unwrap();
    }
    slots.insert("connector_table".into(), connectors);

    let mut messages = String::new();
    let mut states = String::new();
    let mut da = String::new();
    for t in &bundle.things {
        for m in &t.messages {
            let params: Vec<String> = m
                .params
                .iter()
                .map(|p| format!("{} : {}", p.name, p.ty.keyword()))
                .collect();
            writeln!(messages, "{}::{}({})", t.name, m.name, params.join(", ")).unwrap();
        }
        if let Some(machine) = &t.machine {
            writeln!(states, "{} (initial state {}):", t.name, machine.initial).unwrap();
            for (si, s) in machine.states.iter().enumerate() {
                writeln!(states, "  [{si}] {}", s.name).unwrap();
                for tr in &s.transitions {
                    let ev = match tr.event {
                        Some((pi, mi)) => {
                            format!("on {}.{}", t.ports[pi].name, t.messages[mi].name)
                        }
                        None => "eventless".to_string(),
                    };
                    let guard = if tr.guard.is_some() { " [guarded]" } else { "" };
                    writeln!(states, "    -> [{}] {ev}{guard}", tr.target).unwrap();
                }
            }
        }
        if let Some(spec) = &t.da {
            let mode = match &spec.mode {
                CDaMode::Expert { algorithm, .. } => format!("expert:{algorithm}"),
                CDaMode::Automl { metric, folds, budget } => format!(
                    "automl:{metric} folds={folds} budget={}",
                    budget.unwrap_or(24)
                ),
            };
            writeln!(
                da,
                "{}: dataset={} features={} labels={} mode={} backend={}",
                t.name,
                spec.dataset,
                spec.features.join(","),
                spec.labels.join(","),
                mode,
                spec.backend
            )
            .unwrap();
        }
    }
    slots.insert("message_enums".into(), messages);
    slots.insert("state_tables".into(), states);
    slots.insert("da_constants".into(), da);
    slots
}

/// Substitute `{{slot}}` placeholders in one template body.
pub fn substitute(
    template_path: &str,
    body: &str,
    slots: &BTreeMap<String, String>,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| TemplateError::Unterminated {
            template: template_path.to_string(),
        })?;
        let slot = after[..end].trim();
        match slots.get(slot) {
            Some(v) => out.push_str(v),
            None => {
                return Err(TemplateError::UnknownSlot {
                    template: template_path.to_string(),
                    slot: slot.to_string(),
                })
            }
        }
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Render a pack against a bundle without touching the filesystem.
pub fn render_pack(
    pack: &TemplatePack,
    bundle: &Bundle,
) -> Result<Vec<(String, String)>, TemplateError> {
    let slots = slot_registry(bundle);
    let rendered: Vec<(String, String)> = pack
        .files
        .iter()
        .map(|f| Ok((f.path.clone(), substitute(&f.path, &f.body, &slots)?)))
        .collect::<Result<_, TemplateError>>()?;
    let emitted: Vec<String> = rendered.iter().map(|(p, _)| p.clone()).collect();
    let mut manifest_sorted = pack.manifest.clone();
    let mut emitted_sorted = emitted.clone();
    manifest_sorted.sort();
    emitted_sorted.sort();
    if manifest_sorted != emitted_sorted {
        return Err(TemplateError::ManifestMismatch {
            pack: pack.name.clone(),
            manifest: pack.manifest.clone(),
            emitted,
        });
    }
    Ok(rendered)
}

/// Render a pack and write the tree under `out_dir`. Returns the emitted
/// relative paths in manifest order.
pub fn generate_sources(
    pack: &TemplatePack,
    bundle: &Bundle,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, TemplateError> {
    let rendered = render_pack(pack, bundle)?;
    let mut written = Vec::new();
    for (rel, text) in rendered {
        let target = out_dir.join(&rel);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent).map_err(|e| TemplateError::Io {
                path: parent.display().to_string(),
                message: e.to_string(),
            })?;
        }
        std::fs::write(&target, text).map_err(|e| TemplateError::Io {
            path: target.display().to_string(),
            message: e.to_string(),
        })?;
        written.push(PathBuf::from(rel));
    }
    Ok(written)
}

/// The built-in reference pack: a deployable tree whose program is the
/// bundle itself plus a launcher that delegates to `stf run`.
pub fn reference_pack() -> TemplatePack {
    let files = vec![
        TemplateFile {
            path: "bundle.json".into(),
            body: "{{bundle_json}}".into(),
        },
        TemplateFile {
            path: "run.sh".into(),
            body: "#!/bin/sh\n\
                   # Deployment launcher for configuration '{{config_name}}'\n\
                   # (generated by stf {{tool_version}}, model {{model_sha256}})\n\
                   # Usage: ./run.sh <scenario-file> [seed]\n\
                   exec stf run \"$(dirname \"$0\")/bundle.json\" --scenario \"$1\" --seed \"${2:-0}\"\n"
                .into(),
        },
        TemplateFile {
            path: "DEPLOYMENT.md".into(),
            body: "# Deployment: {{config_name}}\n\n\
                   Generated by stf {{tool_version}}; source model sha256 `{{model_sha256}}`.\n\n\
                   ## Instances\n\n```\n{{instance_table}}```\n\n\
                   ## Connectors\n\n```\n{{connector_table}}```\n\n\
                   ## Messages\n\n```\n{{message_enums}}```\n\n\
                   ## State tables\n\n```\n{{state_tables}}```\n\n\
                   ## Data analytics\n\n```\n{{da_constants}}```\n"
                .into(),
        },
    ];
    let manifest = files.iter().map(|f| f.path.clone()).collect();
    TemplatePack { name: "reference".into(), files, manifest }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, CompileOptions};
    use crate::parser::parse;

    const SRC: &str = "thing T { message m(x : Int) port p { receives m } \
        statechart S init A { state A { transition -> A event p.m } } } \
        configuration C { instance t : T }";

    fn bundle(src: &str) -> Bundle {
        let (m, d) = parse(src);
        assert!(d.is_empty(), "{d:?}");
        compile(&m.unwrap(), "C", &CompileOptions::default()).unwrap()
    }

    #[test]
    fn reference_pack_emits_exactly_its_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let pack = reference_pack();
        let written = generate_sources(&pack, &bundle(SRC), dir.path()).unwrap();
        let names: Vec<String> = written
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, pack.manifest);
        for p in &pack.manifest {
            assert!(dir.path().join(p).exists(), "{p} missing");
        }
        let b = std::fs::read_to_string(dir.path().join("bundle.json")).unwrap();
        assert_eq!(b, bundle(SRC).to_json());
    }

    #[test]
    fn unknown_slot_names_slot_and_template() {
        let pack = TemplatePack {
            name: "broken".into(),
            files: vec![TemplateFile {
                path: "a.txt".into(),
                body: "hello {{no_such_slot}}".into(),
            }],
            manifest: vec!["a.txt".into()],
        };
        let err = render_pack(&pack, &bundle(SRC)).unwrap_err();
        assert_eq!(
            err,
            TemplateError::UnknownSlot { template: "a.txt".into(), slot: "no_such_slot".into() }
        );
    }

    #[test]
    fn manifest_mismatch_detected() {
        let mut pack = reference_pack();
        pack.manifest.push("extra.txt".into());
        assert!(matches!(
            render_pack(&pack, &bundle(SRC)),
            Err(TemplateError::ManifestMismatch { .. })
        ));
    }

    #[test]
    fn regeneration_is_idempotent_and_whitespace_insensitive() {
        let a = render_pack(&reference_pack(), &bundle(SRC)).unwrap();
        let b = render_pack(&reference_pack(), &bundle(SRC)).unwrap();
        assert_eq!(a, b);
        // a whitespace-only model edit canonicalizes to identical output
        let spaced = SRC.replace("{ instance", "{\n       instance");
        let c = render_pack(&reference_pack(), &bundle(&spaced)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn state_tables_render_indices_and_events() {
        let slots = slot_registry(&bundle(SRC));
        let tables = &slots["state_tables"];
        assert!(tables.contains("[0] A"));
        assert!(tables.contains("-> [0] on p.m"));
    }
}
