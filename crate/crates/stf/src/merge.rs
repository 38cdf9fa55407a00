//! Import merging, PIM/PSM overlay refinement, and fragment flattening.
//!
//! A module's imports are flattened depth-first in declaration order; the
//! importing module's own definitions then overlay the imported ones. A
//! same-named thing in the importer *refines* the imported thing: it may
//! add annotations, properties, messages, ports, a statechart, or a DA
//! block, and may fill the DA block's backend/mode/pretrained details —
//! but it may never delete or retype an existing element. Identical
//! sibling definitions (diamond imports) are deduplicated; differing ones
//! are conflicts.
//!
//! Thing fragments are flattened last: each `includes` entry splices the
//! fragment's members in front of the including thing's own, with name
//! clashes reported as conflicts. The merged model carries no imports and
//! no includes, which makes `merge_imports` idempotent.

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};

use crate::model::*;
use crate::parser::parse;

#[derive(Debug, thiserror::Error)]
pub enum MergeError {
    #[error("cyclic import: {}", .0.join(" -> "))]
    CyclicImport(Vec<String>),
    #[error("cannot load module '{path}': {reason}")]
    Load { path: String, reason: String },
    #[error("module '{path}' has syntax errors: {first}")]
    ImportParse { path: String, first: String },
    #[error("conflicting redefinition of {kind} '{name}': {detail}")]
    Conflict { kind: &'static str, name: String, detail: String },
    #[error("thing '{thing}' includes unknown fragment '{fragment}'")]
    UnknownFragment { thing: String, fragment: String },
    #[error("thing '{thing}' includes '{fragment}' which is not a fragment")]
    NotAFragment { thing: String, fragment: String },
}

/// Supplies imported module sources.
pub trait ModuleResolver {
    /// Resolve `import_path` as referenced from module `from`; returns a
    /// canonical module id (used for cycle detection) and the source text.
    fn resolve(&self, from: &str, import_path: &str) -> Result<(String, String), String>;
}

/// Filesystem resolver: import paths are relative to the importing file.
pub struct FsResolver;

impl ModuleResolver for FsResolver {
    fn resolve(&self, from: &str, import_path: &str) -> Result<(String, String), String> {
        let base = Path::new(from).parent().unwrap_or_else(|| Path::new("."));
        let joined = base.join(import_path);
        let id = lexical_normalize(&joined);
        let text = std::fs::read_to_string(&joined).map_err(|e| e.to_string())?;
        Ok((id.display().to_string(), text))
    }
}

/// In-memory resolver for tests: module id == import path.
pub struct MapResolver(pub BTreeMap<String, String>);

impl ModuleResolver for MapResolver {
    fn resolve(&self, _from: &str, import_path: &str) -> Result<(String, String), String> {
        self.0
            .get(import_path)
            .map(|t| (import_path.to_string(), t.clone()))
            .ok_or_else(|| format!("unknown module '{import_path}'"))
    }
}

/// Normalize `.` and `..` components without touching the filesystem.
fn lexical_normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

/// Flatten all imports of `root` (whose module id is `root_id`) into a
/// single model, apply overlay refinement, and flatten fragments.
pub fn merge_imports(
    root: &Model,
    root_id: &str,
    resolver: &dyn ModuleResolver,
) -> Result<Model, MergeError> {
    let mut stack = vec![root_id.to_string()];
    let mut merged = build(root, root_id, resolver, &mut stack)?;
    flatten_fragments(&mut merged)?;
    Ok(merged)
}

fn build(
    module: &Model,
    module_id: &str,
    resolver: &dyn ModuleResolver,
    stack: &mut Vec<String>,
) -> Result<Model, MergeError> {
    let mut acc = Model::empty();
    for import in &module.imports {
        let (id, text) = resolver.resolve(module_id, &import.path).map_err(|reason| {
            MergeError::Load { path: import.path.clone(), reason }
        })?;
        if let Some(pos) = stack.iter().position(|s| *s == id) {
            let mut cycle: Vec<String> = stack[pos..].to_vec();
            cycle.push(id);
            return Err(MergeError::CyclicImport(cycle));
        }
        let (imported, diags) = parse(&text);
        let imported = match imported {
            Some(m) if diags.is_empty() => m,
            _ => {
                let first = diags
                    .first()
                    .map(|d| d.render(&id))
                    .unwrap_or_else(|| "unknown parse failure".into());
                return Err(MergeError::ImportParse { path: id, first });
            }
        };
        stack.push(id.clone());
        let sub = build(&imported, &id, resolver, stack)?;
        stack.pop();
        combine_siblings(&mut acc, sub)?;
    }
    // Overlay this module's own definitions on the *imported* base only.
    // Duplicates within a single module are preserved verbatim so the
    // validator can report them (E001).
    let imported_things = acc.things.len();
    let imported_configs = acc.configurations.len();
    for thing in &module.things {
        match acc.things[..imported_things].iter().position(|t| t.name == thing.name) {
            Some(i) => acc.things[i] = refine_thing(&acc.things[i], thing)?,
            None => acc.things.push(thing.clone()),
        }
    }
    for config in &module.configurations {
        match acc.configurations[..imported_configs]
            .iter()
            .position(|c| c.name == config.name)
        {
            Some(i) => {
                if &acc.configurations[i] != config {
                    return Err(MergeError::Conflict {
                        kind: "configuration",
                        name: config.name.clone(),
                        detail: "differing definitions across modules".into(),
                    });
                }
            }
            None => acc.configurations.push(config.clone()),
        }
    }
    Ok(acc)
}

/// Merge two independently imported models; identical duplicates collapse,
/// differing duplicates conflict.
fn combine_siblings(acc: &mut Model, other: Model) -> Result<(), MergeError> {
    for thing in other.things {
        match acc.things.iter().position(|t| t.name == thing.name) {
            Some(i) => {
                if acc.things[i] != thing {
                    return Err(MergeError::Conflict {
                        kind: "thing",
                        name: thing.name,
                        detail: "differing definitions imported from sibling modules".into(),
                    });
                }
            }
            None => acc.things.push(thing),
        }
    }
    for config in other.configurations {
        match acc.configurations.iter().position(|c| c.name == config.name) {
            Some(i) => {
                if acc.configurations[i] != config {
                    return Err(MergeError::Conflict {
                        kind: "configuration",
                        name: config.name,
                        detail: "differing definitions imported from sibling modules".into(),
                    });
                }
            }
            None => acc.configurations.push(config),
        }
    }
    Ok(())
}

/// PSM overlay: `overlay` refines `base`. Additive only.
fn refine_thing(base: &Thing, overlay: &Thing) -> Result<Thing, MergeError> {
    let mut out = base.clone();
    let conflict = |detail: String| MergeError::Conflict {
        kind: "thing",
        name: base.name.clone(),
        detail,
    };
    if overlay.is_fragment != base.is_fragment {
        return Err(conflict("overlay changes fragment-ness".into()));
    }
    for inc in &overlay.includes {
        if !out.includes.contains(inc) {
            out.includes.push(inc.clone());
        }
    }
    for a in &overlay.annotations {
        if let Some(existing) = out.annotations.iter().find(|x| x.key == a.key) {
            if existing.value != a.value {
                return Err(conflict(format!(
                    "annotation '@{}' redefined from \"{}\" to \"{}\"",
                    a.key, existing.value, a.value
                )));
            }
        } else {
            out.annotations.push(a.clone());
        }
    }
    for p in &overlay.properties {
        match out.properties.iter().find(|x| x.name == p.name) {
            Some(existing) if existing != p => {
                return Err(conflict(format!("property '{}' retyped or re-initialized", p.name)))
            }
            Some(_) => {}
            None => out.properties.push(p.clone()),
        }
    }
    for m in &overlay.messages {
        match out.messages.iter().find(|x| x.name == m.name) {
            Some(existing) if existing != m => {
                return Err(conflict(format!("message '{}' redefined with different parameters", m.name)))
            }
            Some(_) => {}
            None => out.messages.push(m.clone()),
        }
    }
    for p in &overlay.ports {
        match out.ports.iter().find(|x| x.name == p.name) {
            Some(existing) if existing != p => {
                return Err(conflict(format!("port '{}' redefined with different message sets", p.name)))
            }
            Some(_) => {}
            None => out.ports.push(p.clone()),
        }
    }
    match (&mut out.behavior, &overlay.behavior) {
        (Some(b), Some(o)) if b != o => {
            return Err(conflict("statechart redefined by overlay".into()))
        }
        (None, Some(o)) => out.behavior = Some(o.clone()),
        _ => {}
    }
    match (&mut out.da, &overlay.da) {
        (Some(base_da), Some(o)) => {
            // additive DA refinement: annotations, pretrained, mode
            if o.dataset != base_da.dataset
                || o.features != base_da.features
                || o.labels != base_da.labels
                || o.sequential != base_da.sequential
                || o.window != base_da.window
                || o.scaling != base_da.scaling
                || o.missing != base_da.missing
            {
                return Err(conflict(
                    "data_analytics overlay changes dataset/features/labels/preprocessing".into(),
                ));
            }
            base_da.mode = o.mode.clone();
            if base_da.pretrained.is_none() {
                base_da.pretrained = o.pretrained.clone();
            } else if o.pretrained.is_some() && o.pretrained != base_da.pretrained {
                return Err(conflict("data_analytics overlay changes pretrained path".into()));
            }
            for a in &o.annotations {
                if let Some(existing) = base_da.annotations.iter().find(|x| x.key == a.key) {
                    if existing.value != a.value {
                        return Err(conflict(format!(
                            "data_analytics annotation '@{}' redefined",
                            a.key
                        )));
                    }
                } else {
                    base_da.annotations.push(a.clone());
                }
            }
        }
        (None, Some(o)) => out.da = Some(o.clone()),
        _ => {}
    }
    Ok(out)
}

fn flatten_fragments(m: &mut Model) -> Result<(), MergeError> {
    let fragments: BTreeMap<String, Thing> = m
        .things
        .iter()
        .filter(|t| t.is_fragment)
        .map(|t| (t.name.clone(), t.clone()))
        .collect();
    let non_fragment: Vec<String> = m
        .things
        .iter()
        .filter(|t| !t.is_fragment)
        .map(|t| t.name.clone())
        .collect();
    for thing in &mut m.things {
        if thing.includes.is_empty() {
            continue;
        }
        let includes = std::mem::take(&mut thing.includes);
        let mut spliced_props = Vec::new();
        let mut spliced_msgs = Vec::new();
        let mut spliced_ports = Vec::new();
        for inc in &includes {
            let frag = match fragments.get(inc) {
                Some(f) => f,
                None if non_fragment.contains(inc) => {
                    return Err(MergeError::NotAFragment {
                        thing: thing.name.clone(),
                        fragment: inc.clone(),
                    })
                }
                None => {
                    return Err(MergeError::UnknownFragment {
                        thing: thing.name.clone(),
                        fragment: inc.clone(),
                    })
                }
            };
            let clash = |kind: &'static str, name: &str| MergeError::Conflict {
                kind,
                name: name.to_string(),
                detail: format!(
                    "defined both in fragment '{}' and in thing '{}' (or another fragment)",
                    inc, thing.name
                ),
            };
            for p in &frag.properties {
                if thing.property(&p.name).is_some()
                    || spliced_props.iter().any(|x: &Property| x.name == p.name)
                {
                    return Err(clash("property", &p.name));
                }
                spliced_props.push(p.clone());
            }
            for msg in &frag.messages {
                if thing.message(&msg.name).is_some()
                    || spliced_msgs.iter().any(|x: &Message| x.name == msg.name)
                {
                    return Err(clash("message", &msg.name));
                }
                spliced_msgs.push(msg.clone());
            }
            for port in &frag.ports {
                if thing.port(&port.name).is_some()
                    || spliced_ports.iter().any(|x: &Port| x.name == port.name)
                {
                    return Err(clash("port", &port.name));
                }
                spliced_ports.push(port.clone());
            }
            if frag.behavior.is_some() && thing.behavior.is_some() {
                return Err(MergeError::Conflict {
                    kind: "thing",
                    name: thing.name.clone(),
                    detail: format!("both thing and fragment '{inc}' define a statechart"),
                });
            }
            if thing.behavior.is_none() {
                thing.behavior = frag.behavior.clone();
            }
            if frag.da.is_some() && thing.da.is_some() {
                return Err(MergeError::Conflict {
                    kind: "thing",
                    name: thing.name.clone(),
                    detail: format!("both thing and fragment '{inc}' define a data_analytics block"),
                });
            }
            if thing.da.is_none() {
                thing.da = frag.da.clone();
            }
        }
        spliced_props.extend(std::mem::take(&mut thing.properties));
        thing.properties = spliced_props;
        spliced_msgs.extend(std::mem::take(&mut thing.messages));
        thing.messages = spliced_msgs;
        spliced_ports.extend(std::mem::take(&mut thing.ports));
        thing.ports = spliced_ports;
    }
    Ok(())
}

/// Every DA-enabled, non-fragment thing lacking a concrete backend.
/// An empty result means the model is a complete PSM.
pub fn platform_completeness(m: &Model) -> Vec<String> {
    m.things
        .iter()
        .filter(|t| !t.is_fragment && t.da.is_some() && t.backend().is_none())
        .map(|t| t.name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(src: &str) -> Model {
        let (m, d) = parse(src);
        assert!(d.is_empty(), "{d:?}");
        m.unwrap()
    }

    const PIM: &str = r#"thing Disagg {
        property x : Float = 0.0
        property y : Bool = false
        data_analytics { dataset "d.csv" features x labels y model knn { k = 3 } }
        statechart S init A { state A { } }
    }
    configuration C { instance d : Disagg }"#;

    #[test]
    fn no_imports_identity_modulo_flattening() {
        let m = parse_ok(PIM);
        let merged = merge_imports(&m, "root.stf", &MapResolver(BTreeMap::new())).unwrap();
        assert_eq!(merged, m);
        // idempotent
        let again = merge_imports(&merged, "root.stf", &MapResolver(BTreeMap::new())).unwrap();
        assert_eq!(again, merged);
    }

    #[test]
    fn additive_backend_overlay() {
        let resolver = MapResolver(BTreeMap::from([("pim.stf".to_string(), PIM.to_string())]));
        let psm = parse_ok(r#"import "pim.stf" thing Disagg @backend "builtin" { }"#);
        let m = parse_ok(PIM);
        assert_eq!(platform_completeness(&m), vec!["Disagg".to_string()]);
        let merged = merge_imports(&psm, "psm.stf", &resolver).unwrap();
        assert!(platform_completeness(&merged).is_empty());
        let thing = merged.thing("Disagg").unwrap();
        assert_eq!(thing.backend(), Some("builtin"));
        // all other fields identical to the PIM
        let pim_thing = m.thing("Disagg").unwrap();
        assert_eq!(thing.properties, pim_thing.properties);
        assert_eq!(thing.behavior, pim_thing.behavior);
        assert_eq!(thing.da.as_ref().unwrap().features, pim_thing.da.as_ref().unwrap().features);
        assert_eq!(merged.configurations.len(), 1);
    }

    #[test]
    fn cyclic_import_names_the_cycle() {
        let resolver = MapResolver(BTreeMap::from([
            ("a.stf".to_string(), r#"import "b.stf""#.to_string()),
            ("b.stf".to_string(), r#"import "a.stf""#.to_string()),
        ]));
        let root = parse_ok(r#"import "b.stf""#);
        let err = merge_imports(&root, "a.stf", &resolver).unwrap_err();
        match err {
            MergeError::CyclicImport(cycle) => {
                assert_eq!(cycle, vec!["a.stf", "b.stf", "a.stf"]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn retyping_property_is_a_conflict() {
        let resolver = MapResolver(BTreeMap::from([(
            "pim.stf".to_string(),
            "thing T { property x : Int = 0 }".to_string(),
        )]));
        let psm = parse_ok(r#"import "pim.stf" thing T { property x : Float = 0.0 }"#);
        let err = merge_imports(&psm, "psm.stf", &resolver).unwrap_err();
        assert!(matches!(err, MergeError::Conflict { kind: "thing", .. }), "{err}");
    }

    #[test]
    fn diamond_import_deduplicates_identical_things() {
        let base = "thing Shared { property x : Int = 1 }".to_string();
        let resolver = MapResolver(BTreeMap::from([
            ("base.stf".to_string(), base),
            ("l.stf".to_string(), r#"import "base.stf""#.to_string()),
            ("r.stf".to_string(), r#"import "base.stf""#.to_string()),
        ]));
        let root = parse_ok(r#"import "l.stf" import "r.stf""#);
        let merged = merge_imports(&root, "root.stf", &resolver).unwrap();
        assert_eq!(merged.things.len(), 1);
    }

    #[test]
    fn fragment_flattening_and_clash() {
        let src = r#"thing fragment Common {
            property shared : Int = 7
            message hello()
        }
        thing T includes Common {
            property own : Int = 1
            statechart S init A { state A { } }
        }"#;
        let m = parse_ok(src);
        let merged = merge_imports(&m, "root.stf", &MapResolver(BTreeMap::new())).unwrap();
        let t = merged.thing("T").unwrap();
        assert!(t.includes.is_empty());
        assert_eq!(t.properties.len(), 2);
        assert_eq!(t.properties[0].name, "shared"); // fragment members first
        assert_eq!(t.messages.len(), 1);

        let clash = r#"thing fragment F { property x : Int = 0 }
            thing T includes F { property x : Int = 0 }"#;
        let m = parse_ok(clash);
        let err = merge_imports(&m, "root.stf", &MapResolver(BTreeMap::new())).unwrap_err();
        assert!(matches!(err, MergeError::Conflict { kind: "property", .. }), "{err}");
    }

    #[test]
    fn overlay_monotonicity_names_superset() {
        let resolver = MapResolver(BTreeMap::from([("pim.stf".to_string(), PIM.to_string())]));
        let psm = parse_ok(
            r#"import "pim.stf"
            thing Disagg @backend "builtin" {
                property extra : Int = 0
                message poke()
            }"#,
        );
        let pim = parse_ok(PIM);
        let merged = merge_imports(&psm, "psm.stf", &resolver).unwrap();
        let before = pim.thing("Disagg").unwrap();
        let after = merged.thing("Disagg").unwrap();
        for p in &before.properties {
            assert!(after.property(&p.name).is_some());
        }
        for msg in &before.messages {
            assert!(after.message(&msg.name).is_some());
        }
        assert!(after.property("extra").is_some());
    }
}
