//! Implementation of the individual diagnostic rules.

use std::collections::BTreeSet;

use mlkit::{Algorithm, TaskKind};

use crate::model::*;
use crate::validate::paths::da_path_facts;
use crate::validate::types::{assignable, literal_ty, scalar_ty, TypeChecker};
use crate::validate::{diag, reachability, DatasetProvider, Diagnostic, Severity};

/// E001: duplicate thing/configuration names.
pub fn check_duplicate_names(m: &Model, out: &mut Vec<Diagnostic>) {
    for (name, span) in
        crate::validate::duplicate_names(m.things.iter().map(|t| (t.name.as_str(), t.span)))
    {
        out.push(diag("E001", Severity::Error, span, format!("duplicate thing name '{name}'")));
    }
    for (name, span) in crate::validate::duplicate_names(
        m.configurations.iter().map(|c| (c.name.as_str(), c.span)),
    ) {
        out.push(diag(
            "E001",
            Severity::Error,
            span,
            format!("duplicate configuration name '{name}'"),
        ));
    }
}

pub fn check_thing(
    _m: &Model,
    thing: &Thing,
    datasets: &dyn DatasetProvider,
    out: &mut Vec<Diagnostic>,
) {
    // E002: port message references
    for port in &thing.ports {
        for msg in port.receives.iter().chain(&port.sends) {
            if thing.message(msg).is_none() {
                out.push(diag(
                    "E002",
                    Severity::Error,
                    port.span,
                    format!("port '{}' references undeclared message '{msg}'", port.name),
                ));
            }
        }
    }

    // property initial literal compatibility (E009)
    for p in &thing.properties {
        if let Some(init) = &p.initial {
            if !assignable(literal_ty(init), scalar_ty(p.ty)) {
                out.push(diag(
                    "E009",
                    Severity::Error,
                    p.span,
                    format!("initial value of property '{}' is not a {} literal", p.name, p.ty),
                ));
            }
        }
    }

    if let Some(sm) = &thing.behavior {
        check_statechart(thing, sm, out);
    }

    check_da_actions_without_block(thing, out); // E005

    if let Some(da) = &thing.da {
        check_da_block(thing, da, datasets, out);
    }
}

fn check_statechart(thing: &Thing, sm: &StateMachine, out: &mut Vec<Diagnostic>) {
    // E008: initial state exists; all states reachable; transition targets exist
    if sm.state(&sm.initial).is_none() {
        out.push(diag(
            "E008",
            Severity::Error,
            sm.span,
            format!("unknown initial state '{}'", sm.initial),
        ));
    }
    for state in &sm.states {
        for t in &state.transitions {
            if sm.state(&t.target).is_none() {
                out.push(diag(
                    "E008",
                    Severity::Error,
                    t.span,
                    format!("transition targets unknown state '{}'", t.target),
                ));
            }
        }
    }
    if sm.state(&sm.initial).is_some() {
        let reach = reachability(sm);
        for state in &sm.states {
            if !reach[&state.name] {
                out.push(diag(
                    "E008",
                    Severity::Error,
                    state.span,
                    format!("state '{}' is unreachable from initial state '{}'", state.name, sm.initial),
                ));
            }
        }
    }

    // E003: event triggers must be receivable on the named port
    for state in &sm.states {
        for t in &state.transitions {
            if let Some((port, msg)) = &t.event {
                match thing.port(port) {
                    None => out.push(diag(
                        "E003",
                        Severity::Error,
                        t.span,
                        format!("event references unknown port '{port}'"),
                    )),
                    Some(p) if !p.receives.iter().any(|m| m == msg) => out.push(diag(
                        "E003",
                        Severity::Error,
                        t.span,
                        format!("message '{msg}' is not receivable on port '{port}'"),
                    )),
                    _ => {}
                }
            }
        }
    }

    // E009 / E012: type checking
    let mut tc = TypeChecker::new(thing, out);
    for state in &sm.states {
        tc.set_event(None);
        tc.check_block(&state.on_entry);
        tc.check_block(&state.on_exit);
        for t in &state.transitions {
            tc.set_event(t.event.as_ref());
            if let Some(g) = &t.guard {
                tc.check_guard(g);
            }
            tc.check_block(&t.actions);
        }
    }
}

/// E005: `da_*` statements in a thing without a DA block.
fn check_da_actions_without_block(thing: &Thing, out: &mut Vec<Diagnostic>) {
    if thing.da.is_some() {
        return;
    }
    let Some(sm) = &thing.behavior else { return };
    let mut spans = Vec::new();
    for state in &sm.states {
        collect_da_stmts(&state.on_entry, &mut spans);
        collect_da_stmts(&state.on_exit, &mut spans);
        for t in &state.transitions {
            collect_da_stmts(&t.actions, &mut spans);
        }
    }
    for (kind, span) in spans {
        out.push(diag(
            "E005",
            Severity::Error,
            span,
            format!(
                "'{}' used in thing '{}' which has no data_analytics block",
                kind.keyword(),
                thing.name
            ),
        ));
    }
}

fn collect_da_stmts(stmts: &[Stmt], out: &mut Vec<(DaActionKind, Span)>) {
    for s in stmts {
        match s {
            Stmt::DaAction { kind, span } => out.push((*kind, *span)),
            Stmt::If { then_body, else_body, .. } => {
                collect_da_stmts(then_body, out);
                if let Some(eb) = else_body {
                    collect_da_stmts(eb, out);
                }
            }
            Stmt::While { body, .. } => collect_da_stmts(body, out),
            _ => {}
        }
    }
}

fn check_da_block(
    thing: &Thing,
    da: &DataAnalyticsSpec,
    datasets: &dyn DatasetProvider,
    out: &mut Vec<Diagnostic>,
) {
    // E004: features/labels must name declared properties
    let mut label_types: Vec<ScalarType> = Vec::new();
    let mut all_known = true;
    for (role, names) in [("feature", &da.features), ("label", &da.labels)] {
        for name in names {
            match thing.property(name) {
                None => {
                    all_known = false;
                    out.push(diag(
                        "E004",
                        Severity::Error,
                        da.span,
                        format!("{role} '{name}' is not a declared property of thing '{}'", thing.name),
                    ));
                }
                Some(p) if role == "label" => label_types.push(p.ty),
                Some(_) => {}
            }
        }
    }

    // E010: windowing requires sequential true
    if da.window.is_some() && da.sequential != Some(true) {
        out.push(diag(
            "E010",
            Severity::Error,
            da.span,
            "window/horizon requires 'sequential true'",
        ));
    }

    // label task kind: Bool/String labels => classification, numeric => regression
    let task = if all_known && !label_types.is_empty() {
        let is_class =
            |t: &ScalarType| matches!(t, ScalarType::Bool | ScalarType::String);
        if label_types.iter().all(is_class) {
            Some(TaskKind::Classification)
        } else if label_types.iter().all(|t| !is_class(t)) {
            Some(TaskKind::Regression)
        } else {
            out.push(diag(
                "E006",
                Severity::Error,
                da.span,
                "labels mix classification (Bool/String) and regression (numeric) types",
            ));
            None
        }
    } else {
        None
    };

    // E006 / H202: mode checks
    match &da.mode {
        DaMode::Expert { algorithm, hyperparams } => {
            match Algorithm::from_id(algorithm) {
                None => out.push(diag(
                    "E006",
                    Severity::Error,
                    da.span,
                    format!("unknown algorithm '{algorithm}'"),
                )),
                Some(alg) => {
                    if let Some(task) = task {
                        if !alg.supports(task) {
                            let need = match task {
                                TaskKind::Classification => "classification (Bool/String labels)",
                                TaskKind::Regression => "regression (numeric labels)",
                            };
                            out.push(diag(
                                "E006",
                                Severity::Error,
                                da.span,
                                format!("algorithm '{algorithm}' does not support {need}"),
                            ));
                        }
                    }
                }
            }
            if hyperparams.is_empty() {
                out.push(diag(
                    "H202",
                    Severity::Hint,
                    da.span,
                    format!(
                        "expert mode with no hyperparameters for '{algorithm}'; consider 'automl' \
                         to search algorithms and hyperparameters automatically"
                    ),
                ));
            }
        }
        DaMode::AutoMl { metric, .. } => {
            let metric_task = match metric.as_str() {
                "accuracy" | "macro_f1" => Some(TaskKind::Classification),
                "rmse" => Some(TaskKind::Regression),
                _ => {
                    out.push(diag(
                        "E006",
                        Severity::Error,
                        da.span,
                        format!("unknown metric '{metric}' (expected accuracy, macro_f1 or rmse)"),
                    ));
                    None
                }
            };
            if let (Some(mt), Some(task)) = (metric_task, task) {
                if mt != task {
                    out.push(diag(
                        "E006",
                        Severity::Error,
                        da.span,
                        format!("metric '{metric}' does not match the label task kind"),
                    ));
                }
            }
        }
    }

    // E011: pretrained schema must match
    if let Some(pre) = &da.pretrained {
        if let Some((features, labels)) = datasets.pretrained_schema(pre) {
            if features != da.features || labels != da.labels {
                out.push(diag(
                    "E011",
                    Severity::Error,
                    da.span,
                    format!(
                        "pretrained model '{pre}' schema mismatch: model has features [{}] and \
                         labels [{}]",
                        features.join(", "),
                        labels.join(", ")
                    ),
                ));
            }
        }
    }

    // H201 / H203: dataset-dependent hints
    if let Some(info) = datasets.dataset_info(&da.dataset) {
        let needed = 10 * da.features.len();
        if info.rows < needed {
            out.push(diag(
                "H201",
                Severity::Hint,
                da.span,
                format!(
                    "dataset '{}' has {} rows, fewer than 10 x {} features = {}; results may be \
                     unreliable",
                    da.dataset,
                    info.rows,
                    da.features.len(),
                    needed
                ),
            ));
        }
        if da.scaling == Some(ScalingKind::Zscore) {
            let constant: Vec<&String> = da
                .features
                .iter()
                .filter(|f| info.constant_columns.contains(f))
                .collect();
            if !constant.is_empty() {
                let names: Vec<&str> = constant.iter().map(|s| s.as_str()).collect();
                out.push(diag(
                    "H203",
                    Severity::Hint,
                    da.span,
                    format!(
                        "zscore scaling of constant column(s) {}: standard deviation is zero",
                        names.join(", ")
                    ),
                ));
            }
        }
    }

    // W101 / W103: DA lifecycle path facts
    if let Some(sm) = &thing.behavior {
        let facts = da_path_facts(sm);
        if da.pretrained.is_none() {
            for span in facts.untrained_predicts {
                out.push(diag(
                    "W101",
                    Severity::Warning,
                    span,
                    "a path from the initial state reaches this 'da_predict' without any \
                     'da_train', and no pretrained model is declared",
                ));
            }
        }
        for span in facts.unprepared_trains {
            out.push(diag(
                "W103",
                Severity::Warning,
                span,
                "a path from the initial state reaches this 'da_train' without a preceding \
                 'da_preprocess'",
            ));
        }
    }
}

/// E007: configuration/connector structural checks.
pub fn check_configurations(m: &Model, out: &mut Vec<Diagnostic>) {
    for config in &m.configurations {
        for inst in &config.instances {
            match m.thing(&inst.thing) {
                None => out.push(diag(
                    "E007",
                    Severity::Error,
                    inst.span,
                    format!("instance '{}' references undeclared thing '{}'", inst.name, inst.thing),
                )),
                Some(t) if t.is_fragment => out.push(diag(
                    "E007",
                    Severity::Error,
                    inst.span,
                    format!("instance '{}' instantiates fragment '{}'", inst.name, inst.thing),
                )),
                _ => {}
            }
        }
        for (name, span) in crate::validate::duplicate_names(
            config.instances.iter().map(|i| (i.name.as_str(), i.span)),
        ) {
            out.push(diag(
                "E007",
                Severity::Error,
                span,
                format!("duplicate instance name '{name}'"),
            ));
        }
        for conn in &config.connectors {
            let resolve = |inst_name: &str, port_name: &str| -> Option<(&Thing, &Port)> {
                let inst = config.instances.iter().find(|i| i.name == inst_name)?;
                let thing = m.thing(&inst.thing)?;
                let port = thing.port(port_name)?;
                Some((thing, port))
            };
            let a = resolve(&conn.a_instance, &conn.a_port);
            let b = resolve(&conn.b_instance, &conn.b_port);
            for (end, (inst, port)) in [
                ("left", (&conn.a_instance, &conn.a_port)),
                ("right", (&conn.b_instance, &conn.b_port)),
            ] {
                let ok = match end {
                    "left" => a.is_some(),
                    _ => b.is_some(),
                };
                if !ok {
                    out.push(diag(
                        "E007",
                        Severity::Error,
                        conn.span,
                        format!("connector {end} endpoint '{inst}.{port}' does not exist"),
                    ));
                }
            }
            if let (Some((ta, pa)), Some((tb, pb))) = (a, b) {
                check_connector_compat(ta, pa, tb, pb, conn.span, out);
                check_connector_compat(tb, pb, ta, pa, conn.span, out);
            }
        }
    }
}

/// Every message the sender's port sends must be receivable, with an
/// identical parameter signature, on the peer port.
fn check_connector_compat(
    sender_thing: &Thing,
    sender_port: &Port,
    receiver_thing: &Thing,
    receiver_port: &Port,
    span: Span,
    out: &mut Vec<Diagnostic>,
) {
    for msg in &sender_port.sends {
        if !receiver_port.receives.iter().any(|r| r == msg) {
            out.push(diag(
                "E007",
                Severity::Error,
                span,
                format!(
                    "port '{}.{}' sends '{msg}' but peer port '{}.{}' does not receive it",
                    sender_thing.name, sender_port.name, receiver_thing.name, receiver_port.name
                ),
            ));
            continue;
        }
        if let (Some(ms), Some(mr)) = (sender_thing.message(msg), receiver_thing.message(msg)) {
            let sig = |m: &Message| -> Vec<ScalarType> { m.params.iter().map(|p| p.ty).collect() };
            if sig(ms) != sig(mr) {
                out.push(diag(
                    "E007",
                    Severity::Error,
                    span,
                    format!(
                        "message '{msg}' has different parameter types on '{}' and '{}'",
                        sender_thing.name, receiver_thing.name
                    ),
                ));
            }
        }
    }
}

/// W102: a receiving port of an instantiated thing that no connector in
/// any configuration ever attaches.
pub fn check_unconnected_ports(m: &Model, out: &mut Vec<Diagnostic>) {
    if m.configurations.is_empty() {
        return;
    }
    let mut connected: BTreeSet<(String, String)> = BTreeSet::new(); // (thing, port)
    let mut instantiated: BTreeSet<&str> = BTreeSet::new();
    for config in &m.configurations {
        for inst in &config.instances {
            instantiated.insert(inst.thing.as_str());
        }
        for conn in &config.connectors {
            for (inst_name, port_name) in [
                (&conn.a_instance, &conn.a_port),
                (&conn.b_instance, &conn.b_port),
            ] {
                if let Some(inst) = config.instances.iter().find(|i| &i.name == inst_name) {
                    connected.insert((inst.thing.clone(), port_name.clone()));
                }
            }
        }
    }
    for thing in &m.things {
        if thing.is_fragment || !instantiated.contains(thing.name.as_str()) {
            continue;
        }
        for port in &thing.ports {
            if !port.receives.is_empty()
                && !connected.contains(&(thing.name.clone(), port.name.clone()))
            {
                out.push(diag(
                    "W102",
                    Severity::Warning,
                    port.span,
                    format!(
                        "receiving port '{}.{}' is never connected in any configuration; its \
                         messages can only come from scenario injections",
                        thing.name, port.name
                    ),
                ));
            }
        }
    }
}
