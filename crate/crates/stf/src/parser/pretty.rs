//! Canonical pretty-printer: 2-space indentation, one statement per line.
//!
//! The output is the canonical concrete syntax: `parse(pretty_print(m))`
//! is structurally equal to `m` for every parser-produced model. Floats
//! are printed with Rust's shortest-roundtrip formatting, which always
//! re-lexes as a float literal (it contains `.` or an exponent).

use std::fmt::Write;

use crate::model::*;

pub fn pretty_print(m: &Model) -> String {
    let mut out = String::new();
    let mut first = true;
    for import in &m.imports {
        writeln!(out, "import {}", quote(&import.path)).unwrap();
        first = false;
    }
    for thing in &m.things {
        if !first {
            out.push('\n');
        }
        print_thing(&mut out, thing);
        first = false;
    }
    for config in &m.configurations {
        if !first {
            out.push('\n');
        }
        print_configuration(&mut out, config);
        first = false;
    }
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            '\r' => q.push_str("\\r"),
            other => q.push(other),
        }
    }
    q.push('"');
    q
}

fn literal(l: &Literal) -> String {
    match l {
        Literal::Int(v) => format!("{v}"),
        Literal::Float(v) => format!("{v:?}"),
        Literal::Bool(v) => format!("{v}"),
        Literal::Str(s) => quote(s),
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_annotations_inline(out: &mut String, annotations: &[Annotation]) {
    for a in annotations {
        write!(out, " @{} {}", a.key, quote(&a.value)).unwrap();
    }
}

fn print_thing(out: &mut String, t: &Thing) {
    out.push_str("thing ");
    if t.is_fragment {
        out.push_str("fragment ");
    }
    out.push_str(&t.name);
    if !t.includes.is_empty() {
        write!(out, " includes {}", t.includes.join(", ")).unwrap();
    }
    print_annotations_inline(out, &t.annotations);
    out.push_str(" {\n");
    for p in &t.properties {
        indent(out, 1);
        write!(out, "property {} : {}", p.name, p.ty).unwrap();
        if let Some(init) = &p.initial {
            write!(out, " = {}", literal(init)).unwrap();
        }
        out.push('\n');
    }
    for m in &t.messages {
        indent(out, 1);
        let params: Vec<String> =
            m.params.iter().map(|p| format!("{} : {}", p.name, p.ty)).collect();
        writeln!(out, "message {}({})", m.name, params.join(", ")).unwrap();
    }
    for port in &t.ports {
        indent(out, 1);
        writeln!(out, "port {} {{", port.name).unwrap();
        if !port.receives.is_empty() {
            indent(out, 2);
            writeln!(out, "receives {}", port.receives.join(" ")).unwrap();
        }
        if !port.sends.is_empty() {
            indent(out, 2);
            writeln!(out, "sends {}", port.sends.join(" ")).unwrap();
        }
        indent(out, 1);
        out.push_str("}\n");
    }
    if let Some(da) = &t.da {
        print_da(out, da);
    }
    if let Some(sm) = &t.behavior {
        print_statechart(out, sm);
    }
    out.push_str("}\n");
}

fn print_configuration(out: &mut String, c: &Configuration) {
    writeln!(out, "configuration {} {{", c.name).unwrap();
    for i in &c.instances {
        indent(out, 1);
        writeln!(out, "instance {} : {}", i.name, i.thing).unwrap();
    }
    for k in &c.connectors {
        indent(out, 1);
        writeln!(
            out,
            "connector {}.{} <-> {}.{}",
            k.a_instance, k.a_port, k.b_instance, k.b_port
        )
        .unwrap();
    }
    out.push_str("}\n");
}

fn print_da(out: &mut String, da: &DataAnalyticsSpec) {
    indent(out, 1);
    out.push_str("data_analytics {\n");
    indent(out, 2);
    writeln!(out, "dataset {}", quote(&da.dataset)).unwrap();
    indent(out, 2);
    writeln!(out, "features {}", da.features.join(" ")).unwrap();
    indent(out, 2);
    writeln!(out, "labels {}", da.labels.join(" ")).unwrap();
    if let Some(seq) = da.sequential {
        indent(out, 2);
        writeln!(out, "sequential {seq}").unwrap();
    }
    if let Some((w, h)) = da.window {
        indent(out, 2);
        writeln!(out, "window {w} horizon {h}").unwrap();
    }
    if let Some(s) = da.scaling {
        indent(out, 2);
        writeln!(out, "scaling {}", s.keyword()).unwrap();
    }
    if let Some(mi) = da.missing {
        indent(out, 2);
        writeln!(out, "missing {}", mi.keyword()).unwrap();
    }
    match &da.mode {
        DaMode::Expert { algorithm, hyperparams } => {
            indent(out, 2);
            if hyperparams.is_empty() {
                writeln!(out, "model {algorithm} {{ }}").unwrap();
            } else {
                writeln!(out, "model {algorithm} {{").unwrap();
                for (k, v) in hyperparams {
                    indent(out, 3);
                    writeln!(out, "{k} = {}", literal(v)).unwrap();
                }
                indent(out, 2);
                out.push_str("}\n");
            }
        }
        DaMode::AutoMl { metric, folds, budget } => {
            indent(out, 2);
            match budget {
                Some(b) => {
                    writeln!(out, "automl {{ metric {metric} folds {folds} budget {b} }}").unwrap()
                }
                None => writeln!(out, "automl {{ metric {metric} folds {folds} }}").unwrap(),
            }
        }
    }
    if let Some(p) = &da.pretrained {
        indent(out, 2);
        writeln!(out, "pretrained {}", quote(p)).unwrap();
    }
    for a in &da.annotations {
        indent(out, 2);
        writeln!(out, "@{} {}", a.key, quote(&a.value)).unwrap();
    }
    indent(out, 1);
    out.push_str("}\n");
}

fn print_statechart(out: &mut String, sm: &StateMachine) {
    indent(out, 1);
    writeln!(out, "statechart {} init {} {{", sm.name, sm.initial).unwrap();
    for state in &sm.states {
        indent(out, 2);
        writeln!(out, "state {} {{", state.name).unwrap();
        if !state.on_entry.is_empty() {
            indent(out, 3);
            out.push_str("on_entry {\n");
            for s in &state.on_entry {
                print_stmt(out, s, 4);
            }
            indent(out, 3);
            out.push_str("}\n");
        }
        if !state.on_exit.is_empty() {
            indent(out, 3);
            out.push_str("on_exit {\n");
            for s in &state.on_exit {
                print_stmt(out, s, 4);
            }
            indent(out, 3);
            out.push_str("}\n");
        }
        for tr in &state.transitions {
            indent(out, 3);
            write!(out, "transition -> {}", tr.target).unwrap();
            if let Some((port, msg)) = &tr.event {
                write!(out, " event {port}.{msg}").unwrap();
            }
            if let Some(g) = &tr.guard {
                write!(out, " guard {}", expr(g)).unwrap();
            }
            if tr.actions.is_empty() {
                out.push('\n');
            } else {
                out.push_str(" {\n");
                for s in &tr.actions {
                    print_stmt(out, s, 4);
                }
                indent(out, 3);
                out.push_str("}\n");
            }
        }
        indent(out, 2);
        out.push_str("}\n");
    }
    indent(out, 1);
    out.push_str("}\n");
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match s {
        Stmt::Assign { target, value, .. } => writeln!(out, "{target} = {}", expr(value)).unwrap(),
        Stmt::LocalDecl { name, init, .. } => {
            writeln!(out, "var {name} = {}", expr(init)).unwrap()
        }
        Stmt::Send { port, message, args, .. } => {
            let args: Vec<String> = args.iter().map(expr).collect();
            writeln!(out, "{port} ! {message}({})", args.join(", ")).unwrap();
        }
        Stmt::Print { value, .. } => writeln!(out, "print({})", expr(value)).unwrap(),
        Stmt::If { cond, then_body, else_body, .. } => {
            writeln!(out, "if {} {{", expr(cond)).unwrap();
            for st in then_body {
                print_stmt(out, st, level + 1);
            }
            indent(out, level);
            match else_body {
                Some(eb) => {
                    out.push_str("} else {\n");
                    for st in eb {
                        print_stmt(out, st, level + 1);
                    }
                    indent(out, level);
                    out.push_str("}\n");
                }
                None => out.push_str("}\n"),
            }
        }
        Stmt::While { cond, body, .. } => {
            writeln!(out, "while {} {{", expr(cond)).unwrap();
            for st in body {
                print_stmt(out, st, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        Stmt::DaAction { kind, .. } => writeln!(out, "{}", kind.keyword()).unwrap(),
    }
}

/// Render an expression with the minimum parentheses needed to reparse
/// with identical structure.
pub fn expr(e: &Expr) -> String {
    render(e, 0, false)
}

fn render(e: &Expr, parent_prec: u8, is_right_operand: bool) -> String {
    match e {
        Expr::Lit { value, .. } => literal(value),
        Expr::Ref { name, .. } => name.clone(),
        Expr::DaAction { kind, .. } => kind.keyword().to_string(),
        Expr::Unary { op, operand, .. } => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            let inner = match operand.as_ref() {
                Expr::Binary { .. } => format!("({})", render(operand, 0, false)),
                _ => render(operand, u8::MAX, false),
            };
            format!("{sym}{inner}")
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            let prec = op.precedence();
            let text = format!(
                "{} {} {}",
                render(lhs, prec, false),
                op.symbol(),
                render(rhs, prec, true)
            );
            // All binary operators are parsed left-associatively, so a right
            // operand of equal precedence needs parentheses; any operand of
            // lower precedence does too.
            if prec < parent_prec || (prec == parent_prec && is_right_operand) {
                format!("({text})")
            } else {
                text
            }
        }
    }
}
