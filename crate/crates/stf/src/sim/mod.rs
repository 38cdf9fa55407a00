//! Deterministic tick-based simulator over compiled bundles.
//!
//! Execution model: virtual ticks with one-tick message latency. Each tick
//! (1) delivers scenario injections due this tick into mailboxes, (2) visits
//! instances in declaration order — one dequeued message per instance, first
//! matching transition in textual order fires (exit-action events, then
//! `state_exit`, transition actions, `state_enter`, entry actions); an
//! instance with an empty mailbox instead fires at most one eventless
//! transition with a true guard; unmatched messages are discarded with a
//! trace note — and (3) enqueues messages sent this tick for delivery next
//! tick. The run stops at quiescence (no queued or pending messages, no
//! remaining injections, no enabled eventless transition) or at the tick
//! limit.
//!
//! The trace is JSON Lines with alphabetical key order inside each event,
//! so identical (bundle, scenario, seed) inputs produce identical bytes.

pub mod da;
pub mod scenario;
pub mod value;

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;

use crate::compile::{Bundle, CExpr, CStmt, CValue};
use crate::model::DaActionKind;
use crate::sim::da::DaCtx;
use crate::sim::scenario::Injection;
use crate::sim::value::{self as val, Fault};

/// Guard against accidental non-termination inside one transition.
const WHILE_LIMIT: u64 = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("scenario error: {0}")]
    Scenario(String),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    /// Last tick processed before forced stop.
    pub max_ticks: u64,
    /// Root for relative dataset paths.
    pub data_root: PathBuf,
    pub injections: Vec<Injection>,
}

impl RunOptions {
    pub fn new() -> Self {
        RunOptions { seed: 0, max_ticks: 10_000, data_root: PathBuf::from("."), injections: Vec::new() }
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// JSON Lines trace, one event per line.
    pub trace: String,
    /// Training reports in occurrence order, with the instance that trained.
    pub train_reports: Vec<(String, serde_json::Value)>,
    /// Number of `error` events in the trace.
    pub error_events: usize,
}

struct Envelope {
    port: usize,
    msg: usize,
    args: Vec<CValue>,
}

struct Inst {
    name: String,
    thing: usize,
    state: usize,
    props: BTreeMap<String, CValue>,
    mailbox: VecDeque<Envelope>,
    halted: bool,
    da: Option<DaCtx>,
}

/// Local scopes plus event parameters for one firing.
#[derive(Default)]
struct Env {
    scopes: Vec<BTreeMap<String, CValue>>,
    params: BTreeMap<String, CValue>,
}

impl Env {
    fn lookup(&self, name: &str) -> Option<&CValue> {
        for s in self.scopes.iter().rev() {
            if let Some(v) = s.get(name) {
                return Some(v);
            }
        }
        self.params.get(name)
    }

    fn assign_local(&mut self, name: &str, v: CValue) -> bool {
        for s in self.scopes.iter_mut().rev() {
            if let Some(slot) = s.get_mut(name) {
                *slot = v;
                return true;
            }
        }
        false
    }
}

struct Engine<'a> {
    b: &'a Bundle,
    seed: u64,
    instances: Vec<Inst>,
    /// (instance, port) → connected peer endpoints.
    routes: BTreeMap<(usize, usize), Vec<(usize, usize)>>,
    /// Resolved injections sorted by tick.
    injections: Vec<(u64, usize, Envelope)>,
    next_injection: usize,
    /// Messages sent this tick, flushed to mailboxes at tick end.
    outgoing: Vec<(usize, Envelope)>,
    tick: u64,
    lines: String,
    train_reports: Vec<(String, serde_json::Value)>,
    error_events: usize,
}

pub fn run_bundle(bundle: &Bundle, opts: &RunOptions) -> Result<RunOutcome, SimError> {
    bundle
        .check()
        .map_err(|e| SimError::Setup(e.to_string()))?;
    let mut eng = Engine::new(bundle, opts)?;
    eng.initial_entries();
    while eng.tick <= opts.max_ticks {
        if eng.quiescent() {
            break;
        }
        eng.step();
        eng.tick += 1;
    }
    Ok(RunOutcome {
        trace: eng.lines,
        train_reports: eng.train_reports,
        error_events: eng.error_events,
    })
}

impl<'a> Engine<'a> {
    fn new(b: &'a Bundle, opts: &RunOptions) -> Result<Engine<'a>, SimError> {
        let mut instances = Vec::new();
        for ci in &b.configuration.instances {
            let thing = &b.things[ci.thing];
            let props = thing
                .properties
                .iter()
                .map(|p| (p.name.clone(), p.initial.clone()))
                .collect();
            let da = thing
                .da
                .as_ref()
                .map(|spec| {
                    let doc = spec.pretrained.as_ref().and_then(|k| b.pretrained.get(k));
                    DaCtx::new(spec, &opts.data_root, doc)
                        .map_err(|e| SimError::Setup(format!("instance '{}': {e}", ci.name)))
                })
                .transpose()?;
            instances.push(Inst {
                name: ci.name.clone(),
                thing: ci.thing,
                state: thing.machine.as_ref().map(|m| m.initial).unwrap_or(0),
                props,
                mailbox: VecDeque::new(),
                halted: false,
                da,
            });
        }

        let mut routes: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for c in &b.configuration.connectors {
            routes.entry(c.a).or_default().push(c.b);
            routes.entry(c.b).or_default().push(c.a);
        }

        let mut injections = Vec::new();
        for inj in &opts.injections {
            injections.push(resolve_injection(b, &instances, inj)?);
        }

        Ok(Engine {
            b,
            seed: opts.seed,
            instances,
            routes,
            injections,
            next_injection: 0,
            outgoing: Vec::new(),
            tick: 0,
            lines: String::new(),
            train_reports: Vec::new(),
            error_events: 0,
        })
    }

    fn emit(&mut self, kind: &str, instance: usize, extra: &[(&str, serde_json::Value)]) {
        let mut map = serde_json::Map::new();
        map.insert("tick".into(), serde_json::Value::from(self.tick));
        map.insert("kind".into(), serde_json::Value::from(kind));
        map.insert(
            "instance".into(),
            serde_json::Value::from(self.instances[instance].name.as_str()),
        );
        for (k, v) in extra {
            map.insert((*k).to_string(), v.clone());
        }
        if kind == "error" {
            self.error_events += 1;
        }
        self.lines
            .push_str(&serde_json::to_string(&serde_json::Value::Object(map)).expect("trace event"));
        self.lines.push('\n');
    }

    fn initial_entries(&mut self) {
        for i in 0..self.instances.len() {
            let Some(machine) = self.b.things[self.instances[i].thing].machine.as_ref() else {
                continue;
            };
            let state = &machine.states[self.instances[i].state];
            self.emit(
                "state_enter",
                i,
                &[("state", serde_json::Value::from(state.name.as_str()))],
            );
            let mut env = Env { scopes: vec![BTreeMap::new()], ..Default::default() };
            if let Err(Fault(msg)) = self.exec_stmts(i, &state.on_entry, &mut env) {
                self.halt(i, &msg);
            }
        }
    }

    fn quiescent(&self) -> bool {
        if !self.outgoing.is_empty() || self.next_injection < self.injections.len() {
            return false;
        }
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.halted {
                continue;
            }
            if !inst.mailbox.is_empty() {
                return false;
            }
            if self.has_enabled_eventless(i) {
                return false;
            }
        }
        true
    }

    fn has_enabled_eventless(&self, i: usize) -> bool {
        let inst = &self.instances[i];
        let Some(machine) = self.b.things[inst.thing].machine.as_ref() else {
            return false;
        };
        let env = Env::default();
        machine.states[inst.state]
            .transitions
            .iter()
            .filter(|t| t.event.is_none())
            .any(|t| match &t.guard {
                None => true,
                // An erroring guard counts as enabled so the step runs and
                // reports the fault instead of silently quiescing.
                Some(g) => self.eval(i, g, &env).map(|v| val::truthy(&v).unwrap_or(true)).unwrap_or(true),
            })
    }

    fn step(&mut self) {
        // (1) scenario injections due this tick
        while self.next_injection < self.injections.len()
            && self.injections[self.next_injection].0 == self.tick
        {
            let (_, target, env) = &self.injections[self.next_injection];
            let envelope = Envelope {
                port: env.port,
                msg: env.msg,
                args: env.args.clone(),
            };
            self.instances[*target].mailbox.push_back(envelope);
            self.next_injection += 1;
        }

        // (2) visit instances in declaration order
        for i in 0..self.instances.len() {
            if self.instances[i].halted {
                continue;
            }
            if self.b.things[self.instances[i].thing].machine.is_none() {
                // Stateless things silently drop anything addressed to them.
                self.instances[i].mailbox.clear();
                continue;
            }
            match self.instances[i].mailbox.pop_front() {
                Some(envelope) => self.dispatch(i, envelope),
                None => self.fire_eventless(i),
            }
        }

        // (3) deliveries become visible next tick
        let outgoing = std::mem::take(&mut self.outgoing);
        for (target, envelope) in outgoing {
            self.instances[target].mailbox.push_back(envelope);
        }
    }

    fn dispatch(&mut self, i: usize, envelope: Envelope) {
        let thing = &self.b.things[self.instances[i].thing];
        let machine = thing.machine.as_ref().expect("dispatch on stateful thing");
        let port = &thing.ports[envelope.port];
        let message = &thing.messages[envelope.msg];
        self.emit(
            "receive",
            i,
            &[
                ("port", serde_json::Value::from(port.name.as_str())),
                ("message", serde_json::Value::from(message.name.as_str())),
                (
                    "args",
                    serde_json::Value::Array(envelope.args.iter().map(val::to_json).collect()),
                ),
            ],
        );

        let mut env = Env::default();
        for (p, a) in message.params.iter().zip(&envelope.args) {
            env.params.insert(p.name.clone(), a.clone());
        }

        let state = &machine.states[self.instances[i].state];
        for t in &state.transitions {
            if t.event != Some((envelope.port, envelope.msg)) {
                continue;
            }
            match self.eval_guard(i, t.guard.as_ref(), &env) {
                Err(Fault(msg)) => {
                    self.halt(i, &msg);
                    return;
                }
                Ok(false) => continue,
                Ok(true) => {
                    self.fire(i, t, env);
                    return;
                }
            }
        }
        self.emit(
            "note",
            i,
            &[(
                "text",
                serde_json::Value::from(format!(
                    "message '{}' discarded: no matching transition in state '{}'",
                    message.name, state.name
                )),
            )],
        );
    }

    fn fire_eventless(&mut self, i: usize) {
        let machine = self.b.things[self.instances[i].thing]
            .machine
            .as_ref()
            .expect("eventless firing on stateful thing");
        let state = &machine.states[self.instances[i].state];
        let env = Env::default();
        for t in &state.transitions {
            if t.event.is_some() {
                continue;
            }
            match self.eval_guard(i, t.guard.as_ref(), &env) {
                Err(Fault(msg)) => {
                    self.halt(i, &msg);
                    return;
                }
                Ok(false) => continue,
                Ok(true) => {
                    self.fire(i, t, Env::default());
                    return;
                }
            }
        }
    }

    fn eval_guard(&self, i: usize, guard: Option<&CExpr>, env: &Env) -> Result<bool, Fault> {
        match guard {
            None => Ok(true),
            Some(g) => val::truthy(&self.eval(i, g, env)?),
        }
    }

    fn fire(&mut self, i: usize, t: &'a crate::compile::CTransition, mut env: Env) {
        let machine = self.b.things[self.instances[i].thing]
            .machine
            .as_ref()
            .expect("firing on stateful thing");
        let src = &machine.states[self.instances[i].state];
        let dst = &machine.states[t.target];

        let mut exit_env = Env { scopes: vec![BTreeMap::new()], ..Default::default() };
        if let Err(Fault(msg)) = self.exec_stmts(i, &src.on_exit, &mut exit_env) {
            self.halt(i, &msg);
            return;
        }
        self.emit(
            "state_exit",
            i,
            &[("state", serde_json::Value::from(src.name.as_str()))],
        );

        env.scopes.push(BTreeMap::new());
        if let Err(Fault(msg)) = self.exec_stmts(i, &t.actions, &mut env) {
            self.halt(i, &msg);
            return;
        }

        self.instances[i].state = t.target;
        self.emit(
            "state_enter",
            i,
            &[("state", serde_json::Value::from(dst.name.as_str()))],
        );
        let mut entry_env = Env { scopes: vec![BTreeMap::new()], ..Default::default() };
        if let Err(Fault(msg)) = self.exec_stmts(i, &dst.on_entry, &mut entry_env) {
            self.halt(i, &msg);
        }
    }

    fn halt(&mut self, i: usize, message: &str) {
        self.emit("error", i, &[("message", serde_json::Value::from(message))]);
        self.instances[i].halted = true;
    }

    fn eval(&self, i: usize, e: &CExpr, env: &Env) -> Result<CValue, Fault> {
        match e {
            CExpr::Lit(v) => Ok(v.clone()),
            CExpr::Name(n) => {
                if let Some(v) = env.lookup(n) {
                    return Ok(v.clone());
                }
                self.instances[i]
                    .props
                    .get(n)
                    .cloned()
                    .ok_or_else(|| Fault(format!("unknown name '{n}'")))
            }
            CExpr::Not(x) => val::not(&self.eval(i, x, env)?),
            CExpr::Neg(x) => val::neg(&self.eval(i, x, env)?),
            CExpr::Bin { op, a, b } => {
                // && and || short-circuit.
                match op {
                    crate::model::BinOp::And => {
                        if !val::truthy(&self.eval(i, a, env)?)? {
                            return Ok(CValue::Bool(false));
                        }
                        return Ok(CValue::Bool(val::truthy(&self.eval(i, b, env)?)?));
                    }
                    crate::model::BinOp::Or => {
                        if val::truthy(&self.eval(i, a, env)?)? {
                            return Ok(CValue::Bool(true));
                        }
                        return Ok(CValue::Bool(val::truthy(&self.eval(i, b, env)?)?));
                    }
                    _ => {}
                }
                val::binary(*op, &self.eval(i, a, env)?, &self.eval(i, b, env)?)
            }
        }
    }

    fn exec_stmts(&mut self, i: usize, stmts: &[CStmt], env: &mut Env) -> Result<(), Fault> {
        for s in stmts {
            self.exec_stmt(i, s, env)?;
        }
        Ok(())
    }

    fn exec_stmt(&mut self, i: usize, s: &CStmt, env: &mut Env) -> Result<(), Fault> {
        match s {
            CStmt::Assign { target, value } => {
                let v = self.eval(i, value, env)?;
                if env.assign_local(target, v.clone()) {
                    // shadowing local updated; nothing else to do
                } else {
                    let thing = &self.b.things[self.instances[i].thing];
                    let ty = thing
                        .properties
                        .iter()
                        .find(|p| p.name == *target)
                        .map(|p| p.ty)
                        .ok_or_else(|| Fault(format!("unknown assignment target '{target}'")))?;
                    let coerced = val::coerce(v.clone(), ty)?;
                    self.instances[i].props.insert(target.clone(), coerced);
                }
                self.emit(
                    "assign",
                    i,
                    &[
                        ("target", serde_json::Value::from(target.as_str())),
                        ("value", val::to_json(&v)),
                    ],
                );
                Ok(())
            }
            CStmt::Local { name, value } => {
                let v = self.eval(i, value, env)?;
                env.scopes
                    .last_mut()
                    .expect("local declared inside a block")
                    .insert(name.clone(), v);
                Ok(())
            }
            CStmt::Send { port, message, args } => {
                let vals: Vec<CValue> = args
                    .iter()
                    .map(|a| self.eval(i, a, env))
                    .collect::<Result<_, _>>()?;
                self.send(i, *port, *message, vals);
                Ok(())
            }
            CStmt::Print { value } => {
                let v = self.eval(i, value, env)?;
                self.emit("print", i, &[("text", serde_json::Value::from(val::render(&v)))]);
                Ok(())
            }
            CStmt::If { cond, then_body, else_body } => {
                let branch = if val::truthy(&self.eval(i, cond, env)?)? {
                    then_body
                } else {
                    else_body
                };
                env.scopes.push(BTreeMap::new());
                let r = self.exec_stmts(i, branch, env);
                env.scopes.pop();
                r
            }
            CStmt::While { cond, body } => {
                let mut iterations = 0u64;
                while val::truthy(&self.eval(i, cond, env)?)? {
                    iterations += 1;
                    if iterations > WHILE_LIMIT {
                        return Err(Fault(format!(
                            "while loop exceeded {WHILE_LIMIT} iterations"
                        )));
                    }
                    env.scopes.push(BTreeMap::new());
                    let r = self.exec_stmts(i, body, env);
                    env.scopes.pop();
                    r?;
                }
                Ok(())
            }
            CStmt::Da { action } => {
                self.exec_da(i, *action);
                Ok(())
            }
        }
    }

    fn send(&mut self, i: usize, port: usize, message: usize, args: Vec<CValue>) {
        let thing = &self.b.things[self.instances[i].thing];
        let port_name = thing.ports[port].name.as_str();
        let msg_name = thing.messages[message].name.as_str();
        self.emit(
            "send",
            i,
            &[
                ("port", serde_json::Value::from(port_name)),
                ("message", serde_json::Value::from(msg_name)),
                (
                    "args",
                    serde_json::Value::Array(args.iter().map(val::to_json).collect()),
                ),
            ],
        );
        let peers = self.routes.get(&(i, port)).cloned().unwrap_or_default();
        if peers.is_empty() {
            self.emit(
                "note",
                i,
                &[(
                    "text",
                    serde_json::Value::from(format!(
                        "message '{msg_name}' dropped: port '{port_name}' is not connected"
                    )),
                )],
            );
            return;
        }
        for (pi, pp) in peers {
            let peer_thing = &self.b.things[self.instances[pi].thing];
            match peer_thing.messages.iter().position(|m| m.name == msg_name) {
                Some(pm) => {
                    self.outgoing.push((
                        pi,
                        Envelope { port: pp, msg: pm, args: args.clone() },
                    ));
                }
                None => {
                    let text = format!(
                        "message '{msg_name}' dropped: peer '{}' does not declare it",
                        self.instances[pi].name
                    );
                    self.emit("note", i, &[("text", serde_json::Value::from(text))]);
                }
            }
        }
    }

    fn exec_da(&mut self, i: usize, action: DaActionKind) {
        let thing = &self.b.things[self.instances[i].thing];
        if self.instances[i].da.is_none() {
            self.emit(
                "error",
                i,
                &[(
                    "message",
                    serde_json::Value::from("da action on a thing without a data-analytics block"),
                )],
            );
            return;
        }
        match action {
            DaActionKind::Save => {
                let props = self.instances[i].props.clone();
                let result = self.instances[i].da.as_mut().unwrap().save(&props);
                match result {
                    Ok(row) => self.emit("da_save", i, &[("row", serde_json::Value::from(row))]),
                    Err(e) => self.emit("error", i, &[("message", serde_json::Value::from(e))]),
                }
            }
            DaActionKind::Preprocess => {
                let result = self.instances[i].da.as_mut().unwrap().preprocess();
                match result {
                    Ok((rows, features)) => self.emit(
                        "da_preprocess",
                        i,
                        &[
                            ("rows", serde_json::Value::from(rows)),
                            ("features", serde_json::Value::from(features)),
                        ],
                    ),
                    Err(e) => self.emit("error", i, &[("message", serde_json::Value::from(e))]),
                }
            }
            DaActionKind::Train => {
                let seed = self.seed;
                let result = self.instances[i].da.as_mut().unwrap().train(seed);
                match result {
                    Ok(report) => {
                        self.train_reports
                            .push((self.instances[i].name.clone(), report.clone()));
                        self.emit("da_train", i, &[("report", report)]);
                    }
                    Err(e) => self.emit("error", i, &[("message", serde_json::Value::from(e))]),
                }
            }
            DaActionKind::Predict => {
                let props = self.instances[i].props.clone();
                let properties = &thing.properties;
                let result = self.instances[i]
                    .da
                    .as_mut()
                    .unwrap()
                    .predict(&props, properties);
                match result {
                    Ok((inputs, outputs, assignments)) => {
                        let mut assigned = serde_json::Map::new();
                        for (label, v) in assignments {
                            assigned.insert(label.clone(), val::to_json(&v));
                            self.instances[i].props.insert(label, v);
                        }
                        self.emit(
                            "da_predict",
                            i,
                            &[
                                ("inputs", inputs),
                                ("outputs", outputs),
                                ("assigned", serde_json::Value::Object(assigned)),
                            ],
                        );
                    }
                    Err(e) => self.emit("error", i, &[("message", serde_json::Value::from(e))]),
                }
            }
        }
    }
}

fn resolve_injection(
    b: &Bundle,
    instances: &[Inst],
    inj: &Injection,
) -> Result<(u64, usize, Envelope), SimError> {
    let err = |msg: String| SimError::Scenario(msg);
    let i = instances
        .iter()
        .position(|x| x.name == inj.instance)
        .ok_or_else(|| err(format!("unknown instance '{}'", inj.instance)))?;
    let thing = &b.things[instances[i].thing];
    let port = thing
        .ports
        .iter()
        .position(|p| p.name == inj.port)
        .ok_or_else(|| err(format!("instance '{}' has no port '{}'", inj.instance, inj.port)))?;
    let msg = thing
        .messages
        .iter()
        .position(|m| m.name == inj.message)
        .ok_or_else(|| {
            err(format!(
                "thing '{}' has no message '{}'",
                thing.name, inj.message
            ))
        })?;
    let params = &thing.messages[msg].params;
    if params.len() != inj.args.len() {
        return Err(err(format!(
            "message '{}' takes {} argument(s), scenario line has {}",
            inj.message,
            params.len(),
            inj.args.len()
        )));
    }
    let args = params
        .iter()
        .zip(&inj.args)
        .map(|(p, raw)| parse_arg(raw, p.ty).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((inj.tick, i, Envelope { port, msg, args }))
}

fn parse_arg(raw: &str, ty: crate::model::ScalarType) -> Result<CValue, String> {
    use crate::model::ScalarType::*;
    match ty {
        Int | Timestamp => raw
            .parse::<i64>()
            .map(CValue::Int)
            .map_err(|_| format!("'{raw}' is not an Int")),
        Float => raw
            .parse::<f64>()
            .map(CValue::Float)
            .map_err(|_| format!("'{raw}' is not a Float")),
        Bool => match raw {
            "true" => Ok(CValue::Bool(true)),
            "false" => Ok(CValue::Bool(false)),
            _ => Err(format!("'{raw}' is not a Bool")),
        },
        String => Ok(CValue::Str(raw.to_string())),
    }
}
