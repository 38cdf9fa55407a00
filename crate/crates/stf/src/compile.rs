//! Compilation of a merged, validated model into a self-contained
//! [`Bundle`]: normalized statecharts with integer-indexed states and
//! transitions, expression trees in prefix form, a resolved configuration
//! table, and embedded pretrained models.
//!
//! The bundle is the single executable form: the interpreter path compiles
//! the AST to a bundle in memory and runs it; `generate` serializes the
//! same bundle to canonical JSON; `run` on a bundle file parses it back.
//! Byte-identical traces between the two paths follow from sharing this IR.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{self, BinOp, DaActionKind, Literal, MissingKind, ScalarType, ScalingKind};
use crate::parser::pretty_print;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CompileError {
    #[error("configuration '{0}' not found in the model")]
    UnknownConfiguration(String),
    #[error("instance '{instance}' refers to unknown thing '{thing}'")]
    UnknownThing { instance: String, thing: String },
    #[error("instance '{instance}' instantiates fragment '{thing}'")]
    FragmentInstantiated { instance: String, thing: String },
    #[error(
        "thing '{0}' has a data-analytics block but no backend annotation; \
         add @backend or pass --default-backend"
    )]
    MissingBackend(String),
    #[error("hyperparameter '{name}' of thing '{thing}' must be numeric")]
    NonNumericHyperparam { thing: String, name: String },
    #[error("connector endpoint '{instance}.{port}' cannot be resolved")]
    BadEndpoint { instance: String, port: String },
    #[error("unresolved name '{name}' in thing '{thing}'")]
    UnresolvedName { thing: String, name: String },
    #[error("cannot read pretrained model '{path}': {message}")]
    Pretrained { path: String, message: String },
    #[error("automl metric '{0}' is not recognized")]
    BadMetric(String),
    #[error("algorithm '{0}' is not recognized")]
    BadAlgorithm(String),
}

#[derive(Debug, thiserror::Error)]
pub enum BundleLoadError {
    #[error("bundle is not valid JSON: {0}")]
    Json(String),
    #[error("bundle format version {found} is not supported (this tool reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("bundle is corrupt: {0}")]
    Corrupt(String),
}

/// A runtime value. Also the literal representation inside compiled
/// expressions; timestamps are epoch-second integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl CValue {
    pub fn from_literal(l: &Literal) -> CValue {
        match l {
            Literal::Int(v) => CValue::Int(*v),
            Literal::Float(v) => CValue::Float(*v),
            Literal::Bool(v) => CValue::Bool(*v),
            Literal::Str(v) => CValue::Str(v.clone()),
        }
    }

    /// Zero value of a property type, used when no initializer is given.
    pub fn zero_of(ty: ScalarType) -> CValue {
        match ty {
            ScalarType::Int | ScalarType::Timestamp => CValue::Int(0),
            ScalarType::Float => CValue::Float(0.0),
            ScalarType::Bool => CValue::Bool(false),
            ScalarType::String => CValue::Str(String::new()),
        }
    }
}

/// Compiled expression in prefix form: the operator tag comes first, then
/// the operands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CExpr {
    Lit(CValue),
    /// Property, local, or event-parameter reference, resolved at
    /// evaluation time (innermost scope first).
    Name(String),
    Not(Box<CExpr>),
    Neg(Box<CExpr>),
    Bin { op: BinOp, a: Box<CExpr>, b: Box<CExpr> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CStmt {
    Assign { target: String, value: CExpr },
    Local { name: String, value: CExpr },
    Send { port: usize, message: usize, args: Vec<CExpr> },
    Print { value: CExpr },
    If { cond: CExpr, then_body: Vec<CStmt>, else_body: Vec<CStmt> },
    While { cond: CExpr, body: Vec<CStmt> },
    Da { action: DaActionKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CProperty {
    pub name: String,
    pub ty: ScalarType,
    pub initial: CValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CParam {
    pub name: String,
    pub ty: ScalarType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMessage {
    pub name: String,
    pub params: Vec<CParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CPort {
    pub name: String,
    /// Message indices into the thing's message table.
    pub receives: Vec<usize>,
    pub sends: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CDaMode {
    Expert { algorithm: String, hyperparams: BTreeMap<String, f64> },
    Automl { metric: String, folds: u32, budget: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CDa {
    pub dataset: String,
    pub features: Vec<String>,
    pub labels: Vec<String>,
    pub sequential: bool,
    /// `(lag window w, horizon h)`.
    pub window: Option<(u32, u32)>,
    pub scaling: ScalingKind,
    pub missing: MissingKind,
    pub mode: CDaMode,
    /// Key into the bundle's `pretrained` map.
    pub pretrained: Option<String>,
    /// Resolved target backend (from annotations or the default flag).
    pub backend: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTransition {
    pub target: usize,
    /// `(port index, message index)`; `None` for eventless transitions.
    pub event: Option<(usize, usize)>,
    pub guard: Option<CExpr>,
    pub actions: Vec<CStmt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CState {
    pub name: String,
    pub on_entry: Vec<CStmt>,
    pub on_exit: Vec<CStmt>,
    pub transitions: Vec<CTransition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMachine {
    pub initial: usize,
    pub states: Vec<CState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CThing {
    pub name: String,
    pub properties: Vec<CProperty>,
    pub messages: Vec<CMessage>,
    pub ports: Vec<CPort>,
    pub da: Option<CDa>,
    pub machine: Option<CMachine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CInstance {
    pub name: String,
    /// Index into the bundle's thing table.
    pub thing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CConnector {
    /// `(instance index, port index)` endpoints.
    pub a: (usize, usize),
    pub b: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CConfig {
    pub name: String,
    pub instances: Vec<CInstance>,
    pub connectors: Vec<CConnector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    /// SHA-256 of the canonical pretty-printed source model.
    pub model_sha256: String,
    /// Backend applied to things that declared none, when the default
    /// flag was used.
    pub default_backend: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub format_version: u32,
    pub manifest: Manifest,
    pub things: Vec<CThing>,
    pub configuration: CConfig,
    /// Embedded pretrained model documents, keyed by their declared path.
    pub pretrained: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    /// Backend to assume for DA things without a backend annotation.
    pub default_backend: Option<String>,
    /// Root for resolving relative dataset/pretrained paths at compile
    /// time (pretrained models are embedded into the bundle).
    pub data_root: Option<std::path::PathBuf>,
}

pub fn compile(
    m: &model::Model,
    config_name: &str,
    opts: &CompileOptions,
) -> Result<Bundle, CompileError> {
    let config = m
        .configurations
        .iter()
        .find(|c| c.name == config_name)
        .ok_or_else(|| CompileError::UnknownConfiguration(config_name.to_string()))?;

    // Compile every thing instantiated by the configuration, in model
    // declaration order so thing indices are stable.
    let mut used: Vec<&model::Thing> = Vec::new();
    for inst in &config.instances {
        let thing = m.thing(&inst.thing).ok_or_else(|| CompileError::UnknownThing {
            instance: inst.name.clone(),
            thing: inst.thing.clone(),
        })?;
        if thing.is_fragment {
            return Err(CompileError::FragmentInstantiated {
                instance: inst.name.clone(),
                thing: inst.thing.clone(),
            });
        }
        if !used.iter().any(|t| t.name == thing.name) {
            used.push(thing);
        }
    }
    used.sort_by_key(|t| m.things.iter().position(|x| x.name == t.name));

    let mut pretrained = BTreeMap::new();
    let things: Vec<CThing> = used
        .iter()
        .map(|t| compile_thing(t, opts, &mut pretrained))
        .collect::<Result<_, _>>()?;

    let thing_index = |name: &str| things.iter().position(|t| t.name == name);
    let instances: Vec<CInstance> = config
        .instances
        .iter()
        .map(|i| {
            Ok(CInstance {
                name: i.name.clone(),
                thing: thing_index(&i.thing).expect("instantiated thing was compiled"),
            })
        })
        .collect::<Result<_, CompileError>>()?;

    let endpoint = |inst: &str, port: &str| -> Result<(usize, usize), CompileError> {
        let bad = || CompileError::BadEndpoint { instance: inst.to_string(), port: port.to_string() };
        let ii = instances.iter().position(|i| i.name == inst).ok_or_else(bad)?;
        let t = &things[instances[ii].thing];
        let pi = t.ports.iter().position(|p| p.name == port).ok_or_else(bad)?;
        Ok((ii, pi))
    };
    let connectors: Vec<CConnector> = config
        .connectors
        .iter()
        .map(|c| {
            Ok(CConnector {
                a: endpoint(&c.a_instance, &c.a_port)?,
                b: endpoint(&c.b_instance, &c.b_port)?,
            })
        })
        .collect::<Result<_, CompileError>>()?;

    let canonical = pretty_print(m);
    let model_sha256 = hex(&Sha256::digest(canonical.as_bytes()));

    Ok(Bundle {
        format_version: BUNDLE_FORMAT_VERSION,
        manifest: Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            model_sha256,
            default_backend: opts.default_backend.clone(),
        },
        things,
        configuration: CConfig {
            name: config.name.clone(),
            instances,
            connectors,
        },
        pretrained,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn compile_thing(
    t: &model::Thing,
    opts: &CompileOptions,
    pretrained: &mut BTreeMap<String, serde_json::Value>,
) -> Result<CThing, CompileError> {
    let properties = t
        .properties
        .iter()
        .map(|p| CProperty {
            name: p.name.clone(),
            ty: p.ty,
            initial: p
                .initial
                .as_ref()
                .map(CValue::from_literal)
                .unwrap_or_else(|| CValue::zero_of(p.ty)),
        })
        .collect();
    let messages: Vec<CMessage> = t
        .messages
        .iter()
        .map(|msg| CMessage {
            name: msg.name.clone(),
            params: msg
                .params
                .iter()
                .map(|p| CParam { name: p.name.clone(), ty: p.ty })
                .collect(),
        })
        .collect();
    let msg_index = |name: &str| -> Result<usize, CompileError> {
        messages
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| CompileError::UnresolvedName {
                thing: t.name.clone(),
                name: name.to_string(),
            })
    };
    let ports: Vec<CPort> = t
        .ports
        .iter()
        .map(|p| {
            Ok(CPort {
                name: p.name.clone(),
                receives: p.receives.iter().map(|m| msg_index(m)).collect::<Result<_, _>>()?,
                sends: p.sends.iter().map(|m| msg_index(m)).collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<_, CompileError>>()?;

    let da = t
        .da
        .as_ref()
        .map(|spec| compile_da(t, spec, opts, pretrained))
        .transpose()?;

    let machine = t
        .behavior
        .as_ref()
        .map(|sm| compile_machine(t, sm, &ports))
        .transpose()?;

    Ok(CThing { name: t.name.clone(), properties, messages, ports, da, machine })
}

fn compile_da(
    t: &model::Thing,
    spec: &model::DataAnalyticsSpec,
    opts: &CompileOptions,
    pretrained: &mut BTreeMap<String, serde_json::Value>,
) -> Result<CDa, CompileError> {
    let backend = match t.backend() {
        Some(b) => b.to_string(),
        None => opts
            .default_backend
            .clone()
            .ok_or_else(|| CompileError::MissingBackend(t.name.clone()))?,
    };
    let mode = match &spec.mode {
        model::DaMode::Expert { algorithm, hyperparams } => {
            if mlkit::Algorithm::from_id(algorithm).is_none() {
                return Err(CompileError::BadAlgorithm(algorithm.clone()));
            }
            let mut hp = BTreeMap::new();
            for (name, lit) in hyperparams {
                let v = match lit {
                    Literal::Int(v) => *v as f64,
                    Literal::Float(v) => *v,
                    _ => {
                        return Err(CompileError::NonNumericHyperparam {
                            thing: t.name.clone(),
                            name: name.clone(),
                        })
                    }
                };
                hp.insert(name.clone(), v);
            }
            CDaMode::Expert { algorithm: algorithm.clone(), hyperparams: hp }
        }
        model::DaMode::AutoMl { metric, folds, budget } => {
            if mlkit::automl::Metric::parse(metric).is_none() {
                return Err(CompileError::BadMetric(metric.clone()));
            }
            CDaMode::Automl { metric: metric.clone(), folds: *folds, budget: *budget }
        }
    };
    if let Some(path) = &spec.pretrained {
        if !pretrained.contains_key(path) {
            let resolved = match &opts.data_root {
                Some(root) if Path::new(path).is_relative() => root.join(path),
                _ => Path::new(path).to_path_buf(),
            };
            let text = std::fs::read_to_string(&resolved).map_err(|e| CompileError::Pretrained {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CompileError::Pretrained {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            pretrained.insert(path.clone(), doc);
        }
    }
    Ok(CDa {
        dataset: spec.dataset.clone(),
        features: spec.features.clone(),
        labels: spec.labels.clone(),
        sequential: spec.is_sequential(),
        window: spec.window,
        scaling: spec.scaling.unwrap_or(ScalingKind::None),
        missing: spec.missing.unwrap_or(MissingKind::Drop),
        mode,
        pretrained: spec.pretrained.clone(),
        backend,
    })
}

fn compile_machine(
    t: &model::Thing,
    sm: &model::StateMachine,
    ports: &[CPort],
) -> Result<CMachine, CompileError> {
    let state_index = |name: &str| -> Result<usize, CompileError> {
        sm.states
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| CompileError::UnresolvedName {
                thing: t.name.clone(),
                name: name.to_string(),
            })
    };
    let port_index = |name: &str| -> Result<usize, CompileError> {
        ports
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| CompileError::UnresolvedName {
                thing: t.name.clone(),
                name: name.to_string(),
            })
    };
    let msg_index = |name: &str| -> Result<usize, CompileError> {
        t.messages
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| CompileError::UnresolvedName {
                thing: t.name.clone(),
                name: name.to_string(),
            })
    };

    let states = sm
        .states
        .iter()
        .map(|s| {
            let transitions = s
                .transitions
                .iter()
                .map(|tr| {
                    let event = tr
                        .event
                        .as_ref()
                        .map(|(p, msg)| Ok::<_, CompileError>((port_index(p)?, msg_index(msg)?)))
                        .transpose()?;
                    Ok(CTransition {
                        target: state_index(&tr.target)?,
                        event,
                        guard: tr.guard.as_ref().map(compile_expr),
                        actions: compile_stmts(t, &tr.actions, ports)?,
                    })
                })
                .collect::<Result<_, CompileError>>()?;
            Ok(CState {
                name: s.name.clone(),
                on_entry: compile_stmts(t, &s.on_entry, ports)?,
                on_exit: compile_stmts(t, &s.on_exit, ports)?,
                transitions,
            })
        })
        .collect::<Result<_, CompileError>>()?;
    Ok(CMachine { initial: state_index(&sm.initial)?, states })
}

fn compile_stmts(
    t: &model::Thing,
    stmts: &[model::Stmt],
    ports: &[CPort],
) -> Result<Vec<CStmt>, CompileError> {
    stmts.iter().map(|s| compile_stmt(t, s, ports)).collect()
}

fn compile_stmt(
    t: &model::Thing,
    s: &model::Stmt,
    ports: &[CPort],
) -> Result<CStmt, CompileError> {
    let unresolved = |name: &str| CompileError::UnresolvedName {
        thing: t.name.clone(),
        name: name.to_string(),
    };
    Ok(match s {
        model::Stmt::Assign { target, value, .. } => CStmt::Assign {
            target: target.clone(),
            value: compile_expr(value),
        },
        model::Stmt::LocalDecl { name, init, .. } => CStmt::Local {
            name: name.clone(),
            value: compile_expr(init),
        },
        model::Stmt::Send { port, message, args, .. } => CStmt::Send {
            port: ports
                .iter()
                .position(|p| p.name == *port)
                .ok_or_else(|| unresolved(port))?,
            message: t
                .messages
                .iter()
                .position(|m| m.name == *message)
                .ok_or_else(|| unresolved(message))?,
            args: args.iter().map(compile_expr).collect(),
        },
        model::Stmt::Print { value, .. } => CStmt::Print { value: compile_expr(value) },
        model::Stmt::If { cond, then_body, else_body, .. } => CStmt::If {
            cond: compile_expr(cond),
            then_body: compile_stmts(t, then_body, ports)?,
            else_body: match else_body {
                Some(b) => compile_stmts(t, b, ports)?,
                None => Vec::new(),
            },
        },
        model::Stmt::While { cond, body, .. } => CStmt::While {
            cond: compile_expr(cond),
            body: compile_stmts(t, body, ports)?,
        },
        model::Stmt::DaAction { kind, .. } => CStmt::Da { action: *kind },
    })
}

fn compile_expr(e: &model::Expr) -> CExpr {
    match e {
        model::Expr::Lit { value, .. } => CExpr::Lit(CValue::from_literal(value)),
        model::Expr::Ref { name, .. } => CExpr::Name(name.clone()),
        model::Expr::Unary { op, operand, .. } => {
            let inner = Box::new(compile_expr(operand));
            match op {
                model::UnOp::Not => CExpr::Not(inner),
                model::UnOp::Neg => CExpr::Neg(inner),
            }
        }
        model::Expr::Binary { op, lhs, rhs, .. } => CExpr::Bin {
            op: *op,
            a: Box::new(compile_expr(lhs)),
            b: Box::new(compile_expr(rhs)),
        },
        // Rejected by the validator (E009/E012); compiled defensively to a
        // false literal so a bundle can never contain it in live code.
        model::Expr::DaAction { .. } => CExpr::Lit(CValue::Bool(false)),
    }
}

impl Bundle {
    /// Canonical JSON serialization: pretty-printed with stable key order
    /// and exact float round-tripping, so identical inputs give identical
    /// bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Bundle, BundleLoadError> {
        // Peek at the version first so a newer bundle gets a version error
        // rather than an unknown-field parse error.
        let head: serde_json::Value =
            serde_json::from_str(text).map_err(|e| BundleLoadError::Json(e.to_string()))?;
        let found = head
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| BundleLoadError::Corrupt("missing format_version".into()))?
            as u32;
        if found != BUNDLE_FORMAT_VERSION {
            return Err(BundleLoadError::Version { found, supported: BUNDLE_FORMAT_VERSION });
        }
        let bundle: Bundle =
            serde_json::from_str(text).map_err(|e| BundleLoadError::Json(e.to_string()))?;
        bundle.check()?;
        Ok(bundle)
    }

    /// Structural integrity check: every cross-reference index must be in
    /// bounds, so a tampered bundle fails at load time instead of panicking
    /// mid-run.
    pub fn check(&self) -> Result<(), BundleLoadError> {
        let corrupt = |msg: String| Err(BundleLoadError::Corrupt(msg));
        for t in &self.things {
            for p in &t.ports {
                for &mi in p.receives.iter().chain(&p.sends) {
                    if mi >= t.messages.len() {
                        return corrupt(format!(
                            "port '{}' of thing '{}' references message index {mi} out of {}",
                            p.name,
                            t.name,
                            t.messages.len()
                        ));
                    }
                }
            }
            if let Some(m) = &t.machine {
                if m.initial >= m.states.len() {
                    return corrupt(format!(
                        "thing '{}' initial state index {} out of {}",
                        t.name,
                        m.initial,
                        m.states.len()
                    ));
                }
                for s in &m.states {
                    for tr in &s.transitions {
                        if tr.target >= m.states.len() {
                            return corrupt(format!(
                                "state '{}' of thing '{}' has transition target {} out of {}",
                                s.name,
                                t.name,
                                tr.target,
                                m.states.len()
                            ));
                        }
                        if let Some((pi, mi)) = tr.event {
                            if pi >= t.ports.len() || mi >= t.messages.len() {
                                return corrupt(format!(
                                    "transition event in state '{}' of thing '{}' is out of bounds",
                                    s.name, t.name
                                ));
                            }
                        }
                    }
                }
            }
            if let Some(da) = &t.da {
                if let Some(p) = &da.pretrained {
                    if !self.pretrained.contains_key(p) {
                        return corrupt(format!(
                            "thing '{}' references pretrained model '{p}' not embedded in the bundle",
                            t.name
                        ));
                    }
                }
            }
        }
        for i in &self.configuration.instances {
            if i.thing >= self.things.len() {
                return corrupt(format!(
                    "instance '{}' references thing index {} out of {}",
                    i.name,
                    i.thing,
                    self.things.len()
                ));
            }
        }
        for c in &self.configuration.connectors {
            for &(ii, pi) in [&c.a, &c.b] {
                let inst = self.configuration.instances.get(ii).ok_or_else(|| {
                    BundleLoadError::Corrupt(format!("connector instance index {ii} out of bounds"))
                })?;
                if pi >= self.things[inst.thing].ports.len() {
                    return corrupt(format!(
                        "connector port index {pi} out of bounds for instance '{}'",
                        inst.name
                    ));
                }
            }
        }
        Ok(())
    }
}
