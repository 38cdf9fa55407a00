//! Abstract syntax tree for the modeling language.
//!
//! Every node carries a [`Span`]. `Span` compares equal to any other span,
//! so the derived `PartialEq` on AST nodes is *structural* equality that
//! ignores source locations — exactly what the parse/pretty-print
//! roundtrip contract needs.

use std::fmt;

/// Source location: 1-based line/column plus byte offsets.
///
/// Equality is intentionally trivial (all spans are equal) so that derived
/// equality on AST nodes ignores locations.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub start: usize,
    pub end: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Span {
    pub fn new(line: u32, col: u32, start: usize, end: usize) -> Self {
        Span { line, col, start, end }
    }

    /// Smallest span covering both.
    pub fn merge(self, other: Span) -> Span {
        Span {
            line: self.line.min(other.line),
            col: if other.line < self.line { other.col } else { self.col },
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarType {
    Int,
    Float,
    Bool,
    String,
    Timestamp,
}

impl ScalarType {
    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::Int => "Int",
            ScalarType::Float => "Float",
            ScalarType::Bool => "Bool",
            ScalarType::String => "String",
            ScalarType::Timestamp => "Timestamp",
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub imports: Vec<Import>,
    pub things: Vec<Thing>,
    pub configurations: Vec<Configuration>,
}

impl Model {
    pub fn empty() -> Self {
        Model { imports: Vec::new(), things: Vec::new(), configurations: Vec::new() }
    }

    pub fn thing(&self, name: &str) -> Option<&Thing> {
        self.things.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Import {
    pub path: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub key: String,
    pub value: String,
    pub span: Span,
}

/// Registry of recognized annotation keys.
pub const ANNOTATION_KEYS: [&str; 3] = ["platform", "backend", "dataset_format"];

#[derive(Debug, Clone, PartialEq)]
pub struct Thing {
    pub name: String,
    pub is_fragment: bool,
    pub includes: Vec<String>,
    pub annotations: Vec<Annotation>,
    pub properties: Vec<Property>,
    pub messages: Vec<Message>,
    pub ports: Vec<Port>,
    pub da: Option<DataAnalyticsSpec>,
    pub behavior: Option<StateMachine>,
    pub span: Span,
}

impl Thing {
    pub fn annotation(&self, key: &str) -> Option<&str> {
        self.annotations
            .iter()
            .find(|a| a.key == key)
            .map(|a| a.value.as_str())
    }

    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn message(&self, name: &str) -> Option<&Message> {
        self.messages.iter().find(|m| m.name == name)
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// Concrete backend for the DA block: the block's own `@backend`
    /// annotation wins, else a thing-level `@backend`.
    pub fn backend(&self) -> Option<&str> {
        if let Some(da) = &self.da {
            if let Some(a) = da.annotations.iter().find(|a| a.key == "backend") {
                return Some(&a.value);
            }
        }
        self.annotation("backend")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub ty: ScalarType,
    pub initial: Option<Literal>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub name: String,
    pub params: Vec<Param>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: ScalarType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub receives: Vec<String>,
    pub sends: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    None,
    Minmax,
    Zscore,
}

impl ScalingKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ScalingKind::None => "none",
            ScalingKind::Minmax => "minmax",
            ScalingKind::Zscore => "zscore",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingKind {
    Drop,
    MeanImpute,
}

impl MissingKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MissingKind::Drop => "drop",
            MissingKind::MeanImpute => "mean_impute",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DaMode {
    Expert {
        algorithm: String,
        hyperparams: Vec<(String, Literal)>,
    },
    AutoMl {
        metric: String,
        folds: u32,
        budget: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataAnalyticsSpec {
    pub dataset: String,
    pub features: Vec<String>,
    pub labels: Vec<String>,
    pub sequential: Option<bool>,
    pub window: Option<(u32, u32)>,
    pub scaling: Option<ScalingKind>,
    pub missing: Option<MissingKind>,
    pub mode: DaMode,
    pub pretrained: Option<String>,
    pub annotations: Vec<Annotation>,
    pub span: Span,
}

impl DataAnalyticsSpec {
    pub fn is_sequential(&self) -> bool {
        self.sequential.unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMachine {
    pub name: String,
    pub initial: String,
    pub states: Vec<State>,
    pub span: Span,
}

impl StateMachine {
    pub fn state(&self, name: &str) -> Option<&State> {
        self.states.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub name: String,
    pub on_entry: Vec<Stmt>,
    pub on_exit: Vec<Stmt>,
    pub transitions: Vec<Transition>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub target: String,
    /// `(port, message)` trigger; `None` means eventless.
    pub event: Option<(String, String)>,
    pub guard: Option<Expr>,
    pub actions: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DaActionKind {
    Save,
    Preprocess,
    Train,
    Predict,
}

impl DaActionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            DaActionKind::Save => "da_save",
            DaActionKind::Preprocess => "da_preprocess",
            DaActionKind::Train => "da_train",
            DaActionKind::Predict => "da_predict",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        target: String,
        value: Expr,
        span: Span,
    },
    LocalDecl {
        name: String,
        init: Expr,
        span: Span,
    },
    Send {
        port: String,
        message: String,
        args: Vec<Expr>,
        span: Span,
    },
    Print {
        value: Expr,
        span: Span,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
        span: Span,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        span: Span,
    },
    DaAction {
        kind: DaActionKind,
        span: Span,
    },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Assign { span, .. }
            | Stmt::LocalDecl { span, .. }
            | Stmt::Send { span, .. }
            | Stmt::Print { span, .. }
            | Stmt::If { span, .. }
            | Stmt::While { span, .. }
            | Stmt::DaAction { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit {
        value: Literal,
        span: Span,
    },
    /// Property, local, or message-parameter reference; resolution happens
    /// during validation/compilation.
    Ref {
        name: String,
        span: Span,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
        span: Span,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        span: Span,
    },
    /// A `da_*` keyword in expression position. Syntactically accepted
    /// (notably in guards) and rejected by the validator (E012/E009).
    DaAction {
        kind: DaActionKind,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Lit { span, .. }
            | Expr::Ref { span, .. }
            | Expr::Unary { span, .. }
            | Expr::Binary { span, .. }
            | Expr::DaAction { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub name: String,
    pub instances: Vec<Instance>,
    pub connectors: Vec<Connector>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub thing: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connector {
    pub a_instance: String,
    pub a_port: String,
    pub b_instance: String,
    pub b_port: String,
    pub span: Span,
}
