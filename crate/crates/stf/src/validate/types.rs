//! Static type checking of the action language (rules E009 and E012).
//!
//! Typing rules:
//! - `Timestamp` behaves as `Int` inside expressions (epoch seconds);
//! - `Int` widens implicitly to `Float` in mixed arithmetic, comparisons,
//!   and assignment; the reverse narrowing is an error;
//! - `+` on two `String`s is concatenation; all other arithmetic is
//!   numeric-only;
//! - `==`/`!=` need both sides numeric or of identical type; ordering
//!   comparisons are numeric-only;
//! - `!`, `&&`, `||` and guard/`if`/`while` conditions are `Bool`;
//! - a `da_*` keyword in a guard is E012, anywhere else in an expression
//!   it is E009.

use std::collections::HashMap;

use crate::model::*;
use crate::validate::{diag, Diagnostic, Severity};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ty {
    Int,
    Float,
    Bool,
    Str,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Int => "Int",
            Ty::Float => "Float",
            Ty::Bool => "Bool",
            Ty::Str => "String",
        }
    }
}

pub fn scalar_ty(t: ScalarType) -> Ty {
    match t {
        ScalarType::Int | ScalarType::Timestamp => Ty::Int,
        ScalarType::Float => Ty::Float,
        ScalarType::Bool => Ty::Bool,
        ScalarType::String => Ty::Str,
    }
}

pub fn literal_ty(l: &Literal) -> Ty {
    match l {
        Literal::Int(_) => Ty::Int,
        Literal::Float(_) => Ty::Float,
        Literal::Bool(_) => Ty::Bool,
        Literal::Str(_) => Ty::Str,
    }
}

/// May a value of type `from` be stored into a slot of type `to`?
pub fn assignable(from: Ty, to: Ty) -> bool {
    from == to || (from == Ty::Int && to == Ty::Float)
}

pub struct TypeChecker<'a> {
    pub thing: &'a Thing,
    pub out: &'a mut Vec<Diagnostic>,
    /// Locals currently in scope (innermost last).
    scopes: Vec<HashMap<String, Ty>>,
    /// Event parameters in scope for the current transition.
    params: HashMap<String, Ty>,
}

impl<'a> TypeChecker<'a> {
    pub fn new(thing: &'a Thing, out: &'a mut Vec<Diagnostic>) -> Self {
        TypeChecker { thing, out, scopes: Vec::new(), params: HashMap::new() }
    }

    pub fn set_event(&mut self, event: Option<&(String, String)>) {
        self.params.clear();
        if let Some((_, msg)) = event {
            if let Some(m) = self.thing.message(msg) {
                for p in &m.params {
                    self.params.insert(p.name.clone(), scalar_ty(p.ty));
                }
            }
        }
    }

    fn lookup(&self, name: &str) -> Option<Ty> {
        for scope in self.scopes.iter().rev() {
            if let Some(t) = scope.get(name) {
                return Some(*t);
            }
        }
        if let Some(t) = self.params.get(name) {
            return Some(*t);
        }
        self.thing.property(name).map(|p| scalar_ty(p.ty))
    }

    fn error(&mut self, span: Span, message: String) {
        self.out.push(diag("E009", Severity::Error, span, message));
    }

    /// Type an expression; `None` means an error was already reported.
    pub fn check_expr(&mut self, e: &Expr, in_guard: bool) -> Option<Ty> {
        match e {
            Expr::Lit { value, .. } => Some(literal_ty(value)),
            Expr::Ref { name, span } => match self.lookup(name) {
                Some(t) => Some(t),
                None => {
                    self.error(*span, format!("unknown name '{name}'"));
                    None
                }
            },
            Expr::DaAction { kind, span } => {
                if in_guard {
                    self.out.push(diag(
                        "E012",
                        Severity::Error,
                        *span,
                        format!(
                            "'{}' is an action and cannot appear in a guard; guards must be \
                             side-effect-free boolean expressions",
                            kind.keyword()
                        ),
                    ));
                } else {
                    self.error(
                        *span,
                        format!("'{}' is a statement and has no value", kind.keyword()),
                    );
                }
                None
            }
            Expr::Unary { op, operand, span } => {
                let t = self.check_expr(operand, in_guard)?;
                match op {
                    UnOp::Not if t == Ty::Bool => Some(Ty::Bool),
                    UnOp::Not => {
                        self.error(*span, format!("'!' needs a Bool operand, got {}", t.name()));
                        None
                    }
                    UnOp::Neg if t == Ty::Int || t == Ty::Float => Some(t),
                    UnOp::Neg => {
                        self.error(*span, format!("'-' needs a numeric operand, got {}", t.name()));
                        None
                    }
                }
            }
            Expr::Binary { op, lhs, rhs, span } => {
                let lt = self.check_expr(lhs, in_guard);
                let rt = self.check_expr(rhs, in_guard);
                let (lt, rt) = (lt?, rt?);
                let numeric = |t: Ty| t == Ty::Int || t == Ty::Float;
                match op {
                    BinOp::Add if lt == Ty::Str && rt == Ty::Str => Some(Ty::Str),
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                        if numeric(lt) && numeric(rt) {
                            Some(if lt == Ty::Float || rt == Ty::Float {
                                Ty::Float
                            } else {
                                Ty::Int
                            })
                        } else {
                            self.error(
                                *span,
                                format!(
                                    "operator '{}' cannot combine {} and {}",
                                    op.symbol(),
                                    lt.name(),
                                    rt.name()
                                ),
                            );
                            None
                        }
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if numeric(lt) && numeric(rt) {
                            Some(Ty::Bool)
                        } else {
                            self.error(
                                *span,
                                format!(
                                    "comparison '{}' needs numeric operands, got {} and {}",
                                    op.symbol(),
                                    lt.name(),
                                    rt.name()
                                ),
                            );
                            None
                        }
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if lt == rt || (numeric(lt) && numeric(rt)) {
                            Some(Ty::Bool)
                        } else {
                            self.error(
                                *span,
                                format!(
                                    "cannot compare {} with {} using '{}'",
                                    lt.name(),
                                    rt.name(),
                                    op.symbol()
                                ),
                            );
                            None
                        }
                    }
                    BinOp::And | BinOp::Or => {
                        if lt == Ty::Bool && rt == Ty::Bool {
                            Some(Ty::Bool)
                        } else {
                            self.error(
                                *span,
                                format!(
                                    "operator '{}' needs Bool operands, got {} and {}",
                                    op.symbol(),
                                    lt.name(),
                                    rt.name()
                                ),
                            );
                            None
                        }
                    }
                }
            }
        }
    }

    pub fn check_guard(&mut self, g: &Expr) {
        if let Some(t) = self.check_expr(g, true) {
            if t != Ty::Bool {
                self.error(g.span(), format!("guard must be Bool, got {}", t.name()));
            }
        }
    }

    pub fn check_block(&mut self, stmts: &[Stmt]) {
        self.scopes.push(HashMap::new());
        for s in stmts {
            self.check_stmt(s);
        }
        self.scopes.pop();
    }

    fn check_stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Assign { target, value, span } => {
                let vt = self.check_expr(value, false);
                match self.lookup(target) {
                    None => self.error(*span, format!("unknown assignment target '{target}'")),
                    Some(tt) => {
                        if self.params.contains_key(target)
                            && self.scopes.iter().all(|s| !s.contains_key(target))
                            && self.thing.property(target).is_none()
                        {
                            self.error(
                                *span,
                                format!("cannot assign to message parameter '{target}'"),
                            );
                        } else if let Some(vt) = vt {
                            if !assignable(vt, tt) {
                                self.error(
                                    *span,
                                    format!(
                                        "cannot assign {} to '{target}' of type {}",
                                        vt.name(),
                                        tt.name()
                                    ),
                                );
                            }
                        }
                    }
                }
            }
            Stmt::LocalDecl { name, init, .. } => {
                let t = self.check_expr(init, false).unwrap_or(Ty::Int);
                self.scopes
                    .last_mut()
                    .expect("local declared outside a block")
                    .insert(name.clone(), t);
            }
            Stmt::Send { port, message, args, span } => {
                let Some(p) = self.thing.port(port) else {
                    self.error(*span, format!("unknown port '{port}'"));
                    return;
                };
                if !p.sends.iter().any(|m| m == message) {
                    self.error(
                        *span,
                        format!("port '{port}' does not send message '{message}'"),
                    );
                }
                let Some(m) = self.thing.message(message) else {
                    // E002 already reports the undeclared message on the port
                    for a in args {
                        self.check_expr(a, false);
                    }
                    return;
                };
                if m.params.len() != args.len() {
                    self.error(
                        *span,
                        format!(
                            "message '{message}' takes {} argument(s), got {}",
                            m.params.len(),
                            args.len()
                        ),
                    );
                }
                for (i, a) in args.iter().enumerate() {
                    if let Some(at) = self.check_expr(a, false) {
                        if let Some(param) = m.params.get(i) {
                            let pt = scalar_ty(param.ty);
                            if !assignable(at, pt) {
                                self.error(
                                    a.span(),
                                    format!(
                                        "argument {} of '{message}' must be {}, got {}",
                                        i + 1,
                                        pt.name(),
                                        at.name()
                                    ),
                                );
                            }
                        }
                    }
                }
            }
            Stmt::Print { value, .. } => {
                self.check_expr(value, false);
            }
            Stmt::If { cond, then_body, else_body, .. } => {
                if let Some(t) = self.check_expr(cond, false) {
                    if t != Ty::Bool {
                        self.error(
                            cond.span(),
                            format!("'if' condition must be Bool, got {}", t.name()),
                        );
                    }
                }
                self.check_block(then_body);
                if let Some(eb) = else_body {
                    self.check_block(eb);
                }
            }
            Stmt::While { cond, body, .. } => {
                if let Some(t) = self.check_expr(cond, false) {
                    if t != Ty::Bool {
                        self.error(
                            cond.span(),
                            format!("'while' condition must be Bool, got {}", t.name()),
                        );
                    }
                }
                self.check_block(body);
            }
            Stmt::DaAction { .. } => {} // E005 handled by the rule pass
        }
    }
}
