//! Hand-written recursive-descent parser with error recovery.
//!
//! Grammar notes relative to the language reference in `docs/`:
//! - the statechart is optional so that PSM overlay things can have empty
//!   bodies;
//! - `da_*` keywords are accepted in expression position (guards); the
//!   validator rejects them there (rule E012);
//! - a leading `-` directly before a numeric literal folds into a negative
//!   literal, keeping pretty-printed negative numbers roundtrippable.
//!
//! Recovery: after a syntax error the parser skips to the next top-level
//! `import` / `thing` / `configuration` keyword, so sibling definitions
//! survive.

pub mod lexer;
pub mod pretty;

use crate::model::*;
use lexer::{lex, Token, TokenKind};

pub use pretty::pretty_print;

/// A parse-time finding; severity is always "error".
#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostic {
    pub message: String,
    pub span: Span,
    /// Human-readable description of what was expected, when known.
    pub expected: Option<String>,
}

impl ParseDiagnostic {
    pub fn render(&self, file: &str) -> String {
        let hint = match &self.expected {
            Some(e) => format!(" (expected {e})"),
            None => String::new(),
        };
        format!(
            "{file}:{}:{}: error[parse]: {}{hint}",
            self.span.line, self.span.col, self.message
        )
    }
}

/// Parse a complete source file.
///
/// Returns the (possibly partial) model and all diagnostics. `None` is
/// returned only when the input contained material but nothing could be
/// salvaged; in that case at least one diagnostic is present.
pub fn parse(text: &str) -> (Option<Model>, Vec<ParseDiagnostic>) {
    let (tokens, lex_errors) = lex(text);
    let mut diagnostics: Vec<ParseDiagnostic> = lex_errors
        .into_iter()
        .map(|e| ParseDiagnostic { message: e.message, span: e.span, expected: None })
        .collect();
    let mut p = Parser { tokens, pos: 0, diagnostics: Vec::new() };
    let model = p.parse_model();
    diagnostics.extend(p.diagnostics);
    diagnostics.sort_by_key(|d| d.span.start);
    let empty_input = text.trim().is_empty();
    if !diagnostics.is_empty()
        && !empty_input
        && model.imports.is_empty()
        && model.things.is_empty()
        && model.configurations.is_empty()
    {
        (None, diagnostics)
    } else {
        (Some(model), diagnostics)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diagnostics: Vec<ParseDiagnostic>,
}

/// Internal error: a diagnostic was already recorded; unwind to a recovery
/// point.
struct Bail;

type PResult<T> = Result<T, Bail>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek_kind(), TokenKind::Keyword(k) if *k == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == kind {
            self.next();
            true
        } else {
            false
        }
    }

    fn error_here(&mut self, message: impl Into<String>, expected: Option<String>) -> Bail {
        let span = self.peek().span;
        self.diagnostics.push(ParseDiagnostic { message: message.into(), span, expected });
        Bail
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Token> {
        if self.peek_kind() == &kind {
            Ok(self.next())
        } else {
            let found = self.peek_kind().describe();
            Err(self.error_here(format!("unexpected {found}"), Some(what.to_string())))
        }
    }

    fn expect_keyword(&mut self, kw: &'static str) -> PResult<Token> {
        self.expect(TokenKind::Keyword(kw), &format!("'{kw}'"))
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek_kind().clone() {
            TokenKind::Ident(name) => {
                let t = self.next();
                Ok((name, t.span))
            }
            other => {
                let found = other.describe();
                Err(self.error_here(format!("unexpected {found}"), Some(what.to_string())))
            }
        }
    }

    fn expect_string(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek_kind().clone() {
            TokenKind::Str(s) => {
                let t = self.next();
                Ok((s, t.span))
            }
            other => {
                let found = other.describe();
                Err(self.error_here(format!("unexpected {found}"), Some(what.to_string())))
            }
        }
    }

    fn expect_int(&mut self, what: &str) -> PResult<(i64, Span)> {
        match self.peek_kind().clone() {
            TokenKind::Int(v) => {
                let t = self.next();
                Ok((v, t.span))
            }
            other => {
                let found = other.describe();
                Err(self.error_here(format!("unexpected {found}"), Some(what.to_string())))
            }
        }
    }

    /// Skip to the next top-level recovery point.
    fn recover_to_top_level(&mut self) {
        loop {
            match self.peek_kind() {
                TokenKind::Eof => return,
                TokenKind::Keyword("thing")
                | TokenKind::Keyword("configuration")
                | TokenKind::Keyword("import") => return,
                _ => {
                    self.next();
                }
            }
        }
    }

    fn parse_model(&mut self) -> Model {
        let mut model = Model::empty();
        loop {
            match self.peek_kind() {
                TokenKind::Eof => break,
                TokenKind::Keyword("import") => match self.parse_import() {
                    Ok(i) => model.imports.push(i),
                    Err(Bail) => {
                        self.next_if_stuck();
                        self.recover_to_top_level();
                    }
                },
                TokenKind::Keyword("thing") => match self.parse_thing() {
                    Ok(t) => model.things.push(t),
                    Err(Bail) => {
                        self.next_if_stuck();
                        self.recover_to_top_level();
                    }
                },
                TokenKind::Keyword("configuration") => match self.parse_configuration() {
                    Ok(c) => model.configurations.push(c),
                    Err(Bail) => {
                        self.next_if_stuck();
                        self.recover_to_top_level();
                    }
                },
                other => {
                    let found = other.describe();
                    let _ = self.error_here(
                        format!("unexpected {found} at top level"),
                        Some("'import', 'thing' or 'configuration'".to_string()),
                    );
                    self.next();
                    self.recover_to_top_level();
                }
            }
        }
        model
    }

    /// After a Bail the position may still be on the offending token (e.g.
    /// `thing` seen where a member was expected); step over it so recovery
    /// cannot loop. Recovery keywords themselves are fine to stand on.
    fn next_if_stuck(&mut self) {
        if !matches!(
            self.peek_kind(),
            TokenKind::Keyword("thing")
                | TokenKind::Keyword("configuration")
                | TokenKind::Keyword("import")
                | TokenKind::Eof
        ) {
            self.next();
        }
    }

    fn parse_import(&mut self) -> PResult<Import> {
        let kw = self.expect_keyword("import")?;
        let (path, pspan) = self.expect_string("module path string")?;
        Ok(Import { path, span: kw.span.merge(pspan) })
    }

    fn parse_annotations(&mut self) -> PResult<Vec<Annotation>> {
        let mut out = Vec::new();
        while self.peek_kind() == &TokenKind::At {
            let at = self.next();
            let (key, _) = self.expect_ident("annotation key")?;
            let (value, vspan) = self.expect_string("annotation value string")?;
            out.push(Annotation { key, value, span: at.span.merge(vspan) });
        }
        Ok(out)
    }

    fn parse_thing(&mut self) -> PResult<Thing> {
        let kw = self.expect_keyword("thing")?;
        let is_fragment = self.eat_keyword("fragment");
        let (name, _) = self.expect_ident("thing name")?;
        let mut includes = Vec::new();
        if self.eat_keyword("includes") {
            loop {
                let (inc, _) = self.expect_ident("included fragment name")?;
                includes.push(inc);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let annotations = self.parse_annotations()?;
        self.expect(TokenKind::LBrace, "'{'")?;

        let mut thing = Thing {
            name,
            is_fragment,
            includes,
            annotations,
            properties: Vec::new(),
            messages: Vec::new(),
            ports: Vec::new(),
            da: None,
            behavior: None,
            span: kw.span,
        };
        loop {
            match self.peek_kind() {
                TokenKind::RBrace => {
                    let close = self.next();
                    thing.span = kw.span.merge(close.span);
                    return Ok(thing);
                }
                TokenKind::Keyword("property") => thing.properties.push(self.parse_property()?),
                TokenKind::Keyword("message") => thing.messages.push(self.parse_message()?),
                TokenKind::Keyword("port") => thing.ports.push(self.parse_port()?),
                TokenKind::Keyword("data_analytics") => {
                    let da = self.parse_da_block()?;
                    if thing.da.is_some() {
                        let span = da.span;
                        self.diagnostics.push(ParseDiagnostic {
                            message: "a thing may declare at most one data_analytics block".into(),
                            span,
                            expected: None,
                        });
                    } else {
                        thing.da = Some(da);
                    }
                }
                TokenKind::Keyword("statechart") => {
                    let sm = self.parse_statechart()?;
                    if thing.behavior.is_some() {
                        let span = sm.span;
                        self.diagnostics.push(ParseDiagnostic {
                            message: "a thing may declare at most one statechart".into(),
                            span,
                            expected: None,
                        });
                    } else {
                        thing.behavior = Some(sm);
                    }
                }
                other => {
                    let found = other.describe();
                    return Err(self.error_here(
                        format!("unexpected {found} in thing body"),
                        Some(
                            "'property', 'message', 'port', 'data_analytics', 'statechart' or '}'"
                                .to_string(),
                        ),
                    ));
                }
            }
        }
    }

    fn parse_type(&mut self) -> PResult<ScalarType> {
        let ty = match self.peek_kind() {
            TokenKind::Keyword("Int") => ScalarType::Int,
            TokenKind::Keyword("Float") => ScalarType::Float,
            TokenKind::Keyword("Bool") => ScalarType::Bool,
            TokenKind::Keyword("String") => ScalarType::String,
            TokenKind::Keyword("Timestamp") => ScalarType::Timestamp,
            other => {
                let found = other.describe();
                return Err(self.error_here(
                    format!("unexpected {found}"),
                    Some("a type: 'Int', 'Float', 'Bool', 'String' or 'Timestamp'".to_string()),
                ));
            }
        };
        self.next();
        Ok(ty)
    }

    fn parse_literal(&mut self) -> PResult<(Literal, Span)> {
        let negative = if self.peek_kind() == &TokenKind::Minus {
            Some(self.next().span)
        } else {
            None
        };
        let tok = self.next();
        let lit = match (&tok.kind, negative.is_some()) {
            (TokenKind::Int(v), false) => Literal::Int(*v),
            (TokenKind::Int(v), true) => Literal::Int(-*v),
            (TokenKind::Float(v), false) => Literal::Float(*v),
            (TokenKind::Float(v), true) => Literal::Float(-*v),
            (TokenKind::Str(s), false) => Literal::Str(s.clone()),
            (TokenKind::Keyword("true"), false) => Literal::Bool(true),
            (TokenKind::Keyword("false"), false) => Literal::Bool(false),
            (other, _) => {
                let found = other.describe();
                // step back so the caller's recovery sees the token
                self.pos = self.pos.saturating_sub(1);
                return Err(self.error_here(format!("unexpected {found}"), Some("a literal".into())));
            }
        };
        let span = match negative {
            Some(n) => n.merge(tok.span),
            None => tok.span,
        };
        Ok((lit, span))
    }

    fn parse_property(&mut self) -> PResult<Property> {
        let kw = self.expect_keyword("property")?;
        let (name, _) = self.expect_ident("property name")?;
        self.expect(TokenKind::Colon, "':'")?;
        let ty = self.parse_type()?;
        let mut span = kw.span;
        let initial = if self.eat(&TokenKind::Assign) {
            let (lit, lspan) = self.parse_literal()?;
            span = span.merge(lspan);
            Some(lit)
        } else {
            None
        };
        Ok(Property { name, ty, initial, span })
    }

    fn parse_message(&mut self) -> PResult<Message> {
        let kw = self.expect_keyword("message")?;
        let (name, _) = self.expect_ident("message name")?;
        self.expect(TokenKind::LParen, "'('")?;
        let mut params = Vec::new();
        if self.peek_kind() != &TokenKind::RParen {
            loop {
                let (pname, pspan) = self.expect_ident("parameter name")?;
                self.expect(TokenKind::Colon, "':'")?;
                let ty = self.parse_type()?;
                params.push(Param { name: pname, ty, span: pspan });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let close = self.expect(TokenKind::RParen, "')'")?;
        Ok(Message { name, params, span: kw.span.merge(close.span) })
    }

    fn parse_port(&mut self) -> PResult<Port> {
        let kw = self.expect_keyword("port")?;
        let (name, _) = self.expect_ident("port name")?;
        self.expect(TokenKind::LBrace, "'{'")?;
        let mut receives = Vec::new();
        let mut sends = Vec::new();
        if self.eat_keyword("receives") {
            while let TokenKind::Ident(_) = self.peek_kind() {
                let (m, _) = self.expect_ident("message name")?;
                receives.push(m);
            }
        }
        if self.eat_keyword("sends") {
            while let TokenKind::Ident(_) = self.peek_kind() {
                let (m, _) = self.expect_ident("message name")?;
                sends.push(m);
            }
        }
        let close = self.expect(TokenKind::RBrace, "'}'")?;
        Ok(Port { name, receives, sends, span: kw.span.merge(close.span) })
    }

    fn parse_da_block(&mut self) -> PResult<DataAnalyticsSpec> {
        let kw = self.expect_keyword("data_analytics")?;
        self.expect(TokenKind::LBrace, "'{'")?;
        self.expect_keyword("dataset")?;
        let (dataset, _) = self.expect_string("dataset path string")?;

        self.expect_keyword("features")?;
        let mut features = Vec::new();
        while let TokenKind::Ident(_) = self.peek_kind() {
            let (f, _) = self.expect_ident("feature property name")?;
            features.push(f);
        }
        if features.is_empty() {
            return Err(self.error_here(
                "expected at least one feature property name",
                Some("an identifier".into()),
            ));
        }
        self.expect_keyword("labels")?;
        let mut labels = Vec::new();
        while let TokenKind::Ident(_) = self.peek_kind() {
            let (l, _) = self.expect_ident("label property name")?;
            labels.push(l);
        }
        if labels.is_empty() {
            return Err(self.error_here(
                "expected at least one label property name",
                Some("an identifier".into()),
            ));
        }

        let mut sequential = None;
        if self.eat_keyword("sequential") {
            sequential = Some(if self.eat_keyword("true") {
                true
            } else if self.eat_keyword("false") {
                false
            } else {
                return Err(
                    self.error_here("expected 'true' or 'false'", Some("'true' or 'false'".into()))
                );
            });
        }
        let mut window = None;
        if self.eat_keyword("window") {
            let (w, wspan) = self.expect_int("window size (lag) integer")?;
            self.expect_keyword("horizon")?;
            let (h, hspan) = self.expect_int("horizon integer")?;
            if w <= 0 || h <= 0 {
                let span = wspan.merge(hspan);
                self.diagnostics.push(ParseDiagnostic {
                    message: "window and horizon must be positive".into(),
                    span,
                    expected: None,
                });
                return Err(Bail);
            }
            window = Some((w as u32, h as u32));
        }
        let mut scaling = None;
        if self.eat_keyword("scaling") {
            scaling = Some(if self.eat_keyword("none") {
                ScalingKind::None
            } else if self.eat_keyword("minmax") {
                ScalingKind::Minmax
            } else if self.eat_keyword("zscore") {
                ScalingKind::Zscore
            } else {
                return Err(self.error_here(
                    "expected a scaling kind",
                    Some("'none', 'minmax' or 'zscore'".into()),
                ));
            });
        }
        let mut missing = None;
        if self.eat_keyword("missing") {
            missing = Some(if self.eat_keyword("drop") {
                MissingKind::Drop
            } else if self.eat_keyword("mean_impute") {
                MissingKind::MeanImpute
            } else {
                return Err(self.error_here(
                    "expected a missing-value policy",
                    Some("'drop' or 'mean_impute'".into()),
                ));
            });
        }

        let mode = if self.eat_keyword("model") {
            let (algorithm, _) = self.expect_ident("algorithm name")?;
            self.expect(TokenKind::LBrace, "'{'")?;
            let mut hyperparams = Vec::new();
            while let TokenKind::Ident(_) = self.peek_kind() {
                let (k, _) = self.expect_ident("hyperparameter name")?;
                self.expect(TokenKind::Assign, "'='")?;
                let (v, _) = self.parse_literal()?;
                hyperparams.push((k, v));
            }
            self.expect(TokenKind::RBrace, "'}'")?;
            DaMode::Expert { algorithm, hyperparams }
        } else if self.eat_keyword("automl") {
            self.expect(TokenKind::LBrace, "'{'")?;
            self.expect_keyword("metric")?;
            let (metric, _) = self.expect_ident("metric name")?;
            self.expect_keyword("folds")?;
            let (folds, _) = self.expect_int("fold count")?;
            let budget = if self.eat_keyword("budget") {
                Some(self.expect_int("budget")?.0 as u32)
            } else {
                None
            };
            self.expect(TokenKind::RBrace, "'}'")?;
            DaMode::AutoMl { metric, folds: folds as u32, budget }
        } else {
            return Err(self.error_here(
                "data_analytics block needs a mode",
                Some("'model' (expert) or 'automl'".into()),
            ));
        };

        let pretrained = if self.eat_keyword("pretrained") {
            Some(self.expect_string("pretrained model path string")?.0)
        } else {
            None
        };
        let annotations = self.parse_annotations()?;
        let close = self.expect(TokenKind::RBrace, "'}'")?;
        Ok(DataAnalyticsSpec {
            dataset,
            features,
            labels,
            sequential,
            window,
            scaling,
            missing,
            mode,
            pretrained,
            annotations,
            span: kw.span.merge(close.span),
        })
    }

    fn parse_statechart(&mut self) -> PResult<StateMachine> {
        let kw = self.expect_keyword("statechart")?;
        let (name, _) = self.expect_ident("statechart name")?;
        self.expect_keyword("init")?;
        let (initial, _) = self.expect_ident("initial state name")?;
        self.expect(TokenKind::LBrace, "'{'")?;
        let mut states = Vec::new();
        while self.at_keyword("state") {
            states.push(self.parse_state()?);
        }
        let close = self.expect(TokenKind::RBrace, "'}'")?;
        Ok(StateMachine { name, initial, states, span: kw.span.merge(close.span) })
    }

    fn parse_state(&mut self) -> PResult<State> {
        let kw = self.expect_keyword("state")?;
        let (name, _) = self.expect_ident("state name")?;
        self.expect(TokenKind::LBrace, "'{'")?;
        let mut state = State {
            name,
            on_entry: Vec::new(),
            on_exit: Vec::new(),
            transitions: Vec::new(),
            span: kw.span,
        };
        loop {
            match self.peek_kind() {
                TokenKind::Keyword("on_entry") => {
                    self.next();
                    let body = self.parse_block()?;
                    if !state.on_entry.is_empty() {
                        let span = self.peek().span;
                        self.diagnostics.push(ParseDiagnostic {
                            message: "duplicate on_entry block".into(),
                            span,
                            expected: None,
                        });
                    }
                    state.on_entry = body;
                }
                TokenKind::Keyword("on_exit") => {
                    self.next();
                    let body = self.parse_block()?;
                    if !state.on_exit.is_empty() {
                        let span = self.peek().span;
                        self.diagnostics.push(ParseDiagnostic {
                            message: "duplicate on_exit block".into(),
                            span,
                            expected: None,
                        });
                    }
                    state.on_exit = body;
                }
                TokenKind::Keyword("transition") => {
                    state.transitions.push(self.parse_transition()?);
                }
                TokenKind::RBrace => {
                    let close = self.next();
                    state.span = kw.span.merge(close.span);
                    return Ok(state);
                }
                other => {
                    let found = other.describe();
                    return Err(self.error_here(
                        format!("unexpected {found} in state body"),
                        Some("'on_entry', 'on_exit', 'transition' or '}'".to_string()),
                    ));
                }
            }
        }
    }

    fn parse_transition(&mut self) -> PResult<Transition> {
        let kw = self.expect_keyword("transition")?;
        self.expect(TokenKind::Arrow, "'->'")?;
        let (target, tspan) = self.expect_ident("target state name")?;
        let mut span = kw.span.merge(tspan);
        let event = if self.eat_keyword("event") {
            let (port, _) = self.expect_ident("port name")?;
            self.expect(TokenKind::Dot, "'.'")?;
            let (message, mspan) = self.expect_ident("message name")?;
            span = span.merge(mspan);
            Some((port, message))
        } else {
            None
        };
        let guard = if self.eat_keyword("guard") {
            let g = self.parse_expr()?;
            span = span.merge(g.span());
            Some(g)
        } else {
            None
        };
        let actions = if self.peek_kind() == &TokenKind::LBrace {
            let body = self.parse_block()?;
            span = span.merge(self.tokens[self.pos.saturating_sub(1)].span);
            body
        } else {
            Vec::new()
        };
        Ok(Transition { target, event, guard, actions, span })
    }

    fn parse_block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(TokenKind::LBrace, "'{'")?;
        let mut stmts = Vec::new();
        while self.peek_kind() != &TokenKind::RBrace {
            if self.peek_kind() == &TokenKind::Eof {
                return Err(self.error_here("unexpected end of input in block", Some("'}'".into())));
            }
            stmts.push(self.parse_statement()?);
        }
        self.next(); // consume '}'
        Ok(stmts)
    }

    fn parse_statement(&mut self) -> PResult<Stmt> {
        match self.peek_kind().clone() {
            TokenKind::Keyword("var") => {
                let kw = self.next();
                let (name, _) = self.expect_ident("local variable name")?;
                self.expect(TokenKind::Assign, "'='")?;
                let init = self.parse_expr()?;
                let span = kw.span.merge(init.span());
                Ok(Stmt::LocalDecl { name, init, span })
            }
            TokenKind::Keyword("print") => {
                let kw = self.next();
                self.expect(TokenKind::LParen, "'('")?;
                let value = self.parse_expr()?;
                let close = self.expect(TokenKind::RParen, "')'")?;
                Ok(Stmt::Print { value, span: kw.span.merge(close.span) })
            }
            TokenKind::Keyword("if") => {
                let kw = self.next();
                let cond = self.parse_expr()?;
                let then_body = self.parse_block()?;
                let mut span = kw.span.merge(self.tokens[self.pos.saturating_sub(1)].span);
                let else_body = if self.eat_keyword("else") {
                    let b = self.parse_block()?;
                    span = span.merge(self.tokens[self.pos.saturating_sub(1)].span);
                    Some(b)
                } else {
                    None
                };
                Ok(Stmt::If { cond, then_body, else_body, span })
            }
            TokenKind::Keyword("while") => {
                let kw = self.next();
                let cond = self.parse_expr()?;
                let body = self.parse_block()?;
                let span = kw.span.merge(self.tokens[self.pos.saturating_sub(1)].span);
                Ok(Stmt::While { cond, body, span })
            }
            TokenKind::Keyword(kw @ ("da_save" | "da_preprocess" | "da_train" | "da_predict")) => {
                let tok = self.next();
                let kind = match kw {
                    "da_save" => DaActionKind::Save,
                    "da_preprocess" => DaActionKind::Preprocess,
                    "da_train" => DaActionKind::Train,
                    _ => DaActionKind::Predict,
                };
                Ok(Stmt::DaAction { kind, span: tok.span })
            }
            TokenKind::Ident(name) => {
                let ident = self.next();
                match self.peek_kind() {
                    TokenKind::Assign => {
                        self.next();
                        let value = self.parse_expr()?;
                        let span = ident.span.merge(value.span());
                        Ok(Stmt::Assign { target: name, value, span })
                    }
                    TokenKind::Bang => {
                        self.next();
                        let (message, _) = self.expect_ident("message name")?;
                        self.expect(TokenKind::LParen, "'('")?;
                        let mut args = Vec::new();
                        if self.peek_kind() != &TokenKind::RParen {
                            loop {
                                args.push(self.parse_expr()?);
                                if !self.eat(&TokenKind::Comma) {
                                    break;
                                }
                            }
                        }
                        let close = self.expect(TokenKind::RParen, "')'")?;
                        Ok(Stmt::Send {
                            port: name,
                            message,
                            args,
                            span: ident.span.merge(close.span),
                        })
                    }
                    other => {
                        let found = other.describe();
                        Err(self.error_here(
                            format!("unexpected {found} after identifier"),
                            Some("'=' (assignment) or '!' (send)".to_string()),
                        ))
                    }
                }
            }
            other => {
                let found = other.describe();
                Err(self.error_here(format!("unexpected {found}"), Some("a statement".into())))
            }
        }
    }

    fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_binary(0)
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::OrOr => BinOp::Or,
                TokenKind::AndAnd => BinOp::And,
                TokenKind::EqEq => BinOp::Eq,
                TokenKind::NotEq => BinOp::Ne,
                TokenKind::Lt => BinOp::Lt,
                TokenKind::Le => BinOp::Le,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ge => BinOp::Ge,
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                TokenKind::Percent => BinOp::Mod,
                _ => break,
            };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.next();
            // left-associative: require strictly higher precedence on the right
            let rhs = self.parse_binary(prec + 1)?;
            let span = lhs.span().merge(rhs.span());
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        match self.peek_kind() {
            TokenKind::Bang => {
                let tok = self.next();
                let operand = self.parse_unary()?;
                let span = tok.span.merge(operand.span());
                Ok(Expr::Unary { op: UnOp::Not, operand: Box::new(operand), span })
            }
            TokenKind::Minus => {
                let tok = self.next();
                // Fold `-` on a numeric literal into a negative literal so
                // pretty-printed negatives reparse to the same node.
                match self.peek_kind().clone() {
                    TokenKind::Int(v) => {
                        let lit = self.next();
                        Ok(Expr::Lit {
                            value: Literal::Int(-v),
                            span: tok.span.merge(lit.span),
                        })
                    }
                    TokenKind::Float(v) => {
                        let lit = self.next();
                        Ok(Expr::Lit {
                            value: Literal::Float(-v),
                            span: tok.span.merge(lit.span),
                        })
                    }
                    _ => {
                        let operand = self.parse_unary()?;
                        let span = tok.span.merge(operand.span());
                        Ok(Expr::Unary { op: UnOp::Neg, operand: Box::new(operand), span })
                    }
                }
            }
            _ => self.parse_primary(),
        }
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        match self.peek_kind().clone() {
            TokenKind::Int(v) => {
                let t = self.next();
                Ok(Expr::Lit { value: Literal::Int(v), span: t.span })
            }
            TokenKind::Float(v) => {
                let t = self.next();
                Ok(Expr::Lit { value: Literal::Float(v), span: t.span })
            }
            TokenKind::Str(s) => {
                let t = self.next();
                Ok(Expr::Lit { value: Literal::Str(s), span: t.span })
            }
            TokenKind::Keyword("true") => {
                let t = self.next();
                Ok(Expr::Lit { value: Literal::Bool(true), span: t.span })
            }
            TokenKind::Keyword("false") => {
                let t = self.next();
                Ok(Expr::Lit { value: Literal::Bool(false), span: t.span })
            }
            TokenKind::Keyword(kw @ ("da_save" | "da_preprocess" | "da_train" | "da_predict")) => {
                let t = self.next();
                let kind = match kw {
                    "da_save" => DaActionKind::Save,
                    "da_preprocess" => DaActionKind::Preprocess,
                    "da_train" => DaActionKind::Train,
                    _ => DaActionKind::Predict,
                };
                Ok(Expr::DaAction { kind, span: t.span })
            }
            TokenKind::Ident(name) => {
                let t = self.next();
                Ok(Expr::Ref { name, span: t.span })
            }
            TokenKind::LParen => {
                self.next();
                let e = self.parse_expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(e)
            }
            other => {
                let found = other.describe();
                Err(self.error_here(format!("unexpected {found}"), Some("an expression".into())))
            }
        }
    }

    fn parse_configuration(&mut self) -> PResult<Configuration> {
        let kw = self.expect_keyword("configuration")?;
        let (name, _) = self.expect_ident("configuration name")?;
        self.expect(TokenKind::LBrace, "'{'")?;
        let mut instances = Vec::new();
        let mut connectors = Vec::new();
        loop {
            match self.peek_kind() {
                TokenKind::Keyword("instance") => {
                    let ikw = self.next();
                    let (iname, _) = self.expect_ident("instance name")?;
                    self.expect(TokenKind::Colon, "':'")?;
                    let (thing, tspan) = self.expect_ident("thing name")?;
                    instances.push(Instance {
                        name: iname,
                        thing,
                        span: ikw.span.merge(tspan),
                    });
                }
                TokenKind::Keyword("connector") => {
                    let ckw = self.next();
                    let (ai, _) = self.expect_ident("instance name")?;
                    self.expect(TokenKind::Dot, "'.'")?;
                    let (ap, _) = self.expect_ident("port name")?;
                    self.expect(TokenKind::Link, "'<->'")?;
                    let (bi, _) = self.expect_ident("instance name")?;
                    self.expect(TokenKind::Dot, "'.'")?;
                    let (bp, bspan) = self.expect_ident("port name")?;
                    connectors.push(Connector {
                        a_instance: ai,
                        a_port: ap,
                        b_instance: bi,
                        b_port: bp,
                        span: ckw.span.merge(bspan),
                    });
                }
                TokenKind::RBrace => {
                    let close = self.next();
                    return Ok(Configuration {
                        name,
                        instances,
                        connectors,
                        span: kw.span.merge(close.span),
                    });
                }
                other => {
                    let found = other.describe();
                    return Err(self.error_here(
                        format!("unexpected {found} in configuration body"),
                        Some("'instance', 'connector' or '}'".to_string()),
                    ));
                }
            }
        }
    }
}
