//! Hand-written lexer for the `.stf` concrete syntax.
//!
//! Comments are `//` to end of line and non-nesting `/* */`. Keywords are
//! reserved. Numeric literals are unsigned here; signs are handled by the
//! parser (unary minus / signed literals).

use crate::model::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Keyword(&'static str),
    Int(i64),
    Float(f64),
    Str(String),
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,   // =
    At,       // @
    Bang,     // !
    Dot,      // .
    Arrow,    // ->
    Link,     // <->
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,
    Eof,
}

impl TokenKind {
    /// Short human-readable description for diagnostics.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Keyword(k) => format!("'{k}'"),
            TokenKind::Int(v) => format!("integer {v}"),
            TokenKind::Float(v) => format!("number {v:?}"),
            TokenKind::Str(s) => format!("string \"{s}\""),
            TokenKind::LBrace => "'{'".into(),
            TokenKind::RBrace => "'}'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::Comma => "','".into(),
            TokenKind::Colon => "':'".into(),
            TokenKind::Assign => "'='".into(),
            TokenKind::At => "'@'".into(),
            TokenKind::Bang => "'!'".into(),
            TokenKind::Dot => "'.'".into(),
            TokenKind::Arrow => "'->'".into(),
            TokenKind::Link => "'<->'".into(),
            TokenKind::Plus => "'+'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Slash => "'/'".into(),
            TokenKind::Percent => "'%'".into(),
            TokenKind::Lt => "'<'".into(),
            TokenKind::Le => "'<='".into(),
            TokenKind::Gt => "'>'".into(),
            TokenKind::Ge => "'>='".into(),
            TokenKind::EqEq => "'=='".into(),
            TokenKind::NotEq => "'!='".into(),
            TokenKind::AndAnd => "'&&'".into(),
            TokenKind::OrOr => "'||'".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

pub const KEYWORDS: &[&str] = &[
    "import",
    "thing",
    "fragment",
    "includes",
    "property",
    "message",
    "port",
    "receives",
    "sends",
    "data_analytics",
    "dataset",
    "features",
    "labels",
    "sequential",
    "window",
    "horizon",
    "scaling",
    "missing",
    "model",
    "automl",
    "metric",
    "folds",
    "budget",
    "pretrained",
    "statechart",
    "init",
    "state",
    "on_entry",
    "on_exit",
    "transition",
    "event",
    "guard",
    "configuration",
    "instance",
    "connector",
    "var",
    "print",
    "if",
    "else",
    "while",
    "da_save",
    "da_preprocess",
    "da_train",
    "da_predict",
    "true",
    "false",
    "none",
    "minmax",
    "zscore",
    "drop",
    "mean_impute",
    "Int",
    "Float",
    "Bool",
    "String",
    "Timestamp",
];

#[derive(Debug, Clone)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

/// Tokenize the whole input. Lexical errors are collected, the offending
/// character skipped, and lexing continues (the parser reports them).
pub fn lex(text: &str) -> (Vec<Token>, Vec<LexError>) {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let mut i = 0usize;
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let (tline, tcol, tstart) = (line, col, i);

        // whitespace
        if c.is_ascii_whitespace() {
            advance!(1);
            continue;
        }
        // comments
        if c == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance!(1);
            }
            continue;
        }
        if c == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'*' {
            advance!(2);
            let mut closed = false;
            while i < bytes.len() {
                if bytes[i] == b'*' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
                    advance!(2);
                    closed = true;
                    break;
                }
                advance!(1);
            }
            if !closed {
                errors.push(LexError {
                    message: "unterminated block comment".into(),
                    span: Span::new(tline, tcol, tstart, bytes.len()),
                });
            }
            continue;
        }

        // identifiers / keywords
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let word = &text[i..j];
            let kind = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word.to_string()),
            };
            let len = j - i;
            advance!(len);
            tokens.push(Token { kind, span: Span::new(tline, tcol, tstart, j) });
            continue;
        }

        // numbers: digits [ '.' digits ] [ ('e'|'E') ['+'|'-'] digits ]
        if c.is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let mut is_float = false;
            if j < bytes.len() && bytes[j] == b'.' && j + 1 < bytes.len() && bytes[j + 1].is_ascii_digit()
            {
                is_float = true;
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                let mut k = j + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    is_float = true;
                    j = k;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
            }
            let lexeme = &text[i..j];
            let span = Span::new(tline, tcol, tstart, j);
            let kind = if is_float {
                match lexeme.parse::<f64>() {
                    Ok(v) => TokenKind::Float(v),
                    Err(_) => {
                        errors.push(LexError { message: format!("bad number '{lexeme}'"), span });
                        TokenKind::Float(0.0)
                    }
                }
            } else {
                match lexeme.parse::<i64>() {
                    Ok(v) => TokenKind::Int(v),
                    Err(_) => {
                        errors.push(LexError {
                            message: format!("integer literal '{lexeme}' out of range"),
                            span,
                        });
                        TokenKind::Int(0)
                    }
                }
            };
            let len = j - i;
            advance!(len);
            tokens.push(Token { kind, span });
            continue;
        }

        // strings
        if c == b'"' {
            let mut j = i + 1;
            let mut out = String::new();
            let mut closed = false;
            while j < bytes.len() {
                match bytes[j] {
                    b'"' => {
                        j += 1;
                        closed = true;
                        break;
                    }
                    b'\\' if j + 1 < bytes.len() => {
                        let esc = bytes[j + 1];
                        match esc {
                            b'n' => out.push('\n'),
                            b't' => out.push('\t'),
                            b'r' => out.push('\r'),
                            b'\\' => out.push('\\'),
                            b'"' => out.push('"'),
                            other => {
                                errors.push(LexError {
                                    message: format!("unknown escape '\\{}'", other as char),
                                    span: Span::new(tline, tcol, j, j + 2),
                                });
                            }
                        }
                        j += 2;
                    }
                    b'\n' => break,
                    _ => {
                        // copy the full UTF-8 character
                        let ch_len = utf8_len(bytes[j]);
                        out.push_str(&text[j..j + ch_len]);
                        j += ch_len;
                    }
                }
            }
            let span = Span::new(tline, tcol, tstart, j);
            if !closed {
                errors.push(LexError { message: "unterminated string".into(), span });
            }
            let len = j - i;
            advance!(len);
            tokens.push(Token { kind: TokenKind::Str(out), span });
            continue;
        }

        // multi-char punctuation first
        let rest = &text[i..];
        let two = |k: TokenKind| (k, 2usize);
        let (kind, len) = if rest.starts_with("<->") {
            (TokenKind::Link, 3)
        } else if rest.starts_with("->") {
            two(TokenKind::Arrow)
        } else if rest.starts_with("<=") {
            two(TokenKind::Le)
        } else if rest.starts_with(">=") {
            two(TokenKind::Ge)
        } else if rest.starts_with("==") {
            two(TokenKind::EqEq)
        } else if rest.starts_with("!=") {
            two(TokenKind::NotEq)
        } else if rest.starts_with("&&") {
            two(TokenKind::AndAnd)
        } else if rest.starts_with("||") {
            two(TokenKind::OrOr)
        } else {
            let single = match c {
                b'{' => Some(TokenKind::LBrace),
                b'}' => Some(TokenKind::RBrace),
                b'(' => Some(TokenKind::LParen),
                b')' => Some(TokenKind::RParen),
                b',' => Some(TokenKind::Comma),
                b':' => Some(TokenKind::Colon),
                b'=' => Some(TokenKind::Assign),
                b'@' => Some(TokenKind::At),
                b'!' => Some(TokenKind::Bang),
                b'.' => Some(TokenKind::Dot),
                b'+' => Some(TokenKind::Plus),
                b'-' => Some(TokenKind::Minus),
                b'*' => Some(TokenKind::Star),
                b'/' => Some(TokenKind::Slash),
                b'%' => Some(TokenKind::Percent),
                b'<' => Some(TokenKind::Lt),
                b'>' => Some(TokenKind::Gt),
                _ => None,
            };
            match single {
                Some(k) => (k, 1),
                None => {
                    let ch_len = utf8_len(c);
                    errors.push(LexError {
                        message: format!("unexpected character '{}'", &text[i..i + ch_len]),
                        span: Span::new(tline, tcol, tstart, i + ch_len),
                    });
                    advance!(ch_len);
                    continue;
                }
            }
        };
        advance!(len);
        tokens.push(Token { kind, span: Span::new(tline, tcol, tstart, tstart + len) });
    }

    tokens.push(Token {
        kind: TokenKind::Eof,
        span: Span::new(line, col, bytes.len(), bytes.len()),
    });
    (tokens, errors)
}

fn utf8_len(first: u8) -> usize {
    match first {
        b if b < 0x80 => 1,
        b if b >= 0xF0 => 4,
        b if b >= 0xE0 => 3,
        _ => 2,
    }
}
