//! Shared lexical layer for the textual notations: documents, SL expressions
//! and system trace files.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

/// A 1-based source position.
///
/// Positions are metadata: two positions always compare equal, so that ASTs
/// parsed from differently formatted sources are structurally equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl PartialOrd for Pos {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pos {
    fn cmp(&self, _: &Self) -> Ordering {
        Ordering::Equal
    }
}

impl Hash for Pos {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A positioned message about a document or a trace file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Document id, or `<input>` when the document name is not yet known.
    pub doc: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl Diagnostic {
    pub fn new(doc: impl Into<String>, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            doc: doc.into(),
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }

    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.doc, self.line, self.col, self.message)
    }
}

/// Renders a diagnostic list one per line.
pub fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("{d}\n")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Punctuation and operators.
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "..", "->", "=>", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", "[", "]", ",", ";",
    ":", ".", "<", ">", "+", "-", "*", "!", "'", "=", "|",
];

/// On-demand lexer. Callers may switch to raw scanning (ITD payloads) at any
/// token boundary.
#[derive(Debug, Clone)]
pub struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            offset: 0,
            line: 1,
            col: 1,
        }
    }

    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.offset..]
    }

    fn bump(&mut self, n: usize) {
        for ch in self.src[self.offset..self.offset + n].chars() {
            if ch == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        self.offset += n;
    }

    fn skip_trivia(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            let ws = rest.len() - trimmed.len();
            if ws > 0 {
                self.bump(ws);
                continue;
            }
            if rest.starts_with("//") {
                let len = rest.find('\n').unwrap_or(rest.len());
                self.bump(len);
                continue;
            }
            break;
        }
    }

    pub fn next_token(&mut self) -> Result<Token, Diagnostic> {
        self.skip_trivia();
        let pos = self.pos();
        let rest = self.rest();
        let Some(c) = rest.chars().next() else {
            return Ok(Token { tok: Tok::Eof, pos });
        };
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            let ident = rest[..len].to_string();
            self.bump(len);
            return Ok(Token {
                tok: Tok::Ident(ident),
                pos,
            });
        }
        if c.is_ascii_digit() {
            let len = rest
                .find(|ch: char| !ch.is_ascii_digit())
                .unwrap_or(rest.len());
            let text = &rest[..len];
            let n: i64 = text.parse().map_err(|_| {
                Diagnostic::new("<input>", pos, format!("integer literal `{text}` out of range"))
            })?;
            self.bump(len);
            return Ok(Token {
                tok: Tok::Int(n),
                pos,
            });
        }
        for sym in SYMBOLS {
            if rest.starts_with(sym) {
                self.bump(sym.len());
                return Ok(Token {
                    tok: Tok::Sym(sym),
                    pos,
                });
            }
        }
        Err(Diagnostic::new(
            "<input>",
            pos,
            format!("unexpected character `{c}`"),
        ))
    }

    /// Scans a raw brace-balanced block. The opening `{` must already have
    /// been consumed; returns the text up to (excluding) the matching `}`.
    pub fn raw_block(&mut self) -> Result<String, Diagnostic> {
        let start = self.offset;
        let pos = self.pos();
        let mut depth = 0usize;
        for (i, ch) in self.rest().char_indices() {
            match ch {
                '{' => depth += 1,
                '}' if depth == 0 => {
                    let text = self.src[start..start + i].to_string();
                    self.bump(i + 1);
                    return Ok(text);
                }
                '}' => depth -= 1,
                _ => {}
            }
        }
        Err(Diagnostic::new("<input>", pos, "unterminated text block"))
    }
}

/// Token cursor with one token of lookahead, shared by the recursive-descent
/// parsers.
pub struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Token>,
    pub doc: String,
}

pub type PResult<T> = Result<T, Diagnostic>;

impl<'a> Parser<'a> {
    pub fn new(src: &'a str) -> Self {
        Parser {
            lexer: Lexer::new(src),
            peeked: None,
            doc: "<input>".to_string(),
        }
    }

    fn fix(&self, mut d: Diagnostic) -> Diagnostic {
        d.doc = self.doc.clone();
        d
    }

    pub fn peek(&mut self) -> PResult<&Token> {
        if self.peeked.is_none() {
            let t = self.lexer.next_token().map_err(|d| self.fix(d))?;
            self.peeked = Some(t);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    pub fn next(&mut self) -> PResult<Token> {
        self.peek()?;
        Ok(self.peeked.take().unwrap())
    }

    pub fn pos(&mut self) -> PResult<Pos> {
        Ok(self.peek()?.pos)
    }

    pub fn error<T>(&self, pos: Pos, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(self.doc.clone(), pos, msg))
    }

    pub fn at_sym(&mut self, sym: &str) -> PResult<bool> {
        Ok(matches!(&self.peek()?.tok, Tok::Sym(s) if *s == sym))
    }

    pub fn at_kw(&mut self, kw: &str) -> PResult<bool> {
        Ok(matches!(&self.peek()?.tok, Tok::Ident(s) if s == kw))
    }

    pub fn at_eof(&mut self) -> PResult<bool> {
        Ok(matches!(self.peek()?.tok, Tok::Eof))
    }

    pub fn eat_sym(&mut self, sym: &str) -> PResult<bool> {
        if self.at_sym(sym)? {
            self.next()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> PResult<bool> {
        if self.at_kw(kw)? {
            self.next()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn expect_sym(&mut self, sym: &str) -> PResult<Pos> {
        let t = self.next()?;
        match &t.tok {
            Tok::Sym(s) if *s == sym => Ok(t.pos),
            other => self.error(t.pos, format!("expected `{sym}`, found {other}")),
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> PResult<Pos> {
        let t = self.next()?;
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(t.pos),
            other => self.error(t.pos, format!("expected `{kw}`, found {other}")),
        }
    }

    pub fn ident(&mut self) -> PResult<(String, Pos)> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => self.error(t.pos, format!("expected identifier, found {other}")),
        }
    }

    /// Optionally signed integer literal.
    pub fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_sym("-")?;
        let t = self.next()?;
        match t.tok {
            Tok::Int(n) => Ok(if neg { -n } else { n }),
            other => self.error(t.pos, format!("expected integer, found {other}")),
        }
    }

    pub fn expect_eof(&mut self) -> PResult<()> {
        let t = self.peek()?.clone();
        match t.tok {
            Tok::Eof => Ok(()),
            other => self.error(t.pos, format!("unexpected {other} after end of input")),
        }
    }

    /// Raw block after an already-consumed `{`. Fails if a token has been
    /// peeked past the brace.
    pub fn raw_block(&mut self) -> PResult<String> {
        debug_assert!(self.peeked.is_none());
        self.lexer.raw_block().map_err(|d| self.fix(d))
    }
}

pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
