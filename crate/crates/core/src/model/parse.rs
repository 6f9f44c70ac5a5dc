// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for `.fdm` model files.
//!
//! ```text
//! model <name> { (block <id> : <kind>(<args>) ; | subsystem <id> { ... }
//!                | link <path>.<port> -> <path>.<port> ; | input <port> ;
//!                | output <port> ; | param <key> = <int|string> ;)* }
//! ```
//! `#` starts a comment running to end of line. Name resolution is deferred to
//! validation; only syntax, duplicate identifiers and unknown kinds fail here.

use std::collections::BTreeSet;

use super::ast::{Block, Endpoint, Item, Link, ModelGraph, Param, ParamValue, PortDecl, Subsystem};
use super::block::BlockKind;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line, col });
                continue;
            }
            let negative_int = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
            if c.is_ascii_digit() || negative_int {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse::<i64>()
                    .map_err(|_| ParseError::new(line, col, format!("integer out of range: {s}")))?;
                out.push(Token { tok: Tok::Int(v), line, col });
                continue;
            }
            if c == '"' {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i >= chars.len() {
                    return Err(ParseError::new(line, col, "unterminated string"));
                }
                out.push(Token { tok: Tok::Str(chars[start..i].iter().collect()), line, col });
                i += 1;
                continue;
            }
            if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push(Token { tok: Tok::Punct("->"), line, col });
                i += 2;
                continue;
            }
            let p = match c {
                '{' => "{",
                '}' => "}",
                '(' => "(",
                ')' => ")",
                ';' => ";",
                ':' => ":",
                ',' => ",",
                '.' => ".",
                '=' => "=",
                _ => return Err(ParseError::new(line, col, format!("unexpected character '{c}'"))),
            };
            out.push(Token { tok: Tok::Punct(p), line, col });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.col)).unwrap_or((self.eof_line, 1))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (l, c) = self.here();
        Err(ParseError::new(l, c, msg))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Punct(q), .. }) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected '{p}', found {}", describe(&t.tok));
                self.err(msg)
            }
            None => self.err(format!("expected '{p}', found end of file")),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Punct(q), .. }) if *q == p)
    }

    fn ident(&mut self) -> Result<(String, usize), ParseError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Ident(s), line, .. }) => {
                self.pos += 1;
                Ok((s, line))
            }
            Some(t) => self.err(format!("expected identifier, found {}", describe(&t.tok))),
            None => self.err("expected identifier, found end of file"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<usize, ParseError> {
        let (s, line) = self.ident()?;
        if s != kw {
            self.pos -= 1;
            return self.err(format!("expected '{kw}', found '{s}'"));
        }
        Ok(line)
    }

    fn model(&mut self) -> Result<ModelGraph, ParseError> {
        let line = self.keyword("model")?;
        let (name, _) = self.ident()?;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let root = self.scope(name.clone(), line, Some((&mut inputs, &mut outputs)))?;
        if let Some(t) = self.peek() {
            return Err(ParseError::new(t.line, t.col, "trailing input after model"));
        }
        let mut seen: BTreeSet<String> = root
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Block(b) => Some(b.id.clone()),
                Item::Subsystem(s) => Some(s.id.clone()),
                _ => None,
            })
            .collect();
        for p in inputs.iter().chain(outputs.iter()) {
            if !seen.insert(p.name.clone()) {
                return Err(ParseError::new(p.line, 1, format!("duplicate identifier '{}'", p.name)));
            }
        }
        Ok(ModelGraph { name, root, inputs, outputs })
    }

    fn scope(
        &mut self,
        id: String,
        line: usize,
        mut io: Option<(&mut Vec<PortDecl>, &mut Vec<PortDecl>)>,
    ) -> Result<Subsystem, ParseError> {
        self.expect_punct("{")?;
        let mut items = Vec::new();
        let mut ids = BTreeSet::new();
        loop {
            if self.is_punct("}") {
                self.pos += 1;
                break;
            }
            let (kw, kw_line) = match self.peek() {
                Some(_) => self.ident()?,
                None => return self.err("unexpected end of file, expected '}'"),
            };
            match kw.as_str() {
                "block" => {
                    let (bid, bline) = self.ident()?;
                    self.expect_punct(":")?;
                    let kind = self.kind()?;
                    self.expect_punct(";")?;
                    if !ids.insert(bid.clone()) {
                        return Err(ParseError::new(bline, 1, format!("duplicate identifier '{bid}'")));
                    }
                    items.push(Item::Block(Block { id: bid, kind, width: 1, line: bline }));
                }
                "subsystem" => {
                    let (sid, sline) = self.ident()?;
                    if !ids.insert(sid.clone()) {
                        return Err(ParseError::new(sline, 1, format!("duplicate identifier '{sid}'")));
                    }
                    let sub = self.scope(sid, sline, None)?;
                    items.push(Item::Subsystem(sub));
                }
                "link" => {
                    let src = self.endpoint()?;
                    self.expect_punct("->")?;
                    let dst = self.endpoint()?;
                    self.expect_punct(";")?;
                    items.push(Item::Link(Link { src, dst, line: kw_line }));
                }
                "param" => {
                    let (key, _) = self.ident()?;
                    self.expect_punct("=")?;
                    let value = match self.next() {
                        Some(Token { tok: Tok::Int(v), .. }) => ParamValue::Int(v),
                        Some(Token { tok: Tok::Str(s), .. }) => ParamValue::Str(s),
                        Some(Token { tok: Tok::Ident(s), .. }) => ParamValue::Str(s),
                        _ => {
                            self.pos -= 1;
                            return self.err("expected parameter value");
                        }
                    };
                    self.expect_punct(";")?;
                    items.push(Item::Param(Param { key, value, line: kw_line }));
                }
                "input" | "output" => {
                    let Some((inputs, outputs)) = io.as_mut() else {
                        return Err(ParseError::new(
                            kw_line,
                            1,
                            format!("'{kw}' is only allowed at model level"),
                        ));
                    };
                    let (name, pline) = self.ident()?;
                    self.expect_punct(";")?;
                    let decl = PortDecl { name, width: 1, line: pline };
                    if kw == "input" {
                        inputs.push(decl);
                    } else {
                        outputs.push(decl);
                    }
                }
                other => {
                    self.pos -= 1;
                    return self.err(format!("unexpected '{other}'"));
                }
            }
        }
        Ok(Subsystem { id, items, line })
    }

    fn endpoint(&mut self) -> Result<Endpoint, ParseError> {
        let (first, _) = self.ident()?;
        let mut parts = vec![first];
        while self.is_punct(".") {
            self.pos += 1;
            parts.push(self.ident()?.0);
        }
        if parts.len() < 2 {
            return self.err("link endpoint must have the form <id>.<port>");
        }
        let port = parts.pop().expect("at least two parts");
        Ok(Endpoint { path: parts, port })
    }

    fn kind(&mut self) -> Result<BlockKind, ParseError> {
        let (name, line) = self.ident()?;
        let mut args: Vec<Tok> = Vec::new();
        if self.is_punct("(") {
            self.pos += 1;
            if !self.is_punct(")") {
                loop {
                    match self.next() {
                        Some(Token { tok: t @ (Tok::Int(_) | Tok::Ident(_)), .. }) => args.push(t),
                        _ => {
                            self.pos -= 1;
                            return self.err("expected block argument");
                        }
                    }
                    if self.is_punct(",") {
                        self.pos += 1;
                        continue;
                    }
                    break;
                }
            }
            self.expect_punct(")")?;
        }
        let bad = |msg: String| ParseError::new(line, 1, msg);
        let int = |i: usize| -> Result<i64, ParseError> {
            match args.get(i) {
                Some(Tok::Int(v)) => Ok(*v),
                _ => Err(bad(format!("{name}: argument {} must be an integer", i + 1))),
            }
        };
        let sample = |i: usize| -> Result<i32, ParseError> {
            let v = int(i)?;
            i32::try_from(v).map_err(|_| bad(format!("{name}: value {v} exceeds 32 bits")))
        };
        let ident = |i: usize| -> Result<String, ParseError> {
            match args.get(i) {
                Some(Tok::Ident(s)) => Ok(s.clone()),
                _ => Err(bad(format!("{name}: argument {} must be a function name", i + 1))),
            }
        };
        let arity = |n: usize| -> Result<(), ParseError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(format!("{name} expects {n} argument(s), got {}", args.len())))
            }
        };
        let count = |i: usize| -> Result<usize, ParseError> {
            let v = int(i)?;
            usize::try_from(v).map_err(|_| bad(format!("{name}: count must be non-negative")))
        };
        let kind = match name.as_str() {
            "const" => {
                arity(1)?;
                BlockKind::Const(sample(0)?)
            }
            "add" | "sub" | "mul" | "if_else" | "sink" => {
                arity(0)?;
                match name.as_str() {
                    "add" => BlockKind::Add,
                    "sub" => BlockKind::Sub,
                    "mul" => BlockKind::Mul,
                    "if_else" => BlockKind::IfElse,
                    _ => BlockKind::Sink,
                }
            }
            "gain" => {
                arity(1)?;
                BlockKind::Gain(sample(0)?)
            }
            "delay" => {
                arity(1)?;
                BlockKind::Delay(count(0)?)
            }
            "mux" => {
                arity(1)?;
                BlockKind::Mux(count(0)?)
            }
            "demux" => {
                arity(1)?;
                BlockKind::Demux(count(0)?)
            }
            "quant" => {
                arity(1)?;
                BlockKind::Quant(sample(0)?)
            }
            "fir" => {
                let taps = (0..args.len()).map(sample).collect::<Result<Vec<_>, _>>()?;
                BlockKind::Fir(taps)
            }
            "for_loop" => {
                arity(2)?;
                let n = count(0)?;
                let n = u32::try_from(n).map_err(|_| bad("for_loop count too large".into()))?;
                BlockKind::ForLoop { count: n, func: ident(1)? }
            }
            "user" => {
                arity(1)?;
                BlockKind::User(ident(0)?)
            }
            other => return Err(bad(format!("unknown block kind '{other}'"))),
        };
        Ok(kind)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(v) => format!("'{v}'"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::Punct(p) => format!("'{p}'"),
    }
}

/// Parses a complete model file.
pub fn parse_model(text: &str) -> Result<ModelGraph, ParseError> {
    let toks = lex(text)?;
    let eof_line = text.lines().count().max(1);
    let mut p = Parser { toks, pos: 0, eof_line };
    p.model()
}
