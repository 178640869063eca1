//! Boolean query language and query perturbations.
//!
//! ```text
//! query   := iff
//! iff     := implies ( "<->" implies )*
//! implies := or ( "->" implies )?
//! or      := and ( ( "OR" | "|" ) and )*
//! and     := unary ( ( "AND" | "&" ) unary )*
//! unary   := ( "NOT" | "!" ) unary | primary
//! primary := "(" query ")" | leaf
//! leaf    := ( word | "quoted words" )+
//! ```
//!
//! Keywords are case-insensitive. Adjacent words and quoted strings fold into
//! a single elementary leaf.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{tokenize, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("syntax error at byte {position}: {message}")]
pub struct SyntaxError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("perturbations apply to elementary queries only")]
    NotElementary,
    #[error("perturbation leaves the query without words")]
    EmptyLeaf,
    #[error("word `{0}` does not occur in the query")]
    WordNotFound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryAst {
    /// Concatenated words, in input order.
    Elementary(Vec<String>),
    And(Box<QueryAst>, Box<QueryAst>),
    Or(Box<QueryAst>, Box<QueryAst>),
    Not(Box<QueryAst>),
    Implies(Box<QueryAst>, Box<QueryAst>),
    Iff(Box<QueryAst>, Box<QueryAst>),
}

impl QueryAst {
    pub fn leaf<S: AsRef<str>>(words: &[S]) -> Self {
        QueryAst::Elementary(words.iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn and(l: QueryAst, r: QueryAst) -> Self {
        QueryAst::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: QueryAst, r: QueryAst) -> Self {
        QueryAst::Or(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: QueryAst) -> Self {
        QueryAst::Not(Box::new(c))
    }

    pub fn implies(l: QueryAst, r: QueryAst) -> Self {
        QueryAst::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: QueryAst, r: QueryAst) -> Self {
        QueryAst::Iff(Box::new(l), Box::new(r))
    }

    pub fn is_elementary(&self) -> bool {
        matches!(self, QueryAst::Elementary(_))
    }

    pub fn words(&self) -> Option<&[String]> {
        match self {
            QueryAst::Elementary(w) => Some(w),
            _ => None,
        }
    }

    /// Elementary leaves, left to right.
    pub fn leaves(&self) -> Vec<&[String]> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a [String]>) {
        match self {
            QueryAst::Elementary(w) => out.push(w),
            QueryAst::Not(c) => c.collect_leaves(out),
            QueryAst::And(l, r)
            | QueryAst::Or(l, r)
            | QueryAst::Implies(l, r)
            | QueryAst::Iff(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            QueryAst::Elementary(_) => 1,
            QueryAst::Not(c) => 1 + c.depth(),
            QueryAst::And(l, r)
            | QueryAst::Or(l, r)
            | QueryAst::Implies(l, r)
            | QueryAst::Iff(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Parenthesized prefix form, e.g. `(and (leaf a b) (not (leaf c)))`.
    pub fn to_sexpr(&self) -> String {
        match self {
            QueryAst::Elementary(w) => format!("(leaf {})", w.join(" ")),
            QueryAst::Not(c) => format!("(not {})", c.to_sexpr()),
            QueryAst::And(l, r) => format!("(and {} {})", l.to_sexpr(), r.to_sexpr()),
            QueryAst::Or(l, r) => format!("(or {} {})", l.to_sexpr(), r.to_sexpr()),
            QueryAst::Implies(l, r) => format!("(implies {} {})", l.to_sexpr(), r.to_sexpr()),
            QueryAst::Iff(l, r) => format!("(iff {} {})", l.to_sexpr(), r.to_sexpr()),
        }
    }
}

/// Renders back into the query language; reparses to the same tree.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::Elementary(w) => write!(f, "\"{}\"", w.join(" ")),
            QueryAst::Not(c) => write!(f, "NOT {c}"),
            QueryAst::And(l, r) => write!(f, "({l} AND {r})"),
            QueryAst::Or(l, r) => write!(f, "({l} OR {r})"),
            QueryAst::Implies(l, r) => write!(f, "({l} -> {r})"),
            QueryAst::Iff(l, r) => write!(f, "({l} <-> {r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Word(String),
    Quoted(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Not => "NOT".into(),
            Tok::And => "AND".into(),
            Tok::Or => "OR".into(),
            Tok::Implies => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::Word(w) => format!("word `{w}`"),
            Tok::Quoted(q) => format!("\"{q}\""),
        }
    }
}

fn err(position: usize, message: impl Into<String>) -> SyntaxError {
    SyntaxError {
        position,
        message: message.into(),
    }
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'!' => Some(Tok::Not),
            b'&' => Some(Tok::And),
            b'|' => Some(Tok::Or),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((start, tok));
            i += 1;
            continue;
        }
        if input[i..].starts_with("<->") {
            out.push((start, Tok::Iff));
            i += 3;
            continue;
        }
        if input[i..].starts_with("->") {
            out.push((start, Tok::Implies));
            i += 2;
            continue;
        }
        if c == b'"' {
            let Some(len) = input[i + 1..].find('"') else {
                return Err(err(start, "unterminated quoted string"));
            };
            out.push((start, Tok::Quoted(input[i + 1..i + 1 + len].to_string())));
            i += len + 2;
            continue;
        }
        let mut end = i;
        while end < bytes.len() {
            let rest = &input[end..];
            let b = bytes[end];
            if b.is_ascii_whitespace()
                || matches!(b, b'(' | b')' | b'!' | b'&' | b'|' | b'"')
                || rest.starts_with("->")
                || rest.starts_with("<->")
            {
                break;
            }
            end += rest.chars().next().map_or(1, char::len_utf8);
        }
        let word = &input[start..end];
        let tok = match word.to_ascii_uppercase().as_str() {
            "AND" => Tok::And,
            "OR" => Tok::Or,
            "NOT" => Tok::Not,
            _ => Tok::Word(word.to_string()),
        };
        out.push((start, tok));
        i = end;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<QueryAst, SyntaxError> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.implies()?;
            lhs = QueryAst::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<QueryAst, SyntaxError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(QueryAst::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<QueryAst, SyntaxError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            let rhs = self.and()?;
            lhs = QueryAst::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<QueryAst, SyntaxError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::And) {
            let rhs = self.unary()?;
            lhs = QueryAst::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<QueryAst, SyntaxError> {
        if self.eat(&Tok::Not) {
            return Ok(QueryAst::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<QueryAst, SyntaxError> {
        let at = self.offset();
        match self.peek() {
            None => Err(err(at, "expected a query term, found end of input")),
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.iff()?;
                if !self.eat(&Tok::RParen) {
                    return Err(err(
                        self.offset(),
                        format!("unclosed `(` opened at byte {at}"),
                    ));
                }
                Ok(inner)
            }
            Some(Tok::Word(_) | Tok::Quoted(_)) => self.leaf(),
            Some(other) => Err(err(at, format!("unexpected {}", other.describe()))),
        }
    }

    fn leaf(&mut self) -> Result<QueryAst, SyntaxError> {
        let at = self.offset();
        let plain = TokenizerConfig::keep_all();
        let mut words = Vec::new();
        while let Some(Tok::Word(text) | Tok::Quoted(text)) = self.peek() {
            words.extend(tokenize(text, &plain));
            self.pos += 1;
        }
        if words.is_empty() {
            return Err(err(at, "empty query term"));
        }
        Ok(QueryAst::Elementary(words))
    }
}

pub fn parse_query(input: &str) -> Result<QueryAst, SyntaxError> {
    let toks = lex(input)?;
    if toks.is_empty() {
        return Err(err(0, "empty query"));
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: input.len(),
    };
    let ast = parser.iff()?;
    if let Some(tok) = parser.peek() {
        let what = match tok {
            Tok::RParen => "unmatched `)`".to_string(),
            other => format!("unexpected {}", other.describe()),
        };
        return Err(err(parser.offset(), what));
    }
    Ok(ast)
}

/// One word-level edit of an elementary query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edit {
    Add(String),
    /// Removes the first occurrence.
    Remove(String),
    /// Replaces every occurrence.
    Substitute {
        from: String,
        to: String,
    },
}

/// `q' = q ⊕ δq`: an elementary query, the edits applied to it, and the result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub base: QueryAst,
    pub delta: Vec<Edit>,
    pub result: QueryAst,
}

pub fn perturb(base: &QueryAst, delta: &[Edit]) -> Result<Perturbation, QueryError> {
    let QueryAst::Elementary(words) = base else {
        return Err(QueryError::NotElementary);
    };
    let mut words = words.clone();
    for edit in delta {
        match edit {
            Edit::Add(w) => words.push(w.to_lowercase()),
            Edit::Remove(w) => {
                let w = w.to_lowercase();
                let pos = words
                    .iter()
                    .position(|x| *x == w)
                    .ok_or(QueryError::WordNotFound(w))?;
                words.remove(pos);
            }
            Edit::Substitute { from, to } => {
                let (from, to) = (from.to_lowercase(), to.to_lowercase());
                let mut hit = false;
                for x in words.iter_mut().filter(|x| **x == from) {
                    *x = to.clone();
                    hit = true;
                }
                if !hit {
                    return Err(QueryError::WordNotFound(from));
                }
            }
        }
    }
    if words.is_empty() {
        return Err(QueryError::EmptyLeaf);
    }
    Ok(Perturbation {
        base: base.clone(),
        delta: delta.to_vec(),
        result: QueryAst::Elementary(words),
    })
}
