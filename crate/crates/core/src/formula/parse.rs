//! Text syntax for formulas.
//!
//! ```text
//! φ ::= true | false | p | ~φ | φ & φ | φ | φ | φ -> φ | φ <-> φ | (φ)
//!     | K{i} φ | Kh{i} φ | H{i} φ | Hh{i} φ | B{i} φ
//!     | [φ1, ..., φn] φ        public hope update, one formula per agent
//!     | [φ]{i} φ | [φ]{i,j} φ  update of the listed agents, the rest keep ~H{j} false
//!     | [U:e] φ                named update model U pointed at action e
//! ```
//!
//! Unary operators bind tightest, then `&`, `|`, `->`, `<->`. All binary
//! operators group to the right.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::derived::trivial_vector_except;
use super::Formula;
use crate::kripke::{AgentId, Signature};
use crate::update::UpdateModel;

/// Named update models that `[U:e]` may refer to.
#[derive(Clone, Debug, Default)]
pub struct UpdateRegistry {
    models: BTreeMap<String, Arc<UpdateModel>>,
}

impl UpdateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a model under its own name, replacing any previous entry.
    pub fn insert(&mut self, model: Arc<UpdateModel>) {
        self.models.insert(model.name().to_string(), model);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<UpdateModel>> {
        self.models.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn models(&self) -> impl Iterator<Item = &Arc<UpdateModel>> {
        self.models.values()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

impl FromIterator<Arc<UpdateModel>> for UpdateRegistry {
    fn from_iter<T: IntoIterator<Item = Arc<UpdateModel>>>(iter: T) -> Self {
        let mut r = UpdateRegistry::new();
        for m in iter {
            r.insert(m);
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownAgent(String),
    UnknownProp(String),
    UnknownUpdate(String),
    UnknownAction { model: String, action: String },
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UnknownAgent(a) => write!(f, "unknown agent `{a}`"),
            ParseErrorKind::UnknownProp(p) => write!(f, "unknown proposition `{p}`"),
            ParseErrorKind::UnknownUpdate(u) => write!(f, "unknown update model `{u}`"),
            ParseErrorKind::UnknownAction { model, action } => {
                write!(f, "update model `{model}` has no action `{action}`")
            }
            ParseErrorKind::Arity { expected, got } => {
                write!(f, "public update needs {expected} formulas, got {got}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Tilde,
    Amp,
    Bar,
    Arrow,
    DArrow,
    Ident(String),
    Named(String, String),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::DArrow => f.write_str("`<->`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Named(u, e) => write!(f, "`[{u}:{e}]`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |pos: Pos, m: String| ParseError { line: pos.line, col: pos.col, kind: ParseErrorKind::Syntax(m) };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ']' => (Tok::RBracket, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            '~' => (Tok::Tilde, 1),
            '&' => (Tok::Amp, 1),
            '|' => (Tok::Bar, 1),
            '-' if chars.get(i + 1) == Some(&'>') => (Tok::Arrow, 2),
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => (Tok::DArrow, 3),
            '[' => match named_update(&chars[i + 1..]) {
                Some((u, e, len)) => (Tok::Named(u, e), len + 1),
                None => (Tok::LBracket, 1),
            },
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let len = chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').count();
                (Tok::Ident(chars[i..i + len].iter().collect()), len)
            }
            other => return Err(err(pos, format!("unexpected character `{other}`"))),
        };
        out.push((tok, pos));
        i += len;
        col += len;
    }
    out.push((Tok::End, Pos { line, col }));
    Ok(out)
}

/// Recognises `U:e]` right after an opening bracket. Returns the two names
/// and the number of characters consumed including the closing bracket.
fn named_update(rest: &[char]) -> Option<(String, String, usize)> {
    let end = rest.iter().position(|&c| c == ']' || c == '[' || c == '\n')?;
    if rest[end] != ']' {
        return None;
    }
    let inner: String = rest[..end].iter().collect();
    let (u, e) = inner.split_once(':')?;
    let (u, e) = (u.trim(), e.trim());
    let ok = |s: &str| !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == ':');
    (ok(u) && ok(e)).then(|| (u.to_string(), e.to_string(), end + 1))
}

enum Props<'a> {
    Fixed(&'a Signature),
    Open(&'a mut Signature),
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    props: Props<'a>,
    updates: &'a UpdateRegistry,
}

impl Parser<'_> {
    fn sig(&self) -> &Signature {
        match &self.props {
            Props::Fixed(s) => s,
            Props::Open(s) => s,
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, pos: Pos, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError { line: pos.line, col: pos.col, kind })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let pos = self.pos();
        let got = self.bump();
        if got == want {
            Ok(())
        } else {
            self.fail(pos, ParseErrorKind::Syntax(format!("expected {want}, found {got}")))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implication()?;
        if *self.peek() == Tok::DArrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.conjunction()?;
        if *self.peek() == Tok::Bar {
            self.bump();
            let rhs = self.disjunction()?;
            return Ok(Formula::or(lhs, rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.conjunction()?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn agent_list(&mut self) -> Result<Vec<AgentId>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        loop {
            let pos = self.pos();
            match self.bump() {
                Tok::Ident(name) => match self.sig().agent(&name) {
                    Some(i) => out.push(i),
                    None => return self.fail(pos, ParseErrorKind::UnknownAgent(name)),
                },
                other => return self.fail(pos, ParseErrorKind::Syntax(format!("expected agent name, found {other}"))),
            }
            match self.bump() {
                Tok::Comma => continue,
                Tok::RBrace => return Ok(out),
                other => {
                    return self.fail(self.toks[self.at - 1].1, ParseErrorKind::Syntax(format!("expected `,` or `}}`, found {other}")))
                }
            }
        }
    }

    fn one_agent(&mut self) -> Result<AgentId, ParseError> {
        let pos = self.pos();
        let agents = self.agent_list()?;
        match agents[..] {
            [i] => Ok(i),
            _ => self.fail(pos, ParseErrorKind::Syntax("modality takes exactly one agent".into())),
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Tilde => Ok(Formula::not(self.unary()?)),
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::LBracket => self.public_update(pos),
            Tok::Named(u, e) => {
                let Some(model) = self.updates.get(&u) else {
                    return self.fail(pos, ParseErrorKind::UnknownUpdate(u));
                };
                let Ok(point) = model.point(&e) else {
                    return self.fail(pos, ParseErrorKind::UnknownAction { model: u, action: e });
                };
                Ok(Formula::update(point, self.unary()?))
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => Ok(Formula::Top),
                "false" => Ok(Formula::bot()),
                "K" | "Kh" | "H" | "Hh" | "B" => {
                    let i = self.one_agent()?;
                    let f = self.unary()?;
                    Ok(match word.as_str() {
                        "K" => Formula::know(i, f),
                        "Kh" => Formula::k_hat(i, f),
                        "H" => Formula::hope(i, f),
                        "Hh" => Formula::h_hat(i, f),
                        _ => Formula::belief(i, f),
                    })
                }
                _ => self.atom(pos, word),
            },
            other => self.fail(pos, ParseErrorKind::Syntax(format!("expected a formula, found {other}"))),
        }
    }

    fn atom(&mut self, pos: Pos, name: String) -> Result<Formula, ParseError> {
        let found = match &mut self.props {
            Props::Fixed(sig) => sig.prop(&name),
            Props::Open(sig) => sig.intern_prop(&name).ok(),
        };
        match found {
            Some(p) => Ok(Formula::Atom(p)),
            None => self.fail(pos, ParseErrorKind::UnknownProp(name)),
        }
    }

    fn public_update(&mut self, open: Pos) -> Result<Formula, ParseError> {
        let mut items = vec![self.formula()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.formula()?);
        }
        self.expect(Tok::RBracket)?;
        let n = self.sig().agent_count();
        let vector = if *self.peek() == Tok::LBrace {
            if items.len() != 1 {
                return self.fail(open, ParseErrorKind::Syntax("an agent-indexed update takes one formula".into()));
            }
            let group = self.agent_list()?;
            trivial_vector_except(n, &group, &items[0])
        } else {
            if items.len() != n {
                return self.fail(open, ParseErrorKind::Arity { expected: n, got: items.len() });
            }
            items
        };
        Ok(Formula::public(vector, self.unary()?))
    }
}

fn run(text: &str, props: Props<'_>, updates: &UpdateRegistry) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0, props, updates };
    let f = p.formula()?;
    let pos = p.pos();
    match p.bump() {
        Tok::End => Ok(f),
        other => p.fail(pos, ParseErrorKind::Syntax(format!("unexpected {other} after formula"))),
    }
}

/// Parses a formula over a fixed signature.
pub fn parse(text: &str, sig: &Signature, updates: &UpdateRegistry) -> Result<Formula, ParseError> {
    run(text, Props::Fixed(sig), updates)
}

/// Parses a formula, adding unseen propositions to the signature.
pub fn parse_open(text: &str, sig: &mut Signature, updates: &UpdateRegistry) -> Result<Formula, ParseError> {
    run(text, Props::Open(sig), updates)
}
