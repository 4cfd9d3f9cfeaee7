//! Rule language: abstract syntax, the `.mnlp` text format and its parser.
//!
//! One rule per line:
//!
//! ```text
//! # comment
//! p <-P q &G not r ; 0.7
//! s <-ei(2,1,3,2) p ; [0.4,0.5]
//! q <-P 1 ; 0.6
//! ```
//!
//! Body connectives (`&G`, `&P`, `&L` on the unit lattice, `*` on intervals)
//! share one precedence level and associate to the left; parentheses group.
//! `not` applies to atoms only. Facts are rules whose body is the constant top.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::lattice::{Adjoint, Aggregator, EiParams, LatticeKind, LatticeSignature, TruthValue};

/// Validation failures for programs built in memory or parsed from text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("invalid atom name `{0}`")]
    InvalidAtom(String),
    #[error("atom `{0}` occurs more than once in the body")]
    DuplicateBodyAtom(String),
    #[error("{what} belongs to the {found} lattice but the program is over the {expected} lattice")]
    KindMismatch { what: String, expected: LatticeKind, found: LatticeKind },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("`not` must be applied directly to an atom")]
    NegatedNonAtom,
    #[error("weight {0} lies outside the program lattice")]
    WeightOutsideLattice(String),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// A propositional symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom(String);

impl Atom {
    pub fn new(name: impl Into<String>) -> Result<Self, ProgramError> {
        let name = name.into();
        let mut chars = name.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            && name != "not";
        if valid {
            Ok(Atom(name))
        } else {
            Err(ProgramError::InvalidAtom(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for Atom {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Binary connective allowed inside rule bodies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connective {
    Godel,
    Product,
    Lukasiewicz,
    /// Componentwise interval product, `*`.
    IntervalProduct,
}

impl Connective {
    pub fn adjoint(&self) -> Adjoint {
        match self {
            Connective::Godel => Adjoint::Godel,
            Connective::Product => Adjoint::Product,
            Connective::Lukasiewicz => Adjoint::Lukasiewicz,
            Connective::IntervalProduct => Adjoint::Ei(EiParams::PLAIN),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Connective::Godel => "&G",
            Connective::Product => "&P",
            Connective::Lukasiewicz => "&L",
            Connective::IntervalProduct => "*",
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.adjoint().kind()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BodyExpr {
    Prop(Atom),
    NegProp(Atom),
    Const(TruthValue),
    Conn(Connective, Box<BodyExpr>, Box<BodyExpr>),
    Agg(Aggregator, Vec<BodyExpr>),
}

impl BodyExpr {
    pub fn conn(op: Connective, left: BodyExpr, right: BodyExpr) -> Self {
        BodyExpr::Conn(op, Box::new(left), Box::new(right))
    }

    /// Atom occurrences in left-to-right order, flagged when negated.
    pub fn atoms(&self) -> Vec<(&Atom, bool)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a Atom, bool)>) {
        match self {
            BodyExpr::Prop(a) => out.push((a, false)),
            BodyExpr::NegProp(a) => out.push((a, true)),
            BodyExpr::Const(_) => {}
            BodyExpr::Conn(_, l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
            BodyExpr::Agg(_, args) => args.iter().for_each(|a| a.collect_atoms(out)),
        }
    }

    /// True when no default negation occurs.
    pub fn is_positive(&self) -> bool {
        self.atoms().iter().all(|(_, neg)| !neg)
    }

    fn check_kind(&self, kind: LatticeKind) -> Result<(), ProgramError> {
        let fail = |what: String, found| Err(ProgramError::KindMismatch { what, expected: kind, found });
        match self {
            BodyExpr::Prop(_) | BodyExpr::NegProp(_) => Ok(()),
            BodyExpr::Const(v) if v.kind() != kind => fail(format!("constant {v}"), v.kind()),
            BodyExpr::Const(_) => Ok(()),
            BodyExpr::Conn(op, _, _) if op.kind() != kind => fail(format!("connective {}", op.symbol()), op.kind()),
            BodyExpr::Conn(_, l, r) => {
                l.check_kind(kind)?;
                r.check_kind(kind)
            }
            BodyExpr::Agg(_, args) => args.iter().try_for_each(|a| a.check_kind(kind)),
        }
    }
}

impl fmt::Display for BodyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyExpr::Prop(a) => write!(f, "{a}"),
            BodyExpr::NegProp(a) => write!(f, "not {a}"),
            BodyExpr::Const(v) => write!(f, "{v}"),
            BodyExpr::Conn(op, l, r) => {
                write!(f, "{l} {} ", op.symbol())?;
                if matches!(**r, BodyExpr::Conn(..)) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            BodyExpr::Agg(agg, args) => {
                write!(f, "@{}(", agg.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A weighted rule `head <-label body ; weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    head: Atom,
    implication: Adjoint,
    body: BodyExpr,
    weight: TruthValue,
}

impl Rule {
    pub fn new(head: Atom, implication: Adjoint, body: BodyExpr, weight: TruthValue) -> Result<Self, ProgramError> {
        let kind = weight.kind();
        if implication.kind() != kind {
            return Err(ProgramError::KindMismatch {
                what: format!("implication {implication}"),
                expected: kind,
                found: implication.kind(),
            });
        }
        body.check_kind(kind)?;
        let mut seen = BTreeSet::new();
        for (atom, _) in body.atoms() {
            if !seen.insert(atom) {
                return Err(ProgramError::DuplicateBodyAtom(atom.to_string()));
            }
        }
        Ok(Rule { head, implication, body, weight })
    }

    /// A fact: body is the constant top.
    pub fn fact(head: Atom, implication: Adjoint, weight: TruthValue) -> Result<Self, ProgramError> {
        Rule::new(head, implication, BodyExpr::Const(TruthValue::top(weight.kind())), weight)
    }

    pub fn head(&self) -> &Atom {
        &self.head
    }

    pub fn implication(&self) -> Adjoint {
        self.implication
    }

    pub fn body(&self) -> &BodyExpr {
        &self.body
    }

    pub fn weight(&self) -> TruthValue {
        self.weight
    }

    pub fn kind(&self) -> LatticeKind {
        self.weight.kind()
    }

    pub(crate) fn with_body(&self, body: BodyExpr) -> Rule {
        Rule { body, ..self.clone() }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <-{} {} ; {}", self.head, self.implication, self.body, self.weight)
    }
}

/// A finite list of weighted rules over one lattice, with its symbol set.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    kind: LatticeKind,
    rules: Vec<Rule>,
    symbols: Arc<[Atom]>,
}

impl Program {
    pub fn new(kind: LatticeKind, rules: Vec<Rule>) -> Result<Self, ProgramError> {
        Program::with_symbols(kind, rules, std::iter::empty())
    }

    /// Like [`Program::new`], with extra symbols that need not occur in any rule.
    pub fn with_symbols(
        kind: LatticeKind,
        rules: Vec<Rule>,
        extra: impl IntoIterator<Item = Atom>,
    ) -> Result<Self, ProgramError> {
        for rule in &rules {
            if rule.kind() != kind {
                return Err(ProgramError::KindMismatch {
                    what: format!("rule `{rule}`"),
                    expected: kind,
                    found: rule.kind(),
                });
            }
        }
        let mut symbols: BTreeSet<Atom> = extra.into_iter().collect();
        for rule in &rules {
            symbols.insert(rule.head.clone());
            symbols.extend(rule.body.atoms().into_iter().map(|(a, _)| a.clone()));
        }
        Ok(Program { kind, rules, symbols: symbols.into_iter().collect() })
    }

    pub fn empty(kind: LatticeKind) -> Self {
        Program { kind, rules: Vec::new(), symbols: Arc::from(Vec::new()) }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// All symbols, sorted.
    pub fn symbols(&self) -> &Arc<[Atom]> {
        &self.symbols
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.binary_search_by(|a| a.as_str().cmp(name)).ok()
    }

    pub fn signature(&self) -> &'static LatticeSignature {
        LatticeSignature::builtin(self.kind)
    }

    pub fn is_positive(&self) -> bool {
        self.rules.iter().all(|r| r.body.is_positive())
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Same symbol set, different rules. Rules must only mention known symbols.
    pub(crate) fn with_rules(&self, rules: Vec<Rule>) -> Program {
        Program { kind: self.kind, rules, symbols: Arc::clone(&self.symbols) }
    }
}

pub fn parse_program(text: &str, kind: LatticeKind) -> Result<Program, ParseError> {
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let tokens = lex_line(line, idx + 1)?;
        if tokens.len() == 1 {
            continue; // only End
        }
        let mut parser = LineParser { tokens, pos: 0, kind, line: idx + 1 };
        rules.push(parser.rule()?);
    }
    Program::new(kind, rules).map_err(|e| ParseError { line: 1, column: 1, kind: e.into() })
}

/// Inverse of [`parse_program`]: one rule per line, in program order.
pub fn render_program(p: &Program) -> String {
    p.rules.iter().map(|r| format!("{r}\n")).collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Arrow,
    Semi,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    At,
    Op(Connective),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number {s}"),
            Tok::Arrow => f.write_str("`<-`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::At => f.write_str("`@`"),
            Tok::Op(c) => write!(f, "`{}`", c.symbol()),
            Tok::End => f.write_str("end of line"),
        }
    }
}

struct Spanned {
    tok: Tok,
    column: usize,
}

fn lex_line(line: &str, line_no: usize) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |column: usize, msg: String| ParseError { line: line_no, column, kind: ParseErrorKind::Syntax(msg) };
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let single = match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '@' => Some(Tok::At),
            '*' => Some(Tok::Op(Connective::IntervalProduct)),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, column });
            i += 1;
            continue;
        }
        match c {
            '<' => {
                if chars.get(i + 1) != Some(&'-') {
                    return Err(err(column, "expected `<-`".into()));
                }
                out.push(Spanned { tok: Tok::Arrow, column });
                i += 2;
            }
            '&' => {
                let op = match chars.get(i + 1) {
                    Some('G') => Connective::Godel,
                    Some('P') => Connective::Product,
                    Some('L') => Connective::Lukasiewicz,
                    _ => return Err(err(column, "expected one of `&G`, `&P`, `&L`".into())),
                };
                out.push(Spanned { tok: Tok::Op(op), column });
                i += 2;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if chars.get(i) == Some(&'.') {
                    i += 1;
                    if !chars.get(i).is_some_and(|c| c.is_ascii_digit()) {
                        return Err(err(i + 1, "expected digits after decimal point".into()));
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                out.push(Spanned { tok: Tok::Number(chars[start..i].iter().collect()), column });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), column });
            }
            other => return Err(err(column, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned { tok: Tok::End, column: chars.len() + 1 });
    Ok(out)
}

struct LineParser {
    tokens: Vec<Spanned>,
    pos: usize,
    kind: LatticeKind,
    line: usize,
}

impl LineParser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn column(&self) -> usize {
        self.tokens[self.pos].column
    }

    fn error_at(&self, column: usize, kind: impl Into<ParseErrorKind>) -> ParseError {
        ParseError { line: self.line, column, kind: kind.into() }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let msg = format!("expected {expected}, found {}", self.peek());
        self.error_at(self.column(), ParseErrorKind::Syntax(msg))
    }

    fn next(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let column = self.column();
        match self.peek().clone() {
            Tok::Ident(name) if name != "not" => {
                self.next();
                Atom::new(name).map_err(|e| self.error_at(column, e))
            }
            _ => Err(self.unexpected("an atom")),
        }
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let head = self.atom()?;
        self.expect(Tok::Arrow, "`<-`")?;
        let tag_column = self.column();
        let implication = self.tag()?;
        if implication.kind() != self.kind {
            return Err(
                self.error_at(tag_column, self.kind_mismatch(format!("implication {implication}"), implication.kind()))
            );
        }
        let mut seen = BTreeSet::new();
        let body = self.body(&mut seen)?;
        self.expect(Tok::Semi, "`;` or a connective")?;
        let weight_column = self.column();
        let weight = self.constant()?;
        if weight.kind() != self.kind {
            return Err(self.error_at(weight_column, ParseErrorKind::WeightOutsideLattice(weight.to_string())));
        }
        if *self.peek() != Tok::End {
            return Err(self.unexpected("end of line"));
        }
        Rule::new(head, implication, body, weight).map_err(|e| self.error_at(1, e))
    }

    fn kind_mismatch(&self, what: String, found: LatticeKind) -> ProgramError {
        ProgramError::KindMismatch { what, expected: self.kind, found }
    }

    fn tag(&mut self) -> Result<Adjoint, ParseError> {
        let column = self.column();
        let name = match self.peek() {
            Tok::Ident(name) => name.clone(),
            _ => return Err(self.unexpected("an implication tag (G, P, L or ei(..))")),
        };
        self.next();
        match name.as_str() {
            "G" => Ok(Adjoint::Godel),
            "P" => Ok(Adjoint::Product),
            "L" => Ok(Adjoint::Lukasiewicz),
            "ei" => {
                self.expect(Tok::LParen, "`(`")?;
                let mut n = [0u32; 4];
                for (i, slot) in n.iter_mut().enumerate() {
                    if i > 0 {
                        self.expect(Tok::Comma, "`,`")?;
                    }
                    *slot = self.natural()?;
                }
                self.expect(Tok::RParen, "`)`")?;
                EiParams::new(n[0], n[1], n[2], n[3]).map(Adjoint::Ei).map_err(|e| self.error_at(column, e))
            }
            other => Err(self.error_at(column, ParseErrorKind::Syntax(format!("unknown implication tag `{other}`")))),
        }
    }

    fn natural(&mut self) -> Result<u32, ParseError> {
        let column = self.column();
        match self.peek().clone() {
            Tok::Number(text) => {
                self.next();
                text.parse::<u32>().map_err(|_| {
                    self.error_at(column, ParseErrorKind::Syntax(format!("expected a natural number, found {text}")))
                })
            }
            _ => Err(self.unexpected("a natural number")),
        }
    }

    fn number(&mut self) -> Result<(f64, usize), ParseError> {
        let column = self.column();
        match self.peek().clone() {
            Tok::Number(text) => {
                self.next();
                // The lexer only admits digits with an optional fraction.
                Ok((text.parse::<f64>().expect("lexed decimal"), column))
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn constant(&mut self) -> Result<TruthValue, ParseError> {
        match self.peek() {
            Tok::Number(_) => {
                let (v, column) = self.number()?;
                TruthValue::unit(v).map_err(|e| self.error_at(column, e))
            }
            Tok::LBracket => {
                let column = self.column();
                self.next();
                let (lo, _) = self.number()?;
                self.expect(Tok::Comma, "`,`")?;
                let (hi, _) = self.number()?;
                self.expect(Tok::RBracket, "`]`")?;
                TruthValue::interval(lo, hi).map_err(|e| self.error_at(column, e))
            }
            _ => Err(self.unexpected("a constant")),
        }
    }

    fn body(&mut self, seen: &mut BTreeSet<Atom>) -> Result<BodyExpr, ParseError> {
        let mut left = self.term(seen)?;
        while let Tok::Op(op) = *self.peek() {
            let column = self.column();
            if op.kind() != self.kind {
                return Err(self.error_at(column, self.kind_mismatch(format!("connective {}", op.symbol()), op.kind())));
            }
            self.next();
            let right = self.term(seen)?;
            left = BodyExpr::conn(op, left, right);
        }
        Ok(left)
    }

    fn note_atom(&self, seen: &mut BTreeSet<Atom>, atom: &Atom, column: usize) -> Result<(), ParseError> {
        if seen.insert(atom.clone()) {
            Ok(())
        } else {
            Err(self.error_at(column, ProgramError::DuplicateBodyAtom(atom.to_string())))
        }
    }

    fn term(&mut self, seen: &mut BTreeSet<Atom>) -> Result<BodyExpr, ParseError> {
        let column = self.column();
        match self.peek().clone() {
            Tok::Ident(name) if name == "not" => {
                self.next();
                let atom_column = self.column();
                match self.peek() {
                    Tok::Ident(n) if n != "not" => {}
                    Tok::End | Tok::Semi => return Err(self.unexpected("an atom after `not`")),
                    _ => return Err(self.error_at(atom_column, ParseErrorKind::NegatedNonAtom)),
                }
                let atom = self.atom()?;
                self.note_atom(seen, &atom, atom_column)?;
                Ok(BodyExpr::NegProp(atom))
            }
            Tok::Ident(_) => {
                let atom = self.atom()?;
                self.note_atom(seen, &atom, column)?;
                Ok(BodyExpr::Prop(atom))
            }
            Tok::Number(_) | Tok::LBracket => {
                let v = self.constant()?;
                if v.kind() != self.kind {
                    return Err(self.error_at(column, self.kind_mismatch(format!("constant {v}"), v.kind())));
                }
                Ok(BodyExpr::Const(v))
            }
            Tok::LParen => {
                self.next();
                let inner = self.body(seen)?;
                self.expect(Tok::RParen, "`)` or a connective")?;
                Ok(inner)
            }
            Tok::At => {
                self.next();
                let name_column = self.column();
                let name = match self.next() {
                    Tok::Ident(n) => n,
                    _ => {
                        return Err(
                            self.error_at(name_column, ParseErrorKind::Syntax("expected an aggregator name".into()))
                        )
                    }
                };
                let agg = LatticeSignature::builtin(self.kind)
                    .aggregator(&name)
                    .map_err(|e| self.error_at(name_column, e))?;
                self.expect(Tok::LParen, "`(`")?;
                let mut args = vec![self.body(seen)?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    args.push(self.body(seen)?);
                }
                self.expect(Tok::RParen, "`,` or `)`")?;
                Ok(BodyExpr::Agg(agg, args))
            }
            _ => Err(self.unexpected("an atom, `not`, a constant, `(` or `@`")),
        }
    }
}
