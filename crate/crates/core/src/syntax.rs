//! ASCII concrete syntax: lexer, recursive-descent parser, printer and the
//! `---`-separated sentence file format.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! formula := quant | iff
//! quant   := ("forall" | "exists") ident ":" ("P" | "N") "." formula
//! iff     := imp ("<->" formula)?
//! imp     := or ("->" formula)?
//! or      := and ("|" formula)?
//! and     := unary ("&" formula)?
//! unary   := "~" unary | quant | "(" formula ")" | atom
//! atom    := B(..) | D(..) | Name(..) | p "==" q | term ("=" | "<" | "<=") term
//! term    := prod (("+" | "-") prod)*
//! prod    := neg ("*" neg)*
//! neg     := "-" neg | prim
//! prim    := ident | int | d(p,q) | ang(p,v,q) | "(" term ")"
//! ```
//!
//! Binary connectives are right-associative. The right operand of a binary
//! connective may be a quantifier, whose body then extends to the end.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::defs;
use crate::logic::{well_sorted, Formula, Lang, LangKind, Sort, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub byte_start: usize,
    pub byte_end: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub span: SourceSpan,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.span.line, self.span.column, sev, self.message)
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Tilde,
    Amp,
    Bar,
    Arrow,
    DArrow,
    EqEq,
    Eq,
    Lt,
    Le,
    Plus,
    Star,
    Minus,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Int(s) => format!("integer '{s}'"),
            Tok::Eof => "end of input".to_string(),
            other => format!("'{}'", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Tilde => "~",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Arrow => "->",
            Tok::DArrow => "<->",
            Tok::EqEq => "==",
            Tok::Eq => "=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Plus => "+",
            Tok::Star => "*",
            Tok::Minus => "-",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let span_at = |start: usize, end: usize, line: usize, col: usize| SourceSpan {
        byte_start: start,
        byte_end: end,
        line,
        column: col,
    };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let start_col = col;
        let next = bytes.get(i + 1).map(|(_, c)| *c);
        let next2 = bytes.get(i + 2).map(|(_, c)| *c);
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].1.is_ascii_alphanumeric() || bytes[j].1 == '_' || bytes[j].1 == '\'') {
                j += 1;
            }
            let end = bytes.get(j).map(|(p, _)| *p).unwrap_or(text.len());
            (Tok::Ident(text[pos..end].to_string()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                j += 1;
            }
            let end = bytes.get(j).map(|(p, _)| *p).unwrap_or(text.len());
            (Tok::Int(text[pos..end].to_string()), j - i)
        } else {
            match (c, next, next2) {
                ('<', Some('-'), Some('>')) => (Tok::DArrow, 3),
                ('<', Some('='), _) => (Tok::Le, 2),
                ('<', _, _) => (Tok::Lt, 1),
                ('-', Some('>'), _) => (Tok::Arrow, 2),
                ('-', _, _) => (Tok::Minus, 1),
                ('=', Some('='), _) => (Tok::EqEq, 2),
                ('=', _, _) => (Tok::Eq, 1),
                ('(', _, _) => (Tok::LParen, 1),
                (')', _, _) => (Tok::RParen, 1),
                (',', _, _) => (Tok::Comma, 1),
                ('.', _, _) => (Tok::Dot, 1),
                (':', _, _) => (Tok::Colon, 1),
                ('~', _, _) => (Tok::Tilde, 1),
                ('&', _, _) => (Tok::Amp, 1),
                ('|', _, _) => (Tok::Bar, 1),
                ('+', _, _) => (Tok::Plus, 1),
                ('*', _, _) => (Tok::Star, 1),
                _ => {
                    return Err(ParseDiagnostic {
                        span: span_at(pos, pos + c.len_utf8(), line, start_col),
                        message: format!("unexpected character '{c}'"),
                        severity: Severity::Error,
                    })
                }
            }
        };
        let end = bytes.get(i + len).map(|(p, _)| *p).unwrap_or(text.len());
        out.push(Token { tok, span: span_at(pos, end, line, start_col) });
        i += len;
        col += len;
    }
    out.push(Token { tok: Tok::Eof, span: span_at(text.len(), text.len(), line, col) });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

const MAX_DEPTH: usize = 200;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    lang: Lang,
    scope: Vec<(String, Sort)>,
    free: BTreeMap<String, Sort>,
    depth: usize,
}

type PResult<T> = Result<T, ParseDiagnostic>;

fn error(span: SourceSpan, message: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic { span, message: message.into(), severity: Severity::Error }
}

/// Parse one sentence (or open formula) of `lang`.
pub fn parse(text: &str, lang: Lang) -> Result<Formula, Vec<ParseDiagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0, lang, scope: Vec::new(), free: BTreeMap::new(), depth: 0 };
    let f = p.formula().map_err(|d| vec![d])?;
    if p.peek() != &Tok::Eof {
        let t = p.cur().clone();
        return Err(vec![error(t.span, format!("unexpected {} after formula", t.tok.describe()))]);
    }
    let diags = well_sorted(&f, lang);
    if !diags.is_empty() {
        let span = p.toks[0].span;
        return Err(diags.into_iter().map(|d| error(span, d.to_string())).collect());
    }
    Ok(f)
}

impl Parser {
    fn cur(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek(&self) -> &Tok {
        &self.cur().tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.cur().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            let t = self.cur().clone();
            Err(error(t.span, format!("expected {what}, found {}", t.tok.describe())))
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(error(self.cur().span, "nesting too deep"));
        }
        Ok(())
    }

    fn formula(&mut self) -> PResult<Formula> {
        self.enter()?;
        let r = if matches!(self.peek(), Tok::Ident(s) if s == "forall" || s == "exists") {
            self.quantifier()
        } else {
            self.iff()
        };
        self.depth -= 1;
        r
    }

    fn quantifier(&mut self) -> PResult<Formula> {
        let kw = self.bump();
        let is_all = matches!(&kw.tok, Tok::Ident(s) if s == "forall");
        let name_tok = self.bump();
        let name = match name_tok.tok {
            Tok::Ident(s) if !is_reserved(&s) => s,
            other => return Err(error(name_tok.span, format!("expected a variable name, found {}", other.describe()))),
        };
        self.expect(Tok::Colon, "':' and a sort")?;
        let sort_tok = self.bump();
        let sort = match &sort_tok.tok {
            Tok::Ident(s) if s == "P" => Sort::Point,
            Tok::Ident(s) if s == "N" => Sort::Number,
            other => return Err(error(sort_tok.span, format!("expected sort P or N, found {}", other.describe()))),
        };
        if sort == Sort::Number && !self.lang.has_numbers() {
            return Err(error(sort_tok.span, "number quantifier outside Ed/Eda"));
        }
        self.expect(Tok::Dot, "'.' after the binder")?;
        self.scope.push((name.clone(), sort));
        let body = self.formula();
        self.scope.pop();
        let body = Box::new(body?);
        Ok(if is_all { Formula::ForAll(name, sort, body) } else { Formula::Exists(name, sort, body) })
    }

    fn binary_rhs(&mut self) -> PResult<Formula> {
        self.formula()
    }

    fn iff(&mut self) -> PResult<Formula> {
        let l = self.imp()?;
        if *self.peek() == Tok::DArrow {
            self.bump();
            let r = self.binary_rhs()?;
            return Ok(Formula::iff(l, r));
        }
        Ok(l)
    }

    fn imp(&mut self) -> PResult<Formula> {
        let l = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let r = self.imp_rhs()?;
            return Ok(Formula::implies(l, r));
        }
        Ok(l)
    }

    // The right operand of `->` binds tighter than `<->`.
    fn imp_rhs(&mut self) -> PResult<Formula> {
        self.enter()?;
        let r = if self.at_quantifier() { self.quantifier() } else { self.imp() };
        self.depth -= 1;
        r
    }

    fn or(&mut self) -> PResult<Formula> {
        let l = self.and()?;
        if *self.peek() == Tok::Bar {
            self.bump();
            self.enter()?;
            let r = if self.at_quantifier() { self.quantifier() } else { self.or() };
            self.depth -= 1;
            return Ok(Formula::or(l, r?));
        }
        Ok(l)
    }

    fn and(&mut self) -> PResult<Formula> {
        let l = self.unary()?;
        if *self.peek() == Tok::Amp {
            self.bump();
            self.enter()?;
            let r = if self.at_quantifier() { self.quantifier() } else { self.and() };
            self.depth -= 1;
            return Ok(Formula::and(l, r?));
        }
        Ok(l)
    }

    fn at_quantifier(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "forall" || s == "exists")
    }

    fn unary(&mut self) -> PResult<Formula> {
        self.enter()?;
        let r = self.unary_inner();
        self.depth -= 1;
        r
    }

    fn unary_inner(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                if self.at_quantifier() {
                    return Ok(Formula::not(self.quantifier()?));
                }
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(s) if s == "forall" || s == "exists" => self.quantifier(),
            Tok::LParen => {
                // Either a parenthesized formula or a parenthesized term that
                // begins an atom. Try the formula reading first.
                let save = self.pos;
                let saved_free = self.free.clone();
                let open = self.bump();
                match self.formula() {
                    Ok(f) if *self.peek() == Tok::RParen => {
                        self.bump();
                        if matches!(
                            self.peek(),
                            Tok::Plus | Tok::Star | Tok::Minus | Tok::Eq | Tok::Lt | Tok::Le | Tok::EqEq
                        ) {
                            self.pos = save;
                            self.free = saved_free;
                            return self.atom();
                        }
                        Ok(f)
                    }
                    first => {
                        let formula_err = match first {
                            Err(e) => e,
                            Ok(_) => {
                                let t = self.cur().clone();
                                if t.tok == Tok::Eof {
                                    error(t.span, "unclosed parenthesis")
                                } else {
                                    error(t.span, format!("expected ')', found {}", t.tok.describe()))
                                }
                            }
                        };
                        let _ = open;
                        self.pos = save;
                        self.free = saved_free;
                        match self.atom() {
                            Ok(f) => Ok(f),
                            Err(term_err) if term_err.span.byte_start > formula_err.span.byte_start => Err(term_err),
                            Err(_) => Err(formula_err),
                        }
                    }
                }
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<Formula> {
        let start = self.cur().clone();
        if let Tok::Ident(name) = &start.tok {
            if *self.peek_at(1) == Tok::LParen {
                match name.as_str() {
                    "B" | "D" => {
                        if self.lang.kind != LangKind::E2 {
                            return Err(error(start.span, "Tarski atom outside E2"));
                        }
                        self.bump();
                        let args = self.point_args(if name == "B" { 3 } else { 4 }, name)?;
                        let mut it = args.into_iter();
                        let mut n = || it.next().unwrap();
                        return Ok(if name == "B" {
                            Formula::TarskiB(n(), n(), n())
                        } else {
                            Formula::TarskiD(n(), n(), n(), n())
                        });
                    }
                    "d" | "ang" => {}
                    _ => return self.defined_atom(),
                }
            }
            if *self.peek_at(1) == Tok::EqEq {
                let a = self.point_var()?;
                self.bump();
                let b = self.point_var()?;
                return Ok(Formula::EqPoint(a, b));
            }
        }
        if !self.lang.has_numbers() {
            return Err(error(start.span, format!("expected an E2 atom, found {}", start.tok.describe())));
        }
        let lhs = self.term()?;
        let op = self.bump();
        let rhs = match op.tok {
            Tok::Eq | Tok::Lt | Tok::Le => self.term()?,
            Tok::EqEq => return Err(error(op.span, "'==' compares points; use '=' for numbers")),
            other => {
                return Err(error(op.span, format!("expected '=', '<' or '<=' after a number term, found {}", other.describe())))
            }
        };
        Ok(match op.tok {
            Tok::Eq => Formula::EqNum(lhs, rhs),
            Tok::Lt => Formula::Lt(lhs, rhs),
            _ => Formula::or(Formula::Lt(lhs.clone(), rhs.clone()), Formula::EqNum(lhs, rhs)),
        })
    }

    fn defined_atom(&mut self) -> PResult<Formula> {
        let t = self.bump();
        let name = match &t.tok {
            Tok::Ident(s) => s.clone(),
            _ => unreachable!(),
        };
        let sig = match defs::signature(&name) {
            Some(s) => s,
            None => return Err(error(t.span, format!("unknown defined atom '{name}'"))),
        };
        if !sig.available_in(self.lang) {
            return Err(error(t.span, format!("defined atom {name} is not available in {}", self.lang)));
        }
        let open = self.expect(Tok::LParen, "'('")?;
        if name == "Coll" {
            return self.coll_chain(&open);
        }
        let mut args = Vec::new();
        for (i, s) in sig.params.iter().enumerate() {
            if i > 0 {
                self.arg_sep(&open, &name, sig.params.len())?;
            }
            args.push(match s {
                Sort::Point => self.point_var()?,
                Sort::Number => self.term()?,
            });
        }
        self.arg_close(&open, &name, sig.params.len())?;
        Ok(Formula::Defined(name, args))
    }

    // `Coll(a,b,c,...)` with more than three points abbreviates
    // `Coll(a,b,c) & Coll(a,b,x) & ...`: every later point lies on line ab.
    fn coll_chain(&mut self, open: &Token) -> PResult<Formula> {
        let mut pts = vec![self.point_var()?];
        while pts.len() < 3 || *self.peek() == Tok::Comma {
            self.arg_sep(open, "Coll", 3)?;
            pts.push(self.point_var()?);
        }
        self.arg_close(open, "Coll", 3)?;
        let (a, b) = (pts[0].clone(), pts[1].clone());
        let mut atoms: Vec<Formula> =
            pts[2..].iter().map(|c| Formula::Defined("Coll".into(), vec![a.clone(), b.clone(), c.clone()])).collect();
        let mut f = atoms.pop().expect("at least three points");
        while let Some(g) = atoms.pop() {
            f = Formula::and(g, f);
        }
        Ok(f)
    }

    fn arg_sep(&mut self, open: &Token, name: &str, arity: usize) -> PResult<()> {
        match self.peek() {
            Tok::Comma => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Err(error(self.cur().span, "unclosed argument list")),
            Tok::RParen => Err(error(self.cur().span, format!("{name} expects {arity} arguments"))),
            other => {
                let _ = open;
                Err(error(self.cur().span, format!("expected ',' in argument list, found {}", other.describe())))
            }
        }
    }

    fn arg_close(&mut self, open: &Token, name: &str, arity: usize) -> PResult<()> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Err(error(self.cur().span, "unclosed argument list")),
            Tok::Comma => Err(error(self.cur().span, format!("{name} expects {arity} arguments"))),
            other => {
                let _ = open;
                Err(error(self.cur().span, format!("expected ')' to close argument list, found {}", other.describe())))
            }
        }
    }

    fn point_args(&mut self, n: usize, name: &str) -> PResult<Vec<Term>> {
        let open = self.expect(Tok::LParen, "'('")?;
        let mut out = Vec::new();
        for i in 0..n {
            if i > 0 {
                self.arg_sep(&open, name, n)?;
            }
            out.push(self.point_var()?);
        }
        self.arg_close(&open, name, n)?;
        Ok(out)
    }

    fn use_var(&mut self, name: &str, sort: Sort, span: SourceSpan) -> PResult<()> {
        if let Some((_, s)) = self.scope.iter().rev().find(|(n, _)| n == name) {
            if *s != sort {
                return Err(error(span, format!("variable {name} is bound as {s} but used as {sort}")));
            }
            return Ok(());
        }
        match self.free.get(name) {
            Some(s) if *s != sort => Err(error(span, format!("free variable {name} is used as both {s} and {sort}"))),
            Some(_) => Ok(()),
            None => {
                self.free.insert(name.to_string(), sort);
                Ok(())
            }
        }
    }

    fn point_var(&mut self) -> PResult<Term> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.use_var(&s, Sort::Point, t.span)?;
                Ok(Term::PointVar(s))
            }
            Tok::Eof => Err(error(t.span, "unclosed argument list")),
            other => Err(error(t.span, format!("expected a point variable, found {}", other.describe()))),
        }
    }

    fn term(&mut self) -> PResult<Term> {
        self.enter()?;
        let r = self.sum();
        self.depth -= 1;
        r
    }

    fn sum(&mut self) -> PResult<Term> {
        let mut l = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let r = self.product()?;
                    l = Term::add(l, r);
                }
                Tok::Minus => {
                    self.bump();
                    let r = self.product()?;
                    l = Term::add(l, Term::neg(r));
                }
                _ => return Ok(l),
            }
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut l = self.negation()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let r = self.negation()?;
            l = Term::mul(l, r);
        }
        Ok(l)
    }

    fn negation(&mut self) -> PResult<Term> {
        if *self.peek() == Tok::Minus {
            self.bump();
            self.enter()?;
            let r = self.negation();
            self.depth -= 1;
            return Ok(Term::neg(r?));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Term> {
        let t = self.bump();
        match t.tok {
            Tok::Int(s) => match s.parse::<u64>() {
                Ok(0) => Ok(Term::Zero),
                Ok(1) => Ok(Term::One),
                Ok(n) => Ok(Term::Lit(n)),
                Err(_) => Err(error(t.span, "integer literal too large")),
            },
            Tok::Ident(s) if s == "d" && *self.peek() == Tok::LParen => {
                let args = self.point_args(2, "d")?;
                let mut it = args.into_iter();
                Ok(Term::Dist(Box::new(it.next().unwrap()), Box::new(it.next().unwrap())))
            }
            Tok::Ident(s) if s == "ang" && *self.peek() == Tok::LParen => {
                if !self.lang.has_angles() {
                    return Err(error(t.span, "Angle requires Eda"));
                }
                let args = self.point_args(3, "ang")?;
                let mut it = args.into_iter();
                Ok(Term::Angle(
                    Box::new(it.next().unwrap()),
                    Box::new(it.next().unwrap()),
                    Box::new(it.next().unwrap()),
                ))
            }
            Tok::Ident(s) if *self.peek() == Tok::LParen => {
                Err(error(t.span, format!("'{s}' is not a number-valued function")))
            }
            Tok::Ident(s) if !is_reserved(&s) => {
                self.use_var(&s, Sort::Number, t.span)?;
                Ok(Term::NumVar(s))
            }
            Tok::LParen => {
                let inner = self.term()?;
                match self.peek() {
                    Tok::RParen => {
                        self.bump();
                        Ok(inner)
                    }
                    Tok::Eof => Err(error(self.cur().span, "unclosed parenthesis")),
                    other => {
                        let d = other.describe();
                        Err(error(self.cur().span, format!("expected ')', found {d}")))
                    }
                }
            }
            Tok::Eof => Err(error(t.span, "unexpected end of input, expected a term")),
            other => Err(error(t.span, format!("expected a term, found {}", other.describe()))),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(s, "forall" | "exists")
}

// ---------------------------------------------------------------------------
// Printer

const P_IFF: u8 = 1;
const P_IMP: u8 = 2;
const P_OR: u8 = 3;
const P_AND: u8 = 4;
const P_NOT: u8 = 5;
const P_ATOM: u8 = 6;

/// Canonical text with the fewest parentheses that parse back to `f`.
pub fn print(f: &Formula) -> String {
    let mut s = String::new();
    fmt_formula(f, 0, false, &mut s);
    s
}

fn le_sugar(f: &Formula) -> Option<(&Term, &Term)> {
    if let Formula::Or(a, b) = f {
        if let (Formula::Lt(s1, t1), Formula::EqNum(s2, t2)) = (&**a, &**b) {
            if s1 == s2 && t1 == t2 {
                return Some((s1, t1));
            }
        }
    }
    None
}

fn prec(f: &Formula) -> u8 {
    if le_sugar(f).is_some() {
        return P_ATOM;
    }
    match f {
        Formula::Iff(..) => P_IFF,
        Formula::Implies(..) => P_IMP,
        Formula::Or(..) => P_OR,
        Formula::And(..) => P_AND,
        Formula::Not(..) => P_NOT,
        Formula::ForAll(..) | Formula::Exists(..) => 0,
        _ => P_ATOM,
    }
}

// `closed`: the printed text must not extend to the right (a following
// operator would otherwise be swallowed by a quantifier body).
fn fmt_formula(f: &Formula, min: u8, closed: bool, out: &mut String) {
    let p = prec(f);
    let paren = if p == 0 { closed } else { p < min };
    if paren {
        out.push('(');
        fmt_formula(f, 0, false, out);
        out.push(')');
        return;
    }
    if let Some((s, t)) = le_sugar(f) {
        fmt_term(s, 0, out);
        out.push_str(" <= ");
        fmt_term(t, 0, out);
        return;
    }
    match f {
        Formula::EqPoint(a, b) => {
            fmt_term(a, 0, out);
            out.push_str(" == ");
            fmt_term(b, 0, out);
        }
        Formula::EqNum(a, b) | Formula::Lt(a, b) => {
            fmt_term(a, 0, out);
            out.push_str(if matches!(f, Formula::EqNum(..)) { " = " } else { " < " });
            fmt_term(b, 0, out);
        }
        Formula::TarskiB(..) | Formula::TarskiD(..) | Formula::Defined(..) => {
            let name = match f {
                Formula::TarskiB(..) => "B",
                Formula::TarskiD(..) => "D",
                Formula::Defined(n, _) => n.as_str(),
                _ => unreachable!(),
            };
            out.push_str(name);
            out.push('(');
            for (i, t) in f.atom_terms().into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                fmt_term(t, 0, out);
            }
            out.push(')');
        }
        Formula::Not(a) => {
            out.push('~');
            // A negated quantifier is always parenthesized for readability.
            if a.is_quantifier() {
                out.push('(');
                fmt_formula(a, 0, false, out);
                out.push(')');
            } else {
                fmt_formula(a, P_NOT, closed, out);
            }
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            let (op, pr) = match f {
                Formula::And(..) => (" & ", P_AND),
                Formula::Or(..) => (" | ", P_OR),
                Formula::Implies(..) => (" -> ", P_IMP),
                _ => (" <-> ", P_IFF),
            };
            fmt_formula(a, pr + 1, true, out);
            out.push_str(op);
            if b.is_quantifier() && !closed {
                fmt_formula(b, 0, false, out);
            } else {
                fmt_formula(b, pr, closed, out);
            }
        }
        Formula::ForAll(v, s, b) | Formula::Exists(v, s, b) => {
            out.push_str(if matches!(f, Formula::ForAll(..)) { "forall " } else { "exists " });
            out.push_str(v);
            out.push(':');
            out.push_str(&s.to_string());
            out.push_str(". ");
            fmt_formula(b, 0, false, out);
        }
    }
}

const T_SUM: u8 = 1;
const T_PROD: u8 = 2;
const T_NEG: u8 = 3;

pub fn print_term(t: &Term) -> String {
    let mut s = String::new();
    fmt_term(t, 0, &mut s);
    s
}

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Add(..) => T_SUM,
        Term::Mul(..) => T_PROD,
        Term::Neg(..) => T_NEG,
        _ => 4,
    }
}

fn fmt_term(t: &Term, min: u8, out: &mut String) {
    if term_prec(t) < min {
        out.push('(');
        fmt_term(t, 0, out);
        out.push(')');
        return;
    }
    match t {
        Term::Zero => out.push('0'),
        Term::One => out.push('1'),
        Term::Lit(n) => out.push_str(&n.to_string()),
        Term::NumVar(n) | Term::PointVar(n) => out.push_str(n),
        Term::Add(a, b) => {
            fmt_term(a, T_SUM, out);
            if let Term::Neg(inner) = &**b {
                out.push_str(" - ");
                fmt_term(inner, T_PROD, out);
            } else {
                out.push_str(" + ");
                fmt_term(b, T_PROD, out);
            }
        }
        Term::Mul(a, b) => {
            fmt_term(a, T_PROD, out);
            out.push_str(" * ");
            fmt_term(b, T_NEG, out);
        }
        Term::Neg(a) => {
            out.push('-');
            fmt_term(a, T_NEG, out);
        }
        Term::Dist(a, b) => {
            out.push_str("d(");
            fmt_term(a, 0, out);
            out.push(',');
            fmt_term(b, 0, out);
            out.push(')');
        }
        Term::Angle(a, b, c) => {
            out.push_str("ang(");
            fmt_term(a, 0, out);
            out.push(',');
            fmt_term(b, 0, out);
            out.push(',');
            fmt_term(c, 0, out);
            out.push(')');
        }
    }
}

// ---------------------------------------------------------------------------
// Sentence files

/// One `---`-separated block of a sentence file.
#[derive(Debug, Clone)]
pub struct Block {
    pub name: Option<String>,
    /// `# key: value` header lines, including `name`.
    pub headers: BTreeMap<String, String>,
    /// The sentence text with header and comment lines removed.
    pub text: String,
    pub lang: Lang,
    pub result: Result<Formula, Vec<ParseDiagnostic>>,
}

/// Split a sentence file into blocks and parse each one. A `# lang:` header
/// overrides `default_lang` for its block. Errors are reported per block
/// with spans relative to the whole file.
pub fn parse_blocks(text: &str, default_lang: Lang) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut cur_lines: Vec<(usize, usize, &str)> = Vec::new();
    let mut offset = 0usize;
    let flush = |lines: &mut Vec<(usize, usize, &str)>, blocks: &mut Vec<Block>| {
        if lines.iter().all(|(_, _, l)| l.trim().is_empty()) {
            lines.clear();
            return;
        }
        blocks.push(build_block(lines, default_lang));
        lines.clear();
    };
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let stripped = line.trim_end_matches(['\n', '\r']);
        if stripped.trim() == "---" {
            flush(&mut cur_lines, &mut blocks);
        } else {
            cur_lines.push((i + 1, offset, stripped));
        }
        offset += line.len();
    }
    flush(&mut cur_lines, &mut blocks);
    blocks
}

fn build_block(lines: &[(usize, usize, &str)], default_lang: Lang) -> Block {
    let mut headers = BTreeMap::new();
    let mut body = String::new();
    // Map from body byte offset to (file line, file byte offset) per line.
    let mut line_map: Vec<(usize, usize, usize)> = Vec::new();
    for (lineno, off, l) in lines {
        let t = l.trim_start();
        if let Some(rest) = t.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                let k = k.trim();
                if !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                    headers.insert(k.to_string(), v.trim().to_string());
                }
            }
            continue;
        }
        if !line_map.is_empty() {
            body.push('\n');
        }
        line_map.push((body.len(), *lineno, *off));
        body.push_str(l);
    }
    let lang = headers
        .get("lang")
        .and_then(|l| Lang::from_name(l))
        .map(|l| l.with_dim(default_lang.dim))
        .unwrap_or(default_lang);
    let result = parse(&body, lang).map_err(|ds| {
        ds.into_iter()
            .map(|mut d| {
                let idx = line_map.iter().rposition(|(b, _, _)| *b <= d.span.byte_start).unwrap_or(0);
                if let Some((b, lineno, off)) = line_map.get(idx) {
                    let shift = *off as isize - *b as isize;
                    d.span.byte_start = (d.span.byte_start as isize + shift).max(0) as usize;
                    d.span.byte_end = (d.span.byte_end as isize + shift).max(0) as usize;
                    d.span.line = *lineno;
                }
                d
            })
            .collect()
    });
    Block { name: headers.get("name").cloned(), headers, text: body.trim_end().to_string(), lang, result }
}
