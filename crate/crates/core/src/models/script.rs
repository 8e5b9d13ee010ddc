//! A small recipe language for computing sample points and existential
//! witnesses.
//!
//! A script is a list of `let name = expr` lines. Expressions mix numbers
//! and points:
//!
//! ```text
//! # Extension of segment ab by x, as a two-case recipe.
//! let c = if d(a,b) ~ 0 then b + x * axis(0) else a + (1 + x / d(a,b)) * (b - a)
//! ```
//!
//! Arithmetic is `+ - * /` with unary minus, `p.0` reads a coordinate and
//! `[x, y]` builds a point (padded with zeros to the model dimension).
//! Conditions are `<`, `<=`, `~` (equal within tolerance), `coin(p)`,
//! combined with `and`, `or`, `not`. Built-in functions are listed in
//! [`FUNCTIONS`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::geom::{
    add, dot, mobius_from_origin, mobius_to_origin, norm, regular_simplex, scale, sub, ModelKind, PointValue,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    Num(f64),
    Pt(PointValue),
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Num(x) => write!(f, "{x}"),
            Val::Pt(p) => write!(f, "{p:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unbound name '{name}'")]
    Unbound { line: usize, name: String },
    #[error("line {line}: {msg}")]
    Type { line: usize, msg: String },
    #[error("line {line}: recipe domain error: {msg}")]
    Domain { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CmpOp {
    Lt,
    Le,
    Approx,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(f64),
    Var(String),
    Vec(Vec<Expr>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Coord(Box<Expr>, usize),
    Call(String, Vec<Expr>),
    If(Box<Cond>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Cond {
    Cmp(CmpOp, Expr, Expr),
    Coin(Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

#[derive(Debug, Clone, PartialEq)]
struct Step {
    name: String,
    expr: Expr,
    line: usize,
}

/// A parsed recipe.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    steps: Vec<Step>,
}

/// Built-in functions with their arities.
pub const FUNCTIONS: &[(&str, usize)] = &[
    ("d", 2),
    ("ang", 3),
    ("sqrt", 1),
    ("abs", 1),
    ("min", 2),
    ("max", 2),
    ("geo", 3),
    ("lerp", 3),
    ("mid", 2),
    ("perp", 1),
    ("unit", 1),
    ("norm", 1),
    ("dot", 2),
    ("rand", 2),
    ("rpoint", 0),
    ("around", 2),
    ("rorth", 1),
    ("simplex", 2),
    ("axis", 1),
    ("polar", 2),
    ("rot", 3),
    ("move", 3),
    ("refl", 3),
    ("foot", 3),
    ("meet", 4),
    ("altitude", 3),
    ("origin", 0),
];

/// Height of a triangle over side `c` given its three sides, where `a` and
/// `b` are the other two sides: `sqrt(2a²b² + 2b²c² + 2c²a² - a⁴ - b⁴ - c⁴) / (2c)`.
pub fn altitude(a: f64, b: f64, c: f64) -> f64 {
    let r = 2.0 * a * a * b * b + 2.0 * b * b * c * c + 2.0 * c * c * a * a - a.powi(4) - b.powi(4) - c.powi(4);
    r.max(0.0).sqrt() / (2.0 * c)
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(&'static str),
}

fn lex(line: &str, ln: usize) -> Result<Vec<Tok>, ScriptError> {
    let mut out = Vec::new();
    let b = line.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < b.len() && (b[i + 1] as char).is_ascii_digit()) {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                i += 1;
                if i < b.len() && (b[i] == b'-' || b[i] == b'+') {
                    i += 1;
                }
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
            }
            let s = &line[start..i];
            let v: f64 = s.parse().map_err(|_| ScriptError::Parse { line: ln, msg: format!("bad number '{s}'") })?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                i += 1;
            }
            out.push(Tok::Ident(line[start..i].to_string()));
        } else {
            let two = if i + 1 < b.len() { &line[i..i + 2] } else { "" };
            let sym: &'static str = match (two, c) {
                ("<=", _) => "<=",
                (_, '<') => "<",
                (_, '~') => "~",
                (_, '=') => "=",
                (_, '+') => "+",
                (_, '-') => "-",
                (_, '*') => "*",
                (_, '/') => "/",
                (_, '(') => "(",
                (_, ')') => ")",
                (_, '[') => "[",
                (_, ']') => "]",
                (_, ',') => ",",
                (_, '.') => ".",
                _ => return Err(ScriptError::Parse { line: ln, msg: format!("unexpected character '{c}'") }),
            };
            i += sym.len();
            out.push(Tok::Sym(sym));
        }
    }
    Ok(out)
}

struct P<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl P<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ScriptError> {
        Err(ScriptError::Parse { line: self.line, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ScriptError> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ScriptError> {
        if self.is_kw(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ScriptError> {
        if self.is_kw("if") {
            self.pos += 1;
            let c = self.cond()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        self.sum()
    }

    fn cond(&mut self) -> Result<Cond, ScriptError> {
        let mut c = self.cond_and()?;
        while self.is_kw("or") {
            self.pos += 1;
            c = Cond::Or(Box::new(c), Box::new(self.cond_and()?));
        }
        Ok(c)
    }

    fn cond_and(&mut self) -> Result<Cond, ScriptError> {
        let mut c = self.cond_atom()?;
        while self.is_kw("and") {
            self.pos += 1;
            c = Cond::And(Box::new(c), Box::new(self.cond_atom()?));
        }
        Ok(c)
    }

    fn cond_atom(&mut self) -> Result<Cond, ScriptError> {
        if self.is_kw("not") {
            self.pos += 1;
            return Ok(Cond::Not(Box::new(self.cond_atom()?)));
        }
        if self.is_kw("coin") {
            self.pos += 1;
            self.expect_sym("(")?;
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(Cond::Coin(e));
        }
        // A parenthesised condition; otherwise the parenthesis opens a term.
        if self.is_sym("(") {
            let save = self.pos;
            self.pos += 1;
            if let Ok(c) = self.cond() {
                if self.is_sym(")") {
                    self.pos += 1;
                    return Ok(c);
                }
            }
            self.pos = save;
        }
        let a = self.sum()?;
        let op = if self.is_sym("<=") {
            CmpOp::Le
        } else if self.is_sym("<") {
            CmpOp::Lt
        } else if self.is_sym("~") {
            CmpOp::Approx
        } else {
            return self.err("expected a comparison");
        };
        self.pos += 1;
        let b = self.sum()?;
        Ok(Cond::Cmp(op, a, b))
    }

    fn sum(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.prod()?;
        loop {
            let op = if self.is_sym("+") {
                BinOp::Add
            } else if self.is_sym("-") {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            self.pos += 1;
            e = Expr::Bin(op, Box::new(e), Box::new(self.prod()?));
        }
    }

    fn prod(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.unary()?;
        loop {
            let op = if self.is_sym("*") {
                BinOp::Mul
            } else if self.is_sym("/") {
                BinOp::Div
            } else {
                return Ok(e);
            };
            self.pos += 1;
            e = Expr::Bin(op, Box::new(e), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ScriptError> {
        if self.is_sym("-") {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let mut e = self.primary()?;
        while self.is_sym(".") {
            self.pos += 1;
            match self.peek() {
                Some(Tok::Num(n)) if n.fract() == 0.0 && *n >= 0.0 => {
                    let i = *n as usize;
                    self.pos += 1;
                    e = Expr::Coord(Box::new(e), i);
                }
                _ => return self.err("expected a coordinate index after '.'"),
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ScriptError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Sym("[")) => {
                self.pos += 1;
                let mut items = vec![self.expr()?];
                while self.is_sym(",") {
                    self.pos += 1;
                    items.push(self.expr()?);
                }
                self.expect_sym("]")?;
                Ok(Expr::Vec(items))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.is_sym("(") {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.is_sym(")") {
                        args.push(self.expr()?);
                        while self.is_sym(",") {
                            self.pos += 1;
                            args.push(self.expr()?);
                        }
                    }
                    self.expect_sym(")")?;
                    match FUNCTIONS.iter().find(|(n, _)| *n == name) {
                        None => self.err(format!("unknown function '{name}'")),
                        Some((_, k)) if *k != args.len() => {
                            self.err(format!("{name} takes {k} arguments, got {}", args.len()))
                        }
                        Some(_) => Ok(Expr::Call(name, args)),
                    }
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => self.err("expected an expression"),
        }
    }
}

impl Script {
    /// Parse a script. Line numbers in errors are 1-based, offset by
    /// `first_line - 1`.
    pub fn parse_at(text: &str, first_line: usize) -> Result<Script, ScriptError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = first_line + i;
            let toks = lex(raw, ln)?;
            if toks.is_empty() {
                continue;
            }
            let mut p = P { toks: &toks, pos: 0, line: ln };
            p.expect_kw("let")?;
            let name = match p.peek() {
                Some(Tok::Ident(n)) => n.clone(),
                _ => return p.err("expected a name after 'let'"),
            };
            p.pos += 1;
            p.expect_sym("=")?;
            let expr = p.expr()?;
            if p.pos != toks.len() {
                return p.err("unexpected trailing input");
            }
            steps.push(Step { name, expr, line: ln });
        }
        Ok(Script { steps })
    }

    pub fn parse(text: &str) -> Result<Script, ScriptError> {
        Script::parse_at(text, 1)
    }

    /// Names assigned by the script, in order.
    pub fn outputs(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.name.as_str()).collect()
    }

    /// For every assigned name, the external inputs it depends on.
    pub fn dependencies(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut deps: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for s in &self.steps {
            let mut names = BTreeSet::new();
            expr_vars(&s.expr, &mut names);
            let mut ext = BTreeSet::new();
            for n in names {
                match deps.get(&n) {
                    Some(d) => ext.extend(d.iter().cloned()),
                    None => {
                        ext.insert(n);
                    }
                }
            }
            deps.insert(s.name.clone(), ext);
        }
        deps
    }

    /// Run the script, extending `env`.
    pub fn run(&self, env: &mut ScriptEnv<'_>) -> Result<(), ScriptError> {
        for s in &self.steps {
            let v = env.eval(&s.expr, s.line)?;
            env.vars.insert(s.name.clone(), v);
        }
        Ok(())
    }
}

fn expr_vars(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Num(_) => {}
        Expr::Var(n) => {
            out.insert(n.clone());
        }
        Expr::Vec(xs) | Expr::Call(_, xs) => xs.iter().for_each(|x| expr_vars(x, out)),
        Expr::Neg(a) | Expr::Coord(a, _) => expr_vars(a, out),
        Expr::Bin(_, a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Expr::If(c, a, b) => {
            cond_vars(c, out);
            expr_vars(a, out);
            expr_vars(b, out);
        }
    }
}

fn cond_vars(c: &Cond, out: &mut BTreeSet<String>) {
    match c {
        Cond::Cmp(_, a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Cond::Coin(a) => expr_vars(a, out),
        Cond::And(a, b) | Cond::Or(a, b) => {
            cond_vars(a, out);
            cond_vars(b, out);
        }
        Cond::Not(a) => cond_vars(a, out),
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Model, tolerance, sampling box, random stream and variable bindings for
/// running scripts.
pub struct ScriptEnv<'a> {
    pub model: ModelKind,
    pub tol: f64,
    /// Half-width of the coordinate box (Cartesian) or radius cap (disk).
    pub bound: f64,
    pub rng: &'a mut ChaCha8Rng,
    pub vars: BTreeMap<String, Val>,
}

impl ScriptEnv<'_> {
    pub fn random_point(&mut self) -> PointValue {
        random_point(self.model, self.bound, self.rng)
    }

    fn num(&self, v: Val, line: usize, what: &str) -> Result<f64, ScriptError> {
        match v {
            Val::Num(x) => Ok(x),
            Val::Pt(_) => Err(ScriptError::Type { line, msg: format!("{what}: expected a number, got a point") }),
        }
    }

    fn pt(&self, v: Val, line: usize, what: &str) -> Result<PointValue, ScriptError> {
        match v {
            Val::Pt(p) => Ok(p),
            Val::Num(_) => Err(ScriptError::Type { line, msg: format!("{what}: expected a point, got a number") }),
        }
    }

    fn eval(&mut self, e: &Expr, line: usize) -> Result<Val, ScriptError> {
        Ok(match e {
            Expr::Num(x) => Val::Num(*x),
            Expr::Var(n) => {
                self.vars.get(n).cloned().ok_or_else(|| ScriptError::Unbound { line, name: n.clone() })?
            }
            Expr::Vec(xs) => {
                let mut p = Vec::with_capacity(xs.len());
                for x in xs {
                    let v = self.eval(x, line)?;
                    p.push(self.num(v, line, "point literal")?);
                }
                if p.len() > self.model.dim() {
                    return Err(ScriptError::Type { line, msg: "point literal longer than the model dimension".into() });
                }
                p.resize(self.model.dim(), 0.0);
                Val::Pt(p)
            }
            Expr::Neg(a) => match self.eval(a, line)? {
                Val::Num(x) => Val::Num(-x),
                Val::Pt(p) => Val::Pt(scale(-1.0, &p)),
            },
            Expr::Coord(a, i) => {
                let v = self.eval(a, line)?;
                let p = self.pt(v, line, "coordinate access")?;
                Val::Num(*p.get(*i).ok_or_else(|| ScriptError::Type { line, msg: format!("no coordinate {i}") })?)
            }
            Expr::Bin(op, a, b) => {
                let (x, y) = (self.eval(a, line)?, self.eval(b, line)?);
                self.binop(*op, x, y, line)?
            }
            Expr::If(c, a, b) => {
                if self.cond(c, line)? {
                    self.eval(a, line)?
                } else {
                    self.eval(b, line)?
                }
            }
            Expr::Call(name, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, line)?);
                }
                self.call(name, vals, line)?
            }
        })
    }

    fn binop(&self, op: BinOp, x: Val, y: Val, line: usize) -> Result<Val, ScriptError> {
        use Val::*;
        let bad = || ScriptError::Type { line, msg: format!("cannot apply {op:?} to these operands") };
        Ok(match (op, x, y) {
            (BinOp::Add, Num(a), Num(b)) => Num(a + b),
            (BinOp::Sub, Num(a), Num(b)) => Num(a - b),
            (BinOp::Mul, Num(a), Num(b)) => Num(a * b),
            (BinOp::Div, Num(a), Num(b)) => {
                if b == 0.0 {
                    return Err(ScriptError::Domain { line, msg: "division by zero".into() });
                }
                Num(a / b)
            }
            (BinOp::Add, Pt(a), Pt(b)) => Pt(add(&a, &b)),
            (BinOp::Sub, Pt(a), Pt(b)) => Pt(sub(&a, &b)),
            (BinOp::Mul, Num(k), Pt(p)) | (BinOp::Mul, Pt(p), Num(k)) => Pt(scale(k, &p)),
            (BinOp::Div, Pt(p), Num(k)) => {
                if k == 0.0 {
                    return Err(ScriptError::Domain { line, msg: "division by zero".into() });
                }
                Pt(scale(1.0 / k, &p))
            }
            _ => return Err(bad()),
        })
    }

    fn cond(&mut self, c: &Cond, line: usize) -> Result<bool, ScriptError> {
        Ok(match c {
            Cond::Cmp(op, a, b) => {
                let (x, y) = (self.eval(a, line)?, self.eval(b, line)?);
                match (op, x, y) {
                    (CmpOp::Lt, Val::Num(a), Val::Num(b)) => a < b,
                    (CmpOp::Le, Val::Num(a), Val::Num(b)) => a <= b,
                    (CmpOp::Approx, Val::Num(a), Val::Num(b)) => (a - b).abs() <= self.tol,
                    (CmpOp::Approx, Val::Pt(a), Val::Pt(b)) => a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= self.tol),
                    _ => return Err(ScriptError::Type { line, msg: "ill-typed comparison".into() }),
                }
            }
            Cond::Coin(p) => {
                let v = self.eval(p, line)?;
                let p = self.num(v, line, "coin")?;
                self.rng.gen::<f64>() < p
            }
            Cond::And(a, b) => self.cond(a, line)? && self.cond(b, line)?,
            Cond::Or(a, b) => self.cond(a, line)? || self.cond(b, line)?,
            Cond::Not(a) => !self.cond(a, line)?,
        })
    }

    fn cartesian(&self, name: &str, line: usize) -> Result<(), ScriptError> {
        if self.model.is_disk() {
            return Err(ScriptError::Domain { line, msg: format!("{name} is only available in Cartesian models") });
        }
        Ok(())
    }

    fn call(&mut self, name: &str, args: Vec<Val>, line: usize) -> Result<Val, ScriptError> {
        let m = self.model;
        let mut it = args.into_iter();
        macro_rules! num {
            () => {{
                let v = it.next().expect("arity checked at parse time");
                self.num(v, line, name)?
            }};
        }
        macro_rules! pts {
            ($($n:ident),*) => {
                $(let $n = {
                    let v = it.next().expect("arity checked at parse time");
                    self.pt(v, line, name)?
                };)*
            };
        }
        Ok(match name {
            "d" => {
                pts!(p, q);
                Val::Num(m.dist(&p, &q))
            }
            "ang" => {
                pts!(p, v, q);
                Val::Num(m.angle(&p, &v, &q, self.tol))
            }
            "sqrt" => {
                let x = num!();
                if x < -self.tol {
                    return Err(ScriptError::Domain { line, msg: format!("square root of {x:e}") });
                }
                Val::Num(x.max(0.0).sqrt())
            }
            "abs" => Val::Num(num!().abs()),
            "min" => {
                let (a, b) = (num!(), num!());
                Val::Num(a.min(b))
            }
            "max" => {
                let (a, b) = (num!(), num!());
                Val::Num(a.max(b))
            }
            "geo" => {
                pts!(p, q);
                let t = num!();
                Val::Pt(m.geo(&p, &q, t))
            }
            "lerp" => {
                pts!(p, q);
                let s = num!();
                Val::Pt(m.lerp(&p, &q, s))
            }
            "mid" => {
                pts!(p, q);
                Val::Pt(m.midpoint(&p, &q, self.tol))
            }
            "perp" => {
                pts!(v);
                let mut w = vec![0.0; v.len()];
                w[0] = -v[1];
                w[1] = v[0];
                Val::Pt(w)
            }
            "unit" => {
                pts!(v);
                let n = norm(&v);
                if n == 0.0 {
                    return Err(ScriptError::Domain { line, msg: "unit of the zero vector".into() });
                }
                Val::Pt(scale(1.0 / n, &v))
            }
            "norm" => {
                pts!(v);
                Val::Num(norm(&v))
            }
            "dot" => {
                pts!(u, v);
                Val::Num(dot(&u, &v))
            }
            "rand" => {
                let (lo, hi) = (num!(), num!());
                Val::Num(if hi > lo { self.rng.gen_range(lo..hi) } else { lo })
            }
            "rpoint" => Val::Pt(self.random_point()),
            "around" => {
                pts!(p);
                let r = num!();
                Val::Pt(point_at_distance(m, &p, r, self.rng))
            }
            "rorth" => {
                pts!(v);
                let n = norm(&v);
                if n == 0.0 {
                    return Err(ScriptError::Domain { line, msg: "rorth of the zero vector".into() });
                }
                let u = scale(1.0 / n, &v);
                loop {
                    let w = random_unit(v.len(), self.rng);
                    let r = sub(&w, &scale(dot(&w, &u), &u));
                    let nr = norm(&r);
                    if nr > 1e-3 {
                        break Val::Pt(scale(1.0 / nr, &r));
                    }
                }
            }
            "simplex" => {
                let (k, i) = (num!(), num!());
                let (k, i) = (k as usize, i as usize);
                match regular_simplex(k, m.dim()) {
                    Some(v) if i < v.len() => Val::Pt(v[i].clone()),
                    _ => Val::Pt(self.random_point()),
                }
            }
            "axis" => {
                let i = num!() as usize;
                let mut p = vec![0.0; m.dim()];
                if i >= p.len() {
                    return Err(ScriptError::Domain { line, msg: format!("no axis {i}") });
                }
                p[i] = 1.0;
                Val::Pt(p)
            }
            "polar" => {
                let (r, deg) = (num!(), num!());
                let mut p = vec![0.0; m.dim()];
                p[0] = r * deg.to_radians().cos();
                p[1] = r * deg.to_radians().sin();
                Val::Pt(p)
            }
            "rot" => {
                pts!(x, c);
                let deg = num!();
                Val::Pt(rotate(m, &x, &c, deg))
            }
            "move" => {
                pts!(x, from, to);
                Val::Pt(match m {
                    ModelKind::Cartesian(_) => add(&sub(&x, &from), &to),
                    ModelKind::Disk => mobius_from_origin(&to, &mobius_to_origin(&from, &x)),
                })
            }
            "refl" => {
                self.cartesian(name, line)?;
                pts!(x, p, q);
                let f = foot(&x, &p, &q);
                Val::Pt(sub(&scale(2.0, &f), &x))
            }
            "foot" => {
                self.cartesian(name, line)?;
                pts!(x, p, q);
                Val::Pt(foot(&x, &p, &q))
            }
            "meet" => {
                self.cartesian(name, line)?;
                pts!(p, q, u, v);
                match meet(&p, &q, &u, &v) {
                    Some(x) => Val::Pt(x),
                    None => return Err(ScriptError::Domain { line, msg: "lines do not meet in one point".into() }),
                }
            }
            "altitude" => {
                let (a, b, c) = (num!(), num!(), num!());
                let r = 2.0 * a * a * b * b + 2.0 * b * b * c * c + 2.0 * c * c * a * a
                    - a.powi(4)
                    - b.powi(4)
                    - c.powi(4);
                if r < -self.tol || c == 0.0 {
                    return Err(ScriptError::Domain { line, msg: format!("no triangle with sides {a}, {b}, {c}") });
                }
                Val::Num(altitude(a, b, c))
            }
            "origin" => Val::Pt(vec![0.0; m.dim()]),
            other => return Err(ScriptError::Parse { line, msg: format!("unknown function '{other}'") }),
        })
    }
}

/// Orthogonal projection of `x` onto the line through `p` and `q`.
pub fn foot(x: &[f64], p: &[f64], q: &[f64]) -> PointValue {
    let u = sub(q, p);
    let uu = dot(&u, &u);
    if uu == 0.0 {
        return p.to_vec();
    }
    add(p, &scale(dot(&sub(x, p), &u) / uu, &u))
}

/// Intersection of lines `pq` and `uv`, or `None` when they are parallel
/// or degenerate. Least squares, so it also works for meeting lines in
/// higher dimensions.
pub fn meet(p: &[f64], q: &[f64], u: &[f64], v: &[f64]) -> Option<PointValue> {
    let (a, b) = (sub(q, p), sub(v, u));
    let w = sub(u, p);
    let (aa, ab, bb) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));
    let det = aa * bb - ab * ab;
    if det.abs() <= 1e-12 * aa * bb || aa == 0.0 || bb == 0.0 {
        return None;
    }
    let s = (dot(&w, &a) * bb - dot(&w, &b) * ab) / det;
    Some(add(p, &scale(s, &a)))
}

/// Rotation of `x` about `c` by `deg` degrees, in the plane of the first
/// two coordinates.
pub fn rotate(m: ModelKind, x: &[f64], c: &[f64], deg: f64) -> PointValue {
    let (s, co) = deg.to_radians().sin_cos();
    let turn = |v: &[f64]| {
        let mut w = v.to_vec();
        w[0] = co * v[0] - s * v[1];
        w[1] = s * v[0] + co * v[1];
        w
    };
    match m {
        ModelKind::Cartesian(_) => add(c, &turn(&sub(x, c))),
        ModelKind::Disk => mobius_from_origin(c, &turn(&mobius_to_origin(c, x))),
    }
}

pub fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> PointValue {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return scale(1.0 / n, &v);
        }
    }
}

/// Uniform point in the box `[-bound, bound]^n`, or in the disk of radius
/// `bound`.
pub fn random_point(m: ModelKind, bound: f64, rng: &mut ChaCha8Rng) -> PointValue {
    match m {
        ModelKind::Cartesian(n) => (0..n).map(|_| rng.gen_range(-bound..bound)).collect(),
        ModelKind::Disk => {
            let r = bound * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            vec![r * t.cos(), r * t.sin()]
        }
    }
}

/// A point at distance `r` from `p` in a random direction.
pub fn point_at_distance(m: ModelKind, p: &[f64], r: f64, rng: &mut ChaCha8Rng) -> PointValue {
    let u = random_unit(m.dim(), rng);
    match m {
        ModelKind::Cartesian(_) => add(p, &scale(r, &u)),
        ModelKind::Disk => mobius_from_origin(p, &scale((r / 2.0).tanh(), &u)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn run(src: &str, model: ModelKind, vars: &[(&str, Val)]) -> Result<BTreeMap<String, Val>, ScriptError> {
        let s = Script::parse(src)?;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut env = ScriptEnv {
            model,
            tol: 1e-9,
            bound: 10.0,
            rng: &mut rng,
            vars: vars.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        };
        s.run(&mut env)?;
        Ok(env.vars)
    }

    #[test]
    fn segment_extension_recipe_both_cases() {
        let src = "let c = if d(a,b) ~ 0 then b + x * axis(0) else a + (1 + x / d(a,b)) * (b - a)";
        let m = ModelKind::Cartesian(2);
        let out = run(src, m, &[("a", Val::Pt(vec![1.0, 1.0])), ("b", Val::Pt(vec![1.0, 1.0])), ("x", Val::Num(2.0))])
            .unwrap();
        assert_eq!(out["c"], Val::Pt(vec![3.0, 1.0]));
        let out = run(src, m, &[("a", Val::Pt(vec![0.0, 0.0])), ("b", Val::Pt(vec![3.0, 4.0])), ("x", Val::Num(5.0))])
            .unwrap();
        assert_eq!(out["c"], Val::Pt(vec![6.0, 8.0]));
    }

    #[test]
    fn parenthesised_conditions() {
        let out = run("let c = if not (1 < 2 and 3 < 2) then 1 else 0\nlet e = if (1 + 1) < 3 then 1 else 0", ModelKind::Cartesian(2), &[]).unwrap();
        assert_eq!(out["c"], Val::Num(1.0));
        assert_eq!(out["e"], Val::Num(1.0));
    }

    #[test]
    fn lines_meet_where_expected() {
        let x = meet(&[0.0, 0.0], &[2.0, 2.0], &[0.0, 2.0], &[2.0, 0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(meet(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn altitude_of_three_five_four() {
        assert!((altitude(3.0, 5.0, 4.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_square_root_is_a_domain_error() {
        let r = run("let y = sqrt(0 - 1)", ModelKind::Cartesian(2), &[]);
        assert!(matches!(r, Err(ScriptError::Domain { .. })));
        let ok = run("let y = sqrt(0 - 1e-12)", ModelKind::Cartesian(2), &[]).unwrap();
        assert_eq!(ok["y"], Val::Num(0.0));
    }

    #[test]
    fn unbound_and_parse_errors() {
        assert!(matches!(run("let y = z + 1", ModelKind::Cartesian(2), &[]), Err(ScriptError::Unbound { .. })));
        assert!(matches!(Script::parse("let y = frob(1)"), Err(ScriptError::Parse { .. })));
        assert!(matches!(Script::parse("y = 1"), Err(ScriptError::Parse { .. })));
    }

    #[test]
    fn dependencies_are_transitive() {
        let s = Script::parse("let k = d(a,b)\nlet t = lerp(c, e, k)\nlet u = rpoint()").unwrap();
        let deps = s.dependencies();
        let want: BTreeSet<String> = ["a", "b", "c", "e"].iter().map(|s| s.to_string()).collect();
        assert_eq!(deps["t"], want);
        assert!(deps["u"].is_empty());
    }

    #[test]
    fn disk_rotation_and_move_are_isometries() {
        let m = ModelKind::Disk;
        let (a, b, c) = ([0.2, 0.3], [-0.4, 0.1], [0.1, -0.5]);
        let d0 = m.dist(&a, &b);
        let ra = rotate(m, &a, &c, 37.0);
        let rb = rotate(m, &b, &c, 37.0);
        assert!((m.dist(&ra, &rb) - d0).abs() < 1e-12);
        assert!((m.angle(&a, &c, &ra, 1e-9) - 37.0).abs() < 1e-9);
    }

    #[test]
    fn simplex_falls_back_to_random_point() {
        let out = run("let p = simplex(4, 3)", ModelKind::Cartesian(2), &[]).unwrap();
        assert!(matches!(&out["p"], Val::Pt(p) if p.len() == 2));
        let out = run("let p = simplex(3, 1)", ModelKind::Cartesian(2), &[]).unwrap();
        assert_eq!(out["p"], Val::Pt(vec![1.0, 0.0]));
    }
}
