//! Reduction of distance (and some angle) sentences to real arithmetic.
//!
//! Points become tuples of number variables; every distance becomes a
//! fresh nonnegative variable whose square is the coordinate sum of
//! squares. Supported angle atoms become polynomial relations between
//! cosines. The result can be evaluated exactly over the rationals (when
//! quantifier-free) or written out for an external solver.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::defs::{self, DefsError, ExpandOptions};
use crate::logic::{eliminate_iff, fresh_name, prenex, split_prefix, Formula, Lang, Quant, Sort, Term};
use crate::syntax::print;
use crate::xlate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RcfError {
    #[error("unsupported angle atom: {0}")]
    UnsupportedAngleAtom(String),
    #[error("reduced formula has {size} nodes, over the cap of {cap}")]
    SizeExceeded { size: usize, cap: usize },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("formula is not quantifier-free")]
    NotQuantifierFree,
    #[error("not a real-arithmetic formula: {0}")]
    NotRcf(String),
    #[error("malformed solver output: {0}")]
    MalformedSolverOutput(String),
    #[error(transparent)]
    Defs(#[from] DefsError),
    #[error(transparent)]
    Xlate(#[from] xlate::XlateError),
}

/// A formula over the number sort only: polynomial (in)equalities and
/// number quantifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct RcfFormula(Formula);

impl RcfFormula {
    pub fn new(f: Formula) -> Result<RcfFormula, RcfError> {
        check_rcf(&f)?;
        Ok(RcfFormula(f))
    }

    pub fn formula(&self) -> &Formula {
        &self.0
    }

    /// Matrix of the prenex form. Bound names produced by `coordinatize`
    /// are unique, so the matrix keeps them.
    pub fn qf_matrix(&self) -> Formula {
        let p = prenex(&self.0);
        split_prefix(&p).1.clone()
    }
}

fn check_rcf(f: &Formula) -> Result<(), RcfError> {
    let bad = |what: &str| Err(RcfError::NotRcf(format!("{what} in {}", print(f))));
    match f {
        Formula::EqNum(a, b) | Formula::Lt(a, b) => {
            for t in [a, b] {
                if !term_is_rcf(t) {
                    return bad("point, distance or angle term");
                }
            }
            Ok(())
        }
        Formula::Not(a) => check_rcf(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            check_rcf(a)?;
            check_rcf(b)
        }
        Formula::ForAll(_, Sort::Number, b) | Formula::Exists(_, Sort::Number, b) => check_rcf(b),
        Formula::ForAll(..) | Formula::Exists(..) => bad("point quantifier"),
        _ => bad("geometric atom"),
    }
}

fn term_is_rcf(t: &Term) -> bool {
    match t {
        Term::Zero | Term::One | Term::Lit(_) | Term::NumVar(_) => true,
        Term::Add(a, b) | Term::Mul(a, b) => term_is_rcf(a) && term_is_rcf(b),
        Term::Neg(a) => term_is_rcf(a),
        Term::PointVar(_) | Term::Dist(..) | Term::Angle(..) => false,
    }
}

// ---------------------------------------------------------------------------
// Angle constants

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CosSign {
    Any,
    Positive,
    Negative,
}

/// Cosine of a supported angle as the root of an integer polynomial,
/// optionally with a sign to pick one of two roots.
#[derive(Debug, Clone)]
pub struct AngleEntry {
    pub degrees: u64,
    /// Coefficients from the constant term up.
    pub poly: Vec<i64>,
    pub sign: CosSign,
    pub description: &'static str,
}

impl AngleEntry {
    pub fn cosine(&self) -> f64 {
        (self.degrees as f64).to_radians().cos()
    }

    /// `p(c) = 0` with negative coefficients moved to the right, plus the
    /// sign condition.
    pub fn constraint(&self, c: &Term) -> Formula {
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for (k, &a) in self.poly.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let mut t = (0..k).fold(None, |acc: Option<Term>, _| {
                Some(acc.map_or(c.clone(), |x| Term::mul(x, c.clone())))
            });
            let coef = lit(a.unsigned_abs());
            t = Some(match (t, a.unsigned_abs()) {
                (None, _) => coef,
                (Some(m), 1) => m,
                (Some(m), _) => Term::mul(coef, m),
            });
            if a > 0 { lhs.push(t.unwrap()) } else { rhs.push(t.unwrap()) }
        }
        let sum = |v: Vec<Term>| v.into_iter().reduce(Term::add).unwrap_or(Term::Zero);
        let eq = Formula::EqNum(sum(lhs), sum(rhs));
        match self.sign {
            CosSign::Any => eq,
            CosSign::Positive => Formula::and(eq, Formula::Lt(Term::Zero, c.clone())),
            CosSign::Negative => Formula::and(eq, Formula::Lt(c.clone(), Term::Zero)),
        }
    }
}

fn lit(n: u64) -> Term {
    match n {
        0 => Term::Zero,
        1 => Term::One,
        n => Term::Lit(n),
    }
}

/// The angle constants an angle atom may compare against.
#[derive(Debug, Clone)]
pub struct AngleAlgebraTable {
    pub entries: Vec<AngleEntry>,
}

impl Default for AngleAlgebraTable {
    fn default() -> Self {
        use CosSign::*;
        let e = |degrees, poly: &[i64], sign, description| AngleEntry { degrees, poly: poly.to_vec(), sign, description };
        AngleAlgebraTable {
            entries: vec![
                e(0, &[-1, 1], Any, "c = 1"),
                e(30, &[-3, 0, 4], Positive, "4c^2 = 3, c > 0"),
                e(45, &[-1, 0, 2], Positive, "2c^2 = 1, c > 0"),
                e(60, &[-1, 2], Any, "2c = 1"),
                e(90, &[0, 1], Any, "c = 0"),
                e(120, &[1, 2], Any, "2c = -1"),
                e(135, &[-1, 0, 2], Negative, "2c^2 = 1, c < 0"),
                e(150, &[-3, 0, 4], Negative, "4c^2 = 3, c < 0"),
                e(180, &[1, 1], Any, "c = -1"),
            ],
        }
    }
}

impl AngleAlgebraTable {
    pub fn get(&self, degrees: u64) -> Option<&AngleEntry> {
        self.entries.iter().find(|e| e.degrees == degrees)
    }
}

// ---------------------------------------------------------------------------
// Coordinatization

#[derive(Debug, Clone, Copy)]
pub struct CoordOptions {
    pub dim: usize,
    /// Largest allowed node count of the output.
    pub node_cap: usize,
}

impl Default for CoordOptions {
    fn default() -> Self {
        CoordOptions { dim: 2, node_cap: 200_000 }
    }
}

/// The length variable introduced for one distance occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthVar {
    pub name: String,
    pub p: String,
    pub q: String,
}

#[derive(Debug, Clone)]
pub struct Coordinatized {
    pub formula: RcfFormula,
    /// Coordinate variable names per point variable.
    pub coords: BTreeMap<String, Vec<String>>,
    pub lengths: Vec<LengthVar>,
}

pub fn coordinatize(f: &Formula, dim: usize) -> Result<Coordinatized, RcfError> {
    coordinatize_with(f, &CoordOptions { dim, ..CoordOptions::default() })
}

pub fn coordinatize_with(f: &Formula, opts: &CoordOptions) -> Result<Coordinatized, RcfError> {
    let lang = if f.contains_angle() { Lang::EDA } else { Lang::ED };
    // Tarski atoms go through their distance form first.
    let f = xlate::e2_to_ed(f)?;
    let f = eliminate_iff(&defs::expand(&f, lang, ExpandOptions::full())?);
    let mut cx = Coord {
        dim: opts.dim,
        used: f.all_names(),
        coords: BTreeMap::new(),
        lengths: Vec::new(),
        table: AngleAlgebraTable::default(),
        counter: 0,
    };
    let out = cx.formula(&f, true)?;
    let size = out.size();
    if size > opts.node_cap {
        return Err(RcfError::SizeExceeded { size, cap: opts.node_cap });
    }
    Ok(Coordinatized { formula: RcfFormula::new(out)?, coords: cx.coords, lengths: cx.lengths })
}

struct Coord {
    dim: usize,
    used: BTreeSet<String>,
    coords: BTreeMap<String, Vec<String>>,
    lengths: Vec<LengthVar>,
    table: AngleAlgebraTable,
    counter: usize,
}

/// Auxiliary variables of one atom with their defining constraints.
#[derive(Default)]
struct Aux {
    vars: Vec<String>,
    defs: Vec<Formula>,
    dists: BTreeMap<(String, String), String>,
}

impl Coord {
    fn name(&mut self, base: &str) -> String {
        let n = if self.used.contains(base) { fresh_name(base, &self.used) } else { base.to_string() };
        self.used.insert(n.clone());
        n
    }

    fn fresh(&mut self, base: &str) -> String {
        self.counter += 1;
        let cand = format!("{base}{}", self.counter);
        self.name(&cand)
    }

    fn coords_of(&mut self, p: &str) -> Vec<String> {
        if let Some(c) = self.coords.get(p) {
            return c.clone();
        }
        let axes = ["x", "y", "z"];
        let names: Vec<String> = (0..self.dim)
            .map(|i| {
                let base = if self.dim <= 3 { format!("{p}_{}", axes[i]) } else { format!("{p}_{}", i + 1) };
                self.name(&base)
            })
            .collect();
        self.coords.insert(p.to_string(), names.clone());
        names
    }

    fn formula(&mut self, f: &Formula, pos: bool) -> Result<Formula, RcfError> {
        if let Some((l, r)) = le_parts(f) {
            // `l <= r` is one atom: its two halves share their lengths.
            if l.contains_angle() || r.contains_angle() {
                return Err(RcfError::UnsupportedAngleAtom(print(f)));
            }
            let mut aux = Aux::default();
            let (l, r) = (self.term(l, &mut aux), self.term(r, &mut aux));
            return Ok(Self::bind(aux, le(l, r), pos));
        }
        Ok(match f {
            Formula::Not(a) => Formula::not(self.formula(a, !pos)?),
            Formula::And(a, b) => Formula::and(self.formula(a, pos)?, self.formula(b, pos)?),
            Formula::Or(a, b) => Formula::or(self.formula(a, pos)?, self.formula(b, pos)?),
            Formula::Implies(a, b) => Formula::implies(self.formula(a, !pos)?, self.formula(b, pos)?),
            Formula::Iff(..) => unreachable!("biconditionals eliminated"),
            Formula::ForAll(v, Sort::Point, b) | Formula::Exists(v, Sort::Point, b) => {
                let names = self.coords_of(v);
                let mut body = self.formula(b, pos)?;
                for n in names.iter().rev() {
                    body = if matches!(f, Formula::ForAll(..)) {
                        Formula::forall(n, Sort::Number, body)
                    } else {
                        Formula::exists(n, Sort::Number, body)
                    };
                }
                body
            }
            Formula::ForAll(v, s, b) => Formula::ForAll(v.clone(), *s, Box::new(self.formula(b, pos)?)),
            Formula::Exists(v, s, b) => Formula::Exists(v.clone(), *s, Box::new(self.formula(b, pos)?)),
            atom => self.atom(atom, pos)?,
        })
    }

    /// Bind the auxiliary variables at the atom: universally (as a
    /// hypothesis) where the atom occurs positively, existentially (as a
    /// conjunct) where it occurs negatively.
    fn bind(aux: Aux, body: Formula, pos: bool) -> Formula {
        if aux.vars.is_empty() {
            return body;
        }
        let defs = Formula::conj(aux.defs).expect("definitions present");
        let mut g = if pos { Formula::implies(defs, body) } else { Formula::and(defs, body) };
        for v in aux.vars.iter().rev() {
            g = if pos { Formula::forall(v, Sort::Number, g) } else { Formula::exists(v, Sort::Number, g) };
        }
        g
    }

    fn atom(&mut self, atom: &Formula, pos: bool) -> Result<Formula, RcfError> {
        match atom {
            Formula::EqPoint(p, q) => {
                let (cp, cq) = (self.coords_of(&pname(p)), self.coords_of(&pname(q)));
                Ok(Formula::conj(cp.iter().zip(&cq).map(|(a, b)| Formula::EqNum(Term::nv(a), Term::nv(b))).collect())
                    .expect("dimension at least one"))
            }
            Formula::EqNum(l, r) | Formula::Lt(l, r) if atom.contains_angle() => {
                if !matches!(atom, Formula::EqNum(..)) {
                    return Err(RcfError::UnsupportedAngleAtom(print(atom)));
                }
                let mut aux = Aux::default();
                let body = self.angle_atom(l, r, &mut aux).ok_or_else(|| RcfError::UnsupportedAngleAtom(print(atom)))?;
                Ok(Self::bind(aux, body, pos))
            }
            Formula::EqNum(l, r) | Formula::Lt(l, r) if dist_pair(l).is_some() && dist_pair(r).is_some() => {
                // Comparing two lengths is comparing their squares.
                let ((p, q), (u, v)) = (dist_pair(l).expect("checked"), dist_pair(r).expect("checked"));
                let (a, b) = (self.squared_distance(&p, &q), self.squared_distance(&u, &v));
                Ok(if matches!(atom, Formula::EqNum(..)) { Formula::EqNum(a, b) } else { Formula::Lt(a, b) })
            }
            Formula::EqNum(l, r) | Formula::Lt(l, r) => {
                let mut aux = Aux::default();
                let (l, r) = (self.term(l, &mut aux), self.term(r, &mut aux));
                let body = if matches!(atom, Formula::EqNum(..)) { Formula::EqNum(l, r) } else { Formula::Lt(l, r) };
                Ok(Self::bind(aux, body, pos))
            }
            other => Err(RcfError::NotRcf(format!("atom left after expansion: {}", print(other)))),
        }
    }

    fn term(&mut self, t: &Term, aux: &mut Aux) -> Term {
        match t {
            Term::Dist(p, q) => Term::nv(&self.length(&pname(p), &pname(q), aux)),
            // A squared length needs no square root.
            Term::Mul(a, b) if dist_pair(a).is_some() && sorted(dist_pair(a)) == sorted(dist_pair(b)) => {
                let (p, q) = dist_pair(a).expect("checked");
                self.squared_distance(&p, &q)
            }
            Term::Add(a, b) => Term::add(self.term(a, aux), self.term(b, aux)),
            Term::Mul(a, b) => Term::mul(self.term(a, aux), self.term(b, aux)),
            Term::Neg(a) => Term::neg(self.term(a, aux)),
            other => other.clone(),
        }
    }

    fn squared_distance(&mut self, p: &str, q: &str) -> Term {
        let (cp, cq) = (self.coords_of(p), self.coords_of(q));
        cp.iter()
            .zip(&cq)
            .map(|(a, b)| {
                let d = Term::add(Term::nv(b), Term::neg(Term::nv(a)));
                Term::mul(d.clone(), d)
            })
            .reduce(Term::add)
            .expect("dimension at least one")
    }

    fn length(&mut self, p: &str, q: &str, aux: &mut Aux) -> String {
        let key = if p <= q { (p.to_string(), q.to_string()) } else { (q.to_string(), p.to_string()) };
        if let Some(l) = aux.dists.get(&key) {
            return l.clone();
        }
        let l = self.fresh("len");
        let sq = self.squared_distance(p, q);
        aux.defs.push(le(Term::Zero, Term::nv(&l)));
        aux.defs.push(Formula::EqNum(Term::mul(Term::nv(&l), Term::nv(&l)), sq));
        aux.vars.push(l.clone());
        aux.dists.insert(key, l.clone());
        self.lengths.push(LengthVar { name: l.clone(), p: p.to_string(), q: q.to_string() });
        l
    }

    fn dot(&mut self, p: &str, v: &str, q: &str) -> Term {
        let (cp, cv, cq) = (self.coords_of(p), self.coords_of(v), self.coords_of(q));
        (0..self.dim)
            .map(|i| {
                let u = Term::add(Term::nv(&cp[i]), Term::neg(Term::nv(&cv[i])));
                let w = Term::add(Term::nv(&cq[i]), Term::neg(Term::nv(&cv[i])));
                Term::mul(u, w)
            })
            .reduce(Term::add)
            .expect("dimension at least one")
    }

    fn ne_points(&mut self, p: &str, q: &str) -> Formula {
        Formula::not(self.atom(&Formula::eq_pt(p, q), true).expect("point equality"))
    }

    /// Cosine variable of angle `p v q`; the angle at a degenerate vertex
    /// is 0, so its cosine is 1.
    fn cosine(&mut self, p: &str, v: &str, q: &str, aux: &mut Aux) -> String {
        let (lu, lw) = (self.length(v, p, aux), self.length(v, q, aux));
        let c = self.fresh("cos");
        let prod = Term::mul(Term::nv(&lu), Term::nv(&lw));
        let dot = self.dot(p, v, q);
        let degenerate = Formula::and(Formula::EqNum(prod.clone(), Term::Zero), Formula::EqNum(Term::nv(&c), Term::One));
        let proper = Formula::and(
            Formula::not(Formula::EqNum(prod.clone(), Term::Zero)),
            Formula::EqNum(Term::mul(Term::nv(&c), prod), dot),
        );
        aux.defs.push(Formula::or(degenerate, proper));
        aux.vars.push(c.clone());
        c
    }

    fn sine(&mut self, c: &str, aux: &mut Aux) -> String {
        let s = self.fresh("sin");
        aux.defs.push(le(Term::Zero, Term::nv(&s)));
        aux.defs.push(Formula::EqNum(
            Term::add(Term::mul(Term::nv(&s), Term::nv(&s)), Term::mul(Term::nv(c), Term::nv(c))),
            Term::One,
        ));
        aux.vars.push(s.clone());
        s
    }

    fn angle_atom(&mut self, l: &Term, r: &Term, aux: &mut Aux) -> Option<Formula> {
        let ang = |t: &Term| match t {
            Term::Angle(p, v, q) => Some((pname(p), pname(v), pname(q))),
            _ => None,
        };
        let constant = |t: &Term| match t {
            Term::Zero => Some(0),
            Term::One => Some(1),
            Term::Lit(n) => Some(*n),
            _ => None,
        };
        // a = b
        if let (Some(a), Some(b)) = (ang(l), ang(r)) {
            let ca = self.cosine(&a.0, &a.1, &a.2, aux);
            let cb = self.cosine(&b.0, &b.1, &b.2, aux);
            return Some(Formula::EqNum(Term::nv(&ca), Term::nv(&cb)));
        }
        // a = constant, either side
        let (a, k) = match (ang(l), constant(r), ang(r), constant(l)) {
            (Some(a), Some(k), _, _) | (_, _, Some(a), Some(k)) => (Some(a), Some(k)),
            _ => (None, None),
        };
        if let (Some((p, v, q)), Some(k)) = (a, k) {
            let entry = self.table.get(k)?.clone();
            if k == 90 {
                // Right angle: proper arms with zero inner product.
                let conds = vec![self.ne_points(&p, &v), self.ne_points(&q, &v), Formula::EqNum(self.dot(&p, &v, &q), Term::Zero)];
                return Formula::conj(conds);
            }
            let c = self.cosine(&p, &v, &q, aux);
            return Some(entry.constraint(&Term::nv(&c)));
        }
        // a + b = c, either side
        let (sum, whole) = match (l, r) {
            (Term::Add(x, y), w) | (w, Term::Add(x, y)) => ((ang(x)?, ang(y)?), ang(w)?),
            _ => return None,
        };
        let ca = self.cosine(&sum.0 .0, &sum.0 .1, &sum.0 .2, aux);
        let cb = self.cosine(&sum.1 .0, &sum.1 .1, &sum.1 .2, aux);
        let cc = self.cosine(&whole.0, &whole.1, &whole.2, aux);
        let (sa, sb) = (self.sine(&ca, aux), self.sine(&cb, aux));
        // Both summands fit in a straight angle iff cos b >= -cos a; then
        // cos(a + b) = cos a cos b - sin a sin b.
        let fits = le(Term::Zero, Term::add(Term::nv(&ca), Term::nv(&cb)));
        let cos_sum = Term::add(
            Term::mul(Term::nv(&ca), Term::nv(&cb)),
            Term::neg(Term::mul(Term::nv(&sa), Term::nv(&sb))),
        );
        Some(Formula::and(fits, Formula::EqNum(Term::nv(&cc), cos_sum)))
    }
}

fn dist_pair(t: &Term) -> Option<(String, String)> {
    match t {
        Term::Dist(p, q) => Some((pname(p), pname(q))),
        _ => None,
    }
}

fn sorted(pair: Option<(String, String)>) -> Option<(String, String)> {
    pair.map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
}

fn pname(t: &Term) -> String {
    t.var_name().unwrap_or_default().to_string()
}

fn le_parts(f: &Formula) -> Option<(&Term, &Term)> {
    if let Formula::Or(a, b) = f {
        if let (Formula::Lt(s, t), Formula::EqNum(s2, t2)) = (&**a, &**b) {
            if s == s2 && t == t2 {
                return Some((s, t));
            }
        }
    }
    None
}

/// `a <= b` in the same shape the parser produces.
pub fn le(a: Term, b: Term) -> Formula {
    Formula::or(Formula::Lt(a.clone(), b.clone()), Formula::EqNum(a, b))
}

// ---------------------------------------------------------------------------
// Exact evaluation

pub type Rational = BigRational;

/// Rational from a decimal or fraction string such as `-3/4` or `2.5`.
pub fn rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let (n, d) = (n.trim().parse::<BigInt>().ok()?, d.trim().parse::<BigInt>().ok()?);
        return (!d.is_zero()).then(|| Rational::new(n, d));
    }
    if let Some((i, frac)) = t.split_once('.') {
        let neg = i.starts_with('-');
        let digits = format!("{}{}", i.trim_start_matches('-'), frac);
        let n = digits.parse::<BigInt>().ok()?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        let r = Rational::new(n, d);
        return Some(if neg { -r } else { r });
    }
    t.parse::<BigInt>().ok().map(Rational::from_integer)
}

/// Exact square root when it is rational.
pub fn exact_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer().sqrt(), x.denom().sqrt());
    let r = Rational::new(n, d);
    (&r * &r == *x).then_some(r)
}

pub fn eval_exact_term(t: &Term, s: &BTreeMap<String, Rational>) -> Result<Rational, RcfError> {
    Ok(match t {
        Term::Zero => Rational::zero(),
        Term::One => Rational::from_integer(1.into()),
        Term::Lit(n) => Rational::from_integer((*n).into()),
        Term::NumVar(v) => s.get(v).cloned().ok_or_else(|| RcfError::UnboundVariable(v.clone()))?,
        Term::Add(a, b) => eval_exact_term(a, s)? + eval_exact_term(b, s)?,
        Term::Mul(a, b) => eval_exact_term(a, s)? * eval_exact_term(b, s)?,
        Term::Neg(a) => -eval_exact_term(a, s)?,
        other => return Err(RcfError::NotRcf(crate::syntax::print_term(other))),
    })
}

/// Truth value of a quantifier-free real-arithmetic formula, exactly.
pub fn eval_exact(f: &Formula, s: &BTreeMap<String, Rational>) -> Result<bool, RcfError> {
    Ok(match f {
        Formula::EqNum(a, b) => eval_exact_term(a, s)? == eval_exact_term(b, s)?,
        Formula::Lt(a, b) => eval_exact_term(a, s)? < eval_exact_term(b, s)?,
        Formula::Not(a) => !eval_exact(a, s)?,
        Formula::And(a, b) => eval_exact(a, s)? && eval_exact(b, s)?,
        Formula::Or(a, b) => eval_exact(a, s)? || eval_exact(b, s)?,
        Formula::Implies(a, b) => !eval_exact(a, s)? || eval_exact(b, s)?,
        Formula::Iff(a, b) => eval_exact(a, s)? == eval_exact(b, s)?,
        Formula::ForAll(..) | Formula::Exists(..) => return Err(RcfError::NotQuantifierFree),
        other => return Err(RcfError::NotRcf(print(other))),
    })
}

// ---------------------------------------------------------------------------
// Solver exchange format

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitMode {
    /// Assert the negation: `unsat` means the sentence is valid.
    Validity,
    /// Assert the formula itself.
    Satisfiability,
}

fn symbol(name: &str) -> String {
    let simple = name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
        && !name.starts_with(|c: char| c.is_ascii_digit());
    if simple { name.to_string() } else { format!("|{name}|") }
}

fn smt_term(t: &Term, out: &mut String) {
    match t {
        Term::Zero => out.push_str("0.0"),
        Term::One => out.push_str("1.0"),
        Term::Lit(n) => out.push_str(&format!("{n}.0")),
        Term::NumVar(v) => out.push_str(&symbol(v)),
        Term::Add(a, b) | Term::Mul(a, b) => {
            out.push_str(if matches!(t, Term::Add(..)) { "(+ " } else { "(* " });
            smt_term(a, out);
            out.push(' ');
            smt_term(b, out);
            out.push(')');
        }
        Term::Neg(a) => {
            out.push_str("(- ");
            smt_term(a, out);
            out.push(')');
        }
        // Excluded by the RcfFormula invariant.
        Term::PointVar(_) | Term::Dist(..) | Term::Angle(..) => unreachable!("non-arithmetic term"),
    }
}

fn smt_formula(f: &Formula, out: &mut String) {
    if let Some((s, t)) = le_parts(f) {
        out.push_str("(<= ");
        smt_term(s, out);
        out.push(' ');
        smt_term(t, out);
        out.push(')');
        return;
    }
    let bin = |op: &str, a: &Formula, b: &Formula, out: &mut String| {
        out.push('(');
        out.push_str(op);
        out.push(' ');
        smt_formula(a, out);
        out.push(' ');
        smt_formula(b, out);
        out.push(')');
    };
    match f {
        Formula::EqNum(a, b) | Formula::Lt(a, b) => {
            out.push_str(if matches!(f, Formula::EqNum(..)) { "(= " } else { "(< " });
            smt_term(a, out);
            out.push(' ');
            smt_term(b, out);
            out.push(')');
        }
        Formula::Not(a) => {
            out.push_str("(not ");
            smt_formula(a, out);
            out.push(')');
        }
        Formula::And(a, b) => bin("and", a, b, out),
        Formula::Or(a, b) => bin("or", a, b, out),
        Formula::Implies(a, b) => bin("=>", a, b, out),
        Formula::Iff(a, b) => bin("=", a, b, out),
        Formula::ForAll(..) | Formula::Exists(..) => {
            // Merge runs of the same quantifier into one binder list.
            let is_all = matches!(f, Formula::ForAll(..));
            let mut vars = Vec::new();
            let mut cur = f;
            loop {
                match cur {
                    Formula::ForAll(v, _, b) if is_all => {
                        vars.push(v);
                        cur = b;
                    }
                    Formula::Exists(v, _, b) if !is_all => {
                        vars.push(v);
                        cur = b;
                    }
                    _ => break,
                }
            }
            out.push_str(if is_all { "(forall (" } else { "(exists (" });
            let binders: Vec<String> = vars.iter().map(|v| format!("({} Real)", symbol(v))).collect();
            out.push_str(&binders.join(" "));
            out.push_str(") ");
            smt_formula(cur, out);
            out.push(')');
        }
        _ => unreachable!("non-arithmetic atom"),
    }
}

/// Free variables in order of first occurrence.
fn free_in_order(f: &Formula) -> Vec<String> {
    fn term(t: &Term, bound: &[String], seen: &mut Vec<String>) {
        match t {
            Term::NumVar(v) => {
                if !bound.contains(v) && !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
            other => other.children().into_iter().for_each(|c| term(c, bound, seen)),
        }
    }
    fn go(f: &Formula, bound: &mut Vec<String>, seen: &mut Vec<String>) {
        match f {
            Formula::ForAll(v, _, b) | Formula::Exists(v, _, b) => {
                bound.push(v.clone());
                go(b, bound, seen);
                bound.pop();
            }
            _ if f.is_atom() => f.atom_terms().into_iter().for_each(|t| term(t, bound, seen)),
            _ => f.subformulas().into_iter().for_each(|g| go(g, bound, seen)),
        }
    }
    let mut seen = Vec::new();
    go(f, &mut Vec::new(), &mut seen);
    seen
}

/// SMT-LIB text for `f`. The output depends only on `f` and `mode`.
///
/// When the asserted formula is existential after prenexing (the usual
/// case for validity of a universal sentence) its variables are declared
/// as constants and the query is quantifier-free (`QF_NRA`); otherwise the
/// quantified formula is asserted under `NRA`.
pub fn emit_solver(f: &RcfFormula, mode: EmitMode) -> String {
    let asserted = match mode {
        EmitMode::Validity => Formula::not(f.formula().clone()),
        EmitMode::Satisfiability => f.formula().clone(),
    };
    let pre = prenex(&asserted);
    let (prefix, matrix) = split_prefix(&pre);
    let existential = prefix.iter().all(|(q, _, _)| *q == Quant::Ex);
    let mut decls = free_in_order(&asserted);
    let body_formula = if existential {
        decls.extend(prefix.iter().map(|(_, v, _)| v.clone()));
        matrix
    } else {
        &asserted
    };
    let mut out = format!("(set-logic {})\n", if existential { "QF_NRA" } else { "NRA" });
    for v in decls {
        out.push_str(&format!("(declare-fun {} () Real)\n", symbol(&v)));
    }
    let mut body = String::new();
    smt_formula(body_formula, &mut body);
    out.push_str(&format!("(assert {body})\n"));
    out.push_str("(check-sat)\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or("unbalanced ')'")?;
                stack.last_mut().ok_or("unbalanced ')'")?.push(Sexp::List(done));
            }
            c if c.is_whitespace() => {}
            '|' => {
                let mut s = String::from("|");
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(c) => s.push(c),
                        None => return Err("unterminated quoted symbol".into()),
                    }
                }
                s.push('|');
                stack.last_mut().expect("nonempty").push(Sexp::Atom(s));
            }
            c => {
                let mut s = c.to_string();
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                stack.last_mut().expect("nonempty").push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced '('".into());
    }
    Ok(stack.pop().expect("top level"))
}

/// Check emitted text against the subset of SMT-LIB that `emit_solver`
/// produces: commands, declarations, and well-formed real terms.
pub fn check_smtlib(text: &str) -> Result<(), String> {
    let cmds = parse_sexps(text)?;
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut saw_check = false;
    for c in &cmds {
        let Sexp::List(items) = c else { return Err("top-level atom".into()) };
        let head = match items.first() {
            Some(Sexp::Atom(h)) => h.as_str(),
            _ => return Err("command without a name".into()),
        };
        match (head, &items[1..]) {
            ("set-logic", [Sexp::Atom(_)]) => {}
            ("declare-fun", [Sexp::Atom(n), Sexp::List(args), Sexp::Atom(s)]) if args.is_empty() && s == "Real" => {
                declared.insert(n.clone());
            }
            ("assert", [t]) => check_bool(t, &declared, &mut Vec::new())?,
            ("check-sat", []) => saw_check = true,
            ("get-model", []) | ("exit", []) => {}
            _ => return Err(format!("malformed command {head}")),
        }
    }
    if !saw_check {
        return Err("missing (check-sat)".into());
    }
    Ok(())
}

fn check_bool(t: &Sexp, decl: &BTreeSet<String>, bound: &mut Vec<String>) -> Result<(), String> {
    let Sexp::List(items) = t else {
        return match t {
            Sexp::Atom(a) if a == "true" || a == "false" => Ok(()),
            _ => Err(format!("expected a formula, found {t:?}")),
        };
    };
    let head = match items.first() {
        Some(Sexp::Atom(h)) => h.as_str(),
        _ => return Err("application without an operator".into()),
    };
    let args = &items[1..];
    match head {
        "not" if args.len() == 1 => check_bool(&args[0], decl, bound),
        "and" | "or" if !args.is_empty() => args.iter().try_for_each(|a| check_bool(a, decl, bound)),
        "=>" if args.len() == 2 => args.iter().try_for_each(|a| check_bool(a, decl, bound)),
        "=" | "<" | "<=" | ">" | ">=" if args.len() == 2 => {
            if args.iter().all(|a| check_real(a, decl, bound).is_ok()) {
                Ok(())
            } else {
                args.iter().try_for_each(|a| check_bool(a, decl, bound))
            }
        }
        "forall" | "exists" if args.len() == 2 => {
            let Sexp::List(binders) = &args[0] else { return Err("binder list expected".into()) };
            let n = bound.len();
            for b in binders {
                match b {
                    Sexp::List(pair) if pair.len() == 2 && pair[1] == Sexp::Atom("Real".into()) => match &pair[0] {
                        Sexp::Atom(v) => bound.push(v.clone()),
                        _ => return Err("binder name expected".into()),
                    },
                    _ => return Err("malformed binder".into()),
                }
            }
            let r = check_bool(&args[1], decl, bound);
            bound.truncate(n);
            r
        }
        _ => Err(format!("unknown or misapplied connective {head}")),
    }
}

fn check_real(t: &Sexp, decl: &BTreeSet<String>, bound: &[String]) -> Result<(), String> {
    match t {
        Sexp::Atom(a) => {
            let numeral = a.parse::<f64>().is_ok() && a.chars().all(|c| c.is_ascii_digit() || c == '.');
            if numeral || decl.contains(a) || bound.iter().any(|b| b == a) {
                Ok(())
            } else {
                Err(format!("undeclared symbol {a}"))
            }
        }
        Sexp::List(items) => {
            let head = match items.first() {
                Some(Sexp::Atom(h)) => h.as_str(),
                _ => return Err("application without an operator".into()),
            };
            let args = &items[1..];
            let ok_arity = match head {
                "+" | "*" => args.len() >= 2,
                "-" => !args.is_empty() && args.len() <= 2,
                _ => false,
            };
            if !ok_arity {
                return Err(format!("unknown or misapplied function {head}"));
            }
            args.iter().try_for_each(|a| check_real(a, decl, bound))
        }
    }
}

/// Outcome of an external solver run on a validity query.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Valid,
    /// The negation is satisfiable; the solver's model text.
    Invalid(String),
    Unknown,
    SolverUnavailable(String),
}

/// Solver command from `GEOFORM_SOLVER`: a path optionally followed by
/// arguments, e.g. `z3 -in`.
pub fn solver_from_env() -> Option<String> {
    std::env::var("GEOFORM_SOLVER").ok().filter(|s| !s.trim().is_empty())
}

/// Run `solver` (path plus optional arguments) on `text` given on standard
/// input. The text should be a validity query from `emit_solver`.
pub fn solve_external(text: &str, solver: &str, time_limit: Duration) -> Result<Verdict, RcfError> {
    if time_limit.is_zero() {
        return Ok(Verdict::Unknown);
    }
    let mut parts = solver.split_whitespace();
    let Some(path) = parts.next() else { return Ok(Verdict::SolverUnavailable("empty solver command".into())) };
    let mut child = match Command::new(PathBuf::from(path))
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return Ok(Verdict::SolverUnavailable(format!("{path}: {e}"))),
    };
    let input = format!("{text}(get-model)\n");
    let mut stdin = child.stdin.take().expect("piped");
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if start.elapsed() >= time_limit => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = writer.join();
                let _ = reader.join();
                return Ok(Verdict::Unknown);
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Ok(Verdict::SolverUnavailable(e.to_string())),
        }
    }
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    parse_verdict(&out)
}

fn parse_verdict(out: &str) -> Result<Verdict, RcfError> {
    let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
    let first = lines.next().unwrap_or("");
    Ok(match first {
        "unsat" => Verdict::Valid,
        "sat" => Verdict::Invalid(lines.collect::<Vec<_>>().join("\n")),
        "unknown" | "timeout" => Verdict::Unknown,
        other => return Err(RcfError::MalformedSolverOutput(other.chars().take(200).collect())),
    })
}
