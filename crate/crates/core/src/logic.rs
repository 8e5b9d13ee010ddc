//! Two-sorted first-order syntax trees shared by every other module.
//!
//! Terms and formulas are plain immutable trees. Point-sorted terms are
//! variables only; every function symbol (`d`, `ang`, `+`, `*`, `-`)
//! produces a number.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Point,
    Number,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Point => write!(f, "P"),
            Sort::Number => write!(f, "N"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Zero,
    One,
    NumVar(String),
    PointVar(String),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Dist(Box<Term>, Box<Term>),
    Angle(Box<Term>, Box<Term>, Box<Term>),
    /// Integer literal `n >= 2`; 0 and 1 are the constants themselves.
    Lit(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    EqPoint(Term, Term),
    EqNum(Term, Term),
    Lt(Term, Term),
    TarskiB(Term, Term, Term),
    TarskiD(Term, Term, Term, Term),
    Defined(String, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    ForAll(String, Sort, Box<Formula>),
    Exists(String, Sort, Box<Formula>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LangKind {
    E2,
    Ed,
    Eda,
}

/// A theory language together with the dimension of its intended models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lang {
    pub kind: LangKind,
    pub dim: usize,
}

impl Lang {
    pub const E2: Lang = Lang { kind: LangKind::E2, dim: 2 };
    pub const ED: Lang = Lang { kind: LangKind::Ed, dim: 2 };
    pub const EDA: Lang = Lang { kind: LangKind::Eda, dim: 2 };

    pub fn with_dim(self, dim: usize) -> Lang {
        Lang { dim, ..self }
    }

    pub fn has_numbers(self) -> bool {
        self.kind != LangKind::E2
    }

    pub fn has_angles(self) -> bool {
        self.kind == LangKind::Eda
    }

    pub fn name(self) -> &'static str {
        match self.kind {
            LangKind::E2 => "E2",
            LangKind::Ed => "Ed",
            LangKind::Eda => "Eda",
        }
    }

    pub fn from_name(s: &str) -> Option<Lang> {
        match s.to_ascii_lowercase().as_str() {
            "e2" => Some(Lang::E2),
            "ed" => Some(Lang::ED),
            "eda" => Some(Lang::EDA),
            _ => None,
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("sort mismatch: variable {var} is {expected} but the term is {found}")]
    SortMismatch { var: String, expected: Sort, found: Sort },
    #[error("negative integer literal {0}")]
    NegativeLiteral(i64),
}

/// One sort, arity or language violation, located by child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortDiagnostic {
    pub path: Vec<usize>,
    pub message: String,
}

impl fmt::Display for SortDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(f, "at [{}]: {}", p.join("."), self.message)
    }
}

// ---------------------------------------------------------------------------
// Constructors

#[allow(clippy::should_implement_trait)]
impl Term {
    pub fn pv(name: &str) -> Term {
        Term::PointVar(name.to_string())
    }
    pub fn nv(name: &str) -> Term {
        Term::NumVar(name.to_string())
    }
    pub fn dist(a: &str, b: &str) -> Term {
        Term::Dist(Box::new(Term::pv(a)), Box::new(Term::pv(b)))
    }
    pub fn angle(p: &str, v: &str, q: &str) -> Term {
        Term::Angle(Box::new(Term::pv(p)), Box::new(Term::pv(v)), Box::new(Term::pv(q)))
    }
    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }
    pub fn neg(a: Term) -> Term {
        Term::Neg(Box::new(a))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::PointVar(_) => Sort::Point,
            _ => Sort::Number,
        }
    }

    pub fn var_name(&self) -> Option<&str> {
        match self {
            Term::PointVar(n) | Term::NumVar(n) => Some(n),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Add(a, b) | Term::Mul(a, b) | Term::Dist(a, b) => vec![a, b],
            Term::Neg(a) => vec![a],
            Term::Angle(a, b, c) => vec![a, b, c],
            _ => vec![],
        }
    }

    pub fn contains_angle(&self) -> bool {
        match self {
            Term::Angle(..) => true,
            _ => self.children().into_iter().any(|c| c.contains_angle()),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<(String, Sort)>) {
        match self {
            Term::PointVar(n) => {
                out.insert((n.clone(), Sort::Point));
            }
            Term::NumVar(n) => {
                out.insert((n.clone(), Sort::Number));
            }
            _ => {
                for c in self.children() {
                    c.collect_vars(out);
                }
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<(String, Sort)> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Rename a variable everywhere in the term.
    pub fn rename(&self, from: &str, to: &str) -> Term {
        self.replace_var(from, &|t| match t {
            Term::PointVar(_) => Term::PointVar(to.to_string()),
            _ => Term::NumVar(to.to_string()),
        })
    }

    fn replace_var(&self, name: &str, f: &dyn Fn(&Term) -> Term) -> Term {
        match self {
            Term::PointVar(n) | Term::NumVar(n) if n == name => f(self),
            Term::Add(a, b) => Term::add(a.replace_var(name, f), b.replace_var(name, f)),
            Term::Mul(a, b) => Term::mul(a.replace_var(name, f), b.replace_var(name, f)),
            Term::Neg(a) => Term::neg(a.replace_var(name, f)),
            Term::Dist(a, b) => Term::Dist(Box::new(a.replace_var(name, f)), Box::new(b.replace_var(name, f))),
            Term::Angle(a, b, c) => Term::Angle(
                Box::new(a.replace_var(name, f)),
                Box::new(b.replace_var(name, f)),
                Box::new(c.replace_var(name, f)),
            ),
            _ => self.clone(),
        }
    }

    /// Replace integer literals by left-nested sums of ones.
    pub fn expand_literals(&self) -> Term {
        match self {
            Term::Lit(n) => ones(*n),
            Term::Add(a, b) => Term::add(a.expand_literals(), b.expand_literals()),
            Term::Mul(a, b) => Term::mul(a.expand_literals(), b.expand_literals()),
            Term::Neg(a) => Term::neg(a.expand_literals()),
            _ => self.clone(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

fn ones(n: u64) -> Term {
    match n {
        0 => Term::Zero,
        _ => {
            let mut t = Term::One;
            for _ in 1..n {
                t = Term::add(t, Term::One);
            }
            t
        }
    }
}

/// Sugar node for a nonnegative integer constant.
pub fn int_literal(n: i64) -> Result<Term, LogicError> {
    match n {
        n if n < 0 => Err(LogicError::NegativeLiteral(n)),
        0 => Ok(Term::Zero),
        1 => Ok(Term::One),
        n => Ok(Term::Lit(n as u64)),
    }
}

#[allow(clippy::should_implement_trait)]
impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }
    pub fn forall(v: &str, s: Sort, body: Formula) -> Formula {
        Formula::ForAll(v.to_string(), s, Box::new(body))
    }
    pub fn exists(v: &str, s: Sort, body: Formula) -> Formula {
        Formula::Exists(v.to_string(), s, Box::new(body))
    }
    pub fn defined(name: &str, args: &[&str]) -> Formula {
        Formula::Defined(name.to_string(), args.iter().map(|a| Term::pv(a)).collect())
    }
    pub fn eq_pt(a: &str, b: &str) -> Formula {
        Formula::EqPoint(Term::pv(a), Term::pv(b))
    }
    pub fn tb(a: &str, b: &str, c: &str) -> Formula {
        Formula::TarskiB(Term::pv(a), Term::pv(b), Term::pv(c))
    }
    pub fn td(a: &str, b: &str, c: &str, d: &str) -> Formula {
        Formula::TarskiD(Term::pv(a), Term::pv(b), Term::pv(c), Term::pv(d))
    }

    /// Right-nested conjunction; `None` for an empty list.
    pub fn conj(parts: Vec<Formula>) -> Option<Formula> {
        let mut it = parts.into_iter().rev();
        let last = it.next()?;
        Some(it.fold(last, |acc, f| Formula::and(f, acc)))
    }

    /// Right-nested disjunction; `None` for an empty list.
    pub fn disj(parts: Vec<Formula>) -> Option<Formula> {
        let mut it = parts.into_iter().rev();
        let last = it.next()?;
        Some(it.fold(last, |acc, f| Formula::or(f, acc)))
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Formula::EqPoint(..)
                | Formula::EqNum(..)
                | Formula::Lt(..)
                | Formula::TarskiB(..)
                | Formula::TarskiD(..)
                | Formula::Defined(..)
        )
    }

    pub fn is_quantifier(&self) -> bool {
        matches!(self, Formula::ForAll(..) | Formula::Exists(..))
    }

    /// Terms directly under an atom.
    pub fn atom_terms(&self) -> Vec<&Term> {
        match self {
            Formula::EqPoint(a, b) | Formula::EqNum(a, b) | Formula::Lt(a, b) => vec![a, b],
            Formula::TarskiB(a, b, c) => vec![a, b, c],
            Formula::TarskiD(a, b, c, d) => vec![a, b, c, d],
            Formula::Defined(_, args) => args.iter().collect(),
            _ => vec![],
        }
    }

    pub fn subformulas(&self) -> Vec<&Formula> {
        match self {
            Formula::Not(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                vec![a, b]
            }
            Formula::ForAll(_, _, b) | Formula::Exists(_, _, b) => vec![b],
            _ => vec![],
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        !self.is_quantifier() && self.subformulas().iter().all(|f| f.is_quantifier_free())
    }

    pub fn contains_angle(&self) -> bool {
        self.atom_terms().iter().any(|t| t.contains_angle())
            || self.subformulas().iter().any(|f| f.contains_angle())
    }

    pub fn contains_defined(&self) -> bool {
        matches!(self, Formula::Defined(..)) || self.subformulas().iter().any(|f| f.contains_defined())
    }

    /// Apply `f` to every atom, rebuilding connectives and binders.
    pub fn map_atoms(&self, f: &mut dyn FnMut(&Formula) -> Formula) -> Formula {
        match self {
            Formula::Not(a) => Formula::not(a.map_atoms(f)),
            Formula::And(a, b) => Formula::and(a.map_atoms(f), b.map_atoms(f)),
            Formula::Or(a, b) => Formula::or(a.map_atoms(f), b.map_atoms(f)),
            Formula::Implies(a, b) => Formula::implies(a.map_atoms(f), b.map_atoms(f)),
            Formula::Iff(a, b) => Formula::iff(a.map_atoms(f), b.map_atoms(f)),
            Formula::ForAll(v, s, b) => Formula::ForAll(v.clone(), *s, Box::new(b.map_atoms(f))),
            Formula::Exists(v, s, b) => Formula::Exists(v.clone(), *s, Box::new(b.map_atoms(f))),
            atom => f(atom),
        }
    }

    /// Apply `f` to every term directly under an atom.
    pub fn map_terms(&self, f: &dyn Fn(&Term) -> Term) -> Formula {
        self.map_atoms(&mut |atom| match atom {
            Formula::EqPoint(a, b) => Formula::EqPoint(f(a), f(b)),
            Formula::EqNum(a, b) => Formula::EqNum(f(a), f(b)),
            Formula::Lt(a, b) => Formula::Lt(f(a), f(b)),
            Formula::TarskiB(a, b, c) => Formula::TarskiB(f(a), f(b), f(c)),
            Formula::TarskiD(a, b, c, d) => Formula::TarskiD(f(a), f(b), f(c), f(d)),
            Formula::Defined(n, args) => Formula::Defined(n.clone(), args.iter().map(f).collect()),
            other => other.clone(),
        })
    }

    pub fn expand_literals(&self) -> Formula {
        self.map_terms(&|t| t.expand_literals())
    }

    /// Node count: one per connective, binder, atom and term node.
    pub fn size(&self) -> usize {
        let terms: usize = self.atom_terms().iter().map(|t| t.size()).sum();
        let subs: usize = self.subformulas().iter().map(|f| f.size()).sum();
        1 + terms + subs
    }

    /// Every variable name occurring anywhere, free or bound.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<String>) {
        for t in self.atom_terms() {
            for (n, _) in t.vars() {
                out.insert(n);
            }
        }
        if let Formula::ForAll(v, _, _) | Formula::Exists(v, _, _) = self {
            out.insert(v.clone());
        }
        for f in self.subformulas() {
            f.collect_names(out);
        }
    }
}

// ---------------------------------------------------------------------------
// Free variables and substitution

pub fn free_vars(f: &Formula) -> BTreeSet<(String, Sort)> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut Vec::new(), &mut out);
    out
}

fn collect_free(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<(String, Sort)>) {
    match f {
        Formula::ForAll(v, _, b) | Formula::Exists(v, _, b) => {
            bound.push(v.clone());
            collect_free(b, bound, out);
            bound.pop();
        }
        _ if f.is_atom() => {
            for t in f.atom_terms() {
                for (n, s) in t.vars() {
                    if !bound.contains(&n) {
                        out.insert((n, s));
                    }
                }
            }
        }
        _ => {
            for g in f.subformulas() {
                collect_free(g, bound, out);
            }
        }
    }
}

pub fn free_names(f: &Formula) -> BTreeSet<String> {
    free_vars(f).into_iter().map(|(n, _)| n).collect()
}

/// `base` followed by the lowest positive integer suffix not in `used`.
pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    let mut i = 1u64;
    loop {
        let cand = format!("{base}{i}");
        if !used.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Capture-avoiding substitution of `t` for the free occurrences of `var`.
pub fn substitute(f: &Formula, var: &str, t: &Term) -> Result<Formula, LogicError> {
    if let Some((_, s)) = free_vars(f).into_iter().find(|(n, _)| n == var) {
        if s != t.sort() {
            return Err(LogicError::SortMismatch { var: var.to_string(), expected: s, found: t.sort() });
        }
    } else {
        return Ok(f.clone());
    }
    let t_free: BTreeSet<String> = t.vars().into_iter().map(|(n, _)| n).collect();
    let mut used = f.all_names();
    used.extend(t_free.iter().cloned());
    used.insert(var.to_string());
    Ok(subst_rec(f, var, t, &t_free, &mut used))
}

fn subst_rec(f: &Formula, var: &str, t: &Term, t_free: &BTreeSet<String>, used: &mut BTreeSet<String>) -> Formula {
    match f {
        Formula::ForAll(v, s, b) | Formula::Exists(v, s, b) => {
            if v == var || !free_names(b).contains(var) {
                return f.clone();
            }
            let (v2, b2) = if t_free.contains(v) {
                let nv = fresh_name(v, used);
                used.insert(nv.clone());
                let renamed = rename_free(b, v, &nv);
                (nv, renamed)
            } else {
                (v.clone(), (**b).clone())
            };
            let body = Box::new(subst_rec(&b2, var, t, t_free, used));
            match f {
                Formula::ForAll(..) => Formula::ForAll(v2, *s, body),
                _ => Formula::Exists(v2, *s, body),
            }
        }
        _ if f.is_atom() => f.map_terms(&|term| term.replace_var(var, &|_| t.clone())),
        Formula::Not(a) => Formula::not(subst_rec(a, var, t, t_free, used)),
        Formula::And(a, b) => Formula::and(subst_rec(a, var, t, t_free, used), subst_rec(b, var, t, t_free, used)),
        Formula::Or(a, b) => Formula::or(subst_rec(a, var, t, t_free, used), subst_rec(b, var, t, t_free, used)),
        Formula::Implies(a, b) => {
            Formula::implies(subst_rec(a, var, t, t_free, used), subst_rec(b, var, t, t_free, used))
        }
        Formula::Iff(a, b) => Formula::iff(subst_rec(a, var, t, t_free, used), subst_rec(b, var, t, t_free, used)),
        _ => unreachable!(),
    }
}

/// Rename free occurrences of `from` to `to`; `to` must not be bound inside `f`.
pub fn rename_free(f: &Formula, from: &str, to: &str) -> Formula {
    match f {
        Formula::ForAll(v, s, b) | Formula::Exists(v, s, b) => {
            if v == from {
                return f.clone();
            }
            let body = Box::new(rename_free(b, from, to));
            match f {
                Formula::ForAll(..) => Formula::ForAll(v.clone(), *s, body),
                _ => Formula::Exists(v.clone(), *s, body),
            }
        }
        _ if f.is_atom() => f.map_terms(&|term| term.rename(from, to)),
        Formula::Not(a) => Formula::not(rename_free(a, from, to)),
        Formula::And(a, b) => Formula::and(rename_free(a, from, to), rename_free(b, from, to)),
        Formula::Or(a, b) => Formula::or(rename_free(a, from, to), rename_free(b, from, to)),
        Formula::Implies(a, b) => Formula::implies(rename_free(a, from, to), rename_free(b, from, to)),
        Formula::Iff(a, b) => Formula::iff(rename_free(a, from, to), rename_free(b, from, to)),
        _ => unreachable!(),
    }
}

/// Simultaneous substitution of variables by terms. Bound variables that
/// would capture a free variable of an image are renamed.
pub fn substitute_all(f: &Formula, map: &BTreeMap<String, Term>) -> Formula {
    let mut used = f.all_names();
    for t in map.values() {
        used.extend(t.vars().into_iter().map(|(n, _)| n));
    }
    subst_all_rec(f, map, &mut used)
}

fn subst_all_rec(f: &Formula, map: &BTreeMap<String, Term>, used: &mut BTreeSet<String>) -> Formula {
    match f {
        Formula::ForAll(v, s, b) | Formula::Exists(v, s, b) => {
            let mut inner: BTreeMap<String, Term> = map.clone();
            inner.remove(v);
            let captures = inner.values().any(|t| t.vars().iter().any(|(n, _)| n == v));
            let (v2, b2) = if captures {
                let nv = fresh_name(v, used);
                used.insert(nv.clone());
                (nv.clone(), rename_free(b, v, &nv))
            } else {
                (v.clone(), (**b).clone())
            };
            let body = Box::new(subst_all_rec(&b2, &inner, used));
            match f {
                Formula::ForAll(..) => Formula::ForAll(v2, *s, body),
                _ => Formula::Exists(v2, *s, body),
            }
        }
        _ if f.is_atom() => f.map_terms(&|term| subst_term(term, map)),
        Formula::Not(a) => Formula::not(subst_all_rec(a, map, used)),
        Formula::And(a, b) => Formula::and(subst_all_rec(a, map, used), subst_all_rec(b, map, used)),
        Formula::Or(a, b) => Formula::or(subst_all_rec(a, map, used), subst_all_rec(b, map, used)),
        Formula::Implies(a, b) => Formula::implies(subst_all_rec(a, map, used), subst_all_rec(b, map, used)),
        Formula::Iff(a, b) => Formula::iff(subst_all_rec(a, map, used), subst_all_rec(b, map, used)),
        _ => unreachable!(),
    }
}

pub fn subst_term(t: &Term, map: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::PointVar(n) | Term::NumVar(n) => map.get(n).cloned().unwrap_or_else(|| t.clone()),
        Term::Add(a, b) => Term::add(subst_term(a, map), subst_term(b, map)),
        Term::Mul(a, b) => Term::mul(subst_term(a, map), subst_term(b, map)),
        Term::Neg(a) => Term::neg(subst_term(a, map)),
        Term::Dist(a, b) => Term::Dist(Box::new(subst_term(a, map)), Box::new(subst_term(b, map))),
        Term::Angle(a, b, c) => Term::Angle(
            Box::new(subst_term(a, map)),
            Box::new(subst_term(b, map)),
            Box::new(subst_term(c, map)),
        ),
        _ => t.clone(),
    }
}

// ---------------------------------------------------------------------------
// Prenex form

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quant {
    All,
    Ex,
}

impl Quant {
    fn flip(self) -> Quant {
        match self {
            Quant::All => Quant::Ex,
            Quant::Ex => Quant::All,
        }
    }
}

/// Rewrite every `A <-> B` as `(A -> B) & (B -> A)`.
pub fn eliminate_iff(f: &Formula) -> Formula {
    match f {
        Formula::Iff(a, b) => {
            let a = eliminate_iff(a);
            let b = eliminate_iff(b);
            Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
        }
        Formula::Not(a) => Formula::not(eliminate_iff(a)),
        Formula::And(a, b) => Formula::and(eliminate_iff(a), eliminate_iff(b)),
        Formula::Or(a, b) => Formula::or(eliminate_iff(a), eliminate_iff(b)),
        Formula::Implies(a, b) => Formula::implies(eliminate_iff(a), eliminate_iff(b)),
        Formula::ForAll(v, s, b) => Formula::ForAll(v.clone(), *s, Box::new(eliminate_iff(b))),
        Formula::Exists(v, s, b) => Formula::Exists(v.clone(), *s, Box::new(eliminate_iff(b))),
        atom => atom.clone(),
    }
}

/// Prenex form. Quantifiers are pulled out in order of left-to-right
/// appearance; bound variables are renamed when they would clash.
pub fn prenex(f: &Formula) -> Formula {
    let g = eliminate_iff(f);
    let mut used = g.all_names();
    let (prefix, matrix) = pull(&g, &mut used);
    prefix.into_iter().rev().fold(matrix, |acc, (q, v, s)| match q {
        Quant::All => Formula::ForAll(v, s, Box::new(acc)),
        Quant::Ex => Formula::Exists(v, s, Box::new(acc)),
    })
}

/// Split a prenex formula into its quantifier prefix and matrix.
pub fn split_prefix(f: &Formula) -> (Vec<(Quant, String, Sort)>, &Formula) {
    let mut prefix = Vec::new();
    let mut cur = f;
    loop {
        match cur {
            Formula::ForAll(v, s, b) => {
                prefix.push((Quant::All, v.clone(), *s));
                cur = b;
            }
            Formula::Exists(v, s, b) => {
                prefix.push((Quant::Ex, v.clone(), *s));
                cur = b;
            }
            _ => return (prefix, cur),
        }
    }
}

type Prefix = Vec<(Quant, String, Sort)>;

fn pull(f: &Formula, used: &mut BTreeSet<String>) -> (Prefix, Formula) {
    match f {
        Formula::ForAll(v, s, b) | Formula::Exists(v, s, b) => {
            let q = if matches!(f, Formula::ForAll(..)) { Quant::All } else { Quant::Ex };
            let (mut pre, m) = pull(b, used);
            pre.insert(0, (q, v.clone(), *s));
            (pre, m)
        }
        Formula::Not(a) => {
            let (pre, m) = pull(a, used);
            (pre.into_iter().map(|(q, v, s)| (q.flip(), v, s)).collect(), Formula::not(m))
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            let (pa, ma) = pull(a, used);
            let (pb, mb) = pull(b, used);
            let pa: Prefix = if matches!(f, Formula::Implies(..)) {
                pa.into_iter().map(|(q, v, s)| (q.flip(), v, s)).collect()
            } else {
                pa
            };
            // Rename binders so that no binder captures a free variable of
            // the other side and no two binders share a name.
            let fa = free_names(&ma);
            let fb = free_names(&mb);
            let mut taken: BTreeSet<String> = BTreeSet::new();
            let mut out = Vec::new();
            let mut ma = ma;
            let mut mb = mb;
            for (q, v, s) in pa {
                let nv = if fb.contains(&v) || taken.contains(&v) {
                    let nv = fresh_name(&v, used);
                    used.insert(nv.clone());
                    ma = rename_free(&ma, &v, &nv);
                    nv
                } else {
                    v
                };
                taken.insert(nv.clone());
                out.push((q, nv, s));
            }
            for (q, v, s) in pb {
                let clash_a = out.iter().any(|(_, n, _)| n == &v) || fa.contains(&v);
                let nv = if clash_a || taken.contains(&v) {
                    let nv = fresh_name(&v, used);
                    used.insert(nv.clone());
                    mb = rename_free(&mb, &v, &nv);
                    nv
                } else {
                    v
                };
                taken.insert(nv.clone());
                out.push((q, nv, s));
            }
            let m = match f {
                Formula::And(..) => Formula::and(ma, mb),
                Formula::Or(..) => Formula::or(ma, mb),
                _ => Formula::implies(ma, mb),
            };
            (out, m)
        }
        Formula::Iff(..) => pull(&eliminate_iff(f), used),
        atom => (Vec::new(), atom.clone()),
    }
}

// ---------------------------------------------------------------------------
// Well-sortedness

/// Every sort, arity and language violation of `f` as a formula of `lang`.
pub fn well_sorted(f: &Formula, lang: Lang) -> Vec<SortDiagnostic> {
    let mut ck = SortChecker { lang, out: Vec::new(), free: BTreeMap::new() };
    ck.formula(f, &mut Vec::new(), &mut Vec::new());
    ck.out
}

struct SortChecker {
    lang: Lang,
    out: Vec<SortDiagnostic>,
    free: BTreeMap<String, Sort>,
}

impl SortChecker {
    fn err(&mut self, path: &[usize], msg: String) {
        self.out.push(SortDiagnostic { path: path.to_vec(), message: msg });
    }

    fn var(&mut self, name: &str, sort: Sort, scope: &[(String, Sort)], path: &[usize]) {
        if let Some((_, s)) = scope.iter().rev().find(|(n, _)| n == name) {
            if *s != sort {
                self.err(path, format!("variable {name} is bound as {s} but used as {sort}"));
            }
        } else if let Some(s) = self.free.get(name) {
            if *s != sort {
                self.err(path, format!("free variable {name} is used as both {s} and {sort}"));
            }
        } else {
            self.free.insert(name.to_string(), sort);
        }
    }

    fn point(&mut self, t: &Term, scope: &[(String, Sort)], path: &[usize]) {
        match t {
            Term::PointVar(n) => self.var(n, Sort::Point, scope, path),
            _ => self.err(path, "expected a point variable".to_string()),
        }
    }

    fn number(&mut self, t: &Term, scope: &[(String, Sort)], path: &mut Vec<usize>) {
        if !self.lang.has_numbers() {
            self.err(path, "number term outside Ed/Eda".to_string());
            return;
        }
        match t {
            Term::PointVar(_) => self.err(path, "expected a number term".to_string()),
            Term::NumVar(n) => self.var(n, Sort::Number, scope, path),
            Term::Zero | Term::One | Term::Lit(_) => {}
            Term::Add(a, b) | Term::Mul(a, b) => {
                path.push(0);
                self.number(a, scope, path);
                path.pop();
                path.push(1);
                self.number(b, scope, path);
                path.pop();
            }
            Term::Neg(a) => {
                path.push(0);
                self.number(a, scope, path);
                path.pop();
            }
            Term::Dist(a, b) => {
                for (i, x) in [a, b].into_iter().enumerate() {
                    path.push(i);
                    self.point(x, scope, path);
                    path.pop();
                }
            }
            Term::Angle(a, b, c) => {
                if !self.lang.has_angles() {
                    self.err(path, "Angle requires Eda".to_string());
                }
                for (i, x) in [a, b, c].into_iter().enumerate() {
                    path.push(i);
                    self.point(x, scope, path);
                    path.pop();
                }
            }
        }
    }

    fn formula(&mut self, f: &Formula, scope: &mut Vec<(String, Sort)>, path: &mut Vec<usize>) {
        match f {
            Formula::EqPoint(a, b) => {
                for (i, x) in [a, b].into_iter().enumerate() {
                    path.push(i);
                    self.point(x, scope, path);
                    path.pop();
                }
            }
            Formula::EqNum(a, b) | Formula::Lt(a, b) => {
                if !self.lang.has_numbers() {
                    self.err(path, "number atom outside Ed/Eda".to_string());
                    return;
                }
                for (i, x) in [a, b].into_iter().enumerate() {
                    path.push(i);
                    self.number(x, scope, path);
                    path.pop();
                }
            }
            Formula::TarskiB(..) | Formula::TarskiD(..) => {
                if self.lang.kind != LangKind::E2 {
                    self.err(path, "Tarski atom outside E2".to_string());
                }
                for (i, x) in f.atom_terms().into_iter().enumerate() {
                    path.push(i);
                    self.point(x, scope, path);
                    path.pop();
                }
            }
            Formula::Defined(name, args) => match defs::signature(name) {
                None => self.err(path, format!("unknown defined atom {name}")),
                Some(sig) => {
                    if !sig.available_in(self.lang) {
                        self.err(path, format!("defined atom {name} is not available in {}", self.lang));
                    }
                    if sig.params.len() != args.len() {
                        self.err(
                            path,
                            format!("{name} expects {} arguments, found {}", sig.params.len(), args.len()),
                        );
                        return;
                    }
                    for (i, (s, a)) in sig.params.iter().zip(args).enumerate() {
                        path.push(i);
                        match s {
                            Sort::Point => self.point(a, scope, path),
                            Sort::Number => self.number(a, scope, path),
                        }
                        path.pop();
                    }
                }
            },
            Formula::ForAll(v, s, b) | Formula::Exists(v, s, b) => {
                if *s == Sort::Number && !self.lang.has_numbers() {
                    self.err(path, format!("number quantifier over {v} outside Ed/Eda"));
                }
                scope.push((v.clone(), *s));
                path.push(0);
                self.formula(b, scope, path);
                path.pop();
                scope.pop();
            }
            _ => {
                for (i, g) in f.subformulas().into_iter().enumerate() {
                    path.push(i);
                    self.formula(g, scope, path);
                    path.pop();
                }
            }
        }
    }
}
