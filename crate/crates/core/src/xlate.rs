//! Translations between the Tarski language and the distance language.
//!
//! `e2_to_ed` is a plain homomorphic rewrite of the two Tarski primitives.
//! `ed_to_e2` interprets numbers as points on a line through a frame
//! `o_h`, `e_h` (standing for 0 and 1) with an off-axis helper `e'`, and
//! replaces arithmetic by the parallel-projection constructions `GSum` and
//! `GProd`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::defs::{self, DefsError};
use crate::logic::{fresh_name, Formula, Lang, Sort, Term};
use crate::syntax::print;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum XlateError {
    #[error("angle term in {0}: angles have no interpretation in E2")]
    AngleTermPresent(String),
    #[error(transparent)]
    Defs(#[from] DefsError),
}

/// How the frame points appear in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameMode {
    /// `exists o_h e_h e'. NonCollinear(o_h,e_h,e') & ...`
    #[default]
    Existential,
    /// Frame left free: `NonCollinear(o_h,e_h,e') -> ...`
    Free,
}

/// Names used by one interpretation run.
#[derive(Debug, Clone)]
pub struct TranslationFrame {
    pub origin: String,
    pub unit: String,
    pub off_axis: String,
    pub fresh_counter: usize,
    /// Number variable to its point on the number line.
    pub hatted: BTreeMap<String, String>,
    pub mode: FrameMode,
    /// Apply the two distance-equation shortcuts before flattening.
    pub peepholes: bool,
    used: BTreeSet<String>,
}

impl Default for TranslationFrame {
    fn default() -> Self {
        TranslationFrame::new(FrameMode::Existential)
    }
}

impl TranslationFrame {
    pub fn new(mode: FrameMode) -> TranslationFrame {
        TranslationFrame {
            origin: "o_h".into(),
            unit: "e_h".into(),
            off_axis: "e'".into(),
            fresh_counter: 0,
            hatted: BTreeMap::new(),
            mode,
            peepholes: true,
            used: BTreeSet::new(),
        }
    }

    /// Reserve the names of `f`, renaming frame points that collide.
    pub fn reserve(&mut self, f: &Formula) {
        self.used.extend(f.all_names());
        for slot in [0, 1, 2] {
            let cur = match slot {
                0 => &mut self.origin,
                1 => &mut self.unit,
                _ => &mut self.off_axis,
            };
            if self.used.contains(cur.as_str()) {
                *cur = fresh_name(cur, &self.used);
            }
            self.used.insert(cur.clone());
        }
    }

    fn fresh(&mut self) -> String {
        loop {
            self.fresh_counter += 1;
            let cand = format!("h{}", self.fresh_counter);
            if self.used.insert(cand.clone()) {
                return cand;
            }
        }
    }

    fn fresh_named(&mut self, base: &str) -> String {
        let n = if self.used.contains(base) { fresh_name(base, &self.used) } else { base.to_string() };
        self.used.insert(n.clone());
        n
    }

    /// The point variable standing for number variable `x`.
    pub fn hat(&mut self, x: &str) -> String {
        if let Some(h) = self.hatted.get(x) {
            return h.clone();
        }
        let h = self.fresh_named(&format!("{x}_h"));
        self.hatted.insert(x.to_string(), h.clone());
        h
    }

    fn on_line(&self, x: &str) -> Formula {
        Formula::defined("Coll", &[&self.origin, &self.unit, x])
    }

    fn gsum(&self, a: &str, b: &str, c: &str) -> Formula {
        Formula::defined("GSum", &[&self.origin, &self.unit, &self.off_axis, a, b, c])
    }

    fn gprod(&self, a: &str, b: &str, c: &str) -> Formula {
        Formula::defined("GProd", &[&self.origin, &self.unit, &self.off_axis, a, b, c])
    }
}

/// Rewrite `B` and `D` into distance equations. Defined atoms with a
/// distance-side body are kept; the others are expanded first.
pub fn e2_to_ed(f: &Formula) -> Result<Formula, XlateError> {
    let mut err = None;
    let out = f.map_atoms(&mut |atom| match e2_atom(atom) {
        Ok(g) => g,
        Err(e) => {
            err.get_or_insert(e);
            atom.clone()
        }
    });
    err.map_or(Ok(out), Err)
}

fn e2_atom(atom: &Formula) -> Result<Formula, XlateError> {
    Ok(match atom {
        Formula::TarskiB(p, v, q) => Formula::EqNum(
            Term::Dist(Box::new(p.clone()), Box::new(q.clone())),
            Term::add(
                Term::Dist(Box::new(p.clone()), Box::new(v.clone())),
                Term::Dist(Box::new(v.clone()), Box::new(q.clone())),
            ),
        ),
        Formula::TarskiD(p, q, u, v) => Formula::EqNum(
            Term::Dist(Box::new(p.clone()), Box::new(q.clone())),
            Term::Dist(Box::new(u.clone()), Box::new(v.clone())),
        ),
        Formula::Defined(name, args) if !defs::signature(name).is_some_and(|s| s.ed) => {
            let body = defs::instantiate(name, args, Lang::E2, &atom.all_names())?;
            e2_to_ed(&body)?
        }
        other => other.clone(),
    })
}

/// `c = a + b` on the number line, as the construction with auxiliary
/// points `b2` (on line `o e1`) and `c2`.
pub fn gsum_schema(o: &str, e: &str, e1: &str, a: &str, b: &str, c: &str) -> Formula {
    schema("GSum", &[o, e, e1, a, b, c])
}

/// `c = a * b` on the number line, with one auxiliary point `b2`.
pub fn gprod_schema(o: &str, e: &str, e1: &str, a: &str, b: &str, c: &str) -> Formula {
    schema("GProd", &[o, e, e1, a, b, c])
}

fn schema(name: &str, params: &[&str]) -> Formula {
    let args: Vec<Term> = params.iter().map(|p| Term::pv(p)).collect();
    defs::instantiate(name, &args, Lang::E2, &BTreeSet::new()).expect("registered E2 body")
}

/// `~B(o,e,e1) & ~B(e,e1,o) & ~B(e1,o,e)`.
pub fn ncollinear_guard(o: &str, e: &str, e1: &str) -> Formula {
    Formula::conj(vec![
        Formula::not(Formula::tb(o, e, e1)),
        Formula::not(Formula::tb(e, e1, o)),
        Formula::not(Formula::tb(e1, o, e)),
    ])
    .expect("three conjuncts")
}

/// Interpret a distance-language formula in the Tarski language relative
/// to `frame`. Frame names colliding with names of `f` are renamed first.
pub fn ed_to_e2(f: &Formula, frame: &mut TranslationFrame) -> Result<Formula, XlateError> {
    if f.contains_angle() {
        return Err(XlateError::AngleTermPresent(first_angle_atom(f)));
    }
    frame.reserve(f);
    let body = interpret(f, frame)?;
    let guard = Formula::defined("NonCollinear", &[&frame.origin, &frame.unit, &frame.off_axis]);
    Ok(match frame.mode {
        FrameMode::Existential => {
            let mut g = Formula::and(guard, body);
            for v in [&frame.off_axis, &frame.unit, &frame.origin] {
                g = Formula::exists(v, Sort::Point, g);
            }
            g
        }
        FrameMode::Free => Formula::implies(guard, body),
    })
}

/// Interpretation with a default frame.
pub fn ed_to_e2_with(f: &Formula, mode: FrameMode) -> Result<(Formula, TranslationFrame), XlateError> {
    let mut frame = TranslationFrame::new(mode);
    let g = ed_to_e2(f, &mut frame)?;
    Ok((g, frame))
}

fn first_angle_atom(f: &Formula) -> String {
    let mut found = None;
    f.map_atoms(&mut |a| {
        if found.is_none() && a.contains_angle() {
            found = Some(print(a));
        }
        a.clone()
    });
    found.unwrap_or_default()
}

fn interpret(f: &Formula, fr: &mut TranslationFrame) -> Result<Formula, XlateError> {
    Ok(match f {
        Formula::Not(a) => Formula::not(interpret(a, fr)?),
        Formula::And(a, b) => Formula::and(interpret(a, fr)?, interpret(b, fr)?),
        Formula::Or(a, b) => Formula::or(interpret(a, fr)?, interpret(b, fr)?),
        Formula::Implies(a, b) => Formula::implies(interpret(a, fr)?, interpret(b, fr)?),
        Formula::Iff(a, b) => Formula::iff(interpret(a, fr)?, interpret(b, fr)?),
        Formula::ForAll(v, Sort::Number, b) => {
            let h = fr.hat(v);
            let guard = fr.on_line(&h);
            Formula::forall(&h, Sort::Point, Formula::implies(guard, interpret(b, fr)?))
        }
        Formula::Exists(v, Sort::Number, b) => {
            let h = fr.hat(v);
            let guard = fr.on_line(&h);
            Formula::exists(&h, Sort::Point, Formula::and(guard, interpret(b, fr)?))
        }
        Formula::ForAll(v, s, b) => Formula::ForAll(v.clone(), *s, Box::new(interpret(b, fr)?)),
        Formula::Exists(v, s, b) => Formula::Exists(v.clone(), *s, Box::new(interpret(b, fr)?)),
        atom => interpret_atom(atom, fr)?.formula,
    })
}

/// A translated atom together with, for each point it introduces, the
/// number that point stands for (as a source term). The second part lets
/// callers compute witnesses for the existentials analytically.
#[derive(Debug, Clone)]
pub struct InterpretedAtom {
    pub formula: Formula,
    pub witnesses: Vec<(String, Term)>,
}

/// A number term flattened to a point on the number line.
#[derive(Debug, Clone)]
pub struct FlattenedTerm {
    pub result_var: String,
    pub constraints: Vec<Formula>,
}

struct Flattener<'a> {
    fr: &'a mut TranslationFrame,
    constraints: Vec<Formula>,
    introduced: Vec<(String, Term)>,
    dists: BTreeMap<(String, String), String>,
}

impl Flattener<'_> {
    fn intro(&mut self, t: &Term) -> String {
        let h = self.fr.fresh();
        self.introduced.push((h.clone(), t.clone()));
        h
    }

    fn term(&mut self, t: &Term) -> String {
        match t {
            Term::Zero => self.fr.origin.clone(),
            Term::One => self.fr.unit.clone(),
            Term::NumVar(x) => self.fr.hat(x),
            Term::Lit(0) => self.fr.origin.clone(),
            Term::Lit(1) => self.fr.unit.clone(),
            Term::Lit(n) => {
                // Binary doubling from the leading bit: 2k = k + k and
                // 2k + 1 = (k + k) + 1, so n costs O(log n) sums.
                let unit = self.fr.unit.clone();
                let mut acc = unit.clone();
                let mut k = 1u64;
                for bit in (0..63 - n.leading_zeros()).rev() {
                    k *= 2;
                    let h = self.intro(&Term::Lit(k));
                    self.constraints.push(self.fr.gsum(&acc, &acc, &h));
                    acc = h;
                    if n >> bit & 1 == 1 {
                        k += 1;
                        let h = self.intro(&Term::Lit(k));
                        self.constraints.push(self.fr.gsum(&acc, &unit, &h));
                        acc = h;
                    }
                }
                acc
            }
            Term::Dist(p, q) => {
                let (p, q) = (point_name(p), point_name(q));
                if let Some(h) = self.dists.get(&(p.clone(), q.clone())) {
                    return h.clone();
                }
                let h = self.intro(t);
                let o = self.fr.origin.clone();
                self.constraints.push(Formula::td(&p, &q, &o, &h));
                self.constraints.push(self.fr.on_line(&h));
                self.constraints.push(Formula::defined("NN", &[&o, &self.fr.unit, &h]));
                self.dists.insert((p, q), h.clone());
                h
            }
            Term::Add(a, b) | Term::Mul(a, b) => {
                let (x, y) = (self.term(a), self.term(b));
                let h = self.intro(t);
                let c = if matches!(t, Term::Add(..)) { self.fr.gsum(&x, &y, &h) } else { self.fr.gprod(&x, &y, &h) };
                self.constraints.push(c);
                h
            }
            Term::Neg(a) => {
                let x = self.term(a);
                let h = self.intro(t);
                let o = self.fr.origin.clone();
                self.constraints.push(self.fr.gsum(&x, &h, &o));
                h
            }
            Term::PointVar(p) => p.clone(),
            Term::Angle(..) => unreachable!("angles rejected before flattening"),
        }
    }
}

fn point_name(t: &Term) -> String {
    t.var_name().unwrap_or_default().to_string()
}

/// Flatten one number term; fresh points are left unquantified.
pub fn flatten_term(t: &Term, frame: &mut TranslationFrame) -> Result<FlattenedTerm, XlateError> {
    if t.contains_angle() {
        return Err(XlateError::AngleTermPresent(crate::syntax::print_term(t)));
    }
    let mut fl = Flattener { fr: frame, constraints: vec![], introduced: vec![], dists: BTreeMap::new() };
    let result_var = fl.term(t);
    Ok(FlattenedTerm { result_var, constraints: fl.constraints })
}

/// Interpret a single atom. Numeric atoms become an existential block over
/// the introduced points; other atoms are kept or expanded.
pub fn interpret_atom(atom: &Formula, fr: &mut TranslationFrame) -> Result<InterpretedAtom, XlateError> {
    if atom.contains_angle() {
        return Err(XlateError::AngleTermPresent(print(atom)));
    }
    let plain = |f: Formula| InterpretedAtom { formula: f, witnesses: vec![] };
    match atom {
        Formula::EqNum(l, r) | Formula::Lt(l, r) => {
            let is_eq = matches!(atom, Formula::EqNum(..));
            if is_eq && fr.peepholes {
                if let Some(out) = peephole(l, r, fr) {
                    return Ok(out);
                }
            }
            let mut fl = Flattener { fr, constraints: vec![], introduced: vec![], dists: BTreeMap::new() };
            let (s, t) = (fl.term(l), fl.term(r));
            let Flattener { fr, constraints, introduced, .. } = fl;
            let head = if is_eq {
                Formula::eq_pt(&s, &t)
            } else {
                Formula::defined("LtHat", &[&fr.origin, &fr.unit, &fr.off_axis, &s, &t])
            };
            let mut body = Formula::conj(constraints.into_iter().chain([head]).collect()).expect("head present");
            for (v, _) in introduced.iter().rev() {
                body = Formula::exists(v, Sort::Point, body);
            }
            Ok(InterpretedAtom { formula: body, witnesses: introduced })
        }
        Formula::Defined(name, args) if !defs::signature(name).is_some_and(|s| s.e2) => {
            let mut avoid = fr.used.clone();
            avoid.extend(atom.all_names());
            let body = defs::instantiate(name, args, Lang::ED, &avoid)?;
            fr.used.extend(body.all_names());
            Ok(plain(interpret(&body, fr)?))
        }
        other => Ok(plain(other.clone())),
    }
}

fn dist_pair(t: &Term) -> Option<(String, String)> {
    match t {
        Term::Dist(p, q) => Some((point_name(p), point_name(q))),
        _ => None,
    }
}

/// `d(p,q) = d(u,v)` and `d(p,q) = d(u,v) + d(r,s)`.
fn peephole(l: &Term, r: &Term, fr: &mut TranslationFrame) -> Option<InterpretedAtom> {
    let (p, q) = dist_pair(l)?;
    if let Some((u, v)) = dist_pair(r) {
        return Some(InterpretedAtom { formula: Formula::td(&p, &q, &u, &v), witnesses: vec![] });
    }
    let Term::Add(x, y) = r else { return None };
    let ((u, v), (rr, s)) = (dist_pair(x)?, dist_pair(y)?);
    let (a, b, c) = (fr.fresh_named("a"), fr.fresh_named("b"), fr.fresh_named("c"));
    let body = Formula::conj(vec![
        Formula::tb(&a, &b, &c),
        Formula::td(&p, &q, &a, &c),
        Formula::td(&u, &v, &a, &b),
        Formula::td(&rr, &s, &b, &c),
    ])
    .expect("nonempty");
    let formula = Formula::exists(&a, Sort::Point, Formula::exists(&b, Sort::Point, Formula::exists(&c, Sort::Point, body)));
    let witnesses = vec![(a, Term::Zero), (b, (**x).clone()), (c, r.clone())];
    Some(InterpretedAtom { formula, witnesses })
}
