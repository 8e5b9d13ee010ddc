//! Quantifier-free evaluation with tolerance, including direct semantics
//! for every registered defined atom.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::geom::{add, dot, mobius_to_origin, norm, scale, sub, ModelKind, PointValue};
use crate::logic::{Formula, Term};
use crate::syntax::print;

/// Values for the free variables of a formula.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub points: BTreeMap<String, PointValue>,
    pub numbers: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn point(&self, name: &str) -> Result<&PointValue, EvalError> {
        self.points.get(name).ok_or_else(|| EvalError::UnboundVariable(name.to_string()))
    }

    pub fn number(&self, name: &str) -> Result<f64, EvalError> {
        self.numbers.get(name).copied().ok_or_else(|| EvalError::UnboundVariable(name.to_string()))
    }

    pub fn set_point(&mut self, name: &str, p: PointValue) {
        self.points.insert(name.to_string(), p);
    }

    pub fn set_number(&mut self, name: &str, x: f64) {
        self.numbers.insert(name.to_string(), x);
    }

    /// Bindings as a JSON object, names in sorted order.
    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        let mut all: BTreeMap<&String, serde_json::Value> = BTreeMap::new();
        for (k, v) in &self.points {
            all.insert(k, serde_json::json!(v));
        }
        for (k, v) in &self.numbers {
            all.insert(k, serde_json::json!(v));
        }
        for (k, v) in all {
            m.insert(k.clone(), v);
        }
        serde_json::Value::Object(m)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("formula is not quantifier-free")]
    NotQuantifierFree,
    #[error("no semantics for {name} in the {model} model")]
    NoSemantics { name: String, model: String },
    #[error("no witness for {0}")]
    NoWitness(String),
}

/// Tolerances and model used by evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalCtx {
    pub model: ModelKind,
    pub tol: f64,
    pub angle_tol: f64,
}

/// One evaluated atom.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AtomTrace {
    pub atom: String,
    pub value: bool,
    pub detail: String,
}

pub fn eval_term(t: &Term, s: &Assignment, cx: &EvalCtx) -> Result<f64, EvalError> {
    Ok(match t {
        Term::Zero => 0.0,
        Term::One => 1.0,
        Term::Lit(n) => *n as f64,
        Term::NumVar(n) => s.number(n)?,
        Term::PointVar(n) => return Err(EvalError::UnboundVariable(format!("{n} (point used as number)"))),
        Term::Add(a, b) => eval_term(a, s, cx)? + eval_term(b, s, cx)?,
        Term::Mul(a, b) => eval_term(a, s, cx)? * eval_term(b, s, cx)?,
        Term::Neg(a) => -eval_term(a, s, cx)?,
        Term::Dist(a, b) => cx.model.dist(pt(a, s)?, pt(b, s)?),
        Term::Angle(p, v, q) => cx.model.angle(pt(p, s)?, pt(v, s)?, pt(q, s)?, cx.tol),
    })
}

fn pt<'a>(t: &Term, s: &'a Assignment) -> Result<&'a PointValue, EvalError> {
    match t {
        Term::PointVar(n) => s.point(n),
        _ => Err(EvalError::UnboundVariable("non-variable point term".to_string())),
    }
}

/// Truth value of a quantifier-free formula plus the trace of every atom
/// that was evaluated.
pub fn eval_qf(f: &Formula, s: &Assignment, cx: &EvalCtx) -> Result<(bool, Vec<AtomTrace>), EvalError> {
    let mut trace = Vec::new();
    let v = eval(f, s, cx, &mut Some(&mut trace), &mut |_, _| None)?;
    Ok((v, trace))
}

/// Truth value without a trace.
pub fn holds(f: &Formula, s: &Assignment, cx: &EvalCtx) -> Result<bool, EvalError> {
    eval(f, s, cx, &mut None, &mut |_, _| None)
}

/// A witness for an existential variable, by name, given the bindings so far.
pub enum Witness {
    Point(PointValue),
    Number(f64),
}

/// Evaluate a formula whose only quantifiers are existentials in positive
/// position, taking their witnesses from `provider`.
pub fn eval_with_witnesses(
    f: &Formula,
    s: &Assignment,
    cx: &EvalCtx,
    provider: &mut dyn FnMut(&str, &Assignment) -> Option<Witness>,
) -> Result<bool, EvalError> {
    eval(f, s, cx, &mut None, provider)
}

type Provider<'a> = dyn FnMut(&str, &Assignment) -> Option<Witness> + 'a;

fn eval(
    f: &Formula,
    s: &Assignment,
    cx: &EvalCtx,
    trace: &mut Option<&mut Vec<AtomTrace>>,
    provider: &mut Provider<'_>,
) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::Not(a) => !eval(a, s, cx, trace, provider)?,
        Formula::And(a, b) => eval(a, s, cx, trace, provider)? && eval(b, s, cx, trace, provider)?,
        Formula::Or(a, b) => eval(a, s, cx, trace, provider)? || eval(b, s, cx, trace, provider)?,
        Formula::Implies(a, b) => !eval(a, s, cx, trace, provider)? || eval(b, s, cx, trace, provider)?,
        Formula::Iff(a, b) => eval(a, s, cx, trace, provider)? == eval(b, s, cx, trace, provider)?,
        Formula::Exists(v, _, b) => match provider(v, s) {
            Some(w) => {
                let mut s2 = s.clone();
                match w {
                    Witness::Point(p) => s2.set_point(v, p),
                    Witness::Number(x) => s2.set_number(v, x),
                }
                eval(b, &s2, cx, trace, provider)?
            }
            None => return Err(EvalError::NoWitness(v.clone())),
        },
        Formula::ForAll(..) => return Err(EvalError::NotQuantifierFree),
        atom => {
            let (v, detail) = eval_atom(atom, s, cx)?;
            if let Some(t) = trace.as_deref_mut() {
                t.push(AtomTrace { atom: print(atom), value: v, detail });
            }
            v
        }
    })
}

fn eval_atom(f: &Formula, s: &Assignment, cx: &EvalCtx) -> Result<(bool, String), EvalError> {
    let num_tol = |a: &Term, b: &Term| if a.contains_angle() || b.contains_angle() { cx.angle_tol } else { cx.tol };
    Ok(match f {
        Formula::EqNum(a, b) => {
            let (x, y) = (eval_term(a, s, cx)?, eval_term(b, s, cx)?);
            ((x - y).abs() <= num_tol(a, b), format!("lhs={x:e} rhs={y:e}"))
        }
        Formula::Lt(a, b) => {
            let (x, y) = (eval_term(a, s, cx)?, eval_term(b, s, cx)?);
            (y - x > num_tol(a, b), format!("lhs={x:e} rhs={y:e}"))
        }
        Formula::EqPoint(a, b) => {
            let (p, q) = (pt(a, s)?, pt(b, s)?);
            let ok = p.iter().zip(q).all(|(x, y)| (x - y).abs() <= cx.tol);
            (ok, format!("{p:?} vs {q:?}"))
        }
        Formula::TarskiB(a, b, c) => {
            let sem = Sem { cx, s };
            let (p, q, r) = (pt(a, s)?, pt(b, s)?, pt(c, s)?);
            (sem.bet(p, q, r), format!("excess={:e}", sem.d(p, r) - sem.d(p, q) - sem.d(q, r)))
        }
        Formula::TarskiD(a, b, c, d) => {
            let sem = Sem { cx, s };
            let (x, y) = (sem.d(pt(a, s)?, pt(b, s)?), sem.d(pt(c, s)?, pt(d, s)?));
            ((x - y).abs() <= cx.tol, format!("lhs={x:e} rhs={y:e}"))
        }
        Formula::Defined(name, args) => {
            let pts: Vec<&PointValue> = args.iter().map(|a| pt(a, s)).collect::<Result<_, _>>()?;
            let sem = Sem { cx, s };
            (sem.defined(name, &pts)?, String::new())
        }
        _ => return Err(EvalError::NotQuantifierFree),
    })
}

struct Sem<'a> {
    cx: &'a EvalCtx,
    #[allow(dead_code)]
    s: &'a Assignment,
}

impl Sem<'_> {
    fn d(&self, p: &[f64], q: &[f64]) -> f64 {
        self.cx.model.dist(p, q)
    }

    fn tol(&self) -> f64 {
        self.cx.tol
    }

    fn bet(&self, a: &[f64], b: &[f64], c: &[f64]) -> bool {
        (self.d(a, c) - self.d(a, b) - self.d(b, c)).abs() <= self.tol()
    }

    fn coll(&self, a: &[f64], b: &[f64], c: &[f64]) -> bool {
        self.bet(a, b, c) || self.bet(b, c, a) || self.bet(c, a, b)
    }

    fn ne(&self, a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).any(|(x, y)| (x - y).abs() > self.tol())
    }

    fn cong(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> bool {
        (self.d(a, b) - self.d(c, d)).abs() <= self.tol()
    }

    fn cartesian_only(&self, name: &str) -> Result<(), EvalError> {
        if self.cx.model.is_disk() {
            return Err(EvalError::NoSemantics { name: name.to_string(), model: self.cx.model.label() });
        }
        Ok(())
    }

    fn defined(&self, name: &str, p: &[&PointValue]) -> Result<bool, EvalError> {
        Ok(match name {
            "Bet" => self.bet(p[0], p[1], p[2]),
            "Coll" => self.coll(p[0], p[1], p[2]),
            "NonCollinear" => !self.coll(p[0], p[1], p[2]),
            "CongSeg" => self.cong(p[0], p[1], p[2], p[3]),
            "CongT" => {
                self.cong(p[0], p[1], p[3], p[4]) && self.cong(p[1], p[2], p[4], p[5]) && self.cong(p[2], p[0], p[5], p[3])
            }
            "SimT" => self.sim(p),
            "CongA" => self.cong_angle(p[0], p[1], p[2], p[3], p[4], p[5]),
            "AddA" => self.add_angle(p[0], p[1], p[2], p[3]),
            "AddA4" => {
                let u = self.angle_range(p[0], p[1], p[2]);
                let x = self.angle_range(p[3], p[4], p[5]);
                let y = self.angle_range(p[6], p[7], p[8]);
                let (lo, hi) = (x.0 + y.0, x.1 + y.1);
                let t = self.cx.angle_tol;
                lo <= u.1 + t && u.0 <= hi + t && lo <= 180.0 + t
            }
            "LeA" => self.le_angle(p),
            "LtA" => self.le_angle(p) && !self.cong_angle(p[0], p[1], p[2], p[3], p[4], p[5]),
            "Right" => {
                let (a, b, c) = (p[0], p[1], p[2]);
                if !(self.ne(a, b) && self.ne(a, c) && self.ne(b, c)) {
                    return Ok(false);
                }
                let a1 = self.cx.model.geo(b, a, -self.d(b, a));
                self.bet(a, b, &a1) && self.cong(b, a, b, &a1) && self.cong(c, a, c, &a1)
            }
            "Par" => {
                self.cartesian_only(name)?;
                self.par(p[0], p[1], p[2], p[3])
            }
            "ParW" => {
                self.cartesian_only(name)?;
                self.par(p[0], p[1], p[2], p[3])
                    || self.ne(p[0], p[1])
                        && self.ne(p[2], p[3])
                        && self.coll(p[0], p[2], p[3])
                        && self.coll(p[1], p[2], p[3])
            }
            "NN" => self.bet(p[0], p[2], p[1]) || self.bet(p[0], p[1], p[2]),
            "GSum" | "GProd" => {
                self.cartesian_only(name)?;
                let (o, e, e1) = (p[0], p[1], p[2]);
                if self.coll(o, e, e1) || !(self.coll(o, e, p[3]) && self.coll(o, e, p[4]) && self.coll(o, e, p[5])) {
                    return Ok(false);
                }
                let unit = self.d(o, e);
                let (a, b, c) = (coord(o, e, p[3]), coord(o, e, p[4]), coord(o, e, p[5]));
                let want = if name == "GSum" { a + b } else { a * b };
                (c - want).abs() * unit <= self.tol()
            }
            "LtHat" => {
                self.cartesian_only(name)?;
                let (o, e, e1) = (p[0], p[1], p[2]);
                if self.coll(o, e, e1) || !(self.coll(o, e, p[3]) && self.coll(o, e, p[4])) {
                    return Ok(false);
                }
                (coord(o, e, p[4]) - coord(o, e, p[3])) * self.d(o, e) > self.tol()
            }
            other => {
                return Err(EvalError::NoSemantics { name: other.to_string(), model: self.cx.model.label() })
            }
        })
    }

    fn sim(&self, p: &[&PointValue]) -> bool {
        let s = [self.d(p[0], p[1]), self.d(p[1], p[2]), self.d(p[2], p[0])];
        let s1 = [self.d(p[3], p[4]), self.d(p[4], p[5]), self.d(p[5], p[3])];
        if s.iter().all(|x| *x <= self.tol()) {
            return true;
        }
        let i = (0..3).max_by(|&i, &j| s1[i].total_cmp(&s1[j])).unwrap();
        if s1[i] <= self.tol() {
            return false;
        }
        let k = s[i] / s1[i];
        k.abs() > self.tol() && (0..3).all(|j| (s[j] - k * s1[j]).abs() <= self.tol())
    }

    /// Docking semantics: a congruent copy of triangle p v q with its
    /// vertex at v1 and its arms on the rays v1->p1 and v1->q1. A
    /// degenerate target arm leaves that copy point free on a circle.
    fn cong_angle(&self, p: &[f64], v: &[f64], q: &[f64], p1: &[f64], v1: &[f64], q1: &[f64]) -> bool {
        let m = self.cx.model;
        if self.ne(v, p) && self.ne(v, q) && self.ne(v1, p1) && self.ne(v1, q1) {
            // Proper angles: compare measures, which unlike the docked third
            // side stay sensitive near 0 and 180 degrees.
            let (a, b) = (m.angle(p, v, q, self.tol()), m.angle(p1, v1, q1, self.tol()));
            return (a - b).abs() <= self.cx.angle_tol;
        }
        let (r1, r2, target) = (self.d(v, p), self.d(v, q), self.d(p, q));
        let fixed1 = self.ne(v1, p1).then(|| m.geo(v1, p1, r1));
        let fixed2 = self.ne(v1, q1).then(|| m.geo(v1, q1, r2));
        let (lo, hi) = match (&fixed1, &fixed2) {
            (Some(a), Some(b)) => {
                let x = self.d(a, b);
                (x, x)
            }
            (Some(x), None) => {
                let dl = self.d(v1, x);
                ((r2 - dl).abs(), r2 + dl)
            }
            (None, Some(x)) => {
                let dl = self.d(v1, x);
                ((r1 - dl).abs(), r1 + dl)
            }
            (None, None) => ((r1 - r2).abs(), r1 + r2),
        };
        target >= lo - self.tol() && target <= hi + self.tol()
    }

    /// Range of angle measures an angle can be docked onto: a single value,
    /// or all of [0, 180] when an arm is degenerate.
    fn angle_range(&self, p: &[f64], v: &[f64], q: &[f64]) -> (f64, f64) {
        if !self.ne(p, v) || !self.ne(q, v) {
            (0.0, 180.0)
        } else {
            let a = self.cx.model.angle(p, v, q, self.tol());
            (a, a)
        }
    }

    fn le_angle(&self, p: &[&PointValue]) -> bool {
        let x = self.angle_range(p[0], p[1], p[2]);
        let u = self.angle_range(p[3], p[4], p[5]);
        x.0 <= u.1 + self.cx.angle_tol
    }

    fn add_angle(&self, p: &[f64], v: &[f64], t: &[f64], q: &[f64]) -> bool {
        if self.bet(p, v, q) {
            return self.ne(p, v) && self.ne(q, v) && self.ne(t, v);
        }
        self.reachable(p, v, t, q)
    }

    /// Whether t lies on a segment joining the ray v->p to the ray v->q.
    fn reachable(&self, p: &[f64], v: &[f64], t: &[f64], q: &[f64]) -> bool {
        let tol = self.tol();
        if !self.ne(p, v) || !self.ne(q, v) {
            return true;
        }
        let (u, w, z) = match self.cx.model {
            ModelKind::Cartesian(_) => (sub(p, v), sub(q, v), sub(t, v)),
            ModelKind::Disk => (mobius_to_origin(v, p), mobius_to_origin(v, q), mobius_to_origin(v, t)),
        };
        let (nu, nw) = (norm(&u), norm(&w));
        let uw = dot(&u, &w);
        let in_cone = cone_distance(&u, &w, &z) <= tol;
        if !in_cone || !self.cx.model.is_disk() {
            return in_cone;
        }
        // Disk: segments between the two rays stay on the origin side of the
        // geodesic joining the rays' ideal end points.
        let cos = (uw / (nu * nw)).clamp(-1.0, 1.0);
        if cos >= 1.0 - 1e-15 {
            return true;
        }
        let (eu, ew) = (scale(1.0 / nu, &u), scale(1.0 / nw, &w));
        let center = scale(1.0 / (1.0 + cos), &add(&eu, &ew));
        let half = cos.acos() / 2.0;
        norm(&sub(&z, &center)) > half.tan()
    }

    /// Lines pq and uv are distinct and do not meet.
    fn par(&self, p: &[f64], q: &[f64], u: &[f64], v: &[f64]) -> bool {
        let tol = self.tol();
        if !self.ne(p, q) || !self.ne(u, v) {
            return false;
        }
        let (d1, d2, w) = (sub(q, p), sub(v, u), sub(p, u));
        // Orthonormal frame of the two directions; the parts of w outside
        // it measure the gap between the lines.
        let e1 = scale(1.0 / norm(&d1), &d1);
        let d2p = sub(&d2, &scale(dot(&d2, &e1), &e1));
        let wp = sub(&w, &scale(dot(&w, &e1), &e1));
        if norm(&d2p) <= 1e-12 * norm(&d2) {
            // Parallel directions: disjoint unless the lines coincide.
            return norm(&wp) > tol;
        }
        let e2 = scale(1.0 / norm(&d2p), &d2p);
        let gap = norm(&sub(&wp, &scale(dot(&wp, &e2), &e2)));
        gap > tol
    }
}

/// Distance from `z` to the planar cone spanned by the rays along `u` and
/// `w` (both nonzero). Works in an orthonormal frame of the plane so that
/// near-straight angles stay well conditioned.
fn cone_distance(u: &[f64], w: &[f64], z: &[f64]) -> f64 {
    let e1 = scale(1.0 / norm(u), u);
    let wp = sub(w, &scale(dot(w, &e1), &e1));
    let np = norm(&wp);
    if np <= 1e-12 * norm(w) {
        // The rays are collinear: one ray, or a full line when opposite.
        let a = dot(z, &e1);
        let off = norm(&sub(z, &scale(a, &e1)));
        let same = dot(w, &e1) > 0.0;
        return if a >= 0.0 || !same { off } else { norm(z) };
    }
    let e2 = scale(1.0 / np, &wp);
    let (x1, x2) = (dot(z, &e1), dot(z, &e2));
    let resid = norm(&sub(z, &add(&scale(x1, &e1), &scale(x2, &e2))));
    let theta = dot(w, &e2).atan2(dot(w, &e1));
    let phi = x2.atan2(x1);
    let planar = if (0.0..=theta).contains(&phi) {
        0.0
    } else {
        let ray = |c: f64, s: f64| {
            let along = x1 * c + x2 * s;
            if along >= 0.0 {
                (x1 * s - x2 * c).abs()
            } else {
                x1.hypot(x2)
            }
        };
        ray(1.0, 0.0).min(ray(theta.cos(), theta.sin()))
    };
    resid.hypot(planar)
}

/// Affine coordinate of `x` on the line through `o` (0) and `e` (1).
pub fn coord(o: &[f64], e: &[f64], x: &[f64]) -> f64 {
    let u = sub(e, o);
    dot(&sub(x, o), &u) / dot(&u, &u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Lang;
    use crate::syntax::parse;

    fn cx2() -> EvalCtx {
        EvalCtx { model: ModelKind::Cartesian(2), tol: 1e-9, angle_tol: 1e-6 }
    }

    fn asg(points: &[(&str, [f64; 2])]) -> Assignment {
        let mut a = Assignment::default();
        for (n, p) in points {
            a.set_point(n, p.to_vec());
        }
        a
    }

    #[test]
    fn nonnegativity_body() {
        let f = parse("0 <= d(a,b)", Lang::ED).unwrap();
        assert!(holds(&f, &asg(&[("a", [0.0, 0.0]), ("b", [1.0, 2.0])]), &cx2()).unwrap());
    }

    #[test]
    fn pythagoras_body_at_three_four_five() {
        let f = parse("Right(b,a,c) -> d(a,b) * d(a,b) + d(a,c) * d(a,c) = d(b,c) * d(b,c)", Lang::ED).unwrap();
        let s = asg(&[("a", [0.0, 0.0]), ("b", [3.0, 0.0]), ("c", [0.0, 4.0])]);
        let (v, trace) = eval_qf(&f, &s, &cx2()).unwrap();
        assert!(v);
        assert_eq!(trace.len(), 2);
        assert!(trace[0].value);
    }

    #[test]
    fn point_equality_within_tolerance() {
        let f = parse("p == q", Lang::ED).unwrap();
        let mut s = asg(&[("p", [0.0, 0.0])]);
        s.set_point("q", vec![1e-12, 0.0]);
        assert!(holds(&f, &s, &cx2()).unwrap());
    }

    #[test]
    fn unbound_variable() {
        let f = parse("0 <= d(a,b)", Lang::ED).unwrap();
        assert!(matches!(holds(&f, &asg(&[("a", [0.0, 0.0])]), &cx2()), Err(EvalError::UnboundVariable(_))));
    }

    #[test]
    fn angle_congruence_semantics() {
        let f = parse("CongA(p,v,q,p1,v1,q1)", Lang::ED).unwrap();
        let s = asg(&[
            ("p", [1.0, 0.0]),
            ("v", [0.0, 0.0]),
            ("q", [0.0, 1.0]),
            ("p1", [5.0, 5.0]),
            ("v1", [3.0, 3.0]),
            ("q1", [1.0, 5.0]),
        ]);
        assert!(holds(&f, &s, &cx2()).unwrap());
        let mut s2 = s.clone();
        s2.set_point("q1", vec![1.0, 6.0]);
        assert!(!holds(&f, &s2, &cx2()).unwrap());
    }

    #[test]
    fn angle_addition_semantics() {
        let f = parse("AddA(p,v,t,q)", Lang::ED).unwrap();
        let mut s = asg(&[("p", [1.0, 0.0]), ("v", [0.0, 0.0]), ("q", [0.0, 1.0]), ("t", [2.0, 3.0])]);
        assert!(holds(&f, &s, &cx2()).unwrap());
        s.set_point("t", vec![-1.0, 3.0]);
        assert!(!holds(&f, &s, &cx2()).unwrap());
        s.set_point("q", vec![-1.0, 0.0]);
        assert!(holds(&f, &s, &cx2()).unwrap());
    }

    #[test]
    fn disk_angle_addition_has_a_horizon() {
        let cx = EvalCtx { model: ModelKind::Disk, ..cx2() };
        let f = parse("AddA(p,v,t,q)", Lang::ED).unwrap();
        let mut s = asg(&[("p", [0.5, 0.0]), ("v", [0.0, 0.0]), ("q", [0.0, 0.5]), ("t", [0.2, 0.2])]);
        assert!(holds(&f, &s, &cx).unwrap());
        // Beyond the geodesic joining the ideal points (1,0) and (0,1).
        s.set_point("t", vec![0.68, 0.68]);
        assert!(!holds(&f, &s, &cx).unwrap());
    }

    #[test]
    fn parallel_semantics() {
        let f = parse("Par(p,q,u,v)", Lang::E2).unwrap();
        let mut s = asg(&[("p", [0.0, 0.0]), ("q", [1.0, 0.0]), ("u", [0.0, 1.0]), ("v", [2.0, 1.0])]);
        assert!(holds(&f, &s, &cx2()).unwrap());
        s.set_point("v", vec![2.0, 0.0]);
        s.set_point("u", vec![3.0, 0.0]);
        assert!(!holds(&f, &s, &cx2()).unwrap());
        let g = parse("ParW(p,q,u,v)", Lang::E2).unwrap();
        assert!(holds(&g, &s, &cx2()).unwrap());
    }
}
