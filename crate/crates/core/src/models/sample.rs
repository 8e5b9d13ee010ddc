//! Hypothesis-aware sampling of universally quantified variables.
//!
//! Most corpus sentences have the shape `hyps -> concl`, and their
//! hypotheses are satisfied on a set of measure zero (a point between two
//! others, two equal distances). Rejection sampling would never exercise
//! the conclusion, so the sampler reads simple hypothesis atoms and builds
//! conforming values directly.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::eval::Assignment;
use super::geom::{ModelKind, PointValue};
use super::script::{point_at_distance, random_point};
use crate::logic::{Formula, Sort, Term};

/// Sampling ranges for a model.
#[derive(Debug, Clone, Copy)]
pub struct SampleBox {
    /// Coordinate half-width (Cartesian) or radius cap (disk).
    pub points: f64,
    /// Range for number variables and constructed lengths.
    pub numbers: f64,
}

impl SampleBox {
    pub fn for_model(m: ModelKind, box_width: f64) -> SampleBox {
        match m {
            ModelKind::Cartesian(_) => SampleBox { points: box_width, numbers: box_width },
            ModelKind::Disk => SampleBox { points: 0.95, numbers: 3.0 },
        }
    }
}

/// One way of constructing `target` from `sources`.
#[derive(Debug, Clone, PartialEq)]
enum Rule {
    /// Target lies on the segment between the two sources.
    Between(String, String),
    /// Target extends segment (from, via) beyond `via`.
    Extend { from: String, via: String },
    /// Target at distance d(p,q) from `center`.
    AtDistance { center: String, p: String, q: String },
    /// Target equals the source.
    Same(String),
    /// Target on the line through the two sources.
    OnLine(String, String),
    /// Number in [0, range].
    NonNeg,
}

impl Rule {
    fn sources(&self) -> Vec<&str> {
        match self {
            Rule::Between(a, b) | Rule::OnLine(a, b) => vec![a, b],
            Rule::Extend { from, via } => vec![from, via],
            Rule::AtDistance { center, p, q } => vec![center, p, q],
            Rule::Same(a) => vec![a],
            Rule::NonNeg => vec![],
        }
    }
}

/// Candidate constructions for one hypothesis atom, in preference order.
fn candidates(atom: &Formula) -> Vec<(String, Rule)> {
    let pv = |t: &Term| t.var_name().map(str::to_string);
    let dist = |t: &Term| match t {
        Term::Dist(a, b) => Some((pv(a)?, pv(b)?)),
        _ => None,
    };
    let between = |a: String, b: String, c: String| {
        vec![
            (b.clone(), Rule::Between(a.clone(), c.clone())),
            (c.clone(), Rule::Extend { from: a.clone(), via: b.clone() }),
            (a, Rule::Extend { from: c, via: b }),
        ]
    };
    let congruent = |a: String, b: String, c: String, e: String| {
        vec![
            (b.clone(), Rule::AtDistance { center: a.clone(), p: c.clone(), q: e.clone() }),
            (a.clone(), Rule::AtDistance { center: b.clone(), p: c.clone(), q: e.clone() }),
            (e.clone(), Rule::AtDistance { center: c.clone(), p: a.clone(), q: b.clone() }),
            (c, Rule::AtDistance { center: e, p: a, q: b }),
        ]
    };
    match atom {
        Formula::TarskiB(a, b, c) => match (pv(a), pv(b), pv(c)) {
            (Some(a), Some(b), Some(c)) => between(a, b, c),
            _ => vec![],
        },
        Formula::Defined(n, args) if n == "Bet" && args.len() == 3 => {
            match (pv(&args[0]), pv(&args[1]), pv(&args[2])) {
                (Some(a), Some(b), Some(c)) => between(a, b, c),
                _ => vec![],
            }
        }
        Formula::Defined(n, args) if n == "Coll" && args.len() == 3 => {
            match (pv(&args[0]), pv(&args[1]), pv(&args[2])) {
                (Some(a), Some(b), Some(c)) => vec![(c, Rule::OnLine(a, b))],
                _ => vec![],
            }
        }
        Formula::TarskiD(a, b, c, e) => match (pv(a), pv(b), pv(c), pv(e)) {
            (Some(a), Some(b), Some(c), Some(e)) => congruent(a, b, c, e),
            _ => vec![],
        },
        Formula::Defined(n, args) if n == "CongSeg" && args.len() == 4 => {
            match (pv(&args[0]), pv(&args[1]), pv(&args[2]), pv(&args[3])) {
                (Some(a), Some(b), Some(c), Some(e)) => congruent(a, b, c, e),
                _ => vec![],
            }
        }
        Formula::EqPoint(a, b) => match (pv(a), pv(b)) {
            (Some(a), Some(b)) => vec![(b.clone(), Rule::Same(a.clone())), (a, Rule::Same(b))],
            _ => vec![],
        },
        Formula::EqNum(l, r) => {
            // d(a,c) = d(a,b) + d(b,c)
            if let (Some((a, c)), Term::Add(x, y)) = (dist(l), r) {
                if let (Some((a1, b1)), Some((b2, c2))) = (dist(x), dist(y)) {
                    if a1 == a && c2 == c && b1 == b2 {
                        return between(a, b1, c);
                    }
                }
            }
            match (l, r) {
                (Term::Zero, t) | (t, Term::Zero) => match dist(t) {
                    Some((a, b)) => vec![(b.clone(), Rule::Same(a.clone())), (a, Rule::Same(b))],
                    None => vec![],
                },
                _ => match (dist(l), dist(r)) {
                    (Some((a, b)), Some((c, e))) => congruent(a, b, c, e),
                    _ => vec![],
                },
            }
        }
        Formula::Or(x, y) => match (&**x, &**y) {
            (Formula::Lt(Term::Zero, Term::NumVar(v)), Formula::EqNum(Term::Zero, Term::NumVar(w))) if v == w => {
                vec![(v.clone(), Rule::NonNeg)]
            }
            _ => vec![],
        },
        Formula::Lt(Term::Zero, Term::NumVar(v)) => vec![(v.clone(), Rule::NonNeg)],
        _ => vec![],
    }
}

fn conjuncts<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        other => out.push(other),
    }
}

/// Groups of hypothesis atoms: the antecedents of the top-level
/// implications of the matrix.
fn hypothesis_groups(matrix: &Formula) -> Vec<Vec<&Formula>> {
    let mut top = Vec::new();
    conjuncts(matrix, &mut top);
    top.into_iter()
        .filter_map(|c| match c {
            Formula::Implies(a, _) => {
                let mut hs = Vec::new();
                conjuncts(a, &mut hs);
                Some(hs)
            }
            _ => None,
        })
        .collect()
}

/// Samples values for universally quantified variables.
pub struct HintSampler {
    groups: Vec<Vec<Vec<(String, Rule)>>>,
}

impl HintSampler {
    pub fn new(matrix: &Formula) -> HintSampler {
        let groups = hypothesis_groups(matrix)
            .into_iter()
            .map(|g| g.into_iter().map(candidates).filter(|c| !c.is_empty()).collect())
            .collect();
        HintSampler { groups }
    }

    /// Whether any usable hint was found.
    pub fn has_hints(&self) -> bool {
        self.groups.iter().any(|g| !g.is_empty())
    }

    /// Fill every variable of `vars` not already bound in `asg`.
    pub fn sample(
        &self,
        vars: &[(String, Sort)],
        model: ModelKind,
        bx: SampleBox,
        rng: &mut ChaCha8Rng,
        asg: &mut Assignment,
    ) {
        let wanted: BTreeMap<&str, Sort> = vars
            .iter()
            .filter(|(n, s)| match s {
                Sort::Point => !asg.points.contains_key(n),
                Sort::Number => !asg.numbers.contains_key(n),
            })
            .map(|(n, s)| (n.as_str(), *s))
            .collect();
        let p_use = if self.groups.len() > 1 { 0.5 } else { 0.75 };

        // Choose one rule per usable hint, never targeting a variable twice
        // and never closing a cycle.
        let mut rules: BTreeMap<String, Rule> = BTreeMap::new();
        for g in &self.groups {
            if !rng.gen_bool(p_use) {
                continue;
            }
            for cands in g {
                for (target, rule) in cands {
                    let sort_ok = match rule {
                        Rule::NonNeg => wanted.get(target.as_str()) == Some(&Sort::Number),
                        _ => {
                            wanted.get(target.as_str()) == Some(&Sort::Point)
                                && rule.sources().iter().all(|s| *s != target.as_str() && (wanted.contains_key(s) || asg.points.contains_key(*s)))
                        }
                    };
                    if !sort_ok || rules.contains_key(target) || reaches(&rules, &rule.sources(), target) {
                        continue;
                    }
                    rules.insert(target.clone(), rule.clone());
                    break;
                }
            }
        }

        // Evaluate in dependency order; variables without a rule are random.
        let mut done: BTreeSet<String> = BTreeSet::new();
        let names: Vec<&str> = wanted.keys().copied().collect();
        for n in &names {
            self.fill(n, &wanted, &rules, model, bx, rng, asg, &mut done);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn fill(
        &self,
        name: &str,
        wanted: &BTreeMap<&str, Sort>,
        rules: &BTreeMap<String, Rule>,
        model: ModelKind,
        bx: SampleBox,
        rng: &mut ChaCha8Rng,
        asg: &mut Assignment,
        done: &mut BTreeSet<String>,
    ) {
        if done.contains(name) || !wanted.contains_key(name) {
            return;
        }
        done.insert(name.to_string());
        let rule = rules.get(name);
        if let Some(r) = rule {
            for s in r.sources() {
                self.fill(s, wanted, rules, model, bx, rng, asg, done);
            }
        }
        let p = |asg: &Assignment, n: &str| asg.points[n].clone();
        match (wanted[name], rule) {
            (Sort::Number, Some(Rule::NonNeg)) => {
                let x = if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.0..bx.numbers) };
                asg.set_number(name, x);
            }
            (Sort::Number, _) => asg.set_number(name, rng.gen_range(-bx.numbers..bx.numbers)),
            (Sort::Point, None) | (Sort::Point, Some(Rule::NonNeg)) => {
                asg.set_point(name, random_point(model, bx.points, rng))
            }
            (Sort::Point, Some(r)) => {
                let v: PointValue = match r {
                    Rule::Between(a, c) => {
                        let s = pick_fraction(rng);
                        model.lerp(&p(asg, a), &p(asg, c), s)
                    }
                    Rule::OnLine(a, c) => model.lerp(&p(asg, a), &p(asg, c), rng.gen_range(-1.0..2.0)),
                    Rule::Extend { from, via } => {
                        let (f, v) = (p(asg, from), p(asg, via));
                        let r = if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.0..bx.numbers / 2.0) };
                        if model.dist(&f, &v) == 0.0 {
                            point_at_distance(model, &v, r, rng)
                        } else {
                            model.geo(&v, &f, -r)
                        }
                    }
                    Rule::AtDistance { center, p: a, q: b } => {
                        let r = model.dist(&p(asg, a), &p(asg, b));
                        point_at_distance(model, &p(asg, center), r, rng)
                    }
                    Rule::Same(a) => p(asg, a),
                    Rule::NonNeg => unreachable!(),
                };
                asg.set_point(name, v);
            }
        }
    }
}

// Endpoints get a little extra mass so degenerate betweenness is exercised.
fn pick_fraction(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen::<f64>(),
    }
}

/// Whether any of `from` depends (transitively through `rules`) on `target`.
fn reaches(rules: &BTreeMap<String, Rule>, from: &[&str], target: &str) -> bool {
    let mut stack: Vec<String> = from.iter().map(|s| s.to_string()).collect();
    let mut seen = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == target {
            return true;
        }
        if !seen.insert(n.clone()) {
            continue;
        }
        if let Some(r) = rules.get(&n) {
            stack.extend(r.sources().iter().map(|s| s.to_string()));
        }
    }
    false
}
