//! Registry of defined predicates and the expander that rewrites them into
//! primitive atoms.
//!
//! Every entry has a distance-side body (for Ed/Eda) and, where it can be
//! stated with `B` and `D`, a Tarski-side body (for E2). Bodies are written
//! in the concrete syntax with the parameters as free variables, and may use
//! entries registered earlier in the table.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use thiserror::Error;

use crate::logic::{fresh_name, substitute_all, Formula, Lang, LangKind, Sort, Term};
use crate::syntax;

/// Name, parameter sorts and home languages of a defined atom.
#[derive(Debug, Clone, Copy)]
pub struct Signature {
    pub name: &'static str,
    pub params: &'static [Sort],
    pub ed: bool,
    pub e2: bool,
}

impl Signature {
    pub fn available_in(&self, lang: Lang) -> bool {
        match lang.kind {
            LangKind::E2 => self.e2,
            LangKind::Ed | LangKind::Eda => self.ed,
        }
    }
}

use Sort::Point as P;

struct Raw {
    name: &'static str,
    params: &'static [&'static str],
    ed: Option<&'static str>,
    e2: Option<&'static str>,
}

// Order matters: a body may only mention entries above it.
const RAW: &[Raw] = &[
    Raw {
        name: "Bet",
        params: &["a", "b", "c"],
        ed: Some("d(a,c) = d(a,b) + d(b,c)"),
        e2: Some("B(a,b,c)"),
    },
    Raw {
        name: "Coll",
        params: &["a", "b", "c"],
        ed: Some("Bet(a,b,c) | Bet(b,c,a) | Bet(c,a,b)"),
        e2: Some("B(a,b,c) | B(b,c,a) | B(c,a,b)"),
    },
    Raw {
        name: "NonCollinear",
        params: &["a", "b", "c"],
        ed: Some("~Bet(a,b,c) & ~Bet(b,c,a) & ~Bet(c,a,b)"),
        e2: Some("~B(a,b,c) & ~B(b,c,a) & ~B(c,a,b)"),
    },
    Raw {
        name: "CongSeg",
        params: &["p", "q", "u", "v"],
        ed: Some("d(p,q) = d(u,v)"),
        e2: Some("D(p,q,u,v)"),
    },
    Raw {
        name: "CongT",
        params: &["a", "b", "c", "a1", "b1", "c1"],
        ed: Some("d(a,b) = d(a1,b1) & d(b,c) = d(b1,c1) & d(c,a) = d(c1,a1)"),
        e2: Some("D(a,b,a1,b1) & D(b,c,b1,c1) & D(c,a,c1,a1)"),
    },
    Raw {
        name: "SimT",
        params: &["a", "b", "c", "a1", "b1", "c1"],
        ed: Some(
            "exists k:N. ~k = 0 & d(a,b) = k * d(a1,b1) & d(b,c) = k * d(b1,c1) & d(c,a) = k * d(c1,a1)",
        ),
        e2: None,
    },
    Raw {
        name: "CongA",
        params: &["p", "v", "q", "p1", "v1", "q1"],
        ed: Some(
            "exists p2:P. exists q2:P. CongT(p2,v1,q2,p,v,q) & (Bet(v1,p2,p1) | Bet(v1,p1,p2)) & (Bet(v1,q2,q1) | Bet(v1,q1,q2))",
        ),
        e2: Some(
            "exists p2:P. exists q2:P. CongT(p2,v1,q2,p,v,q) & (B(v1,p2,p1) | B(v1,p1,p2)) & (B(v1,q2,q1) | B(v1,q1,q2))",
        ),
    },
    Raw {
        name: "AddA",
        params: &["p", "v", "t", "q"],
        ed: Some(
            "~Bet(p,v,q) & (exists a:P. exists b:P. Bet(a,t,b) & (Bet(v,a,p) | Bet(v,p,a)) & (Bet(v,b,q) | Bet(v,q,b))) | Bet(p,v,q) & ~p == v & ~q == v & ~t == v",
        ),
        e2: Some(
            "~B(p,v,q) & (exists a:P. exists b:P. B(a,t,b) & (B(v,a,p) | B(v,p,a)) & (B(v,b,q) | B(v,q,b))) | B(p,v,q) & ~p == v & ~q == v & ~t == v",
        ),
    },
    Raw {
        name: "AddA4",
        params: &["u1", "a", "u2", "p1", "b", "p2", "q1", "c", "q2"],
        ed: Some(
            "exists p:P. exists v:P. exists t:P. exists q:P. CongA(p1,b,p2,p,v,t) & CongA(q1,c,q2,t,v,q) & CongA(u1,a,u2,p,v,q) & AddA(p,v,t,q)",
        ),
        e2: Some(
            "exists p:P. exists v:P. exists t:P. exists q:P. CongA(p1,b,p2,p,v,t) & CongA(q1,c,q2,t,v,q) & CongA(u1,a,u2,p,v,q) & AddA(p,v,t,q)",
        ),
    },
    Raw {
        name: "LeA",
        params: &["p1", "b", "p2", "u1", "a", "u2"],
        ed: Some("exists q1:P. exists c:P. exists q2:P. AddA4(u1,a,u2,p1,b,p2,q1,c,q2)"),
        e2: Some("exists q1:P. exists c:P. exists q2:P. AddA4(u1,a,u2,p1,b,p2,q1,c,q2)"),
    },
    Raw {
        name: "LtA",
        params: &["p1", "b", "p2", "u1", "a", "u2"],
        ed: Some("LeA(p1,b,p2,u1,a,u2) & ~CongA(p1,b,p2,u1,a,u2)"),
        e2: Some("LeA(p1,b,p2,u1,a,u2) & ~CongA(p1,b,p2,u1,a,u2)"),
    },
    Raw {
        name: "Right",
        params: &["a", "b", "c"],
        ed: Some("~a == b & ~a == c & ~b == c & exists a1:P. Bet(a,b,a1) & d(b,a) = d(b,a1) & d(c,a) = d(c,a1)"),
        e2: Some("~a == b & ~a == c & ~b == c & (exists a1:P. B(a,b,a1) & D(b,a,b,a1) & D(c,a,c,a1))"),
    },
    Raw {
        name: "Par",
        params: &["p", "q", "u", "v"],
        ed: Some("~p == q & ~u == v & ~(exists t:P. Coll(t,p,q) & Coll(t,u,v))"),
        e2: Some("~p == q & ~u == v & ~(exists t:P. Coll(t,p,q) & Coll(t,u,v))"),
    },
    // Parallel or on the same line.
    Raw {
        name: "ParW",
        params: &["p", "q", "u", "v"],
        ed: Some("Par(p,q,u,v) | ~p == q & ~u == v & Coll(p,u,v) & Coll(q,u,v)"),
        e2: Some("Par(p,q,u,v) | ~p == q & ~u == v & Coll(p,u,v) & Coll(q,u,v)"),
    },
    // z lies on the ray from o through e.
    Raw {
        name: "NN",
        params: &["o", "e", "z"],
        ed: Some("Bet(o,z,e) | Bet(o,e,z)"),
        e2: Some("B(o,z,e) | B(o,e,z)"),
    },
    // c = a + b on the number line o e, constructed with the help of e1.
    Raw {
        name: "GSum",
        params: &["o", "e", "e1", "a", "b", "c"],
        ed: None,
        e2: Some(
            "Coll(o,e,a) & Coll(o,e,b) & Coll(o,e,c) & (exists b2:P. exists c2:P. Coll(o,e1,b2) & (a == b2 | ParW(a,b2,e,e1)) & (b2 == c2 | ParW(b2,c2,o,e)) & (b == c2 | ParW(b,c2,o,e1)) & (c2 == c | ParW(c2,c,a,b2)))",
        ),
    },
    // c = a * b on the number line o e, constructed with the help of e1.
    Raw {
        name: "GProd",
        params: &["o", "e", "e1", "a", "b", "c"],
        ed: None,
        e2: Some(
            "Coll(o,e,a) & Coll(o,e,b) & Coll(o,e,c) & (exists b2:P. Coll(o,e1,b2) & (b == b2 | ParW(b,b2,e,e1)) & (b2 == c | ParW(b2,c,a,e1)))",
        ),
    },
    Raw {
        name: "LtHat",
        params: &["o", "e", "e1", "s", "t"],
        ed: None,
        e2: Some("exists z:P. NN(o,e,z) & ~z == o & GSum(o,e,e1,s,z,t)"),
    },
];

const SIGS: &[Signature] = &[
    Signature { name: "Bet", params: &[P, P, P], ed: true, e2: true },
    Signature { name: "Coll", params: &[P, P, P], ed: true, e2: true },
    Signature { name: "NonCollinear", params: &[P, P, P], ed: true, e2: true },
    Signature { name: "CongSeg", params: &[P, P, P, P], ed: true, e2: true },
    Signature { name: "CongT", params: &[P, P, P, P, P, P], ed: true, e2: true },
    Signature { name: "SimT", params: &[P, P, P, P, P, P], ed: true, e2: false },
    Signature { name: "CongA", params: &[P, P, P, P, P, P], ed: true, e2: true },
    Signature { name: "AddA", params: &[P, P, P, P], ed: true, e2: true },
    Signature { name: "AddA4", params: &[P, P, P, P, P, P, P, P, P], ed: true, e2: true },
    Signature { name: "LeA", params: &[P, P, P, P, P, P], ed: true, e2: true },
    Signature { name: "LtA", params: &[P, P, P, P, P, P], ed: true, e2: true },
    Signature { name: "Right", params: &[P, P, P], ed: true, e2: true },
    Signature { name: "Par", params: &[P, P, P, P], ed: true, e2: true },
    Signature { name: "ParW", params: &[P, P, P, P], ed: true, e2: true },
    Signature { name: "NN", params: &[P, P, P], ed: true, e2: true },
    Signature { name: "GSum", params: &[P, P, P, P, P, P], ed: false, e2: true },
    Signature { name: "GProd", params: &[P, P, P, P, P, P], ed: false, e2: true },
    Signature { name: "LtHat", params: &[P, P, P, P, P], ed: false, e2: true },
];

pub fn signature(name: &str) -> Option<&'static Signature> {
    SIGS.iter().find(|s| s.name == name)
}

#[derive(Debug, Clone)]
pub struct DefinitionEntry {
    pub name: String,
    pub param_names: Vec<String>,
    pub param_sorts: Vec<Sort>,
    pub home: Vec<LangKind>,
    pub ed_body: Option<Formula>,
    pub e2_body: Option<Formula>,
}

impl DefinitionEntry {
    pub fn body(&self, lang: Lang) -> Option<&Formula> {
        match lang.kind {
            LangKind::E2 => self.e2_body.as_ref(),
            _ => self.ed_body.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefsError {
    #[error("unknown definition {0}")]
    UnknownDefinition(String),
    #[error("definition {name} has no body in {lang}")]
    LanguageMismatch { name: String, lang: String },
    #[error("definition {name} expects {expected} arguments, found {found}")]
    Arity { name: String, expected: usize, found: usize },
}

static REGISTRY: OnceLock<Vec<DefinitionEntry>> = OnceLock::new();

/// The fixed table of definitions, parsed once.
pub fn registry() -> &'static [DefinitionEntry] {
    REGISTRY.get_or_init(|| {
        let table: Vec<DefinitionEntry> = RAW
            .iter()
            .map(|r| {
                let sig = signature(r.name).expect("every raw entry has a signature");
                let parse = |src: &str, lang: Lang| {
                    syntax::parse(src, lang).unwrap_or_else(|e| panic!("body of {} does not parse: {:?}", r.name, e))
                };
                let mut home = Vec::new();
                if r.ed.is_some() {
                    home.push(LangKind::Ed);
                    home.push(LangKind::Eda);
                }
                if r.e2.is_some() {
                    home.push(LangKind::E2);
                }
                DefinitionEntry {
                    name: r.name.to_string(),
                    param_names: r.params.iter().map(|s| s.to_string()).collect(),
                    param_sorts: sig.params.to_vec(),
                    home,
                    ed_body: r.ed.map(|s| parse(s, Lang::ED)),
                    e2_body: r.e2.map(|s| parse(s, Lang::E2)),
                }
            })
            .collect();
        check_acyclic(&table).expect("definition registry must be acyclic");
        table
    })
}

pub fn lookup(name: &str) -> Option<&'static DefinitionEntry> {
    registry().iter().find(|e| e.name == name)
}

fn defined_names(f: &Formula, out: &mut BTreeSet<String>) {
    if let Formula::Defined(n, _) = f {
        out.insert(n.clone());
    }
    for g in f.subformulas() {
        defined_names(g, out);
    }
}

/// Every body refers only to entries strictly earlier in the table, so the
/// table order is a topological order.
pub fn check_acyclic(table: &[DefinitionEntry]) -> Result<(), String> {
    for (i, e) in table.iter().enumerate() {
        for body in [&e.ed_body, &e.e2_body].into_iter().flatten() {
            let mut used = BTreeSet::new();
            defined_names(body, &mut used);
            for u in used {
                match table.iter().position(|x| x.name == u) {
                    Some(j) if j < i => {}
                    _ => return Err(format!("{} refers to {} which is not registered before it", e.name, u)),
                }
            }
            let params: BTreeSet<String> = e.param_names.iter().cloned().collect();
            let free = crate::logic::free_names(body);
            if free != params {
                return Err(format!("{} body has free variables {:?}, parameters {:?}", e.name, free, params));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    One,
    Full,
}

#[derive(Debug, Clone, Copy)]
pub struct ExpandOptions {
    pub depth: Depth,
    pub expand_literals: bool,
}

impl ExpandOptions {
    pub fn full() -> Self {
        ExpandOptions { depth: Depth::Full, expand_literals: false }
    }
    pub fn one() -> Self {
        ExpandOptions { depth: Depth::One, expand_literals: false }
    }
}

/// Instantiate the body of `name` at `args`, renaming bound variables of the
/// body away from `avoid` and from the argument variables.
pub fn instantiate(name: &str, args: &[Term], lang: Lang, avoid: &BTreeSet<String>) -> Result<Formula, DefsError> {
    let e = lookup(name).ok_or_else(|| DefsError::UnknownDefinition(name.to_string()))?;
    let body = e
        .body(lang)
        .ok_or_else(|| DefsError::LanguageMismatch { name: name.to_string(), lang: lang.to_string() })?;
    if args.len() != e.param_names.len() {
        return Err(DefsError::Arity { name: name.to_string(), expected: e.param_names.len(), found: args.len() });
    }
    // Rename the body's binders to names fresh with respect to the context,
    // then substitute parameters simultaneously.
    let mut used: BTreeSet<String> = avoid.clone();
    for a in args {
        used.extend(a.vars().into_iter().map(|(n, _)| n));
    }
    let renamed = rename_binders(body, &e.param_names, &mut used);
    let map: BTreeMap<String, Term> = e.param_names.iter().cloned().zip(args.iter().cloned()).collect();
    Ok(substitute_all(&renamed, &map))
}

fn rename_binders(f: &Formula, params: &[String], used: &mut BTreeSet<String>) -> Formula {
    match f {
        Formula::ForAll(v, s, b) | Formula::Exists(v, s, b) => {
            let nv = if used.contains(v) || params.contains(v) { fresh_name(v, used) } else { v.clone() };
            used.insert(nv.clone());
            let body = crate::logic::rename_free(b, v, &nv);
            let body = Box::new(rename_binders(&body, params, used));
            match f {
                Formula::ForAll(..) => Formula::ForAll(nv, *s, body),
                _ => Formula::Exists(nv, *s, body),
            }
        }
        Formula::Not(a) => Formula::not(rename_binders(a, params, used)),
        Formula::And(a, b) => Formula::and(rename_binders(a, params, used), rename_binders(b, params, used)),
        Formula::Or(a, b) => Formula::or(rename_binders(a, params, used), rename_binders(b, params, used)),
        Formula::Implies(a, b) => Formula::implies(rename_binders(a, params, used), rename_binders(b, params, used)),
        Formula::Iff(a, b) => Formula::iff(rename_binders(a, params, used), rename_binders(b, params, used)),
        atom => atom.clone(),
    }
}

/// Replace defined atoms by their bodies. `One` rewrites each defined atom
/// of the input once; `Full` repeats until no defined atom remains.
pub fn expand(f: &Formula, lang: Lang, opts: ExpandOptions) -> Result<Formula, DefsError> {
    let mut cur = expand_once(f, lang, &mut f.all_names())?;
    if opts.depth == Depth::Full {
        while cur.contains_defined() {
            let mut used = cur.all_names();
            cur = expand_once(&cur, lang, &mut used)?;
        }
    }
    if opts.expand_literals {
        cur = cur.expand_literals();
    }
    Ok(cur)
}

fn expand_once(f: &Formula, lang: Lang, used: &mut BTreeSet<String>) -> Result<Formula, DefsError> {
    Ok(match f {
        Formula::Defined(name, args) => {
            let g = instantiate(name, args, lang, used)?;
            used.extend(g.all_names());
            g
        }
        Formula::Not(a) => Formula::not(expand_once(a, lang, used)?),
        Formula::And(a, b) => Formula::and(expand_once(a, lang, used)?, expand_once(b, lang, used)?),
        Formula::Or(a, b) => Formula::or(expand_once(a, lang, used)?, expand_once(b, lang, used)?),
        Formula::Implies(a, b) => Formula::implies(expand_once(a, lang, used)?, expand_once(b, lang, used)?),
        Formula::Iff(a, b) => Formula::iff(expand_once(a, lang, used)?, expand_once(b, lang, used)?),
        Formula::ForAll(v, s, b) => Formula::ForAll(v.clone(), *s, Box::new(expand_once(b, lang, used)?)),
        Formula::Exists(v, s, b) => Formula::Exists(v.clone(), *s, Box::new(expand_once(b, lang, used)?)),
        atom => atom.clone(),
    })
}

/// Node count of the full expansion. Every connective, binder, atom and
/// term node counts one; integer literals count as single nodes.
pub fn expanded_size(f: &Formula, lang: Lang) -> Result<usize, DefsError> {
    Ok(expand(f, lang, ExpandOptions::full())?.size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, print};

    #[test]
    fn registry_is_well_formed() {
        let r = registry();
        assert!(r.len() >= 15);
        check_acyclic(r).unwrap();
        for e in r {
            for (lang, body) in [(Lang::ED, &e.ed_body), (Lang::E2, &e.e2_body)] {
                if let Some(b) = body {
                    assert!(crate::logic::well_sorted(b, lang).is_empty(), "{}", e.name);
                }
            }
        }
    }

    #[test]
    fn betweenness_body() {
        let f = parse("Bet(a,b,c)", Lang::ED).unwrap();
        let g = expand(&f, Lang::ED, ExpandOptions::full()).unwrap();
        assert_eq!(print(&g), "d(a,c) = d(a,b) + d(b,c)");
        // EqNum, Dist(a,c) with two variables, Add with two Dists of two variables each.
        assert_eq!(expanded_size(&f, Lang::ED).unwrap(), 1 + 3 + 1 + 3 + 3);
    }

    #[test]
    fn right_angle_one_level() {
        let f = parse("Right(a,b,c)", Lang::ED).unwrap();
        let g = expand(&f, Lang::ED, ExpandOptions::one()).unwrap();
        assert_eq!(
            print(&g),
            "~a == b & ~a == c & ~b == c & exists a1:P. Bet(a,b,a1) & d(b,a) = d(b,a1) & d(c,a) = d(c,a1)"
        );
    }

    #[test]
    fn angle_congruence_one_level_renames_away_from_arguments() {
        let f = parse("CongA(p,v,q,p2,v1,q1)", Lang::ED).unwrap();
        let g = expand(&f, Lang::ED, ExpandOptions::one()).unwrap();
        assert_eq!(
            print(&g),
            "exists p21:P. exists q2:P. CongT(p21,v1,q2,p,v,q) & (Bet(v1,p21,p2) | Bet(v1,p2,p21)) & (Bet(v1,q2,q1) | Bet(v1,q1,q2))"
        );
    }

    #[test]
    fn definition_free_is_fixed_point() {
        let f = parse("forall a:P. 0 <= d(a,a)", Lang::ED).unwrap();
        assert_eq!(expand(&f, Lang::ED, ExpandOptions::full()).unwrap(), f);
        assert_eq!(expanded_size(&f, Lang::ED).unwrap(), f.size());
    }

    #[test]
    fn full_expansion_is_idempotent_and_primitive() {
        for e in registry() {
            for lang in [Lang::ED, Lang::E2] {
                if e.body(lang).is_none() {
                    continue;
                }
                let args: Vec<Term> = e.param_names.iter().map(|n| Term::pv(n)).collect();
                let f = Formula::Defined(e.name.clone(), args);
                let g = expand(&f, lang, ExpandOptions::full()).unwrap();
                assert!(!g.contains_defined());
                assert_eq!(expand(&g, lang, ExpandOptions::full()).unwrap(), g);
                assert!(crate::logic::well_sorted(&g, lang).is_empty(), "{}", e.name);
            }
        }
    }

    #[test]
    fn language_mismatch() {
        let f = Formula::defined("SimT", &["a", "b", "c", "d", "e", "f"]);
        assert!(matches!(
            expand(&f, Lang::E2, ExpandOptions::full()),
            Err(DefsError::LanguageMismatch { .. })
        ));
        let g = Formula::defined("Nope", &["a"]);
        assert!(matches!(expand(&g, Lang::ED, ExpandOptions::one()), Err(DefsError::UnknownDefinition(_))));
    }
}
