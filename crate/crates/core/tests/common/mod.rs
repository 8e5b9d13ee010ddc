//! Helpers shared by integration test targets.
#![allow(dead_code)]

use geoform_core::logic::{free_vars, well_sorted, Formula, Lang, Sort, Term};
use geoform_core::models::eval::{eval_term, eval_with_witnesses, holds, Assignment, EvalCtx, Witness};
use geoform_core::models::geom::ModelKind;
use geoform_core::syntax::print;
use geoform_core::xlate::{interpret_atom, TranslationFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PTS: [&str; 6] = ["p", "q", "u", "v", "r", "s"];

pub fn cx() -> EvalCtx {
    EvalCtx { model: ModelKind::Cartesian(2), tol: 1e-9, angle_tol: 1e-6 }
}

fn rand_term(rng: &mut ChaCha8Rng, depth: u32) -> Term {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        return match rng.gen_range(0..6) {
            0 => Term::Zero,
            1 => Term::One,
            2 => Term::Lit(rng.gen_range(2..5)),
            3 => Term::nv(if rng.gen_bool(0.5) { "x" } else { "y" }),
            _ => {
                let i = rng.gen_range(0..6);
                let j = (i + rng.gen_range(1..6)) % 6;
                Term::dist(PTS[i], PTS[j])
            }
        };
    }
    match rng.gen_range(0..5) {
        0 | 1 => Term::add(rand_term(rng, depth - 1), rand_term(rng, depth - 1)),
        2 | 3 => Term::mul(rand_term(rng, depth - 1), rand_term(rng, depth - 1)),
        _ => Term::neg(rand_term(rng, depth - 1)),
    }
}

fn mirror(t: &Term) -> Term {
    match t {
        Term::Add(a, b) => Term::add(mirror(b), mirror(a)),
        Term::Mul(a, b) => Term::mul(mirror(b), mirror(a)),
        Term::Neg(a) => Term::neg(mirror(a)),
        other => other.clone(),
    }
}

fn rand_pt(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]
}

fn at_distance(rng: &mut ChaCha8Rng, from: &[f64], r: f64) -> Vec<f64> {
    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    vec![from[0] + r * th.cos(), from[1] + r * th.sin()]
}

/// One source atom with its assignment. About half the equations are
/// true by construction.
fn sample(rng: &mut ChaCha8Rng) -> (Formula, Assignment) {
    let mut s = Assignment::default();
    for n in PTS {
        s.set_point(n, rand_pt(rng));
    }
    s.set_number("x", rng.gen_range(-2.0..2.0));
    s.set_number("y", rng.gen_range(-2.0..2.0));
    let atom = match rng.gen_range(0..5) {
        0 => {
            let t = rand_term(rng, 3);
            Formula::EqNum(t.clone(), mirror(&t))
        }
        1 => Formula::EqNum(rand_term(rng, 3), rand_term(rng, 3)),
        2 => Formula::Lt(rand_term(rng, 3), rand_term(rng, 3)),
        3 => {
            if rng.gen_bool(0.5) {
                let d = s.points["p"].iter().zip(&s.points["q"]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let u = s.points["u"].clone();
                s.set_point("v", at_distance(rng, &u, d));
            }
            Formula::EqNum(Term::dist("p", "q"), Term::dist("u", "v"))
        }
        _ => {
            if rng.gen_bool(0.5) {
                let (d1, d2) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
                let (p, u, r) = (s.points["p"].clone(), s.points["u"].clone(), s.points["r"].clone());
                s.set_point("q", at_distance(rng, &p, d1 + d2));
                s.set_point("v", at_distance(rng, &u, d1));
                s.set_point("s", at_distance(rng, &r, d2));
            }
            Formula::EqNum(Term::dist("p", "q"), Term::add(Term::dist("u", "v"), Term::dist("r", "s")))
        }
    };
    (atom, s)
}

fn on_axis(x: f64) -> Vec<f64> {
    vec![x, 0.0]
}

/// Evaluate the interpretation of `atom`, supplying the frame, the hatted
/// variables and the introduced points from the source values.
fn eval_interpreted(atom: &Formula, src: &Assignment, peepholes: bool) -> (bool, bool) {
    let mut fr = TranslationFrame::default();
    fr.peepholes = peepholes;
    fr.reserve(atom);
    let out = interpret_atom(atom, &mut fr).unwrap();
    assert!(well_sorted(&out.formula, Lang::E2).is_empty(), "{}", print(&out.formula));
    assert!(free_vars(&out.formula).iter().all(|(_, s)| *s == Sort::Point));
    let mut asg = Assignment { points: src.points.clone(), ..Default::default() };
    asg.set_point(&fr.origin, vec![0.0, 0.0]);
    asg.set_point(&fr.unit, vec![1.0, 0.0]);
    asg.set_point(&fr.off_axis, vec![0.0, 1.0]);
    for (x, h) in &fr.hatted {
        asg.set_point(h, on_axis(src.numbers[x]));
    }
    let c = cx();
    let wit: Vec<(String, f64)> =
        out.witnesses.iter().map(|(v, t)| (v.clone(), eval_term(t, src, &c).unwrap())).collect();
    let text = print(&out.formula);
    let fired = text.starts_with("D(") || text.contains("B(");
    let mut provider = |name: &str, _: &Assignment| {
        wit.iter().find(|(v, _)| v == name).map(|(_, x)| Witness::Point(on_axis(*x)))
    };
    (eval_with_witnesses(&out.formula, &asg, &c, &mut provider).unwrap(), fired)
}

/// Distance of the atom's two sides from the tolerance boundary.
fn near_boundary(atom: &Formula, s: &Assignment) -> bool {
    let c = cx();
    let (l, r) = match atom {
        Formula::EqNum(l, r) | Formula::Lt(l, r) => (eval_term(l, s, &c).unwrap(), eval_term(r, s, &c).unwrap()),
        _ => return false,
    };
    let gap = (r - l).abs();
    (1e-10..1e-8).contains(&gap)
}

/// Counts from comparing the interpretation of random distance atoms with
/// direct evaluation, with and without the peephole shortcuts.
#[derive(Debug, Default)]
pub struct Agreement {
    pub checked: usize,
    pub disagreements: usize,
    pub truths: usize,
    pub peepholes_fired: usize,
    /// Atoms within 1e-8 of the tolerance boundary, drawn again.
    pub redrawn: usize,
}

pub fn interpretation_agreement(seed: u64, n: usize) -> Agreement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Agreement::default();
    while a.checked < n {
        let (atom, s) = sample(&mut rng);
        if near_boundary(&atom, &s) {
            a.redrawn += 1;
            continue;
        }
        a.checked += 1;
        let direct = holds(&atom, &s, &cx()).unwrap();
        let (with_peep, fired) = eval_interpreted(&atom, &s, true);
        let (general, _) = eval_interpreted(&atom, &s, false);
        if direct != with_peep || direct != general {
            a.disagreements += 1;
            eprintln!("disagree: {} direct={direct} peephole={with_peep} general={general}", print(&atom));
        }
        a.truths += direct as usize;
        a.peepholes_fired += fired as usize;
    }
    a
}
