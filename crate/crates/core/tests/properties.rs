//! Property tests over generated formulas, points and inputs.

use std::collections::BTreeMap;

use geoform_core::defs::{expand, registry, ExpandOptions};
use geoform_core::logic::{
    eliminate_iff, free_vars, prenex, split_prefix, substitute, well_sorted, Formula, Lang, Sort, Term,
};
use geoform_core::models::eval::{holds, Assignment, EvalCtx};
use geoform_core::models::geom::ModelKind;
use geoform_core::rcf::{eval_exact, Rational};
use geoform_core::syntax::{parse, parse_blocks, print};
use geoform_core::xlate::{e2_to_ed, ed_to_e2_with, FrameMode};
use proptest::prelude::*;

const POINTS: [&str; 4] = ["p", "q", "r", "s"];
const NUMBERS: [&str; 3] = ["x", "y", "z"];

fn point() -> impl Strategy<Value = String> {
    prop::sample::select(&POINTS[..]).prop_map(str::to_string)
}

fn number_term(angles: bool) -> impl Strategy<Value = Term> {
    let plain = prop_oneof![
        Just(Term::Zero),
        Just(Term::One),
        (2u64..200).prop_map(Term::Lit),
        prop::sample::select(&NUMBERS[..]).prop_map(Term::nv),
        (point(), point()).prop_map(|(a, b)| Term::dist(&a, &b)),
    ];
    let leaf = if angles {
        prop_oneof![4 => plain, 1 => (point(), point(), point()).prop_map(|(a, v, b)| Term::angle(&a, &v, &b))].boxed()
    } else {
        plain.boxed()
    };
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::mul(a, b)),
            inner.prop_map(Term::neg),
        ]
    })
}

/// Polynomials in the number variables with small integer literals.
fn arith_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        Just(Term::Zero),
        Just(Term::One),
        (2u64..6).prop_map(Term::Lit),
        prop::sample::select(&NUMBERS[..]).prop_map(Term::nv),
    ]
    .prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::mul(a, b)),
            inner.prop_map(Term::neg),
        ]
    })
}

fn arith_formula() -> impl Strategy<Value = Formula> {
    prop_oneof![
        (arith_term(), arith_term()).prop_map(|(a, b)| Formula::EqNum(a, b)),
        (arith_term(), arith_term()).prop_map(|(a, b)| Formula::Lt(a, b)),
    ]
    .prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::iff(a, b)),
        ]
    })
}

fn ed_atom(angles: bool) -> impl Strategy<Value = Formula> {
    prop_oneof![
        (number_term(angles), number_term(angles)).prop_map(|(a, b)| Formula::EqNum(a, b)),
        (number_term(angles), number_term(angles)).prop_map(|(a, b)| Formula::Lt(a, b)),
        (point(), point()).prop_map(|(a, b)| Formula::eq_pt(&a, &b)),
        (point(), point(), point()).prop_map(|(a, b, c)| Formula::defined("Bet", &[&a, &b, &c])),
    ]
}

fn e2_atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        (point(), point(), point()).prop_map(|(a, b, c)| Formula::tb(&a, &b, &c)),
        (point(), point(), point(), point()).prop_map(|(a, b, c, d)| Formula::td(&a, &b, &c, &d)),
        (point(), point()).prop_map(|(a, b)| Formula::eq_pt(&a, &b)),
    ]
}

/// Formulas over `atom`, with quantifiers binding names from the same
/// pools so sorts stay consistent.
fn formula(atom: BoxedStrategy<Formula>, numbers: bool) -> impl Strategy<Value = Formula> {
    atom.prop_recursive(4, 24, 2, move |inner| {
        let bound = if numbers {
            prop_oneof![
                point().prop_map(|v| (v, Sort::Point)),
                prop::sample::select(&NUMBERS[..]).prop_map(|v| (v.to_string(), Sort::Number)),
            ]
            .boxed()
        } else {
            point().prop_map(|v| (v, Sort::Point)).boxed()
        };
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
            (bound.clone(), inner.clone()).prop_map(|((v, s), b)| Formula::forall(&v, s, b)),
            (bound, inner).prop_map(|((v, s), b)| Formula::exists(&v, s, b)),
        ]
    })
}

fn eda_formula() -> impl Strategy<Value = Formula> {
    formula(ed_atom(true).boxed(), true)
}

fn ed_formula() -> impl Strategy<Value = Formula> {
    formula(ed_atom(false).boxed(), true)
}

fn e2_formula() -> impl Strategy<Value = Formula> {
    formula(e2_atom().boxed(), false)
}

fn quantifiers(f: &Formula) -> usize {
    f.is_quantifier() as usize + f.subformulas().iter().map(|g| quantifiers(g)).sum::<usize>()
}

fn coords(dim: usize, disk: bool) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_map(move |mut v| {
        if disk {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.95 {
                v.iter_mut().for_each(|x| *x *= 0.95 / n);
            }
        } else {
            v.iter_mut().for_each(|x| *x *= 10.0);
        }
        v
    })
}

fn model_and_points() -> impl Strategy<Value = (ModelKind, Vec<f64>, Vec<f64>, Vec<f64>)> {
    prop_oneof![Just(ModelKind::Cartesian(2)), Just(ModelKind::Cartesian(3)), Just(ModelKind::Cartesian(4)), Just(ModelKind::Disk)]
        .prop_flat_map(|m| {
            let (d, disk) = (m.dim(), m.is_disk());
            (Just(m), coords(d, disk), coords(d, disk), coords(d, disk))
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, ..ProptestConfig::default() })]

    #[test]
    fn printing_then_parsing_is_the_identity(f in eda_formula()) {
        let text = print(&f);
        prop_assert_eq!(parse(&text, Lang::EDA), Ok(f), "{}", text);
    }

    #[test]
    fn tarski_formulas_round_trip(f in e2_formula()) {
        prop_assert_eq!(parse(&print(&f), Lang::E2), Ok(f));
    }

    #[test]
    fn generated_formulas_are_well_sorted(f in eda_formula()) {
        prop_assert!(well_sorted(&f, Lang::EDA).is_empty());
    }

    #[test]
    fn prenex_form_keeps_free_variables_and_quantifier_count(f in eda_formula()) {
        let g = prenex(&f);
        let (_, matrix) = split_prefix(&g);
        prop_assert!(matrix.is_quantifier_free());
        prop_assert_eq!(free_vars(&g), free_vars(&f));
        prop_assert_eq!(quantifiers(&g), quantifiers(&eliminate_iff(&f)));
        prop_assert_eq!(prenex(&g), g);
    }

    #[test]
    fn substitution_does_not_capture(f in ed_formula(), a in point(), b in point()) {
        let t = Term::dist(&a, &b);
        let g = substitute(&f, "x", &t).unwrap();
        let free = free_vars(&g);
        prop_assert!(!free.contains(&("x".to_string(), Sort::Number)));
        if free_vars(&f).contains(&("x".to_string(), Sort::Number)) {
            prop_assert!(free.contains(&(a.clone(), Sort::Point)));
            prop_assert!(free.contains(&(b.clone(), Sort::Point)));
        } else {
            prop_assert_eq!(g, f.clone());
        }
        prop_assert_eq!(substitute(&f, "x", &Term::nv("x")).unwrap(), f);
    }

    #[test]
    fn substitution_of_points_has_the_right_sort(f in ed_formula(), a in point()) {
        // A number term cannot replace a point variable that occurs free.
        let r = substitute(&f, &a, &Term::nv("x"));
        if free_vars(&f).contains(&(a.clone(), Sort::Point)) {
            prop_assert!(r.is_err());
        }
    }

    #[test]
    fn full_expansion_is_primitive_and_idempotent(i in 0usize..64, args in prop::collection::vec(point(), 9)) {
        let reg = registry();
        let e = &reg[i % reg.len()];
        let lang = if e.ed_body.is_some() { Lang::ED } else { Lang::E2 };
        let terms: Vec<&str> = e.param_sorts.iter().zip(&args).map(|(_, a)| a.as_str()).collect();
        prop_assume!(e.param_sorts.iter().all(|s| *s == Sort::Point));
        let f = Formula::defined(&e.name, &terms);
        let g = expand(&f, lang, ExpandOptions::full()).unwrap();
        prop_assert!(!g.contains_defined());
        prop_assert_eq!(expand(&g, lang, ExpandOptions::full()).unwrap(), g.clone());
        prop_assert!(well_sorted(&g, lang).is_empty());
    }

    #[test]
    fn metric_axioms_hold_in_every_model((m, p, q, r) in model_and_points()) {
        let (pq, qp, pr, qr) = (m.dist(&p, &q), m.dist(&q, &p), m.dist(&p, &r), m.dist(&q, &r));
        prop_assert!(pq >= 0.0);
        prop_assert_eq!(m.dist(&p, &p), 0.0);
        prop_assert!((pq - qp).abs() <= 1e-12 * (1.0 + pq));
        prop_assert!(pr <= pq + qr + 1e-9 * (1.0 + pr));
    }

    #[test]
    fn angles_lie_between_0_and_180((m, p, v, q) in model_and_points()) {
        let a = m.angle(&p, &v, &q, 1e-12);
        prop_assert!((0.0..=180.0).contains(&a));
        prop_assert!((a - m.angle(&q, &v, &p, 1e-12)).abs() <= 1e-9);
    }

    #[test]
    fn parsing_arbitrary_text_never_panics(s in "\\PC{0,80}") {
        let _ = parse(&s, Lang::EDA);
        let _ = parse(&s, Lang::E2);
        let _ = parse_blocks(&s, Lang::ED);
    }

    #[test]
    fn parsing_near_grammar_text_never_panics(s in "[a-z0-9(),.:&|~<>=+*' PN-]{0,60}") {
        let _ = parse(&s, Lang::EDA);
    }

    #[test]
    fn exact_and_float_evaluation_agree_on_small_integers(
        f in arith_formula(),
        vals in prop::collection::vec(-4i64..5, 3),
    ) {
        let mut exact = BTreeMap::new();
        let mut asg = Assignment::default();
        for (n, v) in NUMBERS.iter().zip(&vals) {
            exact.insert(n.to_string(), Rational::from_integer((*v).into()));
            asg.set_number(n, *v as f64);
        }
        // Integers of this size are exact in binary64, so no tolerance
        // effects can separate the two.
        let cx = EvalCtx { model: ModelKind::Cartesian(2), tol: 1e-9, angle_tol: 1e-6 };
        prop_assert_eq!(eval_exact(&f, &exact).unwrap(), holds(&f, &asg, &cx).unwrap());
    }

    #[test]
    fn translations_land_in_their_target_language(f in ed_formula(), g in e2_formula()) {
        let (h, _) = ed_to_e2_with(&f, FrameMode::Existential).unwrap();
        prop_assert!(well_sorted(&h, Lang::E2).is_empty(), "{}", print(&h));
        prop_assert!(free_vars(&h).iter().all(|(_, s)| *s == Sort::Point));
        let k = e2_to_ed(&g).unwrap();
        prop_assert!(well_sorted(&k, Lang::ED).is_empty(), "{}", print(&k));
        prop_assert_eq!(free_vars(&k), free_vars(&g));
    }
}
