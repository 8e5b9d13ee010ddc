//! The interpretation of distance atoms as Tarski formulas agrees with
//! direct evaluation, with the frame fixed at o=(0,0), e=(1,0), e'=(0,1).

mod common;

use common::cx;
use geoform_core::logic::{well_sorted, Lang};
use geoform_core::models::eval::{eval_with_witnesses, Assignment, Witness};
use geoform_core::syntax::{parse, print};
use geoform_core::xlate::{ed_to_e2_with, gprod_schema, gsum_schema, FrameMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn interpretation_agrees_with_direct_evaluation_on_200_atoms() {
    let a = common::interpretation_agreement(42, 200);
    assert_eq!(a.disagreements, 0);
    assert!(a.truths > 40 && a.truths < 160, "truths {}", a.truths);
    assert!(a.peepholes_fired > 40, "peepholes fired {}", a.peepholes_fired);
}

/// Points of a skewed frame and the analytic auxiliary points of the sum
/// and product constructions.
struct Skew {
    o: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl Skew {
    fn at(&self, base: &[f64], dir: &[f64], k: f64) -> Vec<f64> {
        vec![base[0] + k * dir[0], base[1] + k * dir[1]]
    }
    fn line(&self, k: f64) -> Vec<f64> {
        self.at(&self.o, &self.u, k)
    }
    fn side(&self, k: f64) -> Vec<f64> {
        self.at(&self.o, &self.w, k)
    }
}

fn schema_holds(sum: bool, a: f64, b: f64, c: f64) -> bool {
    let sk = Skew { o: vec![1.0, 2.0], u: vec![2.0, 0.5], w: vec![-0.5, 2.0] };
    let mut s = Assignment::default();
    s.set_point("o", sk.line(0.0));
    s.set_point("e", sk.line(1.0));
    s.set_point("e1", sk.side(1.0));
    s.set_point("a", sk.line(a));
    s.set_point("b", sk.line(b));
    s.set_point("c", sk.line(c));
    let f = if sum { gsum_schema("o", "e", "e1", "a", "b", "c") } else { gprod_schema("o", "e", "e1", "a", "b", "c") };
    let b2 = if sum { sk.side(a) } else { sk.side(b) };
    let c2 = sk.at(&sk.side(a), &sk.u, b);
    let mut provider = |name: &str, _: &Assignment| match name {
        "b2" => Some(Witness::Point(b2.clone())),
        "c2" => Some(Witness::Point(c2.clone())),
        _ => None,
    };
    eval_with_witnesses(&f, &s, &cx(), &mut provider).unwrap()
}

#[test]
fn sum_construction_adds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        assert!(schema_holds(true, a, b, a + b));
        assert!(!schema_holds(true, a, b, a + b + 0.25));
    }
    // Additive identity: b at the origin gives c = a.
    for a in [-2.0, 0.0, 0.5, 1.0, 3.0] {
        assert!(schema_holds(true, a, 0.0, a));
    }
}

#[test]
fn product_construction_multiplies() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        assert!(schema_holds(false, a, b, a * b));
        assert!(!schema_holds(false, a, b, a * b + 0.25));
    }
    // Multiplicative identity: b at the unit gives c = a.
    for a in [-2.0, 0.0, 0.5, 1.0, 3.0] {
        assert!(schema_holds(false, a, 1.0, a));
    }
}

const WORKED: &str = "forall p:P. forall q:P. forall u:P. forall v:P. forall x:N. forall y:N. 3 * (d(p,q) * d(u,v)) + ((x + 2) * y) * y + 1 = y + d(p,q)";

const WORKED_E2: &str = "exists o_h:P. exists e_h:P. exists e':P. NonCollinear(o_h,e_h,e') & forall p:P. forall q:P. forall u:P. forall v:P. forall x_h:P. Coll(o_h,e_h,x_h) -> forall y_h:P. Coll(o_h,e_h,y_h) -> exists h1:P. exists h2:P. exists h3:P. exists h4:P. exists h5:P. exists h6:P. exists h7:P. exists h8:P. exists h9:P. exists h10:P. exists h11:P. exists h12:P. exists h13:P. GSum(o_h,e_h,e',e_h,e_h,h1) & GSum(o_h,e_h,e',h1,e_h,h2) & D(p,q,o_h,h3) & Coll(o_h,e_h,h3) & NN(o_h,e_h,h3) & D(u,v,o_h,h4) & Coll(o_h,e_h,h4) & NN(o_h,e_h,h4) & GProd(o_h,e_h,e',h3,h4,h5) & GProd(o_h,e_h,e',h2,h5,h6) & GSum(o_h,e_h,e',e_h,e_h,h7) & GSum(o_h,e_h,e',x_h,h7,h8) & GProd(o_h,e_h,e',h8,y_h,h9) & GProd(o_h,e_h,e',h9,y_h,h10) & GSum(o_h,e_h,e',h6,h10,h11) & GSum(o_h,e_h,e',h11,e_h,h12) & GSum(o_h,e_h,e',y_h,h3,h13) & h12 == h13";

#[test]
fn worked_example_has_the_frame_and_segment_arithmetic_shape() {
    let f = parse(WORKED, Lang::ED).unwrap();
    let (g, _) = ed_to_e2_with(&f, FrameMode::Existential).unwrap();
    assert_eq!(print(&g), WORKED_E2);
    assert!(well_sorted(&g, Lang::E2).is_empty());
    assert!(g.all_names().iter().all(|n| n != "x" && n != "y"));
    assert_eq!(parse(WORKED_E2, Lang::E2).unwrap(), g);
}
