//! Hyperbolic-specific searches: a counterexample to the similarity axiom
//! and the SAS determinacy check used in place of full AAA→SSS checking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::eval::Assignment;
use super::geom::ModelKind;
use super::script::{point_at_distance, random_point, rotate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HyperError {
    #[error("this search needs the disk model, got {0}")]
    ModelMismatch(String),
    #[error("no counterexample in {0} samples")]
    NotFound(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub seed: u64,
    pub budget: usize,
    pub tol: f64,
    /// Required gap |d(b',c') - d(b,c)/2|.
    pub gap: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { seed: 42, budget: 1000, tol: 1e-9, gap: 0.01 }
    }
}

/// A triangle with the midpoints of two sides.
#[derive(Debug, Clone, Serialize)]
pub struct MidpointCounterexample {
    pub bindings: serde_json::Value,
    pub gap: f64,
    /// Index of the sample that produced it.
    pub sample: usize,
}

/// Search the disk for a triangle `abc` whose midpoints `b'` (of `ab`) and
/// `c'` (of `ac`) violate the similarity axiom with ratio 2. Collinear
/// triples are skipped.
pub fn search_d5_counterexample(model: ModelKind, cfg: &SearchConfig) -> Result<MidpointCounterexample, HyperError> {
    if model != ModelKind::Disk {
        return Err(HyperError::ModelMismatch(model.label()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in 0..cfg.budget {
        let a = random_point(model, 0.95, &mut rng);
        let b = random_point(model, 0.95, &mut rng);
        let c = random_point(model, 0.95, &mut rng);
        if collinear_in_disk(&a, &b, &c, 1e-6) {
            continue;
        }
        let b1 = model.midpoint(&a, &b, cfg.tol);
        let c1 = model.midpoint(&a, &c, cfg.tol);
        let gap = (model.dist(&b1, &c1) - model.dist(&b, &c) / 2.0).abs();
        if gap > cfg.gap {
            let mut asg = Assignment::default();
            for (n, p) in [("a", a), ("b", b), ("c", c), ("b'", b1), ("c'", c1)] {
                asg.set_point(n, p);
            }
            return Ok(MidpointCounterexample { bindings: asg.to_json(), gap, sample: i });
        }
    }
    Err(HyperError::NotFound(cfg.budget))
}

/// Collinearity via the degenerate triangle inequality.
fn collinear_in_disk(a: &[f64], b: &[f64], c: &[f64], eps: f64) -> bool {
    let m = ModelKind::Disk;
    let (ab, bc, ca) = (m.dist(a, b), m.dist(b, c), m.dist(c, a));
    let longest = ab.max(bc).max(ca);
    (ab + bc + ca - 2.0 * longest) <= eps
}

/// Outcome of the SAS determinacy proxy.
#[derive(Debug, Clone, Serialize)]
pub struct SasReport {
    pub samples: usize,
    pub max_gap: f64,
    pub pass: bool,
}

/// For random triangles `abc`, build a second triangle `a'b'c'` from two
/// sides and the included angle only (placed at a random vertex with a
/// random rotation) and check that the third side agrees to `tol`.
pub fn sas_proxy(model: ModelKind, seed: u64, samples: usize, tol: f64) -> SasReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap: f64 = 0.0;
    let bound = if model.is_disk() { 0.9 } else { 10.0 };
    for _ in 0..samples {
        let a = random_point(model, bound, &mut rng);
        let b = random_point(model, bound, &mut rng);
        let c = random_point(model, bound, &mut rng);
        let (ab, ac) = (model.dist(&a, &b), model.dist(&a, &c));
        let angle = model.angle(&b, &a, &c, 1e-12);
        let a1 = random_point(model, bound / 2.0, &mut rng);
        let b1 = point_at_distance(model, &a1, ab, &mut rng);
        let spin: f64 = if rng.gen_bool(0.5) { angle } else { -angle };
        let dir = rotate(model, &b1, &a1, spin);
        let c1 = model.geo(&a1, &dir, ac);
        let gap = (model.dist(&b1, &c1) - model.dist(&b, &c)).abs();
        max_gap = max_gap.max(gap);
    }
    SasReport { samples, max_gap, pass: max_gap <= tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_model_is_rejected() {
        let e = search_d5_counterexample(ModelKind::Cartesian(2), &SearchConfig::default()).unwrap_err();
        assert_eq!(e, HyperError::ModelMismatch("cartesian2".into()));
    }

    #[test]
    fn collinear_triples_are_detected() {
        let m = ModelKind::Disk;
        let a = vec![-0.3, 0.2];
        let c = vec![0.4, -0.1];
        let b = m.midpoint(&a, &c, 1e-12);
        assert!(collinear_in_disk(&a, &b, &c, 1e-6));
        assert!(!collinear_in_disk(&a, &b, &[0.0, 0.7], 1e-6));
    }

    #[test]
    fn euclidean_midpoints_never_give_a_gap() {
        // Oracle: in the plane the midline is exactly half the base.
        let m = ModelKind::Cartesian(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (a, b, c) = (random_point(m, 5.0, &mut rng), random_point(m, 5.0, &mut rng), random_point(m, 5.0, &mut rng));
            let g = m.dist(&m.midpoint(&a, &b, 1e-12), &m.midpoint(&a, &c, 1e-12)) - m.dist(&b, &c) / 2.0;
            assert!(g.abs() < 1e-12);
        }
    }
}
