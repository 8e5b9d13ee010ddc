//! Distance, angle and geodesic primitives for the Cartesian and
//! Poincaré-disk models.

use serde::{Deserialize, Serialize};

pub type PointValue = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Cartesian(usize),
    Disk,
}

impl ModelKind {
    pub fn dim(self) -> usize {
        match self {
            ModelKind::Cartesian(n) => n,
            ModelKind::Disk => 2,
        }
    }

    pub fn is_disk(self) -> bool {
        self == ModelKind::Disk
    }

    /// `cartesian2`, `cartesian3`, ..., `disk`.
    pub fn label(self) -> String {
        match self {
            ModelKind::Cartesian(n) => format!("cartesian{n}"),
            ModelKind::Disk => "disk".to_string(),
        }
    }

    pub fn from_label(s: &str) -> Option<ModelKind> {
        if s == "disk" {
            return Some(ModelKind::Disk);
        }
        let n: usize = s.strip_prefix("cartesian")?.parse().ok()?;
        (n >= 2).then_some(ModelKind::Cartesian(n))
    }

    /// Distance between two points.
    pub fn dist(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            ModelKind::Cartesian(_) => norm(&sub(p, q)),
            ModelKind::Disk => disk_dist(p, q),
        }
    }

    /// Angle at `v` in degrees, in [0, 180]; 0 when an arm is degenerate.
    pub fn angle(self, p: &[f64], v: &[f64], q: &[f64], tol: f64) -> f64 {
        let (u, w) = match self {
            ModelKind::Cartesian(_) => (sub(p, v), sub(q, v)),
            ModelKind::Disk => (mobius_to_origin(v, p), mobius_to_origin(v, q)),
        };
        if self.dist(p, v) <= tol || self.dist(q, v) <= tol {
            return 0.0;
        }
        vector_angle(&u, &w)
    }

    /// The point on the geodesic from `p` towards `q` at signed distance `t`
    /// from `p`. Negative `t` walks away from `q`. Returns `p` if `p = q`.
    pub fn geo(self, p: &[f64], q: &[f64], t: f64) -> PointValue {
        match self {
            ModelKind::Cartesian(_) => {
                let d = sub(q, p);
                let n = norm(&d);
                if n == 0.0 {
                    return p.to_vec();
                }
                add(p, &scale(t / n, &d))
            }
            ModelKind::Disk => {
                let q0 = mobius_to_origin(p, q);
                let n = norm(&q0);
                if n == 0.0 {
                    return p.to_vec();
                }
                let r = (t / 2.0).tanh();
                let z = scale(r / n, &q0);
                mobius_from_origin(p, &z)
            }
        }
    }

    /// The point at fraction `s` of the way from `p` to `q` along the
    /// geodesic, measured by distance. `s` outside [0, 1] extends the segment.
    pub fn lerp(self, p: &[f64], q: &[f64], s: f64) -> PointValue {
        match self {
            ModelKind::Cartesian(_) => add(p, &scale(s, &sub(q, p))),
            ModelKind::Disk => self.geo(p, q, s * self.dist(p, q)),
        }
    }

    /// Geodesic midpoint of `a` and `b`. In the disk model this is found by
    /// bisection along the geodesic parameter until the two half-distances
    /// agree to `tol`.
    pub fn midpoint(self, a: &[f64], b: &[f64], tol: f64) -> PointValue {
        match self {
            ModelKind::Cartesian(_) => scale(0.5, &add(a, b)),
            ModelKind::Disk => {
                let b0 = mobius_to_origin(a, b);
                let at = |s: f64| mobius_from_origin(a, &scale(s, &b0));
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let m = at(mid);
                    let gap = self.dist(a, &m) - self.dist(&m, b);
                    if gap.abs() <= tol * 1e-3 {
                        return m;
                    }
                    if gap < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                at(0.5 * (lo + hi))
            }
        }
    }

    /// Whether `p` is a legal point of the model.
    pub fn valid_point(self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().all(|x| x.is_finite()) && (!self.is_disk() || dot(p, p) < 1.0)
    }
}

// ---------------------------------------------------------------------------
// Vector helpers

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(k: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| k * x).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle between two nonzero vectors in degrees. Uses the half-angle form
/// `2 atan2(| |w|u - |u|w |, | |w|u + |u|w |)`, which stays accurate near 0
/// and 180 where the arccosine of a dot product loses half its digits.
pub fn vector_angle(u: &[f64], w: &[f64]) -> f64 {
    let (nu, nw) = (norm(u), norm(w));
    if nu == 0.0 || nw == 0.0 {
        return 0.0;
    }
    let a = sub(&scale(nw, u), &scale(nu, w));
    let b = add(&scale(nw, u), &scale(nu, w));
    (2.0 * norm(&a).atan2(norm(&b))).to_degrees().clamp(0.0, 180.0)
}

// ---------------------------------------------------------------------------
// Poincaré disk

/// Hyperbolic distance in the unit disk. Written as
/// `2 asinh(|p-q| / sqrt((1-|p|^2)(1-|q|^2)))`, which equals
/// `acosh(1 + 2|p-q|^2 / ((1-|p|^2)(1-|q|^2)))` and stays accurate for
/// nearby points.
pub fn disk_dist(p: &[f64], q: &[f64]) -> f64 {
    let num = norm(&sub(p, q));
    let den = ((1.0 - dot(p, p)) * (1.0 - dot(q, q))).sqrt();
    2.0 * (num / den).asinh()
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

/// Disk isometry sending `v` to the origin, applied to `z`:
/// `(z - v) / (1 - conj(v) z)`.
pub fn mobius_to_origin(v: &[f64], z: &[f64]) -> PointValue {
    let (v, z) = ((v[0], v[1]), (z[0], z[1]));
    let num = (z.0 - v.0, z.1 - v.1);
    let vc = (v.0, -v.1);
    let den = {
        let m = cmul(vc, z);
        (1.0 - m.0, -m.1)
    };
    let r = cdiv(num, den);
    vec![r.0, r.1]
}

/// Inverse of [`mobius_to_origin`]: `(z + v) / (1 + conj(v) z)`.
pub fn mobius_from_origin(v: &[f64], z: &[f64]) -> PointValue {
    let (v, z) = ((v[0], v[1]), (z[0], z[1]));
    let num = (z.0 + v.0, z.1 + v.1);
    let vc = (v.0, -v.1);
    let den = {
        let m = cmul(vc, z);
        (1.0 + m.0, m.1)
    };
    let r = cdiv(num, den);
    vec![r.0, r.1]
}

// ---------------------------------------------------------------------------
// Regular simplices

/// Vertices of a regular simplex with `k` vertices and unit edges, in
/// dimension `dim >= k - 1`. Vertex 0 is the origin.
pub fn regular_simplex(k: usize, dim: usize) -> Option<Vec<PointValue>> {
    if k == 0 || k > dim + 1 {
        return None;
    }
    let mut pts: Vec<PointValue> = vec![vec![0.0; dim]];
    for j in 1..k {
        // Centroid of the previous j vertices, then rise along axis j-1.
        let mut c = vec![0.0; dim];
        for p in &pts {
            c = add(&c, p);
        }
        c = scale(1.0 / j as f64, &c);
        let r2 = dot(&sub(&pts[0], &c), &sub(&pts[0], &c));
        let mut p = c;
        p[j - 1] += (1.0 - r2).max(0.0).sqrt();
        pts.push(p);
    }
    Some(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let m = ModelKind::Cartesian(2);
        assert_eq!(m.dist(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        let d = ModelKind::Disk.dist(&[0.0, 0.0], &[0.5, 0.0]);
        assert!((d - (5.0f64 / 3.0).acosh()).abs() < 1e-14);
        assert_eq!(ModelKind::Disk.dist(&[0.3, 0.2], &[0.3, 0.2]), 0.0);
    }

    #[test]
    fn angle_examples() {
        let m = ModelKind::Cartesian(2);
        let o = [0.0, 0.0];
        assert!((m.angle(&[1.0, 0.0], &o, &[0.0, 1.0], 1e-9) - 90.0).abs() < 1e-12);
        assert_eq!(m.angle(&[1.0, 0.0], &o, &[1.0, 0.0], 1e-9), 0.0);
        assert!((m.angle(&[1.0, 0.0], &o, &[-1.0, 0.0], 1e-9) - 180.0).abs() < 1e-12);
        assert_eq!(m.angle(&o, &o, &[1.0, 0.0], 1e-9), 0.0);
    }

    #[test]
    fn mobius_round_trip() {
        let v = [0.3, -0.4];
        let z = [-0.2, 0.5];
        let w = mobius_from_origin(&v, &mobius_to_origin(&v, &z));
        assert!((w[0] - z[0]).abs() < 1e-14 && (w[1] - z[1]).abs() < 1e-14);
        // Isometry.
        let a = [0.1, 0.7];
        let d1 = disk_dist(&a, &z);
        let d2 = disk_dist(&mobius_to_origin(&v, &a), &mobius_to_origin(&v, &z));
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn geodesic_walk_has_requested_length() {
        let m = ModelKind::Disk;
        let p = [0.2, 0.1];
        let q = [-0.5, 0.3];
        let x = m.geo(&p, &q, 1.7);
        assert!((m.dist(&p, &x) - 1.7).abs() < 1e-12);
        // Collinear: d(p,q) + d(q,x) = d(p,x) when walking past q.
        let dq = m.dist(&p, &q);
        assert!((m.dist(&p, &q) + m.dist(&q, &x) - m.dist(&p, &x)).abs() < 1e-9 || dq > 1.7);
        let y = m.geo(&p, &q, -0.8);
        assert!((m.dist(&y, &q) - m.dist(&y, &p) - dq).abs() < 1e-9);
    }

    #[test]
    fn disk_midpoint_by_bisection() {
        let m = ModelKind::Disk;
        let a = [0.6, -0.2];
        let b = [-0.3, 0.7];
        let mid = m.midpoint(&a, &b, 1e-9);
        assert!((m.dist(&a, &mid) - m.dist(&mid, &b)).abs() < 1e-9);
        assert!((m.dist(&a, &mid) + m.dist(&mid, &b) - m.dist(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn simplex_edges_are_unit() {
        for k in 2..=6 {
            let pts = regular_simplex(k, k - 1).unwrap();
            for i in 0..k {
                for j in i + 1..k {
                    assert!((norm(&sub(&pts[i], &pts[j])) - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(regular_simplex(4, 2).is_none());
    }
}
