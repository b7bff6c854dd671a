//! Plain distance routines for the oracles, written separately from the production closest-point code.

use crate::geometry::Vec3;

pub fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    let t = if l2 > 0.0 { ((p - a).dot(&ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let n = (b - a).cross(&(c - a));
    let n2 = n.norm_squared();
    let edges = || {
        point_segment_distance(p, a, b).min(point_segment_distance(p, b, c)).min(point_segment_distance(p, c, a))
    };
    if n2 <= 0.0 {
        return edges();
    }
    let h = n.dot(&(p - a)) / n2;
    let q = p - n * h;
    let inside = n.dot(&(b - a).cross(&(q - a))) >= 0.0
        && n.dot(&(c - b).cross(&(q - b))) >= 0.0
        && n.dot(&(a - c).cross(&(q - c))) >= 0.0;
    if inside {
        (p - q).norm()
    } else {
        edges()
    }
}

pub fn segment_distance(p0: Vec3, p1: Vec3, q0: Vec3, q1: Vec3) -> f64 {
    let ep = p1 - p0;
    let eq = q1 - q0;
    let r = q0 - p0;
    let n = ep.cross(&eq);
    let n2 = n.norm_squared();
    if n2 > 1e-24 * ep.norm_squared() * eq.norm_squared() {
        let s = r.cross(&eq).dot(&n) / n2;
        let u = r.cross(&ep).dot(&n) / n2;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u) {
            return ((p0 + ep * s) - (q0 + eq * u)).norm();
        }
    }
    point_segment_distance(p0, q0, q1)
        .min(point_segment_distance(p1, q0, q1))
        .min(point_segment_distance(q0, p0, p1))
        .min(point_segment_distance(q1, p0, p1))
}
