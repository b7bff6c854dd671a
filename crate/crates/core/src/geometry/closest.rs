use super::{Simplex, Vec3};
use crate::error::{Error, Result};

/// Below this separation the pair direction is taken from a fallback.
pub const DEGENERATE_DISTANCE: f64 = 1e-9;
const MIN_AREA: f64 = 1e-12;
const PARALLEL_SIN2: f64 = 1e-12;

/// Closest points between two simplices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestResult {
    pub distance: f64,
    /// Barycentric weights of the closest point on the first simplex.
    pub weights_a: [f64; 3],
    pub weights_b: [f64; 3],
    /// Unit vector from the closest point on `b` to the one on `a`.
    pub direction: Vec3,
}

impl ClosestResult {
    fn from_points(pa: Vec3, pb: Vec3, weights_a: [f64; 3], weights_b: [f64; 3], fallback: impl FnOnce() -> Vec3) -> Self {
        let diff = pa - pb;
        let distance = diff.norm();
        let direction = if distance > DEGENERATE_DISTANCE { diff / distance } else { fallback() };
        ClosestResult { distance, weights_a, weights_b, direction }
    }

    pub fn swapped(self) -> Self {
        ClosestResult {
            distance: self.distance,
            weights_a: self.weights_b,
            weights_b: self.weights_a,
            direction: -self.direction,
        }
    }
}

fn any_perpendicular(v: &Vec3) -> Vec3 {
    let axis = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vec3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let p = v.cross(&axis);
    let n = p.norm();
    if n > 0.0 {
        p / n
    } else {
        Vec3::z()
    }
}

fn point_point(p: Vec3, q: Vec3) -> ClosestResult {
    ClosestResult::from_points(p, q, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], Vec3::x)
}

/// Closest point on segment `ab` to `p`; `a` is the vertex side.
pub fn point_segment_closest(p: Vec3, a: Vec3, b: Vec3) -> ClosestResult {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = a + ab * t;
    ClosestResult::from_points(p, q, [1.0, 0.0, 0.0], [1.0 - t, t, 0.0], || any_perpendicular(&ab))
}

/// Closest point of the solid triangle `abc` to `p`.
pub fn vertex_triangle_closest(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Result<ClosestResult> {
    let ab = b - a;
    let ac = c - a;
    let normal = ab.cross(&ac);
    let area2 = normal.norm();
    if area2 * 0.5 <= MIN_AREA {
        return Err(Error::Degenerate);
    }
    let normal = normal / area2;
    let w = triangle_weights(p, a, b, c, ab, ac);
    let q = a * w[0] + b * w[1] + c * w[2];
    Ok(ClosestResult::from_points(p, q, [1.0, 0.0, 0.0], w, || {
        if (p - a).dot(&normal) < 0.0 {
            -normal
        } else {
            normal
        }
    }))
}

fn triangle_weights(p: Vec3, a: Vec3, b: Vec3, c: Vec3, ab: Vec3, ac: Vec3) -> [f64; 3] {
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [1.0 - v - w, v, w]
}

/// Closest points between segments `p1p2` and `q1q2`.
pub fn edge_edge_closest(p1: Vec3, p2: Vec3, q1: Vec3, q2: Vec3) -> ClosestResult {
    let d1 = p2 - p1;
    let d2 = q2 - q1;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let fallback = || {
        let n = d1.cross(&d2);
        let len = n.norm();
        if len > 1e-12 * (a * e).sqrt() && len > 0.0 {
            let n = n / len;
            if (p1 - q1).dot(&n) < 0.0 {
                -n
            } else {
                n
            }
        } else {
            any_perpendicular(if a > 0.0 { &d1 } else { &d2 })
        }
    };
    if a <= 0.0 || e <= 0.0 {
        return enumerate_endpoints(p1, p2, q1, q2);
    }
    let r = p1 - q1;
    let b = d1.dot(&d2);
    let c = d1.dot(&r);
    let f = d2.dot(&r);
    let denom = a * e - b * b;
    if denom <= PARALLEL_SIN2 * a * e {
        let mut res = enumerate_endpoints(p1, p2, q1, q2);
        if res.distance <= DEGENERATE_DISTANCE {
            res.direction = fallback();
        }
        return res;
    }
    let mut s = ((b * f - c * e) / denom).clamp(0.0, 1.0);
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    let pa = p1 + d1 * s;
    let pb = q1 + d2 * t;
    ClosestResult::from_points(pa, pb, [1.0 - s, s, 0.0], [1.0 - t, t, 0.0], fallback)
}

fn enumerate_endpoints(p1: Vec3, p2: Vec3, q1: Vec3, q2: Vec3) -> ClosestResult {
    let lift = |r: ClosestResult, at_end: bool| {
        let w = if at_end { [0.0, 1.0, 0.0] } else { [1.0, 0.0, 0.0] };
        ClosestResult { weights_a: w, ..r }
    };
    let candidates = [
        lift(point_segment_closest(p1, q1, q2), false),
        lift(point_segment_closest(p2, q1, q2), true),
        lift(point_segment_closest(q1, p1, p2), false).swapped(),
        lift(point_segment_closest(q2, p1, p2), true).swapped(),
    ];
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.distance < best.distance {
            best = *c;
        }
    }
    best
}

fn segment_pierces_triangle(p0: Vec3, p1: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<(f64, [f64; 3])> {
    let n = (b - a).cross(&(c - a));
    let s0 = n.dot(&(p0 - a));
    let s1 = n.dot(&(p1 - a));
    if (s0 > 0.0 && s1 > 0.0) || (s0 < 0.0 && s1 < 0.0) || s0 == s1 {
        return None;
    }
    let t = s0 / (s0 - s1);
    let q = p0 + (p1 - p0) * t;
    let n2 = n.norm_squared();
    let wa = n.dot(&(b - q).cross(&(c - q))) / n2;
    let wb = n.dot(&(c - q).cross(&(a - q))) / n2;
    let wc = 1.0 - wa - wb;
    (wa >= 0.0 && wb >= 0.0 && wc >= 0.0).then_some((t, [wa, wb, wc]))
}

fn tri_is_degenerate(a: Vec3, b: Vec3, c: Vec3) -> bool {
    0.5 * (b - a).cross(&(c - a)).norm() <= MIN_AREA
}

fn edge_weights_in_triangle(k: usize, w: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    out[k] += w[0];
    out[(k + 1) % 3] += w[1];
    out
}

fn vertex_vs_triangle(p: Vec3, t: [Vec3; 3]) -> ClosestResult {
    match vertex_triangle_closest(p, t[0], t[1], t[2]) {
        Ok(r) => r,
        Err(_) => {
            let mut best: Option<ClosestResult> = None;
            for k in 0..3 {
                let mut r = point_segment_closest(p, t[k], t[(k + 1) % 3]);
                r.weights_b = edge_weights_in_triangle(k, r.weights_b);
                if best.is_none_or(|b| r.distance < b.distance) {
                    best = Some(r);
                }
            }
            best.unwrap()
        }
    }
}

fn edge_vs_triangle(e: [Vec3; 2], t: [Vec3; 3]) -> ClosestResult {
    let tri_ok = !tri_is_degenerate(t[0], t[1], t[2]);
    if tri_ok {
        if let Some((s, w)) = segment_pierces_triangle(e[0], e[1], t[0], t[1], t[2]) {
            let n = (t[1] - t[0]).cross(&(t[2] - t[0])).normalize();
            return ClosestResult { distance: 0.0, weights_a: [1.0 - s, s, 0.0], weights_b: w, direction: n };
        }
    }
    let mut best: Option<ClosestResult> = None;
    let mut consider = |r: ClosestResult| {
        if best.is_none_or(|b| r.distance < b.distance) {
            best = Some(r);
        }
    };
    for (i, &p) in e.iter().enumerate() {
        let mut r = vertex_vs_triangle(p, t);
        r.weights_a = if i == 0 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        consider(r);
    }
    for k in 0..3 {
        let mut r = edge_edge_closest(e[0], e[1], t[k], t[(k + 1) % 3]);
        r.weights_b = edge_weights_in_triangle(k, r.weights_b);
        consider(r);
    }
    best.unwrap()
}

fn triangle_vs_triangle(ta: [Vec3; 3], tb: [Vec3; 3]) -> ClosestResult {
    let mut best: Option<ClosestResult> = None;
    let mut consider = |r: ClosestResult| {
        if best.is_none_or(|b| r.distance < b.distance) {
            best = Some(r);
        }
    };
    for k in 0..3 {
        let mut r = edge_vs_triangle([ta[k], ta[(k + 1) % 3]], tb);
        r.weights_a = edge_weights_in_triangle(k, r.weights_a);
        consider(r);
    }
    for k in 0..3 {
        let mut r = edge_vs_triangle([tb[k], tb[(k + 1) % 3]], ta).swapped();
        r.weights_b = edge_weights_in_triangle(k, r.weights_b);
        consider(r);
    }
    best.unwrap()
}

/// Distance between two non-adjacent simplices.
///
/// The computation always runs in a canonical argument order, so swapping
/// the arguments gives bit-identical distances.
pub fn simplex_pair_closest(sa: &Simplex, sb: &Simplex, positions: &[Vec3]) -> Result<ClosestResult> {
    if sa.is_degenerate() || sb.is_degenerate() {
        return Err(Error::Degenerate);
    }
    if sa.shares_vertex(sb) {
        return Err(Error::AdjacentPair);
    }
    let n = positions.len();
    if let Some(&bad) = sa.indices().iter().chain(sb.indices()).find(|&&v| v >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    if sa <= sb {
        Ok(ordered(sa, sb, positions))
    } else {
        Ok(ordered(sb, sa, positions).swapped())
    }
}

fn ordered(sa: &Simplex, sb: &Simplex, x: &[Vec3]) -> ClosestResult {
    use Simplex::*;
    match (*sa, *sb) {
        (Vertex(a), Vertex(b)) => point_point(x[a], x[b]),
        (Vertex(a), Edge([b0, b1])) => point_segment_closest(x[a], x[b0], x[b1]),
        (Vertex(a), Triangle([b0, b1, b2])) => vertex_vs_triangle(x[a], [x[b0], x[b1], x[b2]]),
        (Edge([a0, a1]), Edge([b0, b1])) => edge_edge_closest(x[a0], x[a1], x[b0], x[b1]),
        (Edge([a0, a1]), Triangle([b0, b1, b2])) => edge_vs_triangle([x[a0], x[a1]], [x[b0], x[b1], x[b2]]),
        (Triangle([a0, a1, a2]), Triangle([b0, b1, b2])) => {
            triangle_vs_triangle([x[a0], x[a1], x[a2]], [x[b0], x[b1], x[b2]])
        }
        _ => unreachable!("arguments are ordered by rank"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn unit_tri() -> [Vec3; 3] {
        [v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)]
    }

    #[test]
    fn vt_corner_region() {
        let t = unit_tri();
        let r = vertex_triangle_closest(v(0.0, 0.0, 1.0), t[0], t[1], t[2]).unwrap();
        assert!((r.distance - 1.0).abs() < 1e-15);
        assert_eq!(r.weights_b, [1.0, 0.0, 0.0]);
        assert!((r.direction - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn vt_interior() {
        let t = unit_tri();
        let r = vertex_triangle_closest(v(0.25, 0.25, 0.5), t[0], t[1], t[2]).unwrap();
        assert!((r.distance - 0.5).abs() < 1e-12);
        for (w, e) in r.weights_b.iter().zip([0.5, 0.25, 0.25]) {
            assert!((w - e).abs() < 1e-12);
        }
    }

    #[test]
    fn vt_on_triangle_uses_normal() {
        let t = unit_tri();
        let r = vertex_triangle_closest(v(0.2, 0.2, 0.0), t[0], t[1], t[2]).unwrap();
        assert!(r.distance < 1e-15);
        assert!((r.direction.norm() - 1.0).abs() < 1e-12);
        assert!(r.direction.z.abs() > 0.999);
    }

    #[test]
    fn vt_degenerate_triangle_errors() {
        let r = vertex_triangle_closest(v(0.0, 0.0, 1.0), v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(2.0, 0.0, 0.0));
        assert!(matches!(r, Err(Error::Degenerate)));
    }

    #[test]
    fn ee_examples() {
        let r = edge_edge_closest(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 0.0, 1.0), v(0.0, 1.0, 1.0));
        assert!((r.distance - 1.0).abs() < 1e-15);
        let r = edge_edge_closest(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0));
        assert!(r.distance < 1e-15);
        assert!((r.direction.norm() - 1.0).abs() < 1e-12);
        let r = edge_edge_closest(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.5, -0.5, 0.3), v(0.5, 0.5, 0.3));
        assert!((r.distance - 0.3).abs() < 1e-15);
        assert!((r.weights_a[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ee_parallel_offset() {
        let r = edge_edge_closest(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(2.0, 0.0, 0.5), v(3.0, 0.0, 0.5));
        let expect = (1.0f64 + 0.25).sqrt();
        assert!((r.distance - expect).abs() < 1e-15);
        assert_eq!(r.weights_a, [0.0, 1.0, 0.0]);
        assert_eq!(r.weights_b, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn dispatcher_rejects_adjacent() {
        let x = vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)];
        let r = simplex_pair_closest(&Simplex::Vertex(0), &Simplex::edge(0, 1), &x);
        assert!(matches!(r, Err(Error::AdjacentPair)));
    }

    #[test]
    fn dispatcher_vertex_pair() {
        let x = vec![v(0.0, 0.0, 0.0), v(0.0, 0.002, 0.0)];
        let r = simplex_pair_closest(&Simplex::Vertex(0), &Simplex::Vertex(1), &x).unwrap();
        assert!((r.distance - 0.002).abs() < 1e-18);
        assert!((r.direction + Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn dispatcher_matches_vt_primitive() {
        let x = vec![v(0.25, 0.25, 0.5), v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)];
        let r = simplex_pair_closest(&Simplex::Vertex(0), &Simplex::Triangle([1, 2, 3]), &x).unwrap();
        let p = vertex_triangle_closest(x[0], x[1], x[2], x[3]).unwrap();
        assert_eq!(r, p);
    }

    #[test]
    fn degenerate_triangle_falls_back_to_edges() {
        let x = vec![v(0.5, 1.0, 0.0), v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(2.0, 0.0, 0.0)];
        let r = simplex_pair_closest(&Simplex::Vertex(0), &Simplex::Triangle([1, 2, 3]), &x).unwrap();
        assert!((r.distance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn edge_through_triangle_is_zero() {
        let x = vec![
            v(0.2, 0.2, -1.0),
            v(0.2, 0.2, 1.0),
            v(0.0, 0.0, 0.0),
            v(1.0, 0.0, 0.0),
            v(0.0, 1.0, 0.0),
        ];
        let r = simplex_pair_closest(&Simplex::edge(0, 1), &Simplex::Triangle([2, 3, 4]), &x).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!((r.weights_a[1] - 0.5).abs() < 1e-15);
    }
}
