//! Static edge-triangle intersection finder for a single state.

use rayon::prelude::*;

use super::sweep::{overlapping, Aabb};
use crate::geometry::{Topology, Vec3};

fn orient(a: Vec3, b: Vec3, c: Vec3, p: Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(p - a))
}

fn orient2(u: [f64; 2], v: [f64; 2], w: [f64; 2]) -> f64 {
    (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])
}

fn within(u: [f64; 2], v: [f64; 2], w: [f64; 2]) -> bool {
    (0..2).all(|k| u[k].min(v[k]) <= w[k] && w[k] <= u[k].max(v[k]))
}

fn segments_cross_2d(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let d1 = orient2(a, b, p);
    let d2 = orient2(a, b, q);
    let d3 = orient2(p, q, a);
    let d4 = orient2(p, q, b);
    (d1 * d2 < 0.0 && d3 * d4 < 0.0)
        || (d1 == 0.0 && within(a, b, p))
        || (d2 == 0.0 && within(a, b, q))
        || (d3 == 0.0 && within(p, q, a))
        || (d4 == 0.0 && within(p, q, b))
}

fn inside_2d(p: [f64; 2], t: [[f64; 2]; 3]) -> bool {
    let s = [orient2(t[0], t[1], p), orient2(t[1], t[2], p), orient2(t[2], t[0], p)];
    s.iter().all(|&x| x >= 0.0) || s.iter().all(|&x| x <= 0.0)
}

/// Whether the closed segment meets the closed triangle.
pub fn segment_hits_triangle(p: Vec3, q: Vec3, a: Vec3, b: Vec3, c: Vec3) -> bool {
    let scale = [(b - a).norm(), (c - a).norm(), (q - p).norm(), (p - a).norm()].into_iter().fold(0.0, f64::max);
    let tol = 1e-14 * scale.powi(3);
    let sp = orient(a, b, c, p);
    let sq = orient(a, b, c, q);
    if sp.abs() <= tol && sq.abs() <= tol {
        let n = (b - a).cross(&(c - a));
        let k = n.iamax();
        let drop = |v: Vec3| match k {
            0 => [v.y, v.z],
            1 => [v.z, v.x],
            _ => [v.x, v.y],
        };
        let (p2, q2) = (drop(p), drop(q));
        let t2 = [drop(a), drop(b), drop(c)];
        return inside_2d(p2, t2)
            || inside_2d(q2, t2)
            || (0..3).any(|i| segments_cross_2d(p2, q2, t2[i], t2[(i + 1) % 3]));
    }
    if (sp > 0.0 && sq > 0.0) || (sp < 0.0 && sq < 0.0) {
        return false;
    }
    let s1 = orient(p, q, a, b);
    let s2 = orient(p, q, b, c);
    let s3 = orient(p, q, c, a);
    (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0)
}

/// All non-adjacent `(edge, triangle)` pairs that intersect at `x`.
pub fn static_intersections(topology: &Topology, x: &[Vec3]) -> Vec<(usize, usize)> {
    if topology.triangles.is_empty() || topology.edges.is_empty() {
        return Vec::new();
    }
    let extent = x.iter().map(|p| p.amax()).fold(0.0, f64::max);
    let pad = 1e-12 * (1.0 + extent);
    let eboxes: Vec<Aabb> = topology.edges.iter().map(|e| Aabb::of(e.iter().map(|&v| x[v]), pad)).collect();
    let tboxes: Vec<Aabb> = topology.triangles.iter().map(|t| Aabb::of(t.iter().map(|&v| x[v]), pad)).collect();
    overlapping(&eboxes, &tboxes, false)
        .into_par_iter()
        .filter(|&(e, t)| {
            let ed = topology.edges[e];
            let tr = topology.triangles[t];
            if ed.iter().any(|v| tr.contains(v)) {
                return false;
            }
            segment_hits_triangle(x[ed[0]], x[ed[1]], x[tr[0]], x[tr[1]], x[tr[2]])
        })
        .collect()
}
