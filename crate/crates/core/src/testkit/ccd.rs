//! Continuous collision certifier: coplanarity cubics with double-double
//! coefficients plus an inside test at every root.

use rayon::prelude::*;

use super::dd::DD3;
use super::distance::{point_triangle_distance, segment_distance};
use super::sweep::{overlapping, Aabb};
use crate::geometry::{Simplex, Topology, Vec3};

const INSIDE_TOL: f64 = 1e-9;
/// Relative distance indistinguishable from contact in double precision.
const CONTACT_TOL: f64 = 1e-14;
const DEGENERATE_COEF: f64 = 1e-12;
const SAMPLES: usize = 65;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certainty {
    Certain,
    /// Within tolerance of a contact; needs review.
    Uncertain,
}

/// A crossing found on a linear segment of the path.
#[derive(Clone, Copy, Debug)]
pub struct Violation {
    pub a: Simplex,
    pub b: Simplex,
    pub time: f64,
    pub certainty: Certainty,
}

/// Linear motion from `start` to `end`; every non-adjacent VT and EE pair is checked.
pub struct PathSegment<'a> {
    pub topology: &'a Topology,
    pub start: &'a [Vec3],
    pub end: &'a [Vec3],
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    a * (1.0 - t) + b * t
}

/// Coefficients (ascending) of `((u-o) x (v-o)) . (w-o)` along the motion.
fn cubic(p0: &[Vec3; 4], p1: &[Vec3; 4]) -> [f64; 4] {
    let d0 = |k: usize| DD3::diff(&arr(&p0[k]), &arr(&p0[0]));
    let d1 = |k: usize, base: DD3| DD3::diff(&arr(&p1[k]), &arr(&p1[0])).sub(base);
    let (u0, v0, w0) = (d0(1), d0(2), d0(3));
    let (u1, v1, w1) = (d1(1, u0), d1(2, v0), d1(3, w0));
    let c0 = u0.cross(v0).dot(w0);
    let c1 = u1.cross(v0).dot(w0) + u0.cross(v1).dot(w0) + u0.cross(v0).dot(w1);
    let c2 = u1.cross(v1).dot(w0) + u1.cross(v0).dot(w1) + u0.cross(v1).dot(w1);
    let c3 = u1.cross(v1).dot(w1);
    [c0.to_f64(), c1.to_f64(), c2.to_f64(), c3.to_f64()]
}

fn horner(c: &[f64; 4], t: f64) -> f64 {
    ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
}

/// Candidate times in [0, 1]: bracketed roots (`false`) and near-zero extrema (`true`).
fn candidate_times(c: &[f64; 4]) -> Vec<(f64, bool)> {
    let scale: f64 = c.iter().map(|x| x.abs()).sum();
    let mut breaks = vec![0.0];
    let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    let mut crit = Vec::new();
    if a.abs() > 1e-300 {
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            let q = -0.5 * (b + b.signum() * s);
            if q != 0.0 {
                crit.push(q / a);
                crit.push(cc / q);
            } else {
                crit.push(0.0);
            }
        }
    } else if b.abs() > 1e-300 {
        crit.push(-cc / b);
    }
    crit.retain(|t| *t > 0.0 && *t < 1.0);
    crit.sort_by(f64::total_cmp);
    breaks.extend(&crit);
    breaks.push(1.0);

    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (mut flo, fhi) = (horner(c, lo), horner(c, hi));
        if flo == 0.0 {
            out.push((lo, false));
            continue;
        }
        if fhi == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = horner(c, mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        out.push((0.5 * (lo + hi), false));
    }
    if horner(c, 1.0) == 0.0 {
        out.push((1.0, false));
    }
    for &t in breaks.iter() {
        if horner(c, t).abs() <= 1e-12 * scale {
            out.push((t, true));
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Minimum over sampled times with golden-section refinement around the best sample.
fn sampled_minimum(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (0.0, f(0.0));
    let step = 1.0 / (SAMPLES - 1) as f64;
    for k in 1..SAMPLES {
        let t = k as f64 * step;
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let (mut lo, mut hi) = ((best.0 - step).max(0.0), (best.0 + step).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    let v = f(t);
    if v < best.1 {
        (t, v)
    } else {
        best
    }
}

fn classify_margin(m: f64, touch: bool) -> Option<Certainty> {
    if m > INSIDE_TOL {
        Some(if touch { Certainty::Uncertain } else { Certainty::Certain })
    } else if m >= -INSIDE_TOL {
        Some(Certainty::Uncertain)
    } else {
        None
    }
}

fn classify_distance(d: f64, scale: f64) -> Option<Certainty> {
    if d <= CONTACT_TOL * scale {
        Some(Certainty::Certain)
    } else if d <= INSIDE_TOL * scale {
        Some(Certainty::Uncertain)
    } else {
        None
    }
}

fn length_scale(p0: &[Vec3; 4], p1: &[Vec3; 4]) -> f64 {
    (1..4).map(|k| (p0[k] - p0[0]).norm().max((p1[k] - p1[0]).norm())).fold(0.0, f64::max)
}

/// Vertex `p` against triangle `(a, b, c)`: points ordered `[a, b, c, p]`.
fn vt_crossing(s: &[Vec3; 4], e: &[Vec3; 4]) -> Option<(f64, Certainty)> {
    let scale = length_scale(s, e);
    if scale == 0.0 {
        return None;
    }
    let at = |t: f64| [lerp(s[0], e[0], t), lerp(s[1], e[1], t), lerp(s[2], e[2], t), lerp(s[3], e[3], t)];
    let c = cubic(s, e);
    if c.iter().all(|x| x.abs() <= DEGENERATE_COEF * scale.powi(3)) {
        let (t, d) = sampled_minimum(|t| {
            let q = at(t);
            point_triangle_distance(q[3], q[0], q[1], q[2])
        });
        return classify_distance(d, scale).map(|k| (t, k));
    }
    for (t, touch) in candidate_times(&c) {
        let [a, b, cc, p] = at(t);
        let n = (b - a).cross(&(cc - a));
        let n2 = n.norm_squared();
        if n2 <= 1e-24 * scale.powi(4) {
            if let Some(k) = classify_distance(point_triangle_distance(p, a, b, cc), scale) {
                return Some((t, k.max_uncertain()));
            }
            continue;
        }
        if touch && (n.dot(&(p - a)).abs() / n2.sqrt()) > INSIDE_TOL * scale {
            continue;
        }
        let wa = n.dot(&(b - p).cross(&(cc - p))) / n2;
        let wb = n.dot(&(cc - p).cross(&(a - p))) / n2;
        let wc = 1.0 - wa - wb;
        if let Some(k) = classify_margin(wa.min(wb).min(wc), touch) {
            return Some((t, k));
        }
    }
    None
}

/// Edge `(p0, p1)` against edge `(q0, q1)`: points ordered `[p0, p1, q0, q1]`.
fn ee_crossing(s: &[Vec3; 4], e: &[Vec3; 4]) -> Option<(f64, Certainty)> {
    let scale = length_scale(s, e);
    if scale == 0.0 {
        return None;
    }
    let at = |t: f64| [lerp(s[0], e[0], t), lerp(s[1], e[1], t), lerp(s[2], e[2], t), lerp(s[3], e[3], t)];
    let c = cubic(s, e);
    if c.iter().all(|x| x.abs() <= DEGENERATE_COEF * scale.powi(3)) {
        let (t, d) = sampled_minimum(|t| {
            let q = at(t);
            segment_distance(q[0], q[1], q[2], q[3])
        });
        return classify_distance(d, scale).map(|k| (t, k));
    }
    for (t, touch) in candidate_times(&c) {
        let [p0, p1, q0, q1] = at(t);
        let ep = p1 - p0;
        let eq = q1 - q0;
        let n = ep.cross(&eq);
        let n2 = n.norm_squared();
        if n2 <= 1e-18 * ep.norm_squared() * eq.norm_squared() {
            if let Some(k) = classify_distance(segment_distance(p0, p1, q0, q1), scale) {
                return Some((t, k.max_uncertain()));
            }
            continue;
        }
        let r = q0 - p0;
        if touch && (r.dot(&n).abs() / n2.sqrt()) > INSIDE_TOL * scale {
            continue;
        }
        let sp = r.cross(&eq).dot(&n) / n2;
        let sq = r.cross(&ep).dot(&n) / n2;
        let margin = sp.min(1.0 - sp).min(sq).min(1.0 - sq);
        if let Some(k) = classify_margin(margin, touch) {
            return Some((t, k));
        }
    }
    None
}

impl Certainty {
    fn max_uncertain(self) -> Certainty {
        Certainty::Uncertain
    }
}

/// All crossings on the segment, earliest per pair, sorted by time.
pub fn ccd_certify(seg: &PathSegment<'_>) -> Vec<Violation> {
    let topo = seg.topology;
    let (x0, x1) = (seg.start, seg.end);
    assert_eq!(x0.len(), x1.len(), "segment endpoints differ in size");
    let moving: Vec<bool> = x0.iter().zip(x1).map(|(a, b)| a != b).collect();
    if !moving.iter().any(|&m| m) {
        return Vec::new();
    }
    let extent = x0.iter().chain(x1).map(|p| p.amax()).fold(0.0, f64::max);
    let pad = 1e-12 * (1.0 + extent);
    let swept = |ids: &[usize]| Aabb::of(ids.iter().flat_map(|&v| [x0[v], x1[v]]), pad);
    let vboxes: Vec<Aabb> = (0..topo.n_vertices).map(|v| swept(&[v])).collect();
    let eboxes: Vec<Aabb> = topo.edges.iter().map(|e| swept(e)).collect();
    let tboxes: Vec<Aabb> = topo.triangles.iter().map(|t| swept(t)).collect();
    let any_moving = |ids: &[usize]| ids.iter().any(|&v| moving[v]);

    let vt: Vec<(usize, usize)> = overlapping(&vboxes, &tboxes, false)
        .into_iter()
        .filter(|&(v, t)| {
            let tri = &topo.triangles[t];
            !tri.contains(&v) && (moving[v] || any_moving(tri))
        })
        .collect();
    let ee: Vec<(usize, usize)> = overlapping(&eboxes, &eboxes, true)
        .into_iter()
        .filter(|&(i, j)| {
            let (a, b) = (&topo.edges[i], &topo.edges[j]);
            !a.iter().any(|v| b.contains(v)) && (any_moving(a) || any_moving(b))
        })
        .collect();

    let mut out: Vec<Violation> = vt
        .par_iter()
        .filter_map(|&(v, t)| {
            let [a, b, c] = topo.triangles[t];
            let s = [x0[a], x0[b], x0[c], x0[v]];
            let e = [x1[a], x1[b], x1[c], x1[v]];
            vt_crossing(&s, &e).map(|(time, certainty)| Violation {
                a: Simplex::Vertex(v),
                b: Simplex::Triangle(topo.triangles[t]),
                time,
                certainty,
            })
        })
        .collect();
    out.extend(ee.par_iter().filter_map(|&(i, j)| {
        let [p0, p1] = topo.edges[i];
        let [q0, q1] = topo.edges[j];
        let s = [x0[p0], x0[p1], x0[q0], x0[q1]];
        let e = [x1[p0], x1[p1], x1[q0], x1[q1]];
        ee_crossing(&s, &e).map(|(time, certainty)| Violation {
            a: Simplex::Edge(topo.edges[i]),
            b: Simplex::Edge(topo.edges[j]),
            time,
            certainty,
        })
    }).collect::<Vec<_>>());
    out.sort_by(|p, q| p.time.total_cmp(&q.time).then(p.a.cmp(&q.a)).then(p.b.cmp(&q.b)));
    out
}

/// Summary of certifying a piecewise-linear path.
#[derive(Clone, Debug, Default)]
pub struct CertifyReport {
    pub segments: usize,
    pub certain: usize,
    pub uncertain: usize,
    /// Up to ten `(segment index, violation)` examples.
    pub examples: Vec<(usize, Violation)>,
}

impl CertifyReport {
    pub fn is_clean(&self) -> bool {
        self.certain == 0
    }

    pub fn merge(&mut self, other: CertifyReport) {
        let offset = self.segments;
        self.segments += other.segments;
        self.certain += other.certain;
        self.uncertain += other.uncertain;
        for (s, v) in other.examples {
            if self.examples.len() < 10 {
                self.examples.push((s + offset, v));
            }
        }
    }
}

/// Certifies every consecutive pair of states in `path`.
pub fn certify_path(topology: &Topology, path: &[Vec<Vec3>]) -> CertifyReport {
    let mut rep = CertifyReport::default();
    for (i, w) in path.windows(2).enumerate() {
        rep.segments += 1;
        for v in ccd_certify(&PathSegment { topology, start: &w[0], end: &w[1] }) {
            match v.certainty {
                Certainty::Certain => rep.certain += 1,
                Certainty::Uncertain => rep.uncertain += 1,
            }
            if rep.examples.len() < 10 {
                rep.examples.push((i, v));
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_and_point(p0: Vec3, p1: Vec3) -> (Topology, Vec<Vec3>, Vec<Vec3>) {
        let topo = Topology::new(4, vec![[0, 1, 2]], vec![]).unwrap();
        let tri = [Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, -1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let mut a = tri.to_vec();
        a.push(p0);
        let mut b = tri.to_vec();
        b.push(p1);
        (topo, a, b)
    }

    #[test]
    fn static_segment_is_clean() {
        let (topo, a, _) = tri_and_point(Vec3::new(0.0, 0.0, 1.0), Vec3::zeros());
        assert!(ccd_certify(&PathSegment { topology: &topo, start: &a, end: &a }).is_empty());
    }

    #[test]
    fn vertex_through_triangle_at_half() {
        let (topo, a, b) = tri_and_point(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0));
        let v = ccd_certify(&PathSegment { topology: &topo, start: &a, end: &b });
        assert_eq!(v.len(), 1);
        assert!((v[0].time - 0.5).abs() < 1e-12);
        assert_eq!(v[0].certainty, Certainty::Certain);
    }

    #[test]
    fn vertex_passing_beside_is_clean() {
        let (topo, a, b) = tri_and_point(Vec3::new(3.0, 0.0, 1.0), Vec3::new(3.0, 0.0, -1.0));
        assert!(ccd_certify(&PathSegment { topology: &topo, start: &a, end: &b }).is_empty());
    }

    #[test]
    fn crossing_edges_found() {
        let topo = Topology::new(4, vec![], vec![[0, 1], [2, 3]]).unwrap();
        let a = vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, -1.0, 1.0), Vec3::new(0.0, 1.0, 1.0)];
        let mut b = a.clone();
        b[2].z = -1.0;
        b[3].z = -1.0;
        let v = ccd_certify(&PathSegment { topology: &topo, start: &a, end: &b });
        assert_eq!(v.len(), 1);
        assert!((v[0].time - 0.5).abs() < 1e-12);
        let mut c = a.clone();
        c[2] += Vec3::new(5.0, 0.0, -2.0);
        c[3] += Vec3::new(5.0, 0.0, -2.0);
        assert!(ccd_certify(&PathSegment { topology: &topo, start: &a, end: &c }).is_empty());
    }

    #[test]
    fn in_plane_crossing_is_detected() {
        // coplanar motion: the vertex slides through the triangle inside z = 0
        let (topo, a, b) = tri_and_point(Vec3::new(-3.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 0.0));
        let v = ccd_certify(&PathSegment { topology: &topo, start: &a, end: &b });
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].certainty, Certainty::Certain);
    }

    #[test]
    fn grazing_pass_is_uncertain_not_certain() {
        let (topo, mut a, mut b) = tri_and_point(Vec3::new(1.0, -1.0, 1.0), Vec3::new(1.0, -1.0, -1.0));
        a[3].x += 1e-13;
        b[3].x += 1e-13;
        let v = ccd_certify(&PathSegment { topology: &topo, start: &a, end: &b });
        assert!(v.iter().all(|x| x.certainty == Certainty::Uncertain));
    }
}
