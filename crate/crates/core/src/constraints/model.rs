use super::{tet_det, Constraint, ConstraintKey, ConstraintKind, Stencil};
use crate::geometry::{Simplex, Vec3, DEGENERATE_DISTANCE};
use crate::proximity::ProximityPair;

const INTERIOR: f64 = 1e-6;
const MIN_REF_VOLUME: f64 = 1e-18;
const PARALLEL_SIN: f64 = 1e-3;

/// Turns a close proximity pair into one linearized contact row.
pub trait ContactModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// `hint` is the pair direction from an earlier step, used when the pair touches.
    fn build(&self, pair: &ProximityPair, x: &[Vec3], delta: f64, hint: Option<Vec3>) -> Option<Constraint>;
}

/// Volume constraints for VT and EE pairs, point gaps otherwise.
pub struct VolumeModel;

/// Point-gap constraints `dist / delta - 1` for every pair kind.
pub struct GapModel;

impl ContactModel for VolumeModel {
    fn name(&self) -> &'static str {
        "volume"
    }

    fn build(&self, pair: &ProximityPair, x: &[Vec3], delta: f64, hint: Option<Vec3>) -> Option<Constraint> {
        Some(match (pair.a, pair.b) {
            (Simplex::Vertex(_), Simplex::Triangle(_)) => build_vt_constraint(pair, x, delta, hint),
            (Simplex::Edge(_), Simplex::Edge(_)) => build_ee_constraint(pair, x, delta, hint),
            _ => build_gap_constraint(pair, x, delta, hint),
        })
    }
}

impl ContactModel for GapModel {
    fn name(&self) -> &'static str {
        "gap"
    }

    fn build(&self, pair: &ProximityPair, x: &[Vec3], delta: f64, hint: Option<Vec3>) -> Option<Constraint> {
        Some(build_gap_constraint(pair, x, delta, hint))
    }
}

/// Contact models selectable by name.
pub struct ContactModelRegistry {
    models: Vec<Box<dyn ContactModel>>,
}

impl ContactModelRegistry {
    pub fn new() -> Self {
        ContactModelRegistry { models: Vec::new() }
    }

    pub fn register(&mut self, model: Box<dyn ContactModel>) {
        self.models.retain(|m| m.name() != model.name());
        self.models.push(model);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ContactModel> {
        self.models.iter().find(|m| m.name() == name).map(|m| m.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.iter().map(|m| m.name()).collect()
    }
}

impl Default for ContactModelRegistry {
    fn default() -> Self {
        let mut r = Self::new();
        r.register(Box::new(VolumeModel));
        r.register(Box::new(GapModel));
        r
    }
}

fn kind_of(pair: &ProximityPair) -> ConstraintKind {
    match (pair.a, pair.b) {
        (Simplex::Vertex(_), Simplex::Triangle(_)) => ConstraintKind::ContactVT,
        (Simplex::Edge(_), Simplex::Edge(_)) => ConstraintKind::ContactEE,
        (Simplex::Vertex(_), Simplex::Edge(_)) => ConstraintKind::ContactVE,
        _ => ConstraintKind::ContactVV,
    }
}

fn key_of(pair: &ProximityPair) -> ConstraintKey {
    ConstraintKey::Pair(pair.a, pair.b)
}

/// Point-gap row between the closest points, frozen barycentrically.
pub fn build_gap_constraint(pair: &ProximityPair, x: &[Vec3], delta: f64, hint: Option<Vec3>) -> Constraint {
    let mut verts = Vec::with_capacity(4);
    let mut weights = [0.0; 4];
    let sides = [(pair.a.indices(), &pair.closest.weights_a, 1.0), (pair.b.indices(), &pair.closest.weights_b, -1.0)];
    for (ids, ws, sign) in sides {
        for (k, &v) in ids.iter().enumerate() {
            if ws[k].abs() > 1e-12 && verts.len() < 4 {
                weights[verts.len()] = sign * ws[k];
                verts.push(v);
            }
        }
    }
    let fallback = match hint {
        Some(h) if pair.closest.distance <= DEGENERATE_DISTANCE => h,
        _ => pair.closest.direction,
    };
    Constraint::linearize(kind_of(pair), key_of(pair), &verts, Stencil::PointGap { weights, delta, fallback }, x)
}

/// `|x_i - x_a| / delta - 1` for a vertex-vertex pair.
pub fn build_vv_constraint(pair: &ProximityPair, x: &[Vec3], delta: f64, hint: Option<Vec3>) -> Constraint {
    build_gap_constraint(pair, x, delta, hint)
}

fn orientation(h: f64, axis: Vec3, pair: &ProximityPair, hint: Option<Vec3>) -> f64 {
    let probe = if pair.closest.distance > DEGENERATE_DISTANCE {
        h
    } else {
        hint.unwrap_or(pair.closest.direction).dot(&axis)
    };
    if probe < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Volume row on the tetrahedron `order`; the reference shifts the first
/// `lower` vertices by `-s n` and the others by `+s n`.
#[allow(clippy::too_many_arguments)]
fn volume_row(
    pair: &ProximityPair,
    x: &[Vec3],
    delta: f64,
    hint: Option<Vec3>,
    mut order: [usize; 4],
    lower: usize,
    n: Vec3,
    sep: f64,
) -> Constraint {
    let s = 0.5 * (delta - sep);
    let shifted = |ord: &[usize; 4]| {
        let mut r = [Vec3::zeros(); 4];
        for k in 0..4 {
            let off = if k < lower { -s } else { s };
            r[k] = x[ord[k]] + n * off;
        }
        r
    };
    let cur = |ord: &[usize; 4]| ord.map(|v| x[v]);
    let mut ref_det = tet_det(&shifted(&order));
    if ref_det.abs() / 6.0 < MIN_REF_VOLUME {
        return build_gap_constraint(pair, x, delta, hint);
    }
    if ref_det < 0.0 {
        order.swap(0, 1);
        ref_det = -ref_det;
    }
    if tet_det(&cur(&order)) / ref_det < -1e-9 {
        return build_gap_constraint(pair, x, delta, hint);
    }
    Constraint::linearize(kind_of(pair), key_of(pair), &order, Stencil::Volume { ref_det }, x)
}

/// Volume row for a vertex-triangle pair whose closest point is inside the face.
///
/// The reference moves the vertex by `+s n` and the triangle by `-s n` so
/// that the reference height is `delta`.
pub fn build_vt_constraint(pair: &ProximityPair, x: &[Vec3], delta: f64, hint: Option<Vec3>) -> Constraint {
    let (Simplex::Vertex(p), Simplex::Triangle([i, j, k])) = (pair.a, pair.b) else {
        return build_gap_constraint(pair, x, delta, hint);
    };
    if pair.closest.weights_b.iter().any(|&w| w <= INTERIOR) {
        return build_gap_constraint(pair, x, delta, hint);
    }
    let cross = (x[j] - x[i]).cross(&(x[k] - x[i]));
    let len = cross.norm();
    if len <= 0.0 {
        return build_gap_constraint(pair, x, delta, hint);
    }
    let nt = cross / len;
    let h = (x[p] - x[i]).dot(&nt);
    let sign = orientation(h, nt, pair, hint);
    volume_row(pair, x, delta, hint, [i, j, k, p], 3, nt * sign, h * sign)
}

/// Volume row for an edge-edge pair with interior closest points on both edges.
pub fn build_ee_constraint(pair: &ProximityPair, x: &[Vec3], delta: f64, hint: Option<Vec3>) -> Constraint {
    let (Simplex::Edge([p0, p1]), Simplex::Edge([q0, q1])) = (pair.a, pair.b) else {
        return build_gap_constraint(pair, x, delta, hint);
    };
    let s = pair.closest.weights_a[1];
    let t = pair.closest.weights_b[1];
    if !(INTERIOR..=1.0 - INTERIOR).contains(&s) || !(INTERIOR..=1.0 - INTERIOR).contains(&t) {
        return build_gap_constraint(pair, x, delta, hint);
    }
    let ep = x[p1] - x[p0];
    let eq = x[q1] - x[q0];
    let cross = ep.cross(&eq);
    let len = cross.norm();
    if len < PARALLEL_SIN * ep.norm() * eq.norm() {
        return build_gap_constraint(pair, x, delta, hint);
    }
    let nc = cross / len;
    let h = (x[p0] - x[q0]).dot(&nc);
    let sign = orientation(h, nc, pair, hint);
    volume_row(pair, x, delta, hint, [q0, q1, p0, p1], 2, nc * sign, h * sign)
}
