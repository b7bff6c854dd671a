//! Linearized inequality constraints: volume/gap contacts and unilateral edge lengths.

mod coloring;
mod model;

use rustc_hash::FxHashMap as HashMap;

use rayon::prelude::*;

pub use coloring::{color_constraints, color_groups};
pub use model::{
    build_ee_constraint, build_gap_constraint, build_vt_constraint, build_vv_constraint, ContactModel,
    ContactModelRegistry, GapModel, VolumeModel,
};

use crate::geometry::{Simplex, Topology, Vec3};
use crate::proximity::ProximityPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    ContactVT,
    ContactEE,
    ContactVE,
    ContactVV,
    EdgeLength,
}

/// Identity of a constraint across backward steps, used for warm starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKey {
    Pair(Simplex, Simplex),
    Edge(usize),
}

/// Scalar function of up to four vertex positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stencil {
    /// `det(x) / ref_det - 1` for the tetrahedron on the four vertices.
    Volume { ref_det: f64 },
    /// `|sum w_k x_k| / delta - 1`; `fallback` is used when the point gap vanishes.
    PointGap { weights: [f64; 4], delta: f64, fallback: Vec3 },
    /// `sigma - |x_0 - x_1| / target`.
    EdgeLength { sigma: f64, target: f64 },
}

fn tet_det(p: &[Vec3; 4]) -> f64 {
    (p[1] - p[0]).dot(&(p[2] - p[0]).cross(&(p[3] - p[0])))
}

fn tet_det_gradient(p: &[Vec3; 4]) -> [Vec3; 4] {
    let a = p[1] - p[0];
    let b = p[2] - p[0];
    let c = p[3] - p[0];
    let g1 = b.cross(&c);
    let g2 = c.cross(&a);
    let g3 = a.cross(&b);
    [-(g1 + g2 + g3), g1, g2, g3]
}

impl Stencil {
    pub fn evaluate(&self, p: &[Vec3; 4]) -> f64 {
        match *self {
            Stencil::Volume { ref_det } => tet_det(p) / ref_det - 1.0,
            Stencil::PointGap { weights, delta, fallback } => {
                let s = gap_vector(&weights, p);
                let d = s.norm();
                if d > crate::geometry::DEGENERATE_DISTANCE {
                    d / delta - 1.0
                } else {
                    fallback.dot(&s) / delta - 1.0
                }
            }
            Stencil::EdgeLength { sigma, target } => sigma - (p[0] - p[1]).norm() / target,
        }
    }

    pub fn gradient(&self, p: &[Vec3; 4]) -> [Vec3; 4] {
        match *self {
            Stencil::Volume { ref_det } => tet_det_gradient(p).map(|g| g / ref_det),
            Stencil::PointGap { weights, delta, fallback } => {
                let s = gap_vector(&weights, p);
                let d = s.norm();
                let n = if d > crate::geometry::DEGENERATE_DISTANCE { s / d } else { fallback };
                weights.map(|w| n * (w / delta))
            }
            Stencil::EdgeLength { target, .. } => {
                let e = p[0] - p[1];
                let l = e.norm();
                if l <= 1e-15 {
                    return [Vec3::zeros(); 4];
                }
                let g = -e / (l * target);
                [g, -g, Vec3::zeros(), Vec3::zeros()]
            }
        }
    }
}

fn gap_vector(w: &[f64; 4], p: &[Vec3; 4]) -> Vec3 {
    p[0] * w[0] + p[1] * w[1] + p[2] * w[2] + p[3] * w[3]
}

/// One linearized inequality row `c + J (x - x_lin) >= 0`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub key: ConstraintKey,
    verts: [usize; 4],
    arity: usize,
    pub jacobian: [Vec3; 4],
    /// Value at the linearization point.
    pub value: f64,
    /// Diagonal of `J M^-1 J^T`.
    pub diag: f64,
    pub lambda: f64,
    pub color: u32,
    pub stencil: Stencil,
}

/// Lower clamp on the diagonal; guards rows whose vertices are all static.
pub const MIN_DIAG: f64 = 1e-10;

impl Constraint {
    /// Evaluates `stencil` and its gradient at `x`.
    pub fn linearize(kind: ConstraintKind, key: ConstraintKey, vertices: &[usize], stencil: Stencil, x: &[Vec3]) -> Self {
        assert!((1..=4).contains(&vertices.len()));
        let mut verts = [vertices[0]; 4];
        verts[..vertices.len()].copy_from_slice(vertices);
        let mut c = Constraint {
            kind,
            key,
            verts,
            arity: vertices.len(),
            jacobian: [Vec3::zeros(); 4],
            value: 0.0,
            diag: MIN_DIAG,
            lambda: 0.0,
            color: 0,
            stencil,
        };
        let p = c.gather(x);
        c.value = stencil.evaluate(&p);
        let g = stencil.gradient(&p);
        c.jacobian[..c.arity].copy_from_slice(&g[..c.arity]);
        c
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts[..self.arity]
    }

    fn gather(&self, x: &[Vec3]) -> [Vec3; 4] {
        let mut p = [Vec3::zeros(); 4];
        for k in 0..self.arity {
            p[k] = x[self.verts[k]];
        }
        p
    }

    /// Exact (nonlinear) value at `x`.
    pub fn evaluate(&self, x: &[Vec3]) -> f64 {
        self.stencil.evaluate(&self.gather(x))
    }

    /// Exact gradient at `x`, one block per vertex.
    pub fn gradient(&self, x: &[Vec3]) -> Vec<Vec3> {
        self.stencil.gradient(&self.gather(x))[..self.arity].to_vec()
    }

    /// `J v` for a per-vertex field `v`.
    pub fn row_dot(&self, v: &[Vec3]) -> f64 {
        (0..self.arity).map(|k| self.jacobian[k].dot(&v[self.verts[k]])).sum()
    }

    pub fn update_diag(&mut self, inv_mass: &[f64]) {
        let d: f64 = (0..self.arity).map(|k| inv_mass[self.verts[k]] * self.jacobian[k].norm_squared()).sum();
        self.diag = d.max(MIN_DIAG);
    }
}

/// Edge-length targets frozen from `y^{k+1}` for one resolve call.
#[derive(Clone, Debug, Default)]
pub struct EdgeTargets {
    pub entries: Vec<(usize, [usize; 2], f64)>,
    pub sigma: f64,
}

impl EdgeTargets {
    pub fn new(topology: &Topology, inv_mass: &[f64], y_target: &[Vec3], sigma: f64) -> Self {
        let mut entries = Vec::with_capacity(topology.edges.len());
        for (i, e) in topology.edges.iter().enumerate() {
            if inv_mass[e[0]] == 0.0 && inv_mass[e[1]] == 0.0 {
                continue;
            }
            let len = (y_target[e[0]] - y_target[e[1]]).norm();
            if len <= 1e-12 {
                log::warn!("skipping edge ({}, {}) with zero target length", e[0], e[1]);
                continue;
            }
            entries.push((i, *e, len));
        }
        EdgeTargets { entries, sigma }
    }
}

/// One edge-length constraint per edge, linearized at `x` with lengths relative to `y_target`.
pub fn build_edge_length_constraints(topology: &Topology, inv_mass: &[f64], x: &[Vec3], y_target: &[Vec3], sigma: f64) -> Vec<Constraint> {
    let targets = EdgeTargets::new(topology, inv_mass, y_target, sigma);
    edge_constraints(&targets, x)
}

fn edge_constraints(targets: &EdgeTargets, x: &[Vec3]) -> Vec<Constraint> {
    targets
        .entries
        .par_iter()
        .map(|&(i, e, target)| {
            Constraint::linearize(
                ConstraintKind::EdgeLength,
                ConstraintKey::Edge(i),
                &e,
                Stencil::EdgeLength { sigma: targets.sigma, target },
                x,
            )
        })
        .collect()
}

/// Inputs for assembling all constraints of one backward step.
pub struct Assembly<'a> {
    pub model: &'a dyn ContactModel,
    pub delta: f64,
    pub edges: Option<&'a EdgeTargets>,
    pub inv_mass: &'a [f64],
    pub warm_lambda: &'a HashMap<ConstraintKey, f64>,
    pub direction_hint: &'a HashMap<(Simplex, Simplex), Vec3>,
}

/// Builds contact rows for active pairs closer than `delta`, appends edge rows,
/// sorts by key and restores warm-start multipliers.
pub fn linearize_all<'p>(pairs: impl Iterator<Item = &'p ProximityPair>, x: &[Vec3], asm: &Assembly<'_>) -> Vec<Constraint> {
    let close: Vec<&ProximityPair> = pairs.filter(|p| p.active && p.closest.distance < asm.delta).collect();
    let mut out: Vec<Constraint> = close
        .par_iter()
        .filter_map(|p| {
            let hint = asm.direction_hint.get(&(p.a, p.b)).copied();
            asm.model.build(p, x, asm.delta, hint)
        })
        .collect();
    if let Some(edges) = asm.edges {
        out.extend(edge_constraints(edges, x));
    }
    let mut order: Vec<(ConstraintKey, usize)> = out.iter().enumerate().map(|(i, c)| (c.key, i)).collect();
    order.par_sort_unstable();
    let mut slots: Vec<Option<Constraint>> = out.into_iter().map(Some).collect();
    let mut out: Vec<Constraint> = order.iter().map(|&(_, i)| slots[i].take().expect("unique index")).collect();
    out.par_iter_mut().for_each(|c| {
        c.update_diag(asm.inv_mass);
        c.lambda = asm.warm_lambda.get(&c.key).copied().unwrap_or(0.0);
    });
    out
}
