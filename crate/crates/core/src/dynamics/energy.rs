//! Implicit-Euler incremental potential: inertia, springs, quadratic bending,
//! gravity and contact repulsion.

use nalgebra::SymmetricEigen;

use super::sparse::{BlockSparse, Mat3, TripletBuilder};
use super::EnergyModel;
use crate::geometry::{Topology, Vec3};
use crate::proximity::ProximityPair;

/// Clamps the eigenvalues of a symmetric 3x3 block at zero.
pub fn project_psd(m: Mat3) -> Mat3 {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    eig.eigenvectors * Mat3::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

/// Four-vertex hinge `[e0, e1, o0, o1]` with its constant Laplacian weights.
#[derive(Clone, Debug)]
pub struct BendingStencil {
    pub verts: [usize; 4],
    pub q: [[f64; 4]; 4],
}

fn cot(a: Vec3, b: Vec3) -> f64 {
    let s = a.cross(&b).norm();
    if s < 1e-14 {
        0.0
    } else {
        a.dot(&b) / s
    }
}

impl BendingStencil {
    fn new(verts: [usize; 4], rest: &[Vec3]) -> Option<Self> {
        let [x0, x1, x2, x3] = verts.map(|v| rest[v]);
        let (e0, e1, e2, e3, e4) = (x1 - x0, x2 - x0, x3 - x0, x2 - x1, x3 - x1);
        let c01 = cot(e0, e1);
        let c02 = cot(e0, e2);
        let c03 = cot(-e0, e3);
        let c04 = cot(-e0, e4);
        let k = [c03 + c04, c01 + c02, -c01 - c03, -c02 - c04];
        let area = 0.5 * (e0.cross(&e1).norm() + e0.cross(&e2).norm());
        if area < 1e-14 {
            return None;
        }
        let s = 3.0 / area;
        let mut q = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                q[i][j] = s * k[i] * k[j];
            }
        }
        Some(BendingStencil { verts, q })
    }
}

/// Rest-state data of the elastic terms.
#[derive(Clone, Debug, Default)]
pub struct Elastic {
    pub rest_lengths: Vec<f64>,
    pub bending: Vec<BendingStencil>,
}

impl Elastic {
    pub fn new(topology: &Topology, rest: &[Vec3]) -> Self {
        let rest_lengths = topology.edges.iter().map(|e| (rest[e[0]] - rest[e[1]]).norm()).collect();
        let mut bending = Vec::new();
        for (ei, tris) in topology.edge_triangles.iter().enumerate() {
            if tris.len() != 2 {
                continue;
            }
            let [a, b] = topology.edges[ei];
            let opp = |t: usize| topology.triangles[t].iter().copied().find(|&v| v != a && v != b);
            if let (Some(o0), Some(o1)) = (opp(tris[0]), opp(tris[1])) {
                bending.extend(BendingStencil::new([a, b, o0, o1], rest));
            }
        }
        Elastic { rest_lengths, bending }
    }
}

/// Everything the potential depends on besides `x`.
pub struct Potential<'a> {
    pub model: &'a EnergyModel,
    pub topology: &'a Topology,
    pub inv_mass: &'a [f64],
    pub elastic: &'a Elastic,
    /// Inertial target `x^t + dt v^t`.
    pub x_tilde: &'a [Vec3],
    /// Pairs closer than the activation distance, weights frozen.
    pub contacts: &'a [ProximityPair],
}

/// Signed vertex weights of a pair: the first simplex positive.
pub fn pair_weights(p: &ProximityPair) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(6);
    for (k, &v) in p.a.indices().iter().enumerate() {
        out.push((v, p.closest.weights_a[k]));
    }
    for (k, &v) in p.b.indices().iter().enumerate() {
        out.push((v, -p.closest.weights_b[k]));
    }
    out
}

fn pair_gap(p: &ProximityPair, x: &[Vec3]) -> (Vec<(usize, f64)>, Vec3, f64) {
    let w = pair_weights(p);
    let v: Vec3 = w.iter().map(|&(i, c)| x[i] * c).sum();
    let d = v.norm();
    let n = if d > 1e-12 { v / d } else { p.closest.direction };
    (w, n, d)
}

impl Potential<'_> {
    fn mass(&self, v: usize) -> f64 {
        if self.inv_mass[v] > 0.0 {
            1.0 / self.inv_mass[v]
        } else {
            0.0
        }
    }

    fn free(&self, v: usize) -> bool {
        self.inv_mass[v] > 0.0
    }

    pub fn energy(&self, x: &[Vec3]) -> f64 {
        let m = self.model;
        let h2 = m.dt * m.dt;
        let g = m.gravity_vec();
        let mut e = 0.0;
        for v in 0..x.len() {
            if self.free(v) {
                let mv = self.mass(v);
                e += 0.5 * mv / h2 * (x[v] - self.x_tilde[v]).norm_squared() - mv * g.dot(&x[v]);
            }
        }
        for (ei, ed) in self.topology.edges.iter().enumerate() {
            let l = (x[ed[0]] - x[ed[1]]).norm();
            e += 0.5 * m.spring_stiffness * (l - self.elastic.rest_lengths[ei]).powi(2);
        }
        if m.bending_stiffness > 0.0 {
            for b in &self.elastic.bending {
                for i in 0..4 {
                    for j in 0..4 {
                        e += 0.5 * m.bending_stiffness * b.q[i][j] * x[b.verts[i]].dot(&x[b.verts[j]]);
                    }
                }
            }
        }
        for p in self.contacts {
            let (_, _, d) = pair_gap(p, x);
            if d < m.delta {
                e += 0.5 * m.repulsion_stiffness * (m.delta - d).powi(2);
            }
        }
        e
    }

    /// Gradient and PSD-projected Hessian at `x`; rows of static vertices are zero.
    pub fn gradient_and_hessian(&self, x: &[Vec3]) -> (Vec<Vec3>, BlockSparse) {
        let n = x.len();
        let m = self.model;
        let h2 = m.dt * m.dt;
        let g = m.gravity_vec();
        let mut grad = vec![Vec3::zeros(); n];
        let mut hess = TripletBuilder::new(n);
        for v in 0..n {
            if self.free(v) {
                let mv = self.mass(v);
                grad[v] += (x[v] - self.x_tilde[v]) * (mv / h2) - g * mv;
                hess.add(v, v, Mat3::identity() * (mv / h2));
            }
        }
        if m.spring_stiffness > 0.0 {
            for (ei, ed) in self.topology.edges.iter().enumerate() {
                let [i, j] = *ed;
                if !self.free(i) && !self.free(j) {
                    continue;
                }
                let e = x[i] - x[j];
                let l = e.norm();
                if l < 1e-14 {
                    continue;
                }
                let u = e / l;
                let rest = self.elastic.rest_lengths[ei];
                let k = m.spring_stiffness;
                let f = u * (k * (l - rest));
                grad[i] += f;
                grad[j] -= f;
                let uu = u * u.transpose();
                let block = (uu + (Mat3::identity() - uu) * (1.0 - rest / l)) * k;
                hess.add_pair(i, j, 1.0, -1.0, project_psd(block));
            }
        }
        if m.bending_stiffness > 0.0 {
            let kb = m.bending_stiffness;
            for b in &self.elastic.bending {
                for i in 0..4 {
                    for j in 0..4 {
                        let c = kb * b.q[i][j];
                        grad[b.verts[i]] += x[b.verts[j]] * c;
                        hess.add(b.verts[i], b.verts[j], Mat3::identity() * c);
                    }
                }
            }
        }
        add_repulsion(m, self.contacts, x, &mut grad, &mut hess);
        for v in 0..n {
            if !self.free(v) {
                grad[v] = Vec3::zeros();
            }
        }
        (grad, hess.build())
    }
}

/// Adds `k_rep (delta - d)^2 / 2` for every pair closer than `delta`, with a
/// Gauss-Newton Hessian.
pub fn add_repulsion(model: &EnergyModel, pairs: &[ProximityPair], x: &[Vec3], grad: &mut [Vec3], hess: &mut TripletBuilder) {
    let k = model.repulsion_stiffness;
    if k <= 0.0 {
        return;
    }
    for p in pairs {
        let (w, n, d) = pair_gap(p, x);
        if d >= model.delta {
            continue;
        }
        let f = n * (k * (model.delta - d));
        let nn = n * n.transpose() * k;
        for &(a, ca) in &w {
            if ca == 0.0 {
                continue;
            }
            grad[a] -= f * ca;
            for &(b, cb) in &w {
                if cb != 0.0 {
                    hess.add(a, b, nn * (ca * cb));
                }
            }
        }
    }
}
