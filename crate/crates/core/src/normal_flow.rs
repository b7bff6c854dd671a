//! Injective normal flow: offset along vertex normals, smooth, then resolve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MeshState, Topology, Vec3};
use crate::twoway::{resolve_from, ResolveConfig, ResolveStats};

pub const SMOOTHING_PASSES: usize = 3;
const MIN_COT_WEIGHT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFlowConfig {
    /// Offset per iteration (m); negative flows inward.
    pub beta: f64,
    /// Smoothing intensity per pass.
    pub alpha: f64,
    pub iterations: usize,
}

impl Default for NormalFlowConfig {
    fn default() -> Self {
        NormalFlowConfig { beta: 0.0005, alpha: 0.5, iterations: 1 }
    }
}

/// Area-weighted unit vertex normals.
pub fn vertex_normals(topology: &Topology, x: &[Vec3]) -> Vec<Vec3> {
    let mut n = vec![Vec3::zeros(); x.len()];
    for t in &topology.triangles {
        let fn_ = (x[t[1]] - x[t[0]]).cross(&(x[t[2]] - x[t[0]]));
        for &v in t {
            n[v] += fn_;
        }
    }
    for v in &mut n {
        let l = v.norm();
        if l > 0.0 {
            *v /= l;
        }
    }
    n
}

fn cot(a: Vec3, b: Vec3) -> f64 {
    let s = a.cross(&b).norm();
    if s < 1e-300 {
        0.0
    } else {
        a.dot(&b) / s
    }
}

/// Edge weights `(cot a + cot b) / 2`, clamped from below.
pub fn cotangent_weights(topology: &Topology, x: &[Vec3]) -> Vec<f64> {
    let mut w = vec![0.0; topology.edges.len()];
    for t in &topology.triangles {
        for k in 0..3 {
            let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let e = topology.edge_index(i, j).expect("triangle edge");
            w[e] += 0.5 * cot(x[i] - x[o], x[j] - x[o]);
        }
    }
    w.iter().map(|c| c.max(MIN_COT_WEIGHT)).collect()
}

/// Jacobi passes of `y_i += alpha * sum_j w_ij (y_j - y_i) / sum_j w_ij`.
pub fn cotangent_smooth(topology: &Topology, y: &[Vec3], alpha: f64, passes: usize) -> Vec<Vec3> {
    let mut cur = y.to_vec();
    for _ in 0..passes {
        let w = cotangent_weights(topology, &cur);
        let mut num = vec![Vec3::zeros(); cur.len()];
        let mut den = vec![0.0; cur.len()];
        for (e, &[i, j]) in topology.edges.iter().enumerate() {
            num[i] += (cur[j] - cur[i]) * w[e];
            num[j] += (cur[i] - cur[j]) * w[e];
            den[i] += w[e];
            den[j] += w[e];
        }
        cur = cur.iter().enumerate().map(|(i, p)| if den[i] > 0.0 { p + num[i] * (alpha / den[i]) } else { *p }).collect();
    }
    cur
}

/// Runs the flow on a closed manifold mesh.
pub struct NormalFlow {
    pub mesh: MeshState,
    pub config: NormalFlowConfig,
    pub resolve: ResolveConfig,
}

impl NormalFlow {
    pub fn new(mesh: MeshState, config: NormalFlowConfig, resolve: ResolveConfig) -> Result<Self> {
        mesh.topology.check_closed_manifold()?;
        if !config.beta.is_finite() || !(config.alpha >= 0.0 && config.alpha <= 1.0) {
            return Err(Error::Config("beta must be finite and alpha within [0, 1]".into()));
        }
        resolve.validate()?;
        Ok(NormalFlow { mesh, config, resolve })
    }

    /// Unsmoothed offset target.
    pub fn offset_target(&self) -> Vec<Vec3> {
        let n = vertex_normals(&self.mesh.topology, &self.mesh.positions);
        self.mesh.positions.iter().zip(&n).map(|(p, nv)| p + nv * self.config.beta).collect()
    }

    /// Smoothed target for the next iteration.
    pub fn target(&self) -> Vec<Vec3> {
        cotangent_smooth(&self.mesh.topology, &self.offset_target(), self.config.alpha, SMOOTHING_PASSES)
    }

    /// One iteration; the mesh moves to the resolved state.
    pub fn iterate(&mut self) -> Result<ResolveStats> {
        let y = self.target();
        let (x, stats) = resolve_from(&self.mesh.topology, &self.mesh.inv_mass, &self.mesh.positions, &y, &self.resolve)?;
        self.mesh.positions = x;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> MeshState {
        let x = vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let topo = Topology::new(4, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]], vec![]).unwrap();
        MeshState::new(x, topo, vec![1.0; 4]).unwrap()
    }

    #[test]
    fn normals_point_outward() {
        let m = tetra();
        for (p, n) in m.positions.iter().zip(vertex_normals(&m.topology, &m.positions)) {
            assert!(p.dot(&n) > 0.0);
        }
    }

    #[test]
    fn regular_tetra_is_smoothing_fixed_point_up_to_scale() {
        let m = tetra();
        let s = cotangent_smooth(&m.topology, &m.positions, 0.5, 3);
        for (a, b) in m.positions.iter().zip(&s) {
            assert!(a.normalize().dot(&b.normalize()) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn open_mesh_rejected() {
        let topo = Topology::new(3, vec![[0, 1, 2]], vec![]).unwrap();
        let m = MeshState::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], topo, vec![1.0; 3]).unwrap();
        assert!(NormalFlow::new(m, NormalFlowConfig::default(), ResolveConfig::default()).is_err());
    }
}
