//! Mesh representation, lumped masses and closest-distance primitives.

mod closest;
pub mod obj;

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use closest::{
    edge_edge_closest, point_segment_closest, simplex_pair_closest, vertex_triangle_closest,
    ClosestResult, DEGENERATE_DISTANCE,
};

pub type Vec3 = nalgebra::Vector3<f64>;

/// A vertex, edge or triangle referenced by vertex ids.
///
/// Edges are stored with sorted ids so that equal edges compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Simplex {
    Vertex(usize),
    Edge([usize; 2]),
    Triangle([usize; 3]),
}

impl Simplex {
    pub fn edge(a: usize, b: usize) -> Self {
        Simplex::Edge(if a < b { [a, b] } else { [b, a] })
    }

    pub fn indices(&self) -> &[usize] {
        match self {
            Simplex::Vertex(v) => std::slice::from_ref(v),
            Simplex::Edge(e) => e,
            Simplex::Triangle(t) => t,
        }
    }

    pub fn rank(&self) -> u8 {
        match self {
            Simplex::Vertex(_) => 0,
            Simplex::Edge(_) => 1,
            Simplex::Triangle(_) => 2,
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.indices().contains(&v)
    }

    pub fn shares_vertex(&self, other: &Simplex) -> bool {
        self.indices().iter().any(|&v| other.contains(v))
    }

    /// True when an index repeats.
    pub fn is_degenerate(&self) -> bool {
        let ix = self.indices();
        (0..ix.len()).any(|i| (i + 1..ix.len()).any(|j| ix[i] == ix[j]))
    }
}

/// Connectivity of a mesh made of triangles, strand segments and free particles.
#[derive(Clone, Debug, Default)]
pub struct Topology {
    pub n_vertices: usize,
    pub triangles: Vec<[usize; 3]>,
    /// Segments not bounding any triangle (hair, rope).
    pub strands: Vec<[usize; 2]>,
    /// All unique edges, sorted ids, triangle edges first.
    pub edges: Vec<[usize; 2]>,
    pub edge_triangles: Vec<Vec<usize>>,
    pub vertex_triangles: Vec<Vec<usize>>,
    pub vertex_edges: Vec<Vec<usize>>,
    edge_lookup: HashMap<[usize; 2], usize>,
}

impl Topology {
    pub fn new(n_vertices: usize, triangles: Vec<[usize; 3]>, strands: Vec<[usize; 2]>) -> Result<Self> {
        for t in &triangles {
            for &v in t {
                if v >= n_vertices {
                    return Err(Error::IndexOutOfRange { index: v, len: n_vertices });
                }
            }
            if Simplex::Triangle(*t).is_degenerate() {
                return Err(Error::Degenerate);
            }
        }
        for s in &strands {
            for &v in s {
                if v >= n_vertices {
                    return Err(Error::IndexOutOfRange { index: v, len: n_vertices });
                }
            }
            if s[0] == s[1] {
                return Err(Error::Degenerate);
            }
        }
        let mut topo = Topology {
            n_vertices,
            vertex_triangles: vec![Vec::new(); n_vertices],
            vertex_edges: vec![Vec::new(); n_vertices],
            ..Default::default()
        };
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let e = sorted(t[k], t[(k + 1) % 3]);
                let ei = topo.intern_edge(e);
                topo.edge_triangles[ei].push(ti);
                topo.vertex_triangles[t[k]].push(ti);
            }
        }
        let mut kept = Vec::new();
        for s in &strands {
            let e = sorted(s[0], s[1]);
            if !topo.edge_lookup.contains_key(&e) {
                topo.intern_edge(e);
                kept.push(e);
            }
        }
        for (ei, e) in topo.edges.iter().enumerate() {
            topo.vertex_edges[e[0]].push(ei);
            topo.vertex_edges[e[1]].push(ei);
        }
        topo.triangles = triangles;
        topo.strands = kept;
        Ok(topo)
    }

    fn intern_edge(&mut self, e: [usize; 2]) -> usize {
        if let Some(&i) = self.edge_lookup.get(&e) {
            return i;
        }
        let i = self.edges.len();
        self.edges.push(e);
        self.edge_triangles.push(Vec::new());
        self.edge_lookup.insert(e, i);
        i
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&sorted(a, b)).copied()
    }

    /// Vertex with no incident edge or triangle (a particle).
    pub fn is_isolated(&self, v: usize) -> bool {
        self.vertex_edges[v].is_empty()
    }

    pub fn is_strand_edge(&self, e: usize) -> bool {
        self.edge_triangles[e].is_empty()
    }

    /// Checks that every edge bounds exactly two triangles and no strands exist.
    pub fn check_closed_manifold(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::NonManifold("no triangles".into()));
        }
        for (ei, tris) in self.edge_triangles.iter().enumerate() {
            if tris.len() != 2 {
                let e = self.edges[ei];
                return Err(Error::NonManifold(format!(
                    "edge ({}, {}) has {} incident triangles",
                    e[0] + 1,
                    e[1] + 1,
                    tris.len()
                )));
            }
        }
        Ok(())
    }

    pub fn mean_edge_length(&self, positions: &[Vec3]) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.edges.iter().map(|e| (positions[e[0]] - positions[e[1]]).norm()).sum();
        sum / self.edges.len() as f64
    }
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Positions, velocities and inverse masses over a shared topology.
#[derive(Clone, Debug)]
pub struct MeshState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// Zero marks a static (infinite mass) vertex.
    pub inv_mass: Vec<f64>,
    pub topology: Arc<Topology>,
}

impl MeshState {
    pub fn new(positions: Vec<Vec3>, topology: Topology, inv_mass: Vec<f64>) -> Result<Self> {
        let n = positions.len();
        if topology.n_vertices != n {
            return Err(Error::ShapeMismatch(format!(
                "topology has {} vertices, positions {}",
                topology.n_vertices, n
            )));
        }
        if inv_mass.len() != n {
            return Err(Error::ShapeMismatch(format!("inv_mass has {} entries, positions {}", inv_mass.len(), n)));
        }
        if inv_mass.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite("inverse mass"));
        }
        check_finite(&positions, "positions")?;
        Ok(MeshState { velocities: vec![Vec3::zeros(); n], positions, inv_mass, topology: Arc::new(topology) })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_static(&self, v: usize) -> bool {
        self.inv_mass[v] == 0.0
    }
}

pub fn check_finite(xs: &[Vec3], what: &'static str) -> Result<()> {
    if xs.iter().all(|p| p.iter().all(|c| c.is_finite())) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Lumped vertex masses: a third of each triangle's mass, half of each strand
/// segment's mass, and `particle_mass` for isolated vertices.
pub fn lumped_masses(
    topology: &Topology,
    positions: &[Vec3],
    areal_density: f64,
    linear_density: f64,
    particle_mass: f64,
) -> Vec<f64> {
    let mut m = vec![0.0; topology.n_vertices];
    for t in &topology.triangles {
        let area = triangle_area(positions[t[0]], positions[t[1]], positions[t[2]]);
        for &v in t {
            m[v] += areal_density * area / 3.0;
        }
    }
    for s in &topology.strands {
        let len = (positions[s[0]] - positions[s[1]]).norm();
        for &v in s {
            m[v] += linear_density * len / 2.0;
        }
    }
    for (v, mv) in m.iter_mut().enumerate() {
        if topology.is_isolated(v) {
            *mv = particle_mass;
        }
    }
    m
}

pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Incrementally assembles several objects into one [`MeshState`].
#[derive(Default)]
pub struct MeshBuilder {
    positions: Vec<Vec3>,
    velocities: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    strands: Vec<[usize; 2]>,
    masses: Vec<f64>,
    statics: Vec<bool>,
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an object and returns the id of its first vertex.
    ///
    /// `density` is areal for triangles, linear for strands and the particle
    /// mass for isolated vertices.
    pub fn add(
        &mut self,
        positions: &[Vec3],
        triangles: &[[usize; 3]],
        strands: &[[usize; 2]],
        density: f64,
        is_static: bool,
    ) -> Result<usize> {
        let base = self.positions.len();
        let local = Topology::new(positions.len(), triangles.to_vec(), strands.to_vec())?;
        let m = lumped_masses(&local, positions, density, density, density);
        self.positions.extend_from_slice(positions);
        self.velocities.extend(std::iter::repeat_n(Vec3::zeros(), positions.len()));
        self.triangles.extend(triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        self.strands.extend(strands.iter().map(|s| [s[0] + base, s[1] + base]));
        self.masses.extend(m);
        self.statics.extend(std::iter::repeat_n(is_static, positions.len()));
        Ok(base)
    }

    pub fn set_velocity(&mut self, range: std::ops::Range<usize>, v: Vec3) {
        for i in range {
            self.velocities[i] = v;
        }
    }

    pub fn build(self) -> Result<MeshState> {
        let topo = Topology::new(self.positions.len(), self.triangles, self.strands)?;
        let inv_mass = self
            .masses
            .iter()
            .zip(&self.statics)
            .map(|(&m, &s)| if s || m <= 0.0 { 0.0 } else { 1.0 / m })
            .collect();
        let mut mesh = MeshState::new(self.positions, topo, inv_mass)?;
        mesh.velocities = self.velocities;
        Ok(mesh)
    }
}
