//! Spatial-hash broad phase and the shrinking validity bound of the proximity set.

use rustc_hash::FxHashMap as HashMap;

use rayon::prelude::*;

use crate::geometry::{simplex_pair_closest, ClosestResult, MeshState, Simplex, Topology, Vec3};

/// A non-adjacent simplex pair with its cached closest points.
#[derive(Clone, Debug)]
pub struct ProximityPair {
    pub a: Simplex,
    pub b: Simplex,
    pub closest: ClosestResult,
    /// False once the cached distance reaches the current bound.
    pub active: bool,
}

impl ProximityPair {
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.a.indices().iter().chain(self.b.indices()).copied()
    }
}

/// Simplex indices registered in one grid cell.
#[derive(Default)]
struct Bucket {
    vertices: Vec<u32>,
    edges: Vec<u32>,
    triangles: Vec<u32>,
}

/// Uniform grid keyed by integer cell coordinates.
pub struct HashGrid {
    cell: f64,
    pad: f64,
    cells: HashMap<[i64; 3], Bucket>,
    vertex_boxes: Vec<Cell>,
    edge_boxes: Vec<Cell>,
    triangle_boxes: Vec<Cell>,
}

/// Axis-aligned box as `(lo, hi)` corners.
type Aabb = ([f64; 3], [f64; 3]);

/// A stored box with the cell holding its low corner.
#[derive(Clone, Copy)]
struct Cell {
    aabb: Aabb,
    lo: [i64; 3],
}

fn aabb(pts: &[Vec3], pad: f64) -> Aabb {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for k in 0..3 {
        lo[k] -= pad;
        hi[k] += pad;
    }
    (lo, hi)
}

fn overlap(a: &Aabb, b: &Aabb) -> bool {
    (0..3).all(|k| a.0[k] <= b.1[k] && b.0[k] <= a.1[k])
}

impl HashGrid {
    /// Registers every simplex in all cells touched by its AABB inflated by `d_max / 2`.
    pub fn build(topology: &Topology, positions: &[Vec3], d_max: f64) -> Self {
        let cell = d_max.max(topology.mean_edge_length(positions));
        let pad = 0.5 * d_max;
        let boxed = |b: Aabb| Cell { aabb: b, lo: [0, 1, 2].map(|k| (b.0[k] / cell).floor() as i64) };
        let vertex_boxes: Vec<Cell> = positions[..topology.n_vertices].iter().map(|p| boxed(aabb(&[*p], pad))).collect();
        let edge_boxes: Vec<Cell> =
            topology.edges.iter().map(|e| boxed(aabb(&[positions[e[0]], positions[e[1]]], pad))).collect();
        let triangle_boxes: Vec<Cell> = topology
            .triangles
            .iter()
            .map(|t| boxed(aabb(&[positions[t[0]], positions[t[1]], positions[t[2]]], pad)))
            .collect();
        let mut grid =
            HashGrid { cell, pad, cells: HashMap::default(), vertex_boxes, edge_boxes, triangle_boxes };
        for v in 0..grid.vertex_boxes.len() {
            grid.insert(grid.vertex_boxes[v], |b| b.vertices.push(v as u32));
        }
        for e in 0..grid.edge_boxes.len() {
            grid.insert(grid.edge_boxes[e], |b| b.edges.push(e as u32));
        }
        for t in 0..grid.triangle_boxes.len() {
            grid.insert(grid.triangle_boxes[t], |b| b.triangles.push(t as u32));
        }
        grid
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Inclusive cell index range covered by the points' AABB inflated by `pad`.
    pub fn cell_range(&self, pts: &[Vec3], pad: f64) -> ([i64; 3], [i64; 3]) {
        self.box_cells(&aabb(pts, pad))
    }

    fn cell_of(&self, p: &[f64; 3]) -> [i64; 3] {
        [0, 1, 2].map(|k| (p[k] / self.cell).floor() as i64)
    }

    fn box_cells(&self, b: &Aabb) -> ([i64; 3], [i64; 3]) {
        (self.cell_of(&b.0), self.cell_of(&b.1))
    }

    fn insert(&mut self, b: Cell, mut add: impl FnMut(&mut Bucket)) {
        let lo = b.lo;
        let hi = self.cell_of(&b.aabb.1);
        for ix in lo[0]..=hi[0] {
            for iy in lo[1]..=hi[1] {
                for iz in lo[2]..=hi[2] {
                    add(self.cells.entry([ix, iy, iz]).or_default());
                }
            }
        }
    }

    /// Number of cells holding at least one simplex.
    pub fn occupied_cells(&self) -> usize {
        self.cells.len()
    }

    /// Padding applied to every stored box.
    pub fn padding(&self) -> f64 {
        self.pad
    }

    /// Pairs whose padded boxes overlap, each reported once by the cell holding the overlap's low corner.
    ///
    /// Flooring is monotone, so that cell is the componentwise max of the two boxes' low-corner cells.
    fn candidates(&self, topology: &Topology, inv_mass: &[f64]) -> Vec<(Simplex, Simplex)> {
        let is_static = |s: &Simplex| s.indices().iter().all(|&v| inv_mass[v] == 0.0);
        let mut buckets: Vec<(&[i64; 3], &Bucket)> = self.cells.iter().collect();
        buckets.sort_unstable_by_key(|(k, _)| **k);
        buckets
            .par_iter()
            .flat_map_iter(|&(key, bucket)| {
                let mut out: Vec<(Simplex, Simplex)> = Vec::new();
                let idx = |l: &[u32]| l.iter().map(|&i| i as usize).collect::<Vec<_>>();
                let (vs, es, ts) = (idx(&bucket.vertices), idx(&bucket.edges), idx(&bucket.triangles));
                let owns = |a: &Cell, b: &Cell| {
                    overlap(&a.aabb, &b.aabb) && (0..3).all(|k| a.lo[k].max(b.lo[k]) == key[k])
                };
                let mut push = |a: Simplex, b: Simplex| {
                    if !a.shares_vertex(&b) && !(is_static(&a) && is_static(&b)) {
                        out.push((a, b));
                    }
                };
                for &v in &vs {
                    let bv = &self.vertex_boxes[v];
                    for &t in &ts {
                        if owns(bv, &self.triangle_boxes[t]) {
                            push(Simplex::Vertex(v), Simplex::Triangle(topology.triangles[t]));
                        }
                    }
                    if topology.is_isolated(v) {
                        for &e in &es {
                            if topology.is_strand_edge(e) && owns(bv, &self.edge_boxes[e]) {
                                push(Simplex::Vertex(v), Simplex::Edge(topology.edges[e]));
                            }
                        }
                        for &u in &vs {
                            if u > v && topology.is_isolated(u) && owns(bv, &self.vertex_boxes[u]) {
                                push(Simplex::Vertex(v), Simplex::Vertex(u));
                            }
                        }
                    }
                }
                for (k, &e) in es.iter().enumerate() {
                    for &f in &es[k + 1..] {
                        if owns(&self.edge_boxes[e], &self.edge_boxes[f]) {
                            let (a, b) = if e < f { (e, f) } else { (f, e) };
                            push(Simplex::Edge(topology.edges[a]), Simplex::Edge(topology.edges[b]));
                        }
                    }
                }
                out
            })
            .collect()
    }
}

/// Proximity pairs valid up to the current bound.
#[derive(Clone, Debug)]
pub struct ProximitySet {
    pairs: Vec<ProximityPair>,
    bound: f64,
    vertex_pairs: Vec<Vec<u32>>,
}

impl ProximitySet {
    /// A set certifying nothing; any use triggers a search first.
    pub fn empty(n_vertices: usize) -> Self {
        ProximitySet { pairs: Vec::new(), bound: 0.0, vertex_pairs: vec![Vec::new(); n_vertices] }
    }

    pub fn pairs(&self) -> &[ProximityPair] {
        &self.pairs
    }

    pub fn active_pairs(&self) -> impl Iterator<Item = &ProximityPair> {
        self.pairs.iter().filter(|p| p.active)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Applies `D <- D - 2 max_disp` and returns the new bound.
    pub fn shrink_bound(&mut self, max_disp: f64) -> f64 {
        debug_assert!(max_disp >= 0.0);
        self.bound -= 2.0 * max_disp;
        self.bound
    }

    pub fn needs_search(&self, d_min: f64) -> bool {
        self.bound < d_min
    }

    /// Recomputes cached distances at `positions` and flags pairs at or beyond the bound inactive.
    pub fn refresh_distances(&mut self, positions: &[Vec3]) {
        let bound = self.bound;
        self.pairs.par_iter_mut().for_each(|p| {
            if let Ok(c) = simplex_pair_closest(&p.a, &p.b, positions) {
                p.closest = c;
            }
            p.active = p.closest.distance < bound;
        });
    }

    /// `min(D, distances of pairs touching v)`.
    pub fn per_vertex_bound(&self, v: usize) -> f64 {
        self.vertex_pairs[v]
            .iter()
            .map(|&i| self.pairs[i as usize].closest.distance)
            .fold(self.bound, f64::min)
    }

    pub fn per_vertex_bounds(&self) -> Vec<f64> {
        (0..self.vertex_pairs.len()).into_par_iter().map(|v| self.per_vertex_bound(v)).collect()
    }

    pub fn pairs_of(&self, v: usize) -> impl Iterator<Item = &ProximityPair> {
        self.vertex_pairs[v].iter().map(move |&i| &self.pairs[i as usize])
    }
}

/// Fresh search at `positions` with bound `d_max`.
///
/// Pairs whose simplices are both fully static are skipped since they never move.
pub fn search_positions(topology: &Topology, inv_mass: &[f64], positions: &[Vec3], d_max: f64) -> ProximitySet {
    assert!(d_max > 0.0, "search bound must be positive");
    let n = topology.n_vertices;
    let grid = HashGrid::build(topology, positions, d_max);
    let cands = grid.candidates(topology, inv_mass);
    let pairs: Vec<ProximityPair> = cands
        .par_iter()
        .filter_map(|(a, b)| {
            let c = simplex_pair_closest(a, b, positions).ok()?;
            (c.distance < d_max).then_some(ProximityPair { a: *a, b: *b, closest: c, active: true })
        })
        .collect();
    let mut vertex_pairs = vec![Vec::new(); n];
    for (i, p) in pairs.iter().enumerate() {
        for v in p.vertices() {
            vertex_pairs[v].push(i as u32);
        }
    }
    ProximitySet { pairs, bound: d_max, vertex_pairs }
}

pub fn proximity_search(mesh: &MeshState, d_max: f64) -> ProximitySet {
    search_positions(&mesh.topology, &mesh.inv_mass, &mesh.positions, d_max)
}
