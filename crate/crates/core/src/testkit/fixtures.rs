//! Seeded desk-scale shapes and scenes, each with the properties it is expected to show.

use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::certify_path;
use super::intersect::static_intersections;
use crate::dynamics::EnergyModel;
use crate::geometry::{MeshBuilder, MeshState, Vec3};
use crate::twoway::ResolveConfig;

/// Triangle soup with an outward orientation where that makes sense.
#[derive(Clone, Debug, Default)]
pub struct Shape {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl Shape {
    pub fn transformed(mut self, rot: &Rotation3<f64>, offset: Vec3) -> Self {
        for p in &mut self.positions {
            *p = rot * *p + offset;
        }
        self
    }

    pub fn translated(self, offset: Vec3) -> Self {
        self.transformed(&Rotation3::identity(), offset)
    }
}

/// `nx` by `ny` vertices spanning `width` by `height` in the xy-plane, centred at the origin.
pub fn grid_patch(nx: usize, ny: usize, width: f64, height: f64) -> Shape {
    assert!(nx >= 2 && ny >= 2);
    let mut positions = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let u = i as f64 / (nx - 1) as f64 - 0.5;
            let v = j as f64 / (ny - 1) as f64 - 0.5;
            positions.push(Vec3::new(u * width, v * height, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut triangles = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    Shape { positions, triangles }
}

/// Subdivided icosahedron projected onto a sphere.
pub fn icosphere(subdivisions: usize, radius: f64) -> Shape {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut positions: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: usize, b: usize, pos: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                pos.push(((pos[a] + pos[b]) * 0.5).normalize());
                pos.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = midpoint(a, b, &mut positions);
            let bc = midpoint(b, c, &mut positions);
            let ca = midpoint(c, a, &mut positions);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    for p in &mut positions {
        *p *= radius;
    }
    Shape { positions, triangles }
}

/// Open pentagonal pyramid, apex at the origin pointing up.
pub fn spike_pyramid(height: f64, base_radius: f64) -> Shape {
    let mut positions = vec![Vec3::zeros()];
    for k in 0..5 {
        let a = k as f64 * std::f64::consts::TAU / 5.0;
        positions.push(Vec3::new(base_radius * a.cos(), base_radius * a.sin(), -height));
    }
    let triangles = (0..5).map(|k| [0, 1 + k, 1 + (k + 1) % 5]).collect();
    Shape { positions, triangles }
}

/// Open tube whose radius falls linearly from `r_top` at `z = 0` to `r_bottom` at `z = -depth`.
pub fn funnel(r_top: f64, r_bottom: f64, depth: f64, rings: usize, segments: usize) -> Shape {
    let mut positions = Vec::new();
    for i in 0..rings {
        let s = i as f64 / (rings - 1) as f64;
        let r = r_top + (r_bottom - r_top) * s;
        for k in 0..segments {
            let a = k as f64 * std::f64::consts::TAU / segments as f64;
            positions.push(Vec3::new(r * a.cos(), r * a.sin(), -depth * s));
        }
    }
    let mut triangles = Vec::new();
    for i in 0..rings - 1 {
        for k in 0..segments {
            let a = i * segments + k;
            let b = i * segments + (k + 1) % segments;
            let c = a + segments;
            let d = b + segments;
            triangles.push([a, c, b]);
            triangles.push([b, c, d]);
        }
    }
    Shape { positions, triangles }
}

/// Radius profile of [`funnel`] rings, top to bottom.
pub fn ring_radii(shape: &Shape, segments: usize) -> Vec<f64> {
    shape.positions.chunks(segments).map(|ring| ring[0].xy().norm()).collect()
}

/// Closed surface of revolution about z: two balls joined by a thin neck.
pub fn dumbbell(ball_radius: f64, neck_radius: f64, separation: f64, rings: usize, segments: usize) -> Shape {
    let c = 0.5 * separation;
    let top = c + ball_radius;
    let profile = |z: f64| {
        let d = z.abs() - c;
        let ball = if d.abs() < ball_radius { (ball_radius * ball_radius - d * d).sqrt() } else { 0.0 };
        ball.max(if z.abs() <= c { neck_radius } else { 0.0 })
    };
    let mut positions = vec![Vec3::new(0.0, 0.0, top)];
    for i in 1..=rings {
        // cosine spacing resolves the poles
        let s = i as f64 / (rings + 1) as f64;
        let z = top * (std::f64::consts::PI * s).cos();
        let r = profile(z).max(0.05 * neck_radius);
        for k in 0..segments {
            let a = k as f64 * std::f64::consts::TAU / segments as f64;
            positions.push(Vec3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    positions.push(Vec3::new(0.0, 0.0, -top));
    let south = positions.len() - 1;
    let ring = |i: usize, k: usize| 1 + i * segments + k % segments;
    let mut triangles = Vec::new();
    for k in 0..segments {
        triangles.push([0, ring(0, k), ring(0, k + 1)]);
    }
    for i in 0..rings - 1 {
        for k in 0..segments {
            let (a, b, cc, d) = (ring(i, k), ring(i, k + 1), ring(i + 1, k), ring(i + 1, k + 1));
            triangles.push([a, cc, b]);
            triangles.push([b, cc, d]);
        }
    }
    for k in 0..segments {
        triangles.push([south, ring(rings - 1, k + 1), ring(rings - 1, k)]);
    }
    Shape { positions, triangles }
}

/// What a fixture is expected to show.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    /// The start state has no intersection.
    CleanStart,
    /// The straight path from start to target crosses.
    TargetPenetrates,
    /// Resolve converges to `r < 1e-4` in under 64 steps.
    Benign,
    /// Resolve stops at the step limit.
    HitsLimit,
}

/// A resolve problem: start state, target and config.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub mesh: MeshState,
    pub target: Vec<Vec3>,
    pub config: ResolveConfig,
    pub expect: Vec<Expect>,
}

impl Fixture {
    pub fn expects(&self, e: Expect) -> bool {
        self.expect.contains(&e)
    }

    /// Checks the geometric expectations that do not need a resolve.
    pub fn self_check(&self) -> std::result::Result<(), String> {
        let topo = &self.mesh.topology;
        if self.expects(Expect::CleanStart) {
            let hits = static_intersections(topo, &self.mesh.positions);
            if !hits.is_empty() {
                return Err(format!("{}: start has {} intersections", self.name, hits.len()));
            }
        }
        if self.expects(Expect::TargetPenetrates) {
            let rep = certify_path(topo, &[self.mesh.positions.clone(), self.target.clone()]);
            if rep.certain == 0 {
                return Err(format!("{}: straight path to the target is clean", self.name));
            }
        }
        Ok(())
    }

    /// Raw bytes of positions and target, for determinism checks.
    pub fn fingerprint(&self) -> Vec<u8> {
        self.mesh
            .positions
            .iter()
            .chain(&self.target)
            .flat_map(|p| p.iter().flat_map(|c| c.to_le_bytes()).collect::<Vec<_>>())
            .collect()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn jitter(rng: &mut ChaCha8Rng, amp: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp), rng.gen_range(-amp..amp))
}

fn z_rotation(angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vec3::z_axis(), angle)
}

const CLOTH_DENSITY: f64 = 0.2;

fn cloth(b: &mut MeshBuilder, s: &Shape) -> std::ops::Range<usize> {
    let base = b.add(&s.positions, &s.triangles, &[], CLOTH_DENSITY, false).expect("valid patch");
    base..base + s.positions.len()
}

fn collider(b: &mut MeshBuilder, s: &Shape) -> std::ops::Range<usize> {
    let base = b.add(&s.positions, &s.triangles, &[], 1.0, true).expect("valid collider");
    base..base + s.positions.len()
}

fn plate(size: f64, n: usize, z: f64) -> Shape {
    grid_patch(n, n, size, size).translated(Vec3::new(0.0, 0.0, z))
}

/// Two stacked cloth squares above a plate; the top square is pressed through both.
pub fn two_square_press(seed: u64) -> Fixture {
    let mut r = rng(seed);
    let mut b = MeshBuilder::new();
    collider(&mut b, &plate(0.08, 9, 0.0));
    let lower = cloth(&mut b, &grid_patch(9, 9, 0.04, 0.04).translated(Vec3::new(0.0, 0.0, 0.003)));
    let upper_shape = grid_patch(9, 9, 0.04, 0.04).transformed(&z_rotation(0.1), Vec3::new(0.002, 0.001, 0.006));
    let upper = cloth(&mut b, &upper_shape);
    let mesh = b.build().expect("press mesh");
    let mut target = mesh.positions.clone();
    for v in lower {
        target[v] += Vec3::new(0.0, 0.0, -0.0015) + jitter(&mut r, 2e-4);
    }
    for v in upper {
        target[v] += Vec3::new(0.0, 0.0, -0.0065) + jitter(&mut r, 2e-4);
    }
    Fixture {
        name: "two-square-press".into(),
        mesh,
        target,
        config: ResolveConfig::default(),
        expect: vec![Expect::CleanStart, Expect::TargetPenetrates, Expect::Benign],
    }
}

/// Dynamic variant of the press: both squares fall onto the plate, the top one faster.
pub fn press_scene() -> (MeshState, EnergyModel) {
    let mut b = MeshBuilder::new();
    collider(&mut b, &plate(0.08, 9, 0.0));
    let lower = cloth(&mut b, &grid_patch(9, 9, 0.04, 0.04).translated(Vec3::new(0.0, 0.0, 0.003)));
    let upper = cloth(&mut b, &grid_patch(9, 9, 0.04, 0.04).transformed(&z_rotation(0.1), Vec3::new(0.002, 0.001, 0.006)));
    b.set_velocity(lower, Vec3::new(0.0, 0.0, -0.05));
    b.set_velocity(upper, Vec3::new(0.0, 0.0, -0.3));
    (b.build().expect("press mesh"), EnergyModel { spring_stiffness: 50.0, ..Default::default() })
}

/// A patch above a static five-face spike, pushed down through it and twisted by `angle`.
pub fn spike(seed: u64, angle: f64) -> Fixture {
    let mut r = rng(seed);
    let mut b = MeshBuilder::new();
    collider(&mut b, &spike_pyramid(0.02, 0.01));
    let patch = grid_patch(9, 9, 0.04, 0.04).translated(Vec3::new(0.0007, 0.0004, 0.002));
    let ids = cloth(&mut b, &patch);
    let mesh = b.build().expect("spike mesh");
    let mut target = mesh.positions.clone();
    let rot = z_rotation(angle);
    for v in ids {
        target[v] = rot * mesh.positions[v] + Vec3::new(0.0, 0.0, -0.008) + jitter(&mut r, 1e-4);
    }
    Fixture {
        name: format!("spike-{:.0}deg", angle.to_degrees()),
        mesh,
        target,
        config: ResolveConfig::default(),
        expect: vec![Expect::CleanStart, Expect::TargetPenetrates, Expect::Benign],
    }
}

/// The spike patch lifted 15 mm, with a target that sinks 1 mm past the apex.
pub fn spike_approach(seed: u64) -> Fixture {
    let mut f = spike(seed, 0.5);
    for v in 0..f.mesh.len() {
        if !f.mesh.is_static(v) {
            f.mesh.positions[v].z += 0.015;
            f.target[v].z += 0.005;
        }
    }
    f.name = "spike-approach".into();
    f
}

/// A patch resting just above the spike apex whose target spins by `angle` and sinks.
pub fn spinning_patch(angle: f64) -> Fixture {
    let mut b = MeshBuilder::new();
    collider(&mut b, &spike_pyramid(0.02, 0.01));
    let patch = grid_patch(11, 11, 0.05, 0.05).translated(Vec3::new(0.0003, 0.0002, 0.0015));
    let ids = cloth(&mut b, &patch);
    let mesh = b.build().expect("spinning mesh");
    let mut target = mesh.positions.clone();
    let rot = z_rotation(angle);
    for v in ids {
        target[v] = rot * mesh.positions[v] + Vec3::new(0.0, 0.0, -0.004);
    }
    Fixture {
        name: format!("spinning-{:.0}deg", angle.to_degrees()),
        mesh,
        target,
        config: ResolveConfig::default(),
        expect: vec![Expect::CleanStart, Expect::TargetPenetrates],
    }
}

/// Per-frame targets spinning the [`spinning_patch`] start state about the
/// vertical axis by up to `max_angle` while sinking it by up to `sink`.
pub fn spinning_targets(mesh: &MeshState, max_angle: f64, sink: f64, frames: usize) -> Vec<Vec<Vec3>> {
    (1..=frames)
        .map(|k| {
            let s = k as f64 / frames as f64;
            let rot = z_rotation(max_angle * s);
            (0..mesh.len())
                .map(|v| {
                    let p = mesh.positions[v];
                    if mesh.is_static(v) {
                        p
                    } else {
                        rot * p - Vec3::new(0.0, 0.0, sink * s)
                    }
                })
                .collect()
        })
        .collect()
}

/// Cloth above a static sphere, for dropping under gravity.
pub fn cloth_on_sphere() -> (MeshState, EnergyModel) {
    let mut b = MeshBuilder::new();
    collider(&mut b, &icosphere(2, 0.03));
    cloth(&mut b, &grid_patch(13, 13, 0.1, 0.1).translated(Vec3::new(0.0, 0.0, 0.036)));
    (b.build().expect("sphere mesh"), EnergyModel { spring_stiffness: 100.0, ..Default::default() })
}

/// Cloth at height `gap` above a plate, see [`slide_target`].
pub fn sliding_cloth(gap: f64) -> MeshState {
    let mut b = MeshBuilder::new();
    collider(&mut b, &plate(0.2, 21, 0.0));
    cloth(&mut b, &grid_patch(9, 9, 0.04, 0.04).translated(Vec3::new(-0.03, 0.0, gap)));
    b.build().expect("sliding mesh")
}

/// Target moving the free vertices of `x` by `step` along x.
pub fn slide_target(mesh: &MeshState, x: &[Vec3], step: f64) -> Vec<Vec3> {
    (0..x.len()).map(|v| if mesh.is_static(v) { x[v] } else { x[v] + Vec3::new(step, 0.0, 0.0) }).collect()
}

pub const FUNNEL_SEGMENTS: usize = 16;

/// Funnel radii top to bottom: 3 cm to 1 cm over 4 cm.
pub fn funnel_shape() -> Shape {
    funnel(0.03, 0.01, 0.04, 6, FUNNEL_SEGMENTS)
}

/// A cloth patch falling into a static funnel.
pub fn funnel_scene(dt: f64) -> (MeshState, EnergyModel) {
    let mut b = MeshBuilder::new();
    collider(&mut b, &funnel_shape());
    cloth(&mut b, &grid_patch(9, 9, 0.036, 0.036).transformed(&z_rotation(0.3), Vec3::new(0.0, 0.0, 0.004)));
    let model = EnergyModel { dt, spring_stiffness: 50.0, ..Default::default() };
    (b.build().expect("funnel mesh"), model)
}

/// Two or three small patches stacked a few millimetres apart, optionally over
/// a plate; the target drops the top patch through the others.
pub fn random_patch_scene(seed: u64) -> Fixture {
    let mut r = rng(seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(1));
    loop {
        let mut b = MeshBuilder::new();
        let with_plate = r.gen_bool(0.5);
        if with_plate {
            collider(&mut b, &plate(0.06, 7, 0.0));
        }
        let n_patches = r.gen_range(2..=3);
        let mut z = if with_plate { r.gen_range(0.003..0.004) } else { 0.0 };
        let mut ranges = Vec::new();
        let mut gaps = Vec::new();
        for _ in 0..n_patches {
            let n = r.gen_range(5..=7);
            let size = r.gen_range(0.02..0.03);
            let tilt = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::new(r.gen(), r.gen(), 0.0)), r.gen_range(-0.04..0.04));
            let rot = tilt * z_rotation(r.gen_range(0.0..std::f64::consts::PI));
            let offset = Vec3::new(r.gen_range(-0.004..0.004), r.gen_range(-0.004..0.004), z);
            ranges.push(cloth(&mut b, &grid_patch(n, n, size, size).transformed(&rot, offset)));
            let gap = r.gen_range(0.003..0.0045);
            gaps.push(gap);
            z += gap;
        }
        let mesh = b.build().expect("random mesh");
        let mut target = mesh.positions.clone();
        let last = ranges.len() - 1;
        let drop = gaps[..last].iter().sum::<f64>() * r.gen_range(0.5..1.0) + r.gen_range(0.001..0.003);
        let spin = z_rotation(r.gen_range(-0.15..0.15));
        for (k, range) in ranges.iter().enumerate() {
            let centre = range.clone().map(|v| mesh.positions[v]).sum::<Vec3>() / range.len() as f64;
            let shift = if k == last {
                Vec3::new(r.gen_range(-0.002..0.002), r.gen_range(-0.002..0.002), -drop)
            } else {
                jitter(&mut r, 0.0015)
            };
            for v in range.clone() {
                target[v] = centre + spin * (mesh.positions[v] - centre) + shift + jitter(&mut r, 2e-4);
            }
        }
        let fx = Fixture {
            name: format!("random-{seed}"),
            mesh,
            target,
            config: ResolveConfig { seed, ..Default::default() },
            expect: vec![Expect::CleanStart, Expect::TargetPenetrates],
        };
        if fx.self_check().is_ok() {
            return fx;
        }
    }
}

/// Four stacked patches; the top one is driven far through all the others
/// and through the plate, with a short step limit.
pub fn stress_stack(seed: u64) -> Fixture {
    let mut r = rng(seed ^ 0x5EED);
    let mut b = MeshBuilder::new();
    collider(&mut b, &plate(0.06, 7, 0.0));
    let mut ranges = Vec::new();
    for k in 0..4 {
        let s = grid_patch(7, 7, 0.03, 0.03).transformed(&z_rotation(0.2 * k as f64), Vec3::new(0.0, 0.0, 0.003 * (k + 1) as f64));
        ranges.push(cloth(&mut b, &s));
    }
    let mesh = b.build().expect("stress mesh");
    let mut target = mesh.positions.clone();
    for v in ranges[3].clone() {
        target[v] += Vec3::new(0.0, 0.0, -0.02) + jitter(&mut r, 5e-4);
    }
    for range in &ranges[..3] {
        for v in range.clone() {
            target[v] += Vec3::new(0.0, 0.0, 0.004) + jitter(&mut r, 5e-4);
        }
    }
    Fixture {
        name: "stress-stack".into(),
        mesh,
        target,
        config: ResolveConfig { step_limit: 64, ..Default::default() },
        expect: vec![Expect::CleanStart, Expect::TargetPenetrates, Expect::HitsLimit],
    }
}

/// Every resolve fixture derived from `seed`: the named scenes plus `n_random` random ones.
pub fn scene_fixtures(seed: u64, n_random: usize) -> Vec<Fixture> {
    let mut out = vec![two_square_press(seed), spike(seed, 0.5), spinning_patch(135f64.to_radians()), stress_stack(seed)];
    out.extend((0..n_random as u64).map(|k| random_patch_scene(seed.wrapping_mul(1000).wrapping_add(k))));
    out
}

/// Closed meshes for the normal flow.
pub fn flow_sphere() -> MeshState {
    let s = icosphere(3, 0.05);
    let n = s.positions.len();
    let topo = crate::geometry::Topology::new(n, s.triangles, vec![]).expect("sphere");
    MeshState::new(s.positions, topo, vec![1.0; n]).expect("sphere state")
}

pub fn flow_dumbbell() -> MeshState {
    let s = dumbbell(0.03, 0.006, 0.07, 40, 24);
    let n = s.positions.len();
    let topo = crate::geometry::Topology::new(n, s.triangles, vec![]).expect("dumbbell");
    MeshState::new(s.positions, topo, vec![1.0; n]).expect("dumbbell state")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = grid_patch(3, 4, 1.0, 1.0);
        assert_eq!(g.positions.len(), 12);
        assert_eq!(g.triangles.len(), 12);
    }

    #[test]
    fn icosphere_is_closed() {
        let s = icosphere(2, 1.0);
        let topo = crate::geometry::Topology::new(s.positions.len(), s.triangles.clone(), vec![]).unwrap();
        topo.check_closed_manifold().unwrap();
        assert_eq!(s.triangles.len(), 320);
    }

    #[test]
    fn dumbbell_is_closed() {
        let m = flow_dumbbell();
        m.topology.check_closed_manifold().unwrap();
        assert!(static_intersections(&m.topology, &m.positions).is_empty());
    }

    #[test]
    fn funnel_radius_is_monotone() {
        let radii = ring_radii(&funnel_shape(), FUNNEL_SEGMENTS);
        assert!(radii.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn fixtures_are_deterministic() {
        let a = scene_fixtures(0, 3);
        let b = scene_fixtures(0, 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.fingerprint(), y.fingerprint());
        }
    }

    #[test]
    fn named_fixtures_pass_self_check() {
        for f in scene_fixtures(0, 0).into_iter().chain([spike_approach(0)]) {
            f.self_check().unwrap();
        }
    }
}
