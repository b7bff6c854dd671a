use std::time::Instant;

use twoway_core::normal_flow::{cotangent_smooth, vertex_normals, NormalFlow, NormalFlowConfig};
use twoway_core::testkit::certify_path;
use twoway_core::testkit::fixtures::{flow_dumbbell, flow_sphere};
use twoway_core::testkit::intersect::static_intersections;
use twoway_core::{MeshState, ResolveConfig, Topology, Vec3};

fn recorded() -> ResolveConfig {
    ResolveConfig { record_path: true, ..Default::default() }
}

fn mean_radius(x: &[Vec3]) -> f64 {
    let c = x.iter().sum::<Vec3>() / x.len() as f64;
    x.iter().map(|p| (p - c).norm()).sum::<f64>() / x.len() as f64
}

/// Runs `iters` iterations, asserting every resolve path is certified, then that each iteration took under 1 s.
fn run_certified(mesh: MeshState, beta: f64, iters: usize) -> NormalFlow {
    let cfg = NormalFlowConfig { beta, alpha: 0.5, iterations: iters };
    let mut flow = NormalFlow::new(mesh, cfg, recorded()).unwrap();
    let mut seconds = Vec::new();
    for it in 0..iters {
        let start = Instant::now();
        let st = flow.iterate().unwrap();
        seconds.push(start.elapsed().as_secs_f64());
        let rep = certify_path(&flow.mesh.topology, &st.path);
        assert!(rep.is_clean(), "iteration {it}: {:?}", rep.examples);
        assert!(st.steps <= flow.resolve.step_limit);
    }
    let slow: Vec<(usize, f64)> = seconds.iter().copied().enumerate().filter(|&(_, s)| s >= 1.0).collect();
    assert!(slow.is_empty(), "iterations over 1 s: {slow:?}");
    flow
}

#[test]
fn sphere_normals_are_radial() {
    let m = flow_sphere();
    let c = m.positions.iter().sum::<Vec3>() / m.len() as f64;
    for (p, n) in m.positions.iter().zip(vertex_normals(&m.topology, &m.positions)) {
        assert!((p - c).normalize().dot(&n) > 0.999);
    }
}

#[test]
fn sphere_offset_shrinks_radius_by_beta() {
    let m = flow_sphere();
    let beta = -0.0005;
    let r0 = mean_radius(&m.positions);
    let flow = NormalFlow::new(m, NormalFlowConfig { beta, alpha: 0.5, iterations: 1 }, ResolveConfig::default()).unwrap();
    let r1 = mean_radius(&flow.offset_target());
    assert!(((r0 - r1) - beta.abs()).abs() < 0.01 * beta.abs(), "shrink {} vs {}", r0 - r1, beta.abs());
}

#[test]
fn sphere_iteration_shrinks_at_least_by_beta() {
    let beta = -0.0005;
    let m = flow_sphere();
    let r0 = mean_radius(&m.positions);
    let flow = run_certified(m, beta, 1);
    let shrink = r0 - mean_radius(&flow.mesh.positions);
    // smoothing shrinks a convex surface further
    assert!(shrink >= 0.99 * beta.abs() && shrink < 0.05 * r0, "shrink {shrink}");
}

#[test]
fn smoothing_is_a_fixed_point_on_flat_grids() {
    // boundary vertices move on the first pass, one ring further in per pass
    let n = 9;
    let x: Vec<Vec3> = (0..n * n).map(|k| Vec3::new((k % n) as f64, (k / n) as f64, 0.0)).collect();
    let mut tris = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let a = j * n + i;
            tris.push([a, a + 1, a + n + 1]);
            tris.push([a, a + n + 1, a + n]);
        }
    }
    let topo = Topology::new(n * n, tris, vec![]).unwrap();
    let s = cotangent_smooth(&topo, &x, 0.5, 3);
    for v in (3..6).flat_map(|j| (3..6).map(move |i| j * n + i)) {
        assert!((s[v] - x[v]).norm() < 1e-12, "vertex {v} moved to {}", s[v]);
    }
}

#[test]
fn dumbbell_negative_flow_stays_injective() {
    let flow = run_certified(flow_dumbbell(), -0.0005, 20);
    assert!(static_intersections(&flow.mesh.topology, &flow.mesh.positions).is_empty());
}

#[test]
fn sphere_positive_flow_stays_injective() {
    let flow = run_certified(flow_sphere(), 0.0005, 5);
    assert!(static_intersections(&flow.mesh.topology, &flow.mesh.positions).is_empty());
}

#[test]
fn zero_beta_smoothing_only_stays_clean() {
    let flow = run_certified(flow_dumbbell(), 0.0, 5);
    assert!(static_intersections(&flow.mesh.topology, &flow.mesh.positions).is_empty());
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(NormalFlow::new(flow_sphere(), NormalFlowConfig { beta: f64::NAN, ..Default::default() }, ResolveConfig::default()).is_err());
    assert!(NormalFlow::new(flow_sphere(), NormalFlowConfig { alpha: 2.0, ..Default::default() }, ResolveConfig::default()).is_err());
}
