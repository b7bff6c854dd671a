//! The two-way resolve loop: alternate backward (LCP) and forward (advance) steps.

use rustc_hash::FxHashMap as HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backward::{LcpSystem, SolverRegistry, SolverSettings};
use crate::constraints::{color_constraints, linearize_all, Assembly, ConstraintKey, ContactModelRegistry, EdgeTargets};
use crate::error::{Error, Result};
use crate::forward::{advance, termination_reached, AdvanceState};
use crate::geometry::{check_finite, MeshState, Simplex, Topology, Vec3, DEGENERATE_DISTANCE};
use crate::proximity::{search_positions, ProximitySet};

/// Parameters of one resolve call, SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolveConfig {
    /// Step limit `L`.
    pub step_limit: usize,
    pub epsilon: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Contact activation distance.
    pub delta: f64,
    /// Edge stretch ratio limit.
    pub sigma: f64,
    pub gamma: f64,
    pub solver: String,
    pub sweeps: usize,
    pub under_relax: f64,
    pub contact_model: String,
    pub edge_constraints: bool,
    /// Search at every step instead of reusing the set.
    pub force_fresh_search: bool,
    pub record_path: bool,
    /// Look for intersections in the start state and flag them.
    pub check_start: bool,
    pub seed: u64,
}

impl Default for ResolveConfig {
    fn default() -> Self {
        ResolveConfig {
            step_limit: 512,
            epsilon: 1e-4,
            d_min: 0.002,
            d_max: 0.004,
            delta: 0.001,
            sigma: 1.1,
            gamma: 0.9,
            solver: "pgs".into(),
            sweeps: 1,
            under_relax: 0.5,
            contact_model: "volume".into(),
            edge_constraints: true,
            force_fresh_search: false,
            record_path: false,
            check_start: true,
            seed: 0,
        }
    }
}

impl ResolveConfig {
    /// 512 steps at 1/100 s or finer, 2048 at 1/20 s or coarser, linear in between.
    pub fn step_limit_for(dt: f64) -> usize {
        let (lo, hi) = (0.01, 0.05);
        if dt <= lo {
            512
        } else if dt >= hi {
            2048
        } else {
            (512.0 + (dt - lo) / (hi - lo) * 1536.0).round() as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.d_min > 0.0 && self.d_min <= self.d_max) {
            return bad("need 0 < d_min <= d_max");
        }
        if !(self.delta > 0.0 && self.delta <= self.d_min) {
            return bad("need 0 < delta <= d_min");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.step_limit < 1 {
            return bad("step limit must be at least 1");
        }
        if self.sweeps < 1 {
            return bad("sweeps must be at least 1");
        }
        if !(self.under_relax > 0.0 && self.under_relax <= 1.0) {
            return bad("under_relax must lie in (0, 1]");
        }
        if !(self.sigma >= 1.0) {
            return bad("sigma must be at least 1");
        }
        if SolverRegistry::default().get(&self.solver).is_none() {
            return Err(Error::Config(format!("unknown solver '{}'", self.solver)));
        }
        if ContactModelRegistry::default().get(&self.contact_model).is_none() {
            return Err(Error::Config(format!("unknown contact model '{}'", self.contact_model)));
        }
        Ok(())
    }
}

/// What happened during one resolve call.
#[derive(Clone, Debug, Default)]
pub struct ResolveStats {
    pub steps: usize,
    pub searches: usize,
    /// Final `max_i r_i`.
    pub residual: f64,
    pub converged: bool,
    /// Stopped at the step limit; the returned state is the last iterate.
    pub hit_limit: bool,
    /// Stopped because the remainder stopped changing.
    pub stagnated: bool,
    /// The start state already intersected.
    pub infeasible_start: bool,
    /// The backward solver returned non-finite targets at some step.
    pub solver_overflow: bool,
    pub max_disp_trace: Vec<f64>,
    /// Bound in force during each forward step.
    pub bound_trace: Vec<f64>,
    pub constraint_trace: Vec<usize>,
    pub max_colors: usize,
    /// Steps times solver work per step.
    pub work: usize,
    pub ms: f64,
    /// `x^(0), x^(1), ...` when path recording is on.
    pub path: Vec<Vec<Vec3>>,
}

impl ResolveStats {
    pub const CSV_HEADER: &'static str = "steps,searches,residual,max_disp,ms";

    pub fn max_disp(&self) -> f64 {
        self.max_disp_trace.iter().copied().fold(0.0, f64::max)
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{:.6e},{:.6e},{:.3}", self.steps, self.searches, self.residual, self.max_disp(), self.ms)
    }
}

/// Resolves from the mesh's current positions toward `y_k1`.
pub fn resolve(mesh: &MeshState, y_k1: &[Vec3], cfg: &ResolveConfig) -> Result<(Vec<Vec3>, ResolveStats)> {
    resolve_from(&mesh.topology, &mesh.inv_mass, &mesh.positions, y_k1, cfg)
}

/// Moves an intersection-free `x_free` toward a penetrating `y`.
pub fn repair(mesh: &MeshState, x_free: &[Vec3], y: &[Vec3], cfg: &ResolveConfig) -> Result<(Vec<Vec3>, ResolveStats)> {
    resolve_from(&mesh.topology, &mesh.inv_mass, x_free, y, cfg)
}

/// Replaces non-finite solver targets by the current position; returns whether any was replaced.
fn hold_non_finite(y: &mut [Vec3], x: &[Vec3]) -> bool {
    let mut held = false;
    for (yi, xi) in y.iter_mut().zip(x) {
        if !yi.iter().all(|c| c.is_finite()) {
            *yi = *xi;
            held = true;
        }
    }
    held
}

fn coloring_seed(seed: u64, step: usize) -> u64 {
    seed ^ (step as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn resolve_from(
    topology: &Topology,
    inv_mass: &[f64],
    x_k: &[Vec3],
    y_k1: &[Vec3],
    cfg: &ResolveConfig,
) -> Result<(Vec<Vec3>, ResolveStats)> {
    let start = Instant::now();
    cfg.validate()?;
    let n = topology.n_vertices;
    if x_k.len() != n || y_k1.len() != n || inv_mass.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "vertices {n}, x {}, y {}, inv_mass {}",
            x_k.len(),
            y_k1.len(),
            inv_mass.len()
        )));
    }
    check_finite(x_k, "start positions")?;
    check_finite(y_k1, "target positions")?;

    let mut stats = ResolveStats::default();
    if cfg.check_start && !crate::testkit::intersect::static_intersections(topology, x_k).is_empty() {
        log::warn!("resolve started from an intersecting state");
        stats.infeasible_start = true;
    }

    let solvers = SolverRegistry::with_settings(SolverSettings { sweeps: cfg.sweeps, under_relax: cfg.under_relax });
    let solver = solvers.get(&cfg.solver).expect("validated");
    let models = ContactModelRegistry::default();
    let model = models.get(&cfg.contact_model).expect("validated");

    let y_target: Vec<Vec3> = (0..n).map(|i| if inv_mass[i] == 0.0 { x_k[i] } else { y_k1[i] }).collect();
    let edges = cfg.edge_constraints.then(|| EdgeTargets::new(topology, inv_mass, &y_target, cfg.sigma));
    let mut state = AdvanceState::new(x_k.to_vec());
    let mut set = ProximitySet::empty(n);
    let mut warm: HashMap<ConstraintKey, f64> = HashMap::default();
    let mut hints: HashMap<(Simplex, Simplex), Vec3> = HashMap::default();
    if cfg.record_path {
        stats.path.push(state.x.clone());
    }

    let mut prev_residual = state.max_remainder();
    for l in 0..cfg.step_limit {
        if cfg.force_fresh_search || set.needs_search(cfg.d_min) {
            set = search_positions(topology, inv_mass, &state.x, cfg.d_max);
            stats.searches += 1;
        }
        for p in set.active_pairs() {
            if p.closest.distance > DEGENERATE_DISTANCE && p.closest.distance < cfg.delta {
                hints.insert((p.a, p.b), p.closest.direction);
            }
        }
        let asm = Assembly {
            model,
            delta: cfg.delta,
            edges: edges.as_ref(),
            inv_mass,
            warm_lambda: &warm,
            direction_hint: &hints,
        };
        let mut constraints = linearize_all(set.pairs().iter(), &state.x, &asm);
        let colors = color_constraints(&mut constraints, inv_mass, coloring_seed(cfg.seed, l));
        stats.max_colors = stats.max_colors.max(colors);
        stats.constraint_trace.push(constraints.len());

        let mut system = LcpSystem::assemble(constraints, &state.x, &y_target, inv_mass);
        let mut y = solver.solve(&mut system, &y_target);
        if hold_non_finite(&mut y, &state.x) {
            stats.solver_overflow = true;
        }
        warm = system
            .constraints
            .iter()
            .filter(|c| c.lambda > 0.0 && c.lambda.is_finite())
            .map(|c| (c.key, c.lambda))
            .collect();

        let bound = set.bound();
        let max_disp = advance(&mut state, &y, &set, cfg.gamma, inv_mass);
        stats.bound_trace.push(bound);
        stats.max_disp_trace.push(max_disp);
        stats.steps = l + 1;
        stats.work += solver.work_per_step();
        if cfg.record_path {
            stats.path.push(state.x.clone());
        }

        set.shrink_bound(max_disp);
        if !cfg.force_fresh_search && !set.needs_search(cfg.d_min) {
            set.refresh_distances(&state.x);
        }

        let residual = state.max_remainder();
        if termination_reached(&state, cfg.epsilon) {
            stats.converged = true;
            break;
        }
        if solver.stagnation_early_out() && l > 0 && (prev_residual - residual).abs() < f32::EPSILON as f64 {
            stats.stagnated = true;
            break;
        }
        prev_residual = residual;
    }
    if stats.solver_overflow {
        log::warn!("backward solver produced non-finite targets; affected vertices were held");
    }
    stats.residual = state.max_remainder();
    if !stats.converged && !stats.stagnated {
        stats.hit_limit = true;
        log::warn!("resolve stopped at the step limit {} with residual {:.3e}", cfg.step_limit, stats.residual);
    }
    stats.ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((state.x, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MeshBuilder;

    fn particles(a: Vec3, b: Vec3) -> MeshState {
        let mut m = MeshBuilder::new();
        m.add(&[a, b], &[], &[], 1.0, false).unwrap();
        m.build().unwrap()
    }

    #[test]
    fn identity_target_takes_one_step() {
        let mesh = particles(Vec3::zeros(), Vec3::new(0.01, 0.0, 0.0));
        let (x, st) = resolve(&mesh, &mesh.positions.clone(), &ResolveConfig::default()).unwrap();
        assert_eq!(x, mesh.positions);
        assert_eq!(st.steps, 1);
        assert!(st.converged);
        assert_eq!(st.residual, 0.0);
    }

    #[test]
    fn head_on_particles_stop_near_delta() {
        let mesh = particles(Vec3::new(-0.002, 0.0, 0.0), Vec3::new(0.002, 0.0, 0.0));
        let y = vec![Vec3::new(0.003, 0.0, 0.0), Vec3::new(-0.003, 0.0, 0.0)];
        let cfg = ResolveConfig::default();
        let (x, st) = resolve(&mesh, &y, &cfg).unwrap();
        assert!(st.converged, "{st:?}");
        let sep = (x[1] - x[0]).norm();
        assert!(sep >= cfg.delta * (1.0 - 1e-3), "separation {sep}");
        // symmetric masses: the midpoint stays fixed
        assert!((x[0] + x[1]).norm() < 1e-12);
    }

    #[test]
    fn rejects_nan_target() {
        let mesh = particles(Vec3::zeros(), Vec3::x());
        let y = vec![Vec3::new(f64::NAN, 0.0, 0.0), Vec3::x()];
        assert!(matches!(resolve(&mesh, &y, &ResolveConfig::default()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn validates_config() {
        let cfg = ResolveConfig { d_min: 0.005, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ResolveConfig { solver: "cg".into(), ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(ResolveConfig::default().validate().is_ok());
    }

    #[test]
    fn step_limit_table() {
        assert_eq!(ResolveConfig::step_limit_for(0.01), 512);
        assert_eq!(ResolveConfig::step_limit_for(0.05), 2048);
        assert_eq!(ResolveConfig::step_limit_for(1.0 / 160.0), 512);
    }

    #[test]
    fn non_finite_targets_are_held() {
        let x = vec![Vec3::zeros(), Vec3::x()];
        let mut y = vec![Vec3::new(f64::INFINITY, 0.0, 0.0), Vec3::y()];
        assert!(hold_non_finite(&mut y, &x));
        assert_eq!(y, vec![Vec3::zeros(), Vec3::y()]);
        assert!(!hold_non_finite(&mut y, &x));
    }

    #[test]
    fn csv_row_has_five_columns() {
        let st = ResolveStats { steps: 3, searches: 1, ..Default::default() };
        assert_eq!(st.csv_row().split(',').count(), ResolveStats::CSV_HEADER.split(',').count());
    }
}
