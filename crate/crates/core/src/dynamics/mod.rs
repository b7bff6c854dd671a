//! A small step-and-project simulator: one or more Newton targets per frame,
//! each followed by a resolve.

pub mod energy;
pub mod friction;
pub mod sparse;

use serde::{Deserialize, Serialize};

pub use energy::{add_repulsion, pair_weights, project_psd, Elastic, Potential};
pub use friction::friction_filter;
pub use sparse::{pcg, BlockSparse, PcgInfo, TripletBuilder};

use crate::error::{Error, Result};
use crate::geometry::{MeshState, Vec3};
use crate::proximity::{search_positions, ProximityPair};
use crate::twoway::{resolve_from, ResolveConfig, ResolveStats};

/// Material and integration parameters, SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyModel {
    /// Per-edge spring stiffness (N/m).
    pub spring_stiffness: f64,
    /// Quadratic bending stiffness; zero disables bending.
    pub bending_stiffness: f64,
    pub gravity: [f64; 3],
    pub repulsion_stiffness: f64,
    /// Repulsion activation distance.
    pub delta: f64,
    pub dt: f64,
    /// Newton iterations per frame.
    pub newton_iters: usize,
    /// Coulomb coefficient; zero disables the filter.
    pub friction: f64,
    pub pcg_tolerance: f64,
    pub pcg_max_iter: usize,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            spring_stiffness: 100.0,
            bending_stiffness: 0.0,
            gravity: [0.0, 0.0, -9.8],
            repulsion_stiffness: 1e3,
            delta: 0.001,
            dt: 0.01,
            newton_iters: 1,
            friction: 0.0,
            pcg_tolerance: 1e-6,
            pcg_max_iter: 400,
        }
    }
}

impl EnergyModel {
    pub fn gravity_vec(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.spring_stiffness >= 0.0 && self.bending_stiffness >= 0.0 && self.repulsion_stiffness >= 0.0) {
            return bad("stiffnesses must be non-negative");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.newton_iters < 1 {
            return bad("need at least one Newton iteration");
        }
        if !(self.friction >= 0.0) {
            return bad("friction must be non-negative");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return bad("gravity must be finite");
        }
        Ok(())
    }
}

/// Per-frame record.
#[derive(Clone, Debug, Default)]
pub struct StepReport {
    pub resolves: Vec<ResolveStats>,
    pub pcg: Vec<PcgInfo>,
}

impl StepReport {
    pub fn steps(&self) -> usize {
        self.resolves.iter().map(|s| s.steps).sum()
    }

    pub fn searches(&self) -> usize {
        self.resolves.iter().map(|s| s.searches).sum()
    }

    pub fn residual(&self) -> f64 {
        self.resolves.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    pub fn ms(&self) -> f64 {
        self.resolves.iter().map(|s| s.ms).sum()
    }
}

pub struct Simulator {
    pub mesh: MeshState,
    pub model: EnergyModel,
    pub resolve: ResolveConfig,
    elastic: Elastic,
    pub frame: usize,
}

impl Simulator {
    /// Rest lengths and bending weights are taken from the current positions.
    pub fn new(mesh: MeshState, model: EnergyModel, resolve: ResolveConfig) -> Result<Self> {
        model.validate()?;
        resolve.validate()?;
        let elastic = Elastic::new(&mesh.topology, &mesh.positions);
        Ok(Simulator { mesh, model, resolve, elastic, frame: 0 })
    }

    pub fn elastic(&self) -> &Elastic {
        &self.elastic
    }

    /// `x^t + dt v^t` for free vertices, `x^t` for static ones.
    pub fn inertial_target(&self) -> Vec<Vec3> {
        let dt = self.model.dt;
        (0..self.mesh.len())
            .map(|v| {
                if self.mesh.is_static(v) {
                    self.mesh.positions[v]
                } else {
                    self.mesh.positions[v] + self.mesh.velocities[v] * dt
                }
            })
            .collect()
    }

    /// `x_tilde + dt^2 g` for free vertices: the target without elastic or contact forces.
    pub fn free_flight(&self, x_tilde: &[Vec3]) -> Vec<Vec3> {
        let drop = self.model.gravity_vec() * (self.model.dt * self.model.dt);
        (0..self.mesh.len()).map(|v| if self.mesh.is_static(v) { x_tilde[v] } else { x_tilde[v] + drop }).collect()
    }

    /// Pairs within the outer search bound at `x`; repulsion only acts below `delta`.
    pub fn contacts_at(&self, x: &[Vec3]) -> Vec<ProximityPair> {
        let radius = self.resolve.d_max.max(self.model.delta);
        let set = search_positions(&self.mesh.topology, &self.mesh.inv_mass, x, radius);
        set.pairs().to_vec()
    }

    pub fn potential<'a>(&'a self, x_tilde: &'a [Vec3], contacts: &'a [ProximityPair]) -> Potential<'a> {
        Potential {
            model: &self.model,
            topology: &self.mesh.topology,
            inv_mass: &self.mesh.inv_mass,
            elastic: &self.elastic,
            x_tilde,
            contacts,
        }
    }

    /// One Newton step `y = x - H^-1 g` of the incremental potential.
    ///
    /// Without static vertices the residual's mean is removed afterwards so the
    /// step conserves linear momentum up to round-off.
    pub fn newton_target(&self, x: &[Vec3], x_tilde: &[Vec3], contacts: &[ProximityPair]) -> (Vec<Vec3>, PcgInfo) {
        let pot = self.potential(x_tilde, contacts);
        let (grad, hess) = pot.gradient_and_hessian(x);
        let free: Vec<bool> = self.mesh.inv_mass.iter().map(|&w| w > 0.0).collect();
        let rhs: Vec<Vec3> = grad.iter().map(|g| -g).collect();
        let (mut dx, info) = pcg(&hess, &rhs, &free, self.model.pcg_tolerance, self.model.pcg_max_iter);
        if !info.converged {
            log::warn!("PCG stopped at relative residual {:.3e} after {} iterations", info.relative_residual, info.iterations);
        }
        if !free.is_empty() && free.iter().all(|&f| f) {
            let ax = hess.mul_masked(&dx, &free);
            let r_sum: Vec3 = rhs.iter().zip(&ax).map(|(b, a)| b - a).sum();
            let m_sum: f64 = self.mesh.inv_mass.iter().map(|w| 1.0 / w).sum();
            let shift = r_sum * (self.model.dt * self.model.dt / m_sum);
            for d in &mut dx {
                *d += shift;
            }
        }
        let y = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        (y, info)
    }

    /// Without static vertices, translates `x` rigidly by the mass-weighted
    /// shortfall `sum m (y - x) / sum m` the asynchronous advance left behind.
    /// A rigid translation keeps every pair distance, so safety is unaffected.
    fn restore_momentum(&self, x: &mut [Vec3], y: &[Vec3]) {
        let inv_mass = &self.mesh.inv_mass;
        if inv_mass.is_empty() || inv_mass.contains(&0.0) {
            return;
        }
        let m_sum: f64 = inv_mass.iter().map(|w| 1.0 / w).sum();
        let gap: Vec3 = x.iter().zip(y).zip(inv_mass).map(|((a, b), w)| (b - a) / *w).sum();
        let shift = gap / m_sum;
        for p in x.iter_mut() {
            *p += shift;
        }
    }

    /// Advances one frame and updates velocities from the displacement.
    pub fn step(&mut self) -> Result<StepReport> {
        let x_t = self.mesh.positions.clone();
        let x_tilde = self.inertial_target();
        let mut x = x_t.clone();
        let mut report = StepReport::default();
        for _ in 0..self.model.newton_iters {
            let contacts = self.contacts_at(&x);
            let (mut y, info) = self.newton_target(&x, &x_tilde, &contacts);
            report.pcg.push(info);
            if self.model.friction > 0.0 {
                let y_free = self.free_flight(&x_tilde);
                y = friction_filter(&x, &y, &y_free, &contacts, &self.mesh.inv_mass, self.model.friction, self.model.delta);
            }
            let (next, stats) = resolve_from(&self.mesh.topology, &self.mesh.inv_mass, &x, &y, &self.resolve)?;
            if stats.hit_limit {
                log::warn!("frame {}: resolve hit the step limit with residual {:.3e}", self.frame, stats.residual);
            }
            x = next;
            self.restore_momentum(&mut x, &y);
            report.resolves.push(stats);
        }
        let dt = self.model.dt;
        for v in 0..x.len() {
            self.mesh.velocities[v] = if self.mesh.is_static(v) { Vec3::zeros() } else { (x[v] - x_t[v]) / dt };
        }
        self.mesh.positions = x;
        self.frame += 1;
        Ok(report)
    }
}
