//! Inexact solution of the per-step LCP and recovery of the guidance target.

mod augmented;
mod jacobi;
mod pgs;

use nalgebra::DMatrix;

pub use augmented::{al_gradient_descent, AugmentedLagrangian};
pub use jacobi::{projected_jacobi_sweeps, ProjectedJacobi};
pub use pgs::{pgs_sweeps, Pgs};

use crate::constraints::{color_groups, Constraint};
use crate::geometry::Vec3;

/// Matrix-free LCP `lambda >= 0 ⟂ q + J M^-1 J^T lambda >= 0`.
///
/// `delta` caches `M^-1 J^T lambda` per vertex so a row product costs one
/// pass over the row's vertices.
pub struct LcpSystem<'a> {
    pub constraints: Vec<Constraint>,
    pub q: Vec<f64>,
    pub inv_mass: &'a [f64],
    delta: Vec<Vec3>,
    groups: Vec<Vec<usize>>,
}

impl<'a> LcpSystem<'a> {
    /// `q_i = c_i + J_i (y_k1 - x_l)`; multipliers already stored in the rows act as a warm start.
    pub fn assemble(constraints: Vec<Constraint>, x_l: &[Vec3], y_k1: &[Vec3], inv_mass: &'a [f64]) -> Self {
        let diff: Vec<Vec3> = y_k1.iter().zip(x_l).map(|(y, x)| y - x).collect();
        let q = constraints.iter().map(|c| c.value + c.row_dot(&diff)).collect();
        let groups = color_groups(&constraints);
        let mut sys = LcpSystem { constraints, q, inv_mass, delta: vec![Vec3::zeros(); inv_mass.len()], groups };
        sys.rebuild_delta();
        sys
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn rebuild_delta(&mut self) {
        self.delta.iter_mut().for_each(|d| *d = Vec3::zeros());
        for c in &self.constraints {
            if c.lambda != 0.0 {
                for (k, &v) in c.vertices().iter().enumerate() {
                    self.delta[v] += c.jacobian[k] * (self.inv_mass[v] * c.lambda);
                }
            }
        }
    }

    /// `w_i = q_i + (A lambda)_i`.
    pub fn residual(&self, i: usize) -> f64 {
        self.q[i] + self.constraints[i].row_dot(&self.delta)
    }

    pub fn residuals(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.residual(i)).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.lambda).collect()
    }

    /// Sets `lambda_i` and patches the cached `M^-1 J^T lambda`.
    pub fn set_lambda(&mut self, i: usize, value: f64) {
        let c = &mut self.constraints[i];
        let d = value - c.lambda;
        c.lambda = value;
        if d != 0.0 {
            for (k, &v) in c.vertices().iter().enumerate() {
                self.delta[v] += c.jacobian[k] * (self.inv_mass[v] * d);
            }
        }
    }

    /// Matrix-free `A v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut field = vec![Vec3::zeros(); self.inv_mass.len()];
        for (c, &s) in self.constraints.iter().zip(v) {
            for (k, &vert) in c.vertices().iter().enumerate() {
                field[vert] += c.jacobian[k] * (self.inv_mass[vert] * s);
            }
        }
        self.constraints.iter().map(|c| c.row_dot(&field)).collect()
    }

    /// Explicit `A = J M^-1 J^T`.
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (ci, cj) = (&self.constraints[i], &self.constraints[j]);
                let mut s = 0.0;
                for (ki, &vi) in ci.vertices().iter().enumerate() {
                    for (kj, &vj) in cj.vertices().iter().enumerate() {
                        if vi == vj {
                            s += self.inv_mass[vi] * ci.jacobian[ki].dot(&cj.jacobian[kj]);
                        }
                    }
                }
                a[(i, j)] = s;
            }
        }
        a
    }

    /// `max_i |min(lambda_i, w_i)|`.
    pub fn complementarity_residual(&self) -> f64 {
        (0..self.len()).map(|i| self.constraints[i].lambda.min(self.residual(i)).abs()).fold(0.0, f64::max)
    }

    /// `y = y_k1 + M^-1 J^T lambda`.
    pub fn recover_target(&self, y_k1: &[Vec3]) -> Vec<Vec3> {
        y_k1.iter().zip(&self.delta).map(|(y, d)| y + d).collect()
    }

    pub fn delta(&self) -> &[Vec3] {
        &self.delta
    }
}

/// A backward-step strategy: updates multipliers in place and returns the new target.
pub trait BackwardSolver: Send + Sync {
    fn name(&self) -> &str;

    fn solve(&self, system: &mut LcpSystem<'_>, y_k1: &[Vec3]) -> Vec<Vec3>;

    /// Sweeps (or inner iterations) spent per backward step, for work accounting.
    fn work_per_step(&self) -> usize;

    /// Whether the driver should stop once the remainder stops changing.
    fn stagnation_early_out(&self) -> bool {
        false
    }
}

/// Parameters shared by the registered solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub sweeps: usize,
    pub under_relax: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { sweeps: 1, under_relax: 0.5 }
    }
}

/// Backward solvers selectable by name.
pub struct SolverRegistry {
    solvers: Vec<Box<dyn BackwardSolver>>,
}

impl SolverRegistry {
    pub fn new() -> Self {
        SolverRegistry { solvers: Vec::new() }
    }

    /// `pgs`, `jacobi`, `al20` and `al100`.
    pub fn with_settings(settings: SolverSettings) -> Self {
        let mut r = Self::new();
        r.register(Box::new(Pgs { sweeps: settings.sweeps }));
        r.register(Box::new(ProjectedJacobi { sweeps: settings.sweeps, under_relax: settings.under_relax }));
        r.register(Box::new(AugmentedLagrangian::new("al20", 20)));
        r.register(Box::new(AugmentedLagrangian::new("al100", 100)));
        r
    }

    pub fn register(&mut self, solver: Box<dyn BackwardSolver>) {
        self.solvers.retain(|s| s.name() != solver.name());
        self.solvers.push(solver);
    }

    pub fn get(&self, name: &str) -> Option<&dyn BackwardSolver> {
        self.solvers.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.solvers.iter().map(|s| s.name()).collect()
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::with_settings(SolverSettings::default())
    }
}
