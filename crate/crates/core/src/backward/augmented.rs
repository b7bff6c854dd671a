use super::{BackwardSolver, LcpSystem};
use crate::geometry::Vec3;

/// Augmented-Lagrangian baseline minimized by gradient descent in the mass metric.
pub struct AugmentedLagrangian {
    name: String,
    pub inner: usize,
}

impl AugmentedLagrangian {
    pub fn new(name: &str, inner: usize) -> Self {
        AugmentedLagrangian { name: name.to_string(), inner }
    }
}

/// Runs `n_inner` gradient steps on the inequality augmented Lagrangian, then
/// updates the multipliers. Returns the target `y`.
///
/// The iterate starts from the warm-start target `y_k1 + M^-1 J^T lambda`.
pub fn al_gradient_descent(sys: &mut LcpSystem<'_>, y_k1: &[Vec3], n_inner: usize) -> Vec<Vec3> {
    let n = sys.len();
    if n == 0 {
        return y_k1.to_vec();
    }
    let w = sys.inv_mass;
    let max_diag = sys.constraints.iter().map(|c| c.diag).fold(0.0, f64::max);
    let mu = 10.0 / max_diag;
    // Gershgorin-style bound on the spectrum of J M^-1 J^T
    let mut col = vec![0.0; w.len()];
    for c in &sys.constraints {
        for (k, &v) in c.vertices().iter().enumerate() {
            col[v] += c.jacobian[k].norm();
        }
    }
    let rho = sys
        .constraints
        .iter()
        .map(|c| c.vertices().iter().enumerate().map(|(k, &v)| w[v] * c.jacobian[k].norm() * col[v]).sum::<f64>())
        .fold(0.0, f64::max);
    let eta = 1.0 / (1.0 + mu * rho);

    let mut u: Vec<Vec3> = sys.delta().to_vec();
    let gap = |u: &[Vec3], i: usize| sys.q[i] + sys.constraints[i].row_dot(u);
    let mut force = vec![Vec3::zeros(); w.len()];
    for _ in 0..n_inner {
        force.iter_mut().for_each(|f| *f = Vec3::zeros());
        for (i, c) in sys.constraints.iter().enumerate() {
            let pi = (c.lambda - mu * gap(&u, i)).max(0.0);
            if pi > 0.0 {
                for (k, &v) in c.vertices().iter().enumerate() {
                    force[v] += c.jacobian[k] * pi;
                }
            }
        }
        for v in 0..u.len() {
            let cur = u[v];
            u[v] = cur - (cur - force[v] * w[v]) * eta;
        }
    }
    let next: Vec<f64> = (0..n).map(|i| (sys.constraints[i].lambda - mu * gap(&u, i)).max(0.0)).collect();
    for (c, l) in sys.constraints.iter_mut().zip(next) {
        c.lambda = l;
    }
    sys.rebuild_delta();
    y_k1.iter().zip(&u).map(|(y, d)| y + d).collect()
}

impl BackwardSolver for AugmentedLagrangian {
    fn name(&self) -> &str {
        &self.name
    }

    fn solve(&self, system: &mut LcpSystem<'_>, y_k1: &[Vec3]) -> Vec<Vec3> {
        al_gradient_descent(system, y_k1, self.inner)
    }

    fn work_per_step(&self) -> usize {
        self.inner
    }

    fn stagnation_early_out(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::super::pgs::pgs_sweeps;
    use super::super::test_util::*;
    use super::*;

    #[test]
    fn feasible_target_is_unchanged() {
        let x = vec![Vec3::zeros(), Vec3::x() * 3.0];
        let w = [1.0, 1.0];
        let cs = colored(vec![gap_row(0, &[1, 0], &[1.0, -1.0], Vec3::x(), &x)], &w);
        let mut sys = LcpSystem::assemble(cs, &x, &x, &w);
        let y = al_gradient_descent(&mut sys, &x, 20);
        assert_eq!(y, x);
        assert_eq!(sys.constraints[0].lambda, 0.0);
    }

    #[test]
    fn approaches_pgs_fixed_point() {
        let x = vec![Vec3::zeros(), Vec3::x() * 0.6];
        let w = [0.0, 2.0];
        let cs = colored(vec![gap_row(0, &[1, 0], &[1.0, -1.0], Vec3::x(), &x)], &w);
        let mut exact = LcpSystem::assemble(cs.clone(), &x, &x, &w);
        pgs_sweeps(&mut exact, 5);
        let y_exact = exact.recover_target(&x);
        let mut sys = LcpSystem::assemble(cs, &x, &x, &w);
        let mut y = x.clone();
        for _ in 0..30 {
            y = al_gradient_descent(&mut sys, &x, 100);
        }
        assert!((sys.constraints[0].lambda - exact.constraints[0].lambda).abs() < 1e-4);
        assert!((y[1] - y_exact[1]).norm() < 1e-4);
    }
}
