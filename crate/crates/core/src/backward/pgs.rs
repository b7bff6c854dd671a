use rayon::prelude::*;

use super::{BackwardSolver, LcpSystem};
use crate::geometry::Vec3;

const PARALLEL_GROUP: usize = 512;

/// Multi-color projected Gauss-Seidel.
pub struct Pgs {
    pub sweeps: usize,
}

/// `lambda_i <- max(0, lambda_i - w_i / A_ii)` color by color, `n_iters` times.
///
/// Rows of one color touch disjoint dynamic vertices, so their updates are
/// computed in parallel from the same state and then applied.
pub fn pgs_sweeps(sys: &mut LcpSystem<'_>, n_iters: usize) {
    let groups = sys.groups().to_vec();
    for _ in 0..n_iters {
        for group in &groups {
            if group.len() >= PARALLEL_GROUP {
                let updates: Vec<f64> = group
                    .par_iter()
                    .map(|&i| {
                        let c = &sys.constraints[i];
                        (c.lambda - sys.residual(i) / c.diag).max(0.0)
                    })
                    .collect();
                for (&i, v) in group.iter().zip(updates) {
                    sys.set_lambda(i, v);
                }
            } else {
                for &i in group {
                    let c = &sys.constraints[i];
                    let v = (c.lambda - sys.residual(i) / c.diag).max(0.0);
                    sys.set_lambda(i, v);
                }
            }
        }
    }
}

impl BackwardSolver for Pgs {
    fn name(&self) -> &str {
        "pgs"
    }

    fn solve(&self, system: &mut LcpSystem<'_>, y_k1: &[Vec3]) -> Vec<Vec3> {
        pgs_sweeps(system, self.sweeps);
        system.recover_target(y_k1)
    }

    fn work_per_step(&self) -> usize {
        self.sweeps
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::*;

    #[test]
    fn scalar_lcp_in_one_sweep() {
        // unit row on a unit-mass vertex against a static anchor, q = -0.3
        let x = vec![Vec3::zeros(), Vec3::x() * 0.7];
        let w = [0.0, 1.0];
        let cs = colored(vec![gap_row(0, &[1, 0], &[1.0, -1.0], Vec3::x(), &x)], &w);
        let mut sys = LcpSystem::assemble(cs, &x, &x, &w);
        assert!((sys.q[0] + 0.3).abs() < 1e-15);
        pgs_sweeps(&mut sys, 1);
        assert!((sys.constraints[0].lambda - 0.3).abs() < 1e-15);
        let y = sys.recover_target(&x);
        assert!((y[1] - Vec3::x()).norm() < 1e-15);
    }

    #[test]
    fn feasible_target_keeps_zero() {
        let x = vec![Vec3::zeros(), Vec3::x() * 2.0];
        let w = [1.0, 1.0];
        let cs = colored(vec![gap_row(0, &[1, 0], &[1.0, -1.0], Vec3::x(), &x)], &w);
        let mut sys = LcpSystem::assemble(cs, &x, &x, &w);
        pgs_sweeps(&mut sys, 3);
        assert_eq!(sys.constraints[0].lambda, 0.0);
    }
}
