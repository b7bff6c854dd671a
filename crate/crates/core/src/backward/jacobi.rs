use rayon::prelude::*;

use super::{BackwardSolver, LcpSystem};
use crate::geometry::Vec3;

/// Under-relaxed projected Jacobi.
pub struct ProjectedJacobi {
    pub sweeps: usize,
    pub under_relax: f64,
}

/// Simultaneous update `lambda <- lambda + w (max(0, lambda - r / A_ii) - lambda)`.
pub fn projected_jacobi_sweeps(sys: &mut LcpSystem<'_>, n_iters: usize, under_relax: f64) {
    for _ in 0..n_iters {
        let next: Vec<f64> = (0..sys.len())
            .into_par_iter()
            .map(|i| {
                let c = &sys.constraints[i];
                let proj = (c.lambda - sys.residual(i) / c.diag).max(0.0);
                (c.lambda + under_relax * (proj - c.lambda)).max(0.0)
            })
            .collect();
        for (c, v) in sys.constraints.iter_mut().zip(next) {
            c.lambda = v;
        }
        sys.rebuild_delta();
    }
}

impl BackwardSolver for ProjectedJacobi {
    fn name(&self) -> &str {
        "jacobi"
    }

    fn solve(&self, system: &mut LcpSystem<'_>, y_k1: &[Vec3]) -> Vec<Vec3> {
        projected_jacobi_sweeps(system, self.sweeps, self.under_relax);
        system.recover_target(y_k1)
    }

    fn work_per_step(&self) -> usize {
        self.sweeps
    }
}

#[cfg(test)]
mod tests {
    use super::super::pgs::pgs_sweeps;
    use super::super::test_util::*;
    use super::*;

    fn duplicated_rows() -> (Vec<Vec3>, [f64; 2]) {
        (vec![Vec3::zeros(), Vec3::zeros()], [0.0, 1.0])
    }

    #[test]
    fn single_row_matches_pgs() {
        let x = vec![Vec3::zeros(), Vec3::x() * 0.4];
        let w = [0.0, 1.0];
        let cs = colored(vec![gap_row(0, &[1, 0], &[1.0, -1.0], Vec3::x(), &x)], &w);
        let mut a = LcpSystem::assemble(cs.clone(), &x, &x, &w);
        let mut b = LcpSystem::assemble(cs, &x, &x, &w);
        projected_jacobi_sweeps(&mut a, 1, 1.0);
        pgs_sweeps(&mut b, 1);
        assert_eq!(a.lambdas(), b.lambdas());
    }

    #[test]
    fn coupled_rows_need_relaxation() {
        // two identical rows: A = [[1,1],[1,1]], q = (-1,-1)
        let (x, w) = duplicated_rows();
        let rows = vec![
            gap_row(0, &[1, 0], &[1.0, -1.0], Vec3::x(), &x),
            gap_row(1, &[1, 0], &[1.0, -1.0], Vec3::x(), &x),
        ];
        let cs = colored(rows, &w);
        let mut plain = LcpSystem::assemble(cs.clone(), &x, &x, &w);
        let mut relaxed = LcpSystem::assemble(cs, &x, &x, &w);
        let mut seen = Vec::new();
        for _ in 0..6 {
            projected_jacobi_sweeps(&mut plain, 1, 1.0);
            seen.push(plain.complementarity_residual());
        }
        assert!(seen.iter().all(|r| *r > 0.5), "undamped Jacobi should oscillate: {seen:?}");
        projected_jacobi_sweeps(&mut relaxed, 50, 0.5);
        assert!(relaxed.complementarity_residual() < 1e-12);
    }

    #[test]
    fn feasible_target_keeps_zero() {
        let x = vec![Vec3::zeros(), Vec3::x() * 2.0];
        let w = [1.0, 1.0];
        let cs = colored(vec![gap_row(0, &[1, 0], &[1.0, -1.0], Vec3::x(), &x)], &w);
        let mut sys = LcpSystem::assemble(cs, &x, &x, &w);
        projected_jacobi_sweeps(&mut sys, 4, 0.5);
        assert_eq!(sys.constraints[0].lambda, 0.0);
    }
}
