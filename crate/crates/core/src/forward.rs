//! Conservative asynchronous advancement toward the guidance target.

use rayon::prelude::*;

use crate::geometry::Vec3;
use crate::proximity::ProximitySet;

/// Iterate `x`, per-vertex remainder `r` and the last step's largest move.
#[derive(Clone, Debug)]
pub struct AdvanceState {
    pub x: Vec<Vec3>,
    pub r: Vec<f64>,
    pub last_max_disp: f64,
}

impl AdvanceState {
    pub fn new(x: Vec<Vec3>) -> Self {
        let n = x.len();
        AdvanceState { x, r: vec![1.0; n], last_max_disp: 0.0 }
    }

    pub fn max_remainder(&self) -> f64 {
        self.r.iter().copied().fold(0.0, f64::max)
    }
}

/// Distance reserved below every bound so that pair separations, which the
/// half-distance rule shrinks geometrically at worst, stay far above round-off.
pub const SEPARATION_FLOOR: f64 = 1e-10;

/// Step factor `min(0.5 gamma D_i / |d|, 1)`, with 1 for a zero move.
pub fn step_factor(bound: f64, gamma: f64, disp_norm: f64) -> f64 {
    if disp_norm == 0.0 {
        1.0
    } else {
        (0.5 * gamma * bound / disp_norm).min(1.0)
    }
}

/// Moves every dynamic vertex toward `y` by at most `0.5 gamma (D_i - floor)`
/// and returns the largest displacement taken. Static vertices stay put and
/// their remainder drops to zero.
pub fn advance(state: &mut AdvanceState, y: &[Vec3], set: &ProximitySet, gamma: f64, inv_mass: &[f64]) -> f64 {
    let bounds = set.per_vertex_bounds();
    let moved: Vec<(Vec3, f64, f64)> = (0..state.x.len())
        .into_par_iter()
        .map(|i| {
            let x = state.x[i];
            if inv_mass[i] == 0.0 {
                return (x, 0.0, 0.0);
            }
            let d = y[i] - x;
            let len = d.norm();
            let bound = (bounds[i] - SEPARATION_FLOOR).max(0.0);
            let cap = 0.5 * gamma * bound;
            if len <= cap {
                return (y[i], 0.0, (y[i] - x).norm());
            }
            if cap == 0.0 {
                return (x, state.r[i], 0.0);
            }
            let mut alpha = step_factor(bound, gamma, len);
            let mut next = x + d * alpha;
            let mut taken = (next - x).norm();
            while taken > cap {
                alpha *= (cap / taken) * (1.0 - 4.0 * f64::EPSILON);
                next = x + d * alpha;
                taken = (next - x).norm();
            }
            (next, state.r[i] * (1.0 - alpha), taken)
        })
        .collect();
    let mut max_disp = 0.0f64;
    for (i, (x, r, taken)) in moved.into_iter().enumerate() {
        state.x[i] = x;
        state.r[i] = if inv_mass[i] == 0.0 { 0.0 } else { r.min(state.r[i]) };
        max_disp = max_disp.max(taken);
    }
    state.last_max_disp = max_disp;
    max_disp
}

/// `max_i r_i < eps`.
pub fn termination_reached(state: &AdvanceState, eps: f64) -> bool {
    state.max_remainder() < eps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounded_set(n: usize, bound: f64) -> ProximitySet {
        let topo = crate::geometry::Topology::new(n, vec![], vec![]).unwrap();
        let x = vec![Vec3::new(0.0, 0.0, 0.0); n];
        // a particle cloud far apart; only the bound matters
        let spread: Vec<Vec3> = (0..n).map(|i| x[i] + Vec3::new(i as f64 * 10.0, 0.0, 0.0)).collect();
        crate::proximity::search_positions(&topo, &vec![1.0; n], &spread, bound)
    }

    #[test]
    fn factor_arithmetic() {
        assert!((step_factor(0.002, 0.9, 0.010) - 0.09).abs() < 1e-15);
        assert_eq!(step_factor(0.002, 0.9, 0.0005), 1.0);
        assert_eq!(step_factor(0.002, 0.9, 0.0), 1.0);
    }

    #[test]
    fn capped_move_and_remainder() {
        let set = bounded_set(1, 0.004);
        let mut st = AdvanceState::new(vec![Vec3::zeros()]);
        let y = vec![Vec3::new(0.01, 0.0, 0.0)];
        let d = advance(&mut st, &y, &set, 0.9, &[1.0]);
        assert!(d <= 0.5 * 0.9 * 0.004);
        assert!((st.r[0] - (1.0 - 0.18)).abs() < 1e-7);
    }

    #[test]
    fn clamp_branch_reaches_target() {
        let set = bounded_set(2, 0.004);
        let mut st = AdvanceState::new(vec![Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0)]);
        let y = vec![Vec3::new(0.001, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0)];
        advance(&mut st, &y, &set, 0.9, &[1.0, 1.0]);
        assert_eq!(st.x[0], y[0]);
        assert_eq!(st.r, vec![0.0, 0.0]);
        assert!(termination_reached(&st, 1e-4));
    }

    #[test]
    fn static_vertices_hold() {
        let set = bounded_set(1, 0.004);
        let mut st = AdvanceState::new(vec![Vec3::zeros()]);
        advance(&mut st, &[Vec3::x()], &set, 0.9, &[0.0]);
        assert_eq!(st.x[0], Vec3::zeros());
        assert_eq!(st.r[0], 0.0);
    }

    #[test]
    fn quarter_remainder_is_not_terminal() {
        let mut st = AdvanceState::new(vec![Vec3::zeros(); 2]);
        st.r = vec![0.0, 0.25];
        assert!(!termination_reached(&st, 1e-4));
        st.r = vec![0.0, 0.0];
        assert!(termination_reached(&st, 1e-4));
    }
}
