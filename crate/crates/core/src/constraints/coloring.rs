use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Constraint;

const ATTEMPTS: usize = 4;

fn greedy(constraints: &[Constraint], inv_mass: &[f64], order: &[usize], colors: &mut [u32]) -> u32 {
    let mut used: Vec<Vec<u32>> = vec![Vec::new(); inv_mass.len()];
    // stamp[c] == row + 1 marks color c as taken by a neighbour of the current row
    let mut stamp: Vec<usize> = Vec::new();
    let mut count = 0;
    for (row, &ci) in order.iter().enumerate() {
        let c = &constraints[ci];
        for &v in c.vertices() {
            if inv_mass[v] > 0.0 {
                for &f in &used[v] {
                    stamp[f as usize] = row + 1;
                }
            }
        }
        let color = (0..stamp.len()).find(|&k| stamp[k] != row + 1).unwrap_or(stamp.len());
        if color == stamp.len() {
            stamp.push(0);
        }
        colors[ci] = color as u32;
        count = count.max(color as u32 + 1);
        for &v in c.vertices() {
            if inv_mass[v] > 0.0 {
                used[v].push(color as u32);
            }
        }
    }
    count
}

/// Assigns colors so that no two constraints of one color share a dynamic vertex.
///
/// The first attempt uses the given order, later ones random permutations
/// drawn from `seed`; the coloring with the fewest colors wins. Returns the
/// number of colors.
pub fn color_constraints(constraints: &mut [Constraint], inv_mass: &[f64], seed: u64) -> usize {
    let n = constraints.len();
    if n == 0 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = vec![0u32; n];
    let mut best_count = greedy(constraints, inv_mass, &order, &mut best);
    let mut trial = vec![0u32; n];
    for _ in 1..ATTEMPTS {
        if best_count <= 1 {
            break;
        }
        order.shuffle(&mut rng);
        let count = greedy(constraints, inv_mass, &order, &mut trial);
        if count < best_count {
            best_count = count;
            best.copy_from_slice(&trial);
        }
    }
    for (c, col) in constraints.iter_mut().zip(best) {
        c.color = col;
    }
    best_count as usize
}

/// Constraint indices grouped by ascending color.
pub fn color_groups(constraints: &[Constraint]) -> Vec<Vec<usize>> {
    let n_colors = constraints.iter().map(|c| c.color as usize + 1).max().unwrap_or(0);
    let mut groups = vec![Vec::new(); n_colors];
    for (i, c) in constraints.iter().enumerate() {
        groups[c.color as usize].push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{ConstraintKey, ConstraintKind, Stencil};
    use crate::geometry::Vec3;

    fn edge_row(i: usize, a: usize, b: usize, x: &[Vec3]) -> Constraint {
        Constraint::linearize(
            ConstraintKind::EdgeLength,
            ConstraintKey::Edge(i),
            &[a, b],
            Stencil::EdgeLength { sigma: 1.1, target: 1.0 },
            x,
        )
    }

    fn points(n: usize) -> Vec<Vec3> {
        (0..n).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect()
    }

    #[test]
    fn disjoint_rows_share_one_color() {
        let x = points(6);
        let mut cs: Vec<_> = (0..3).map(|i| edge_row(i, 2 * i, 2 * i + 1, &x)).collect();
        assert_eq!(color_constraints(&mut cs, &[1.0; 6], 7), 1);
    }

    #[test]
    fn chain_needs_two_colors() {
        let x = points(8);
        let mut cs: Vec<_> = (0..7).map(|i| edge_row(i, i, i + 1, &x)).collect();
        assert_eq!(color_constraints(&mut cs, &[1.0; 8], 7), 2);
    }

    #[test]
    fn star_needs_k_colors() {
        let x = points(6);
        let mut cs: Vec<_> = (1..6).map(|i| edge_row(i, 0, i, &x)).collect();
        assert_eq!(color_constraints(&mut cs, &[1.0; 6], 7), 5);
    }

    #[test]
    fn static_hub_does_not_conflict() {
        let x = points(6);
        let mut cs: Vec<_> = (1..6).map(|i| edge_row(i, 0, i, &x)).collect();
        let mut w = [1.0; 6];
        w[0] = 0.0;
        assert_eq!(color_constraints(&mut cs, &w, 7), 1);
    }
}
