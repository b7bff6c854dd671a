//! Coulomb velocity filter applied to the Newton target before resolving.

use super::energy::pair_weights;
use crate::geometry::Vec3;
use crate::proximity::ProximityPair;

/// Adjusts the Newton target `y` at pairs in contact (distances and weights taken at `x`).
///
/// The normal impulse of a pair is estimated by the gap deficit of the
/// free-flight prediction `y_free`, which ignores contact forces. The
/// tangential part of the relative displacement in `y` is reduced by at most
/// `mu` times that deficit, and any gap deficit left in `y` is closed along
/// the normal. Each pair's correction is split over its vertices by inverse
/// mass, and a vertex averages the shares it receives weighted by the square
/// of its barycentric weight in each pair.
/// Pairs farther than `(1 + CONTACT_SLACK) delta` carry no friction; resting
/// pairs sit at `delta` up to solver tolerance.
pub const CONTACT_SLACK: f64 = 0.2;

pub fn friction_filter(
    x: &[Vec3],
    y: &[Vec3],
    y_free: &[Vec3],
    contacts: &[ProximityPair],
    inv_mass: &[f64],
    mu: f64,
    delta: f64,
) -> Vec<Vec3> {
    let n = x.len();
    let mut acc = vec![Vec3::zeros(); n];
    let mut weight = vec![0.0f64; n];
    let reach = delta * (1.0 + CONTACT_SLACK);
    for p in contacts {
        let d = p.closest.distance;
        if d >= reach {
            continue;
        }
        let w = pair_weights(p);
        let normal = p.closest.direction;
        let relative = |z: &[Vec3]| -> Vec3 { w.iter().map(|&(v, c)| (z[v] - x[v]) * c).sum() };
        let u = relative(y);
        let un = u.dot(&normal);
        let impulse = (delta - (d + relative(y_free).dot(&normal))).max(0.0);
        let deficit = (delta - (d + un)).max(0.0);
        if impulse <= 0.0 && deficit <= 0.0 {
            continue;
        }
        let ut = u - normal * un;
        let utn = ut.norm();
        let mut du = normal * deficit;
        if utn > 0.0 {
            du -= ut * (mu * impulse / utn).min(1.0);
        }
        let denom: f64 = w.iter().map(|&(v, c)| c * c * inv_mass[v]).sum();
        if denom <= 0.0 {
            continue;
        }
        for &(v, c) in &w {
            if c != 0.0 && inv_mass[v] > 0.0 {
                acc[v] += du * (c * c * c * inv_mass[v] / denom);
                weight[v] += c * c;
            }
        }
    }
    (0..n)
        .map(|v| if weight[v] > 0.0 { y[v] + acc[v] / weight[v] } else { y[v] })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ClosestResult, Simplex};

    fn vv_contact(gap: f64) -> (Vec<Vec3>, ProximityPair) {
        let x = vec![Vec3::new(0.0, 0.0, gap), Vec3::zeros()];
        let pair = ProximityPair {
            a: Simplex::Vertex(0),
            b: Simplex::Vertex(1),
            closest: ClosestResult { distance: gap, weights_a: [1.0, 0.0, 0.0], weights_b: [1.0, 0.0, 0.0], direction: Vec3::z() },
            active: true,
        };
        (x, pair)
    }

    #[test]
    fn frictionless_keeps_tangent() {
        let (x, pair) = vv_contact(0.0005);
        let y = vec![x[0] + Vec3::new(0.01, 0.0, -0.0002), x[1]];
        let out = friction_filter(&x, &y, &y, &[pair], &[1.0, 0.0], 0.0, 0.001);
        assert!((out[0].x - y[0].x).abs() < 1e-15);
        assert!((out[0].z - 0.001).abs() < 1e-12);
    }

    #[test]
    fn sticky_removes_tangent() {
        let (x, pair) = vv_contact(0.0005);
        let y = vec![x[0] + Vec3::new(0.01, 0.003, 0.0), x[1]];
        let out = friction_filter(&x, &y, &y, &[pair], &[1.0, 0.0], 1e6, 0.001);
        assert!((out[0].x - x[0].x).abs() < 1e-15);
        assert!((out[0].y - x[0].y).abs() < 1e-15);
    }

    #[test]
    fn supported_contact_still_sees_the_free_flight_impulse() {
        let (x, pair) = vv_contact(0.001);
        let y = vec![x[0] + Vec3::new(0.01, 0.0, 0.0), x[1]];
        let free = vec![x[0] + Vec3::new(0.01, 0.0, -0.0004), x[1]];
        let out = friction_filter(&x, &y, &free, &[pair], &[1.0, 0.0], 0.5, 0.001);
        assert!((out[0].x - (y[0].x - 0.0002)).abs() < 1e-15);
        assert_eq!(out[0].z, y[0].z);
    }

    #[test]
    fn separating_pair_untouched() {
        let (x, pair) = vv_contact(0.0005);
        let y = vec![x[0] + Vec3::new(0.01, 0.0, 0.002), x[1]];
        let out = friction_filter(&x, &y, &y, &[pair], &[1.0, 0.0], 0.5, 0.001);
        assert_eq!(out, y);
    }
}
