//! Exhaustive active-set LCP solver for small systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const TOL: f64 = 1e-10;

/// Solves `lambda >= 0, w = A lambda + q >= 0, lambda . w = 0` by trying
/// every active set, smallest first.
pub fn lcp_enumerate(a: &DMatrix<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    let n = q.len();
    assert!(n <= 12, "enumeration is limited to 12 unknowns");
    assert_eq!(a.shape(), (n, n));
    let scale = 1.0 + a.amax() + q.amax();
    let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let active: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let k = active.len();
        let mut lambda = DVector::zeros(n);
        if k > 0 {
            let sub = DMatrix::from_fn(k, k, |i, j| a[(active[i], active[j])]);
            let rhs = DVector::from_fn(k, |i, _| -q[active[i]]);
            let Some(sol) = sub.lu().solve(&rhs) else { continue };
            if sol.iter().any(|v| !v.is_finite() || *v < -TOL * scale) {
                continue;
            }
            for (i, &ai) in active.iter().enumerate() {
                lambda[ai] = sol[i].max(0.0);
            }
        }
        let w = a * &lambda + q;
        if w.iter().all(|&v| v >= -TOL * scale) {
            return Ok(lambda);
        }
    }
    Err(Error::Config("LCP has no feasible active set".into()))
}
