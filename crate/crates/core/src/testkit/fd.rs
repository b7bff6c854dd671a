//! Central finite differences.

use crate::geometry::Vec3;

/// Gradient of `f` at `x` by central differences with step `h`.
pub fn central_gradient(f: impl Fn(&[Vec3]) -> f64, x: &[Vec3], h: f64) -> Vec<Vec3> {
    let mut work = x.to_vec();
    let mut g = vec![Vec3::zeros(); x.len()];
    for v in 0..x.len() {
        for k in 0..3 {
            let orig = work[v][k];
            work[v][k] = orig + h;
            let fp = f(&work);
            work[v][k] = orig - h;
            let fm = f(&work);
            work[v][k] = orig;
            g[v][k] = (fp - fm) / (2.0 * h);
        }
    }
    g
}

/// `|a - b| / max(|a|, |b|)` over the stacked vectors; zero when both vanish.
pub fn relative_error(a: &[Vec3], b: &[Vec3]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt();
    let denom = na.max(nb);
    if denom == 0.0 {
        0.0
    } else {
        diff / denom
    }
}
