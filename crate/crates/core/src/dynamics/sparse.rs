//! 3x3-block sparse symmetric matrices and block-Jacobi preconditioned CG.

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::geometry::Vec3;

pub type Mat3 = Matrix3<f64>;

/// Accumulates `(row, col, block)` triplets.
#[derive(Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, Mat3)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, entries: Vec::new() }
    }

    pub fn add(&mut self, i: usize, j: usize, m: Mat3) {
        self.entries.push((i, j, m));
    }

    /// Adds `m` to the four blocks coupling `i` and `j` with signs `(+, -, -, +)` scaled by `s_i s_j`.
    pub fn add_pair(&mut self, i: usize, j: usize, si: f64, sj: f64, m: Mat3) {
        self.add(i, i, m * (si * si));
        self.add(j, j, m * (sj * sj));
        self.add(i, j, m * (si * sj));
        self.add(j, i, m * (si * sj));
    }

    pub fn build(mut self) -> BlockSparse {
        self.entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut rows: Vec<Vec<(usize, Mat3)>> = vec![Vec::new(); self.n];
        for (i, j, m) in self.entries {
            let row = &mut rows[i];
            match row.last_mut() {
                Some((c, acc)) if *c == j => *acc += m,
                _ => row.push((j, m)),
            }
        }
        BlockSparse { rows }
    }
}

/// Row-compressed block matrix.
#[derive(Clone, Debug)]
pub struct BlockSparse {
    pub rows: Vec<Vec<(usize, Mat3)>>,
}

impl BlockSparse {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn diagonal(&self, i: usize) -> Mat3 {
        self.rows[i].iter().find(|(j, _)| *j == i).map(|(_, m)| *m).unwrap_or_else(Mat3::zeros)
    }

    /// `A x` restricted to unmasked rows and columns.
    pub fn mul_masked(&self, x: &[Vec3], free: &[bool]) -> Vec<Vec3> {
        self.rows
            .par_iter()
            .enumerate()
            .map(|(i, row)| {
                if !free[i] {
                    return Vec3::zeros();
                }
                row.iter().filter(|(j, _)| free[*j]).fold(Vec3::zeros(), |acc, (j, m)| acc + m * x[*j])
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n();
        let mut d = nalgebra::DMatrix::zeros(3 * n, 3 * n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, m) in row {
                d.view_mut((3 * i, 3 * *j), (3, 3)).copy_from(m);
            }
        }
        d
    }
}

/// Outcome of a PCG solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct PcgInfo {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Solves `A x = b` on the free vertices (masked ones stay zero) with a
/// 3x3 block-Jacobi preconditioner. Stops at `|r| <= tol |b|` or `max_iter`.
pub fn pcg(a: &BlockSparse, b: &[Vec3], free: &[bool], tol: f64, max_iter: usize) -> (Vec<Vec3>, PcgInfo) {
    let n = a.n();
    let precond: Vec<Mat3> = (0..n)
        .map(|i| {
            if !free[i] {
                return Mat3::zeros();
            }
            let d = a.diagonal(i);
            d.try_inverse().unwrap_or_else(|| {
                let s = d.trace() / 3.0;
                if s > 0.0 {
                    Mat3::identity() / s
                } else {
                    Mat3::identity()
                }
            })
        })
        .collect();
    let apply_p = |r: &[Vec3]| -> Vec<Vec3> { r.iter().zip(&precond).map(|(v, p)| p * v).collect() };
    let mut x = vec![Vec3::zeros(); n];
    let mut r: Vec<Vec3> = b.iter().zip(free).map(|(v, &f)| if f { *v } else { Vec3::zeros() }).collect();
    let bnorm = dot(&r, &r).sqrt();
    if bnorm == 0.0 {
        return (x, PcgInfo { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let mut z = apply_p(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut info = PcgInfo::default();
    for it in 0..max_iter {
        let ap = a.mul_masked(&p, free);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        info.iterations = it + 1;
        let rn = dot(&r, &r).sqrt();
        info.relative_residual = rn / bnorm;
        if rn <= tol * bnorm {
            info.converged = true;
            break;
        }
        z = apply_p(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + p[i] * beta;
        }
    }
    (x, info)
}
