use crate::geometry::Vec3;

/// Axis-aligned box.
#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Aabb {
    pub fn of(points: impl IntoIterator<Item = Vec3>, pad: f64) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in points {
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        Aabb { lo: lo.add_scalar(-pad), hi: hi.add_scalar(pad) }
    }

    fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.lo[k] <= o.hi[k] && o.lo[k] <= self.hi[k])
    }
}

/// Sort-and-sweep along x; returns all overlapping `(i, j)` with `i` from `a`, `j` from `b`.
/// With `same = true` the lists are one set and only `i < j` is reported.
pub fn overlapping(a: &[Aabb], b: &[Aabb], same: bool) -> Vec<(usize, usize)> {
    let mut events: Vec<(f64, bool, usize)> = a.iter().enumerate().map(|(i, bx)| (bx.lo.x, true, i)).collect();
    if !same {
        events.extend(b.iter().enumerate().map(|(j, bx)| (bx.lo.x, false, j)));
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut act_a: Vec<usize> = Vec::new();
    let mut act_b: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for (x, is_a, i) in events {
        act_a.retain(|&k| a[k].hi.x >= x);
        act_b.retain(|&k| b[k].hi.x >= x);
        if is_a {
            let me = &a[i];
            if same {
                for &k in &act_a {
                    if me.overlaps(&a[k]) {
                        out.push((k.min(i), k.max(i)));
                    }
                }
            } else {
                for &k in &act_b {
                    if me.overlaps(&b[k]) {
                        out.push((i, k));
                    }
                }
            }
            act_a.push(i);
        } else {
            let me = &b[i];
            for &k in &act_a {
                if me.overlaps(&a[k]) {
                    out.push((k, i));
                }
            }
            act_b.push(i);
        }
    }
    out.sort_unstable();
    out
}
