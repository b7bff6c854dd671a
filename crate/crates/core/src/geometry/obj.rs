//! Minimal Wavefront OBJ reader and writer (`v`, `f`, `l` records).

use std::fmt::Write as _;
use std::path::Path;

use super::Vec3;
use crate::error::{Error, Result};

/// Geometry read from an OBJ file; indices are zero-based.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjData {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub segments: Vec<[usize; 2]>,
}

fn parse_index(tok: &str, n: usize, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head.parse().map_err(|_| Error::Parse { line, msg: format!("bad index '{tok}'") })?;
    let idx = if i > 0 {
        i as usize - 1
    } else if i < 0 && (-i) as usize <= n {
        n - (-i) as usize
    } else {
        return Err(Error::Parse { line, msg: format!("index {i} out of range") });
    };
    Ok(idx)
}

pub fn parse_obj(text: &str) -> Result<ObjData> {
    let mut out = ObjData::default();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let vals: Vec<f64> = toks
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad coordinate '{t}'") }))
                    .collect::<Result<_>>()?;
                if vals.len() != 3 {
                    return Err(Error::Parse { line, msg: "vertex needs 3 coordinates".into() });
                }
                out.positions.push(Vec3::new(vals[0], vals[1], vals[2]));
            }
            Some("f") => {
                let n = out.positions.len();
                let ids: Vec<usize> = toks.map(|t| parse_index(t, n, line)).collect::<Result<_>>()?;
                if ids.len() < 3 {
                    return Err(Error::Parse { line, msg: "face needs at least 3 vertices".into() });
                }
                for k in 1..ids.len() - 1 {
                    out.triangles.push([ids[0], ids[k], ids[k + 1]]);
                }
            }
            Some("l") => {
                let n = out.positions.len();
                let ids: Vec<usize> = toks.map(|t| parse_index(t, n, line)).collect::<Result<_>>()?;
                if ids.len() < 2 {
                    return Err(Error::Parse { line, msg: "line needs at least 2 vertices".into() });
                }
                for w in ids.windows(2) {
                    out.segments.push([w[0], w[1]]);
                }
            }
            _ => {}
        }
    }
    let n = out.positions.len();
    let bad = out.triangles.iter().flatten().chain(out.segments.iter().flatten()).find(|&&i| i >= n);
    if let Some(&i) = bad {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    Ok(out)
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<ObjData> {
    parse_obj(&std::fs::read_to_string(path)?)
}

pub fn format_obj(positions: &[Vec3], triangles: &[[usize; 3]], segments: &[[usize; 2]]) -> String {
    let mut s = String::with_capacity(positions.len() * 48 + triangles.len() * 24);
    for p in positions {
        let _ = writeln!(s, "v {:.9e} {:.9e} {:.9e}", p.x, p.y, p.z);
    }
    for t in triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    for l in segments {
        let _ = writeln!(s, "l {} {}", l[0] + 1, l[1] + 1);
    }
    s
}

pub fn write_obj(path: impl AsRef<Path>, positions: &[Vec3], triangles: &[[usize; 3]], segments: &[[usize; 2]]) -> Result<()> {
    std::fs::write(path, format_obj(positions, triangles, segments))?;
    Ok(())
}
