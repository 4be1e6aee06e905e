//! Plain-text mesh format.
//!
//! ```text
//! penalflow-mesh v1
//! <vertex count>
//! x y                 (one per vertex, 17 significant digits)
//! <triangle count>
//! v0 v1 v2 region
//! <facet count>
//! v0 v1 tag
//! ```

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{dist, Facet, Mesh};
use crate::error::{Error, Result};

pub const MESH_HEADER: &str = "penalflow-mesh v1";

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(64 * (mesh.num_vertices() + mesh.num_triangles()));
    writeln!(s, "{MESH_HEADER}").unwrap();
    writeln!(s, "{}", mesh.num_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:.16e} {:.16e}", v[0], v[1]).unwrap();
    }
    writeln!(s, "{}", mesh.num_triangles()).unwrap();
    for (t, r) in mesh.triangles.iter().zip(&mesh.regions) {
        writeln!(s, "{} {} {} {}", t[0], t[1], t[2], r).unwrap();
    }
    writeln!(s, "{}", mesh.facets.len()).unwrap();
    for f in &mesh.facets {
        writeln!(s, "{} {} {}", f.vertices[0], f.vertices[1], f.tag).unwrap();
    }
    s
}

/// Parses the text format. The file carries no target size, so
/// `h_target` is set to the longest edge.
pub fn mesh_from_str(text: &str, origin: &Path) -> Result<Mesh> {
    let bad = |line: usize, message: String| Error::Format {
        path: origin.to_path_buf(),
        message: format!("line {}: {message}", line + 1),
    };
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .map(|(i, l)| (i, l.trim()))
            .ok_or_else(|| bad(usize::MAX - 1, format!("unexpected end of file, expected {what}")))
    };
    let (i, header) = next("header")?;
    if header != MESH_HEADER {
        return Err(bad(i, format!("expected header `{MESH_HEADER}`, found `{header}`")));
    }
    let count = |(i, l): (usize, &str)| -> Result<usize> {
        l.parse::<usize>().map_err(|e| bad(i, format!("bad count `{l}`: {e}")))
    };
    let fields = |i: usize, l: &str, n: usize| -> Result<Vec<String>> {
        let f: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
        if f.len() != n {
            return Err(bad(i, format!("expected {n} fields, found {}", f.len())));
        }
        Ok(f)
    };
    let num = |i: usize, s: &str| -> Result<f64> { s.parse::<f64>().map_err(|e| bad(i, format!("bad number `{s}`: {e}"))) };
    let idx = |i: usize, s: &str| -> Result<usize> { s.parse::<usize>().map_err(|e| bad(i, format!("bad index `{s}`: {e}"))) };

    let nv = count(next("vertex count")?)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (i, l) = next("vertex")?;
        let f = fields(i, l, 2)?;
        vertices.push([num(i, &f[0])?, num(i, &f[1])?]);
    }
    let nt = count(next("triangle count")?)?;
    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (i, l) = next("triangle")?;
        let f = fields(i, l, 4)?;
        let tri = [idx(i, &f[0])?, idx(i, &f[1])?, idx(i, &f[2])?];
        if tri.iter().any(|&v| v >= nv) {
            return Err(bad(i, "triangle references a missing vertex".into()));
        }
        triangles.push(tri);
        regions.push(f[3].parse::<u32>().map_err(|e| bad(i, format!("bad region: {e}")))?);
    }
    let nf = count(next("facet count")?)?;
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (i, l) = next("facet")?;
        let f = fields(i, l, 3)?;
        let v = [idx(i, &f[0])?, idx(i, &f[1])?];
        if v.iter().any(|&v| v >= nv) {
            return Err(bad(i, "facet references a missing vertex".into()));
        }
        facets.push(Facet {
            vertices: v,
            tag: f[2].parse().map_err(|e: Error| bad(i, e.to_string()))?,
        });
    }
    let h_target = triangles
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(a, b)| dist(vertices[a], vertices[b]))
        .fold(0.0, f64::max);
    Ok(Mesh {
        vertices,
        triangles,
        regions,
        facets,
        h_target,
    })
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mesh_from_str(&text, path)
}

/// SHA-256 of the text serialization, hex encoded.
pub fn mesh_fingerprint(mesh: &Mesh) -> String {
    hex_digest(mesh_to_string(mesh).as_bytes())
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}
