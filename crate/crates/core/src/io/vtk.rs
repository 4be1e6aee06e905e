//! Legacy ASCII VTK output on 6-node triangles.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::Spaces;
use crate::solver::Solution;

/// VTK_QUADRATIC_TRIANGLE.
pub const VTK_QUADRATIC_TRIANGLE: u8 = 22;

/// Pressure at every P2 node: vertex values, edge midpoints averaged.
pub fn pressure_at_nodes(spaces: &Spaces, pressure: &[f64]) -> Vec<f64> {
    let mut out = pressure.to_vec();
    out.extend(spaces.edges.iter().map(|&[a, b]| 0.5 * (pressure[a] + pressure[b])));
    out
}

pub fn vtk_string(spaces: &Spaces, solution: &Solution, title: &str) -> Result<String> {
    if solution.velocity.len() != spaces.n_u || solution.pressure.len() != spaces.n_p {
        return Err(Error::InvalidInput(format!(
            "solution has {} velocity and {} pressure values, spaces need {} and {}",
            solution.velocity.len(),
            solution.pressure.len(),
            spaces.n_u,
            spaces.n_p
        )));
    }
    let nodes = &spaces.node_coords;
    let tris = &spaces.triangle_nodes;
    let mut s = String::with_capacity(nodes.len() * 120);
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    // Writing to a String cannot fail.
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", nodes.len());
    for p in nodes {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {} {}", tris.len(), 7 * tris.len());
    for t in tris {
        // Local nodes are vertices then the midpoints of (0,1), (1,2), (2,0),
        // which is the VTK ordering.
        let _ = writeln!(s, "6 {} {} {} {} {} {}", t[0], t[1], t[2], t[3], t[4], t[5]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", tris.len());
    for _ in tris {
        let _ = writeln!(s, "{VTK_QUADRATIC_TRIANGLE}");
    }
    let _ = writeln!(s, "POINT_DATA {}\nVECTORS velocity double", nodes.len());
    for v in solution.velocity.chunks_exact(2) {
        let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
    }
    let _ = writeln!(s, "SCALARS pressure double 1\nLOOKUP_TABLE default");
    for p in pressure_at_nodes(spaces, &solution.pressure) {
        let _ = writeln!(s, "{p:e}");
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS region int 1\nLOOKUP_TABLE default", tris.len());
    for r in &spaces.mesh.regions {
        let _ = writeln!(s, "{r}");
    }
    Ok(s)
}

pub fn write_vtk(spaces: &Spaces, solution: &Solution, title: &str, path: &Path) -> Result<()> {
    let text = vtk_string(spaces, solution, title)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Fields read back from [`vtk_string`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkData {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub velocity: Vec<[f64; 3]>,
    pub pressure: Vec<f64>,
    pub region: Vec<i64>,
}

/// Reader for the subset of legacy VTK written here.
pub fn parse_vtk(text: &str) -> Result<VtkData> {
    let bad = |m: String| Error::Format {
        path: "<vtk>".into(),
        message: m,
    };
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or_default();
    if !magic.starts_with("# vtk DataFile") {
        return Err(bad(format!("bad magic line `{magic}`")));
    }
    let title = lines.next().unwrap_or_default().to_string();
    if lines.next() != Some("ASCII") || lines.next() != Some("DATASET UNSTRUCTURED_GRID") {
        return Err(bad("expected ASCII unstructured grid".into()));
    }
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut next = || tokens.next().ok_or_else(|| bad("unexpected end of file".into()));
    let mut data = VtkData {
        title,
        points: Vec::new(),
        cells: Vec::new(),
        cell_types: Vec::new(),
        velocity: Vec::new(),
        pressure: Vec::new(),
        region: Vec::new(),
    };
    fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
        s.parse().map_err(|_| Error::Format {
            path: "<vtk>".into(),
            message: format!("bad number `{s}`"),
        })
    }
    while let Ok(word) = next() {
        match word {
            "POINTS" => {
                let k: usize = num(next()?)?;
                next()?;
                for _ in 0..k {
                    data.points.push([num(next()?)?, num(next()?)?, num(next()?)?]);
                }
            }
            "CELLS" => {
                let k: usize = num(next()?)?;
                next()?;
                for _ in 0..k {
                    let len: usize = num(next()?)?;
                    data.cells.push((0..len).map(|_| num(next()?)).collect::<Result<_>>()?);
                }
            }
            "CELL_TYPES" => {
                let k: usize = num(next()?)?;
                for _ in 0..k {
                    data.cell_types.push(num(next()?)?);
                }
            }
            "POINT_DATA" | "CELL_DATA" => {
                next()?;
            }
            "VECTORS" => {
                next()?;
                next()?;
                for _ in 0..data.points.len() {
                    data.velocity.push([num(next()?)?, num(next()?)?, num(next()?)?]);
                }
            }
            "SCALARS" => {
                let name = next()?;
                let (_, _, _, _) = (next()?, next()?, next()?, next()?);
                if name == "pressure" {
                    for _ in 0..data.points.len() {
                        data.pressure.push(num(next()?)?);
                    }
                } else {
                    for _ in 0..data.cells.len() {
                        data.region.push(num(next()?)?);
                    }
                }
            }
            other => return Err(bad(format!("unexpected token `{other}`"))),
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem::build_spaces;
    use crate::fem::spaces::tests::two_triangles;
    use crate::fem::Scheme;
    use crate::solver::Diagnostics;

    fn diagnostics() -> Diagnostics {
        Diagnostics {
            scheme: Scheme::Real,
            m: 1.0,
            n: 0.0,
            newton_iterations: 0,
            total_newton_iterations: 0,
            max_stage_iterations: 0,
            stages: 0,
            final_residual_norm: 0.0,
            residual_scale: 0.0,
            residual_history: Vec::new(),
            converged: true,
            max_linear_residual: 0.0,
        }
    }

    #[test]
    fn zero_solution_parses_back() {
        let spaces = build_spaces(Arc::new(two_triangles()));
        let sol = Solution {
            velocity: vec![0.0; spaces.n_u],
            pressure: vec![0.0; spaces.n_p],
            diagnostics: diagnostics(),
        };
        let data = parse_vtk(&vtk_string(&spaces, &sol, "zero").unwrap()).unwrap();
        assert_eq!(data.title, "zero");
        assert_eq!(data.points.len(), 9);
        assert_eq!(data.cells.len(), 2);
        assert!(data.cells.iter().all(|c| c.len() == 6));
        assert_eq!(data.cell_types, vec![22, 22]);
        assert!(data.velocity.iter().flatten().all(|&v| v == 0.0));
        assert!(data.pressure.iter().all(|&p| p == 0.0));
        assert_eq!(data.region, vec![0, 1]);
    }

    #[test]
    fn midpoint_pressure_is_edge_average() {
        let spaces = build_spaces(Arc::new(two_triangles()));
        let pressure: Vec<f64> = spaces.mesh.vertices.iter().map(|p| 3.0 * p[0] - p[1]).collect();
        let nodal = pressure_at_nodes(&spaces, &pressure);
        for (p, x) in nodal.iter().zip(&spaces.node_coords) {
            assert!((p - (3.0 * x[0] - x[1])).abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_solution_is_rejected() {
        let spaces = build_spaces(Arc::new(two_triangles()));
        let sol = Solution {
            velocity: vec![0.0; 3],
            pressure: vec![0.0; spaces.n_p],
            diagnostics: diagnostics(),
        };
        assert!(matches!(vtk_string(&spaces, &sol, "x"), Err(Error::InvalidInput(_))));
    }
}
