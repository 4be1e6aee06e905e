use std::collections::BTreeMap;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use tracing::debug;

use super::{dist, sorted, Facet, FacetTag, Mesh, FLUID};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

const MIN_ANGLE_DEG: f64 = 20.0;
const MAX_QUALITY_PASSES: usize = 40;

/// Meshes the channel so that every obstacle boundary is a chain of mesh
/// edges.
///
/// Constraint segments are subdivided to length <= `h_target`, the interior
/// is seeded with an equilateral lattice of spacing `h_target`, and the
/// constrained Delaunay triangulation is refined until every angle is at
/// least 20 degrees and every circumdiameter at most `2 h_target`.
pub fn generate_mesh(geometry: &Geometry, h_target: f64) -> Result<Mesh> {
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(Error::Meshing(format!("h_target must be positive, got {h_target}")));
    }
    geometry.validate()?;
    for o in &geometry.obstacles {
        for (k, (a, b)) in o.edges().enumerate() {
            if dist(a, b) < h_target / 4.0 {
                return Err(Error::Meshing(format!(
                    "obstacle {} edge {k} from ({}, {}) to ({}, {}) has length {:.3e}, below h/4 = {:.3e}",
                    o.id,
                    a[0],
                    a[1],
                    b[0],
                    b[1],
                    dist(a, b),
                    h_target / 4.0
                )));
            }
        }
    }

    let segments = constraint_segments(geometry, h_target);

    let mut cdt = Cdt::new();
    let mut handles: BTreeMap<(u64, u64), spade::handles::FixedVertexHandle> = BTreeMap::new();
    let mut insert = |cdt: &mut Cdt, p: Point| -> Result<spade::handles::FixedVertexHandle> {
        let key = (p[0].to_bits(), p[1].to_bits());
        if let Some(&h) = handles.get(&key) {
            return Ok(h);
        }
        let h = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::Meshing(format!("vertex insertion failed at ({}, {}): {e:?}", p[0], p[1])))?;
        handles.insert(key, h);
        Ok(h)
    };

    for &(a, b) in &segments {
        let ha = insert(&mut cdt, a)?;
        let hb = insert(&mut cdt, b)?;
        if ha != hb {
            cdt.add_constraint(ha, hb);
        }
    }
    for p in lattice_points(geometry, h_target, &segments) {
        insert(&mut cdt, p)?;
    }

    let max_area = 0.5 * h_target * h_target;
    let mut passes = 0;
    loop {
        let result = cdt.refine(
            RefinementParameters::<f64>::new()
                .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEG))
                .with_max_allowed_area(max_area)
                .with_max_additional_vertices(20 * cdt.num_vertices() + 1000),
        );
        if !result.refinement_complete {
            return Err(Error::Meshing("quality refinement ran out of vertices".into()));
        }
        let oversized: Vec<Point> = cdt
            .inner_faces()
            .filter_map(|f| {
                let p = f.positions().map(|q| [q.x, q.y]);
                (circumdiameter(p) > 2.0 * h_target).then(|| centroid(p))
            })
            .collect();
        if oversized.is_empty() {
            break;
        }
        passes += 1;
        if passes > MAX_QUALITY_PASSES {
            return Err(Error::Meshing(format!(
                "{} triangles still exceed circumdiameter 2h after {MAX_QUALITY_PASSES} passes",
                oversized.len()
            )));
        }
        for p in oversized {
            cdt.insert(Point2::new(p[0], p[1]))
                .map_err(|e| Error::Meshing(format!("steiner insertion failed: {e:?}")))?;
        }
    }

    let vertices: Vec<Point> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| v.fix().index());
        let tri = [a, b, c];
        let pts = tri.map(|i| vertices[i]);
        let area = 0.5 * ((pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1]) - (pts[2][0] - pts[0][0]) * (pts[1][1] - pts[0][1]));
        triangles.push(if area > 0.0 { tri } else { [a, c, b] });
    }
    let regions: Vec<u32> = triangles
        .iter()
        .map(|t| geometry.region_of(centroid(t.map(|i| vertices[i]))))
        .collect();

    let mut mesh = Mesh {
        vertices,
        triangles,
        regions,
        facets: Vec::new(),
        h_target,
    };
    mesh.facets = tag_facets(&mesh, geometry.length);
    debug!(
        vertices = mesh.num_vertices(),
        triangles = mesh.num_triangles(),
        "generated mesh"
    );
    mesh.check_invariants()
        .map_err(|e| Error::Meshing(format!("generated mesh violates invariants: {e}")))?;
    Ok(mesh)
}

/// Splits every triangle into four through its edge midpoints.
///
/// New vertices are appended in sorted-edge order, so the refinement is
/// deterministic. Region tags are inherited and facets are split in two.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let edges = mesh.edges();
    let base = mesh.num_vertices();
    let index: BTreeMap<[usize; 2], usize> = edges.iter().enumerate().map(|(k, &e)| (e, base + k)).collect();
    let mut vertices = mesh.vertices.clone();
    for &[a, b] in &edges {
        let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
    }
    let mut triangles = Vec::with_capacity(4 * mesh.num_triangles());
    let mut regions = Vec::with_capacity(4 * mesh.num_triangles());
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let ab = index[&sorted(a, b)];
        let bc = index[&sorted(b, c)];
        let ca = index[&sorted(c, a)];
        for tri in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            triangles.push(tri);
            regions.push(mesh.regions[t]);
        }
    }
    let facets = mesh
        .facets
        .iter()
        .flat_map(|f| {
            let mid = index[&sorted(f.vertices[0], f.vertices[1])];
            [
                Facet { vertices: [f.vertices[0], mid], tag: f.tag },
                Facet { vertices: [mid, f.vertices[1]], tag: f.tag },
            ]
        })
        .collect();
    Mesh {
        vertices,
        triangles,
        regions,
        facets,
        h_target: 0.5 * mesh.h_target,
    }
}

/// Boundary and interface facets in sorted-edge order.
fn tag_facets(mesh: &Mesh, length: f64) -> Vec<Facet> {
    let mut facets = Vec::new();
    for (edge, tris) in mesh.edge_triangles() {
        let (p, q) = (mesh.vertices[edge[0]], mesh.vertices[edge[1]]);
        match tris.as_slice() {
            [_] => {
                let tag = if p[0] == 0.0 && q[0] == 0.0 {
                    FacetTag::Inflow
                } else if p[0] == length && q[0] == length {
                    FacetTag::Outflow
                } else {
                    FacetTag::Wall
                };
                facets.push(Facet { vertices: edge, tag });
            }
            [a, b] if (mesh.regions[*a] == FLUID) != (mesh.regions[*b] == FLUID) => {
                facets.push(Facet {
                    vertices: edge,
                    tag: FacetTag::Interface,
                });
            }
            _ => {}
        }
    }
    facets
}

/// Channel boundary plus obstacle edges, subdivided to length <= h.
fn constraint_segments(geometry: &Geometry, h: f64) -> Vec<(Point, Point)> {
    let (l, hh) = (geometry.length, geometry.height);
    let tol = 1e-12 * l.max(hh);
    // Breakpoints along each side, parametrized by the free coordinate.
    let mut bottom = vec![0.0, l];
    let mut top = vec![0.0, l];
    let mut left = vec![0.0, hh];
    let mut right = vec![0.0, hh];
    for o in &geometry.obstacles {
        for &v in &o.vertices {
            if v[1].abs() <= tol {
                bottom.push(v[0]);
            }
            if (v[1] - hh).abs() <= tol {
                top.push(v[0]);
            }
            if v[0].abs() <= tol {
                left.push(v[1]);
            }
            if (v[0] - l).abs() <= tol {
                right.push(v[1]);
            }
        }
    }
    let mut segments = Vec::new();
    let mut side = |mut stops: Vec<f64>, to_point: &dyn Fn(f64) -> Point| {
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        for w in stops.windows(2) {
            subdivide(to_point(w[0]), to_point(w[1]), h, &mut segments);
        }
    };
    side(bottom, &|s| [s, 0.0]);
    side(right, &|s| [l, s]);
    side(top, &|s| [s, hh]);
    side(left, &|s| [0.0, s]);
    for o in &geometry.obstacles {
        for (a, b) in o.edges() {
            if !geometry.segment_on_channel_boundary(a, b) {
                subdivide(a, b, h, &mut segments);
            }
        }
    }
    segments
}

fn subdivide(a: Point, b: Point, h: f64, out: &mut Vec<(Point, Point)>) {
    let n = ((dist(a, b) / h) - 1e-9).ceil().max(1.0) as usize;
    let point = |k: usize| -> Point {
        if k == 0 {
            a
        } else if k == n {
            b
        } else {
            let s = k as f64 / n as f64;
            // Keep coordinates exact along axis-aligned segments.
            [
                if a[0] == b[0] { a[0] } else { a[0] + s * (b[0] - a[0]) },
                if a[1] == b[1] { a[1] } else { a[1] + s * (b[1] - a[1]) },
            ]
        }
    };
    for k in 0..n {
        out.push((point(k), point(k + 1)));
    }
}

/// Equilateral lattice points at least `0.55 h` from every constraint.
fn lattice_points(geometry: &Geometry, h: f64, segments: &[(Point, Point)]) -> Vec<Point> {
    let dy = h * 3f64.sqrt() / 2.0;
    let clearance = 0.55 * h;
    let mut points = Vec::new();
    let mut j = 1usize;
    loop {
        let y = j as f64 * dy;
        if y >= geometry.height {
            break;
        }
        let mut x = if j % 2 == 1 { 0.5 * h } else { h };
        while x < geometry.length {
            let p = [x, y];
            if segments.iter().all(|&(a, b)| point_segment_distance(p, a, b) >= clearance) {
                points.push(p);
            }
            x += h;
        }
        j += 1;
    }
    points
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + s * d[0], a[1] + s * d[1]])
}

fn centroid(p: [Point; 3]) -> Point {
    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
}

fn circumdiameter(p: [Point; 3]) -> f64 {
    let area2 = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
    dist(p[1], p[2]) * dist(p[0], p[2]) * dist(p[0], p[1]) / area2
}
