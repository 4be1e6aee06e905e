use super::{sorted, Facet, FacetTag, Mesh, FLUID};
use crate::error::{Error, Result};

/// Fluid-only submesh together with its embedding into the parent mesh.
#[derive(Debug, Clone)]
pub struct SubmeshMap {
    pub mesh: Mesh,
    /// Submesh vertex index -> parent vertex index (strictly increasing).
    pub vertex_map: Vec<usize>,
    /// Submesh triangle index -> parent triangle index.
    pub triangle_map: Vec<usize>,
}

/// Keeps the fluid triangles; former interface edges become no-slip walls.
pub fn extract_fluid_submesh(mesh: &Mesh) -> Result<SubmeshMap> {
    let triangle_map: Vec<usize> = (0..mesh.num_triangles()).filter(|&t| mesh.regions[t] == FLUID).collect();
    if triangle_map.is_empty() {
        return Err(Error::InvalidInput("mesh has no fluid triangles".into()));
    }
    let mut used = vec![false; mesh.num_vertices()];
    for &t in &triangle_map {
        for v in mesh.triangles[t] {
            used[v] = true;
        }
    }
    let vertex_map: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| used[v]).collect();
    let mut inverse = vec![usize::MAX; mesh.num_vertices()];
    for (sub, &parent) in vertex_map.iter().enumerate() {
        inverse[parent] = sub;
    }

    let edge_tris = mesh.edge_triangles();
    let facets = mesh
        .facets
        .iter()
        .filter(|f| {
            edge_tris[&sorted(f.vertices[0], f.vertices[1])]
                .iter()
                .any(|&t| mesh.regions[t] == FLUID)
        })
        .map(|f| Facet {
            vertices: f.vertices.map(|v| inverse[v]),
            tag: match f.tag {
                FacetTag::Interface => FacetTag::Wall,
                other => other,
            },
        })
        .collect();

    let sub = Mesh {
        vertices: vertex_map.iter().map(|&v| mesh.vertices[v]).collect(),
        triangles: triangle_map
            .iter()
            .map(|&t| mesh.triangles[t].map(|v| inverse[v]))
            .collect(),
        regions: vec![FLUID; triangle_map.len()],
        facets,
        h_target: mesh.h_target,
    };
    Ok(SubmeshMap {
        mesh: sub,
        vertex_map,
        triangle_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_geometry, CaseId};
    use crate::mesh::generate_mesh;

    #[test]
    fn plain_channel_submesh_is_identity() {
        let g = make_geometry(CaseId::NoObstacle, 64).unwrap();
        let mesh = generate_mesh(&g, 0.5).unwrap();
        let sub = extract_fluid_submesh(&mesh).unwrap();
        assert_eq!(sub.mesh, mesh);
        assert!(sub.vertex_map.iter().enumerate().all(|(i, &v)| i == v));
    }

    #[test]
    fn all_solid_mesh_is_invalid() {
        let g = make_geometry(CaseId::NoObstacle, 64).unwrap();
        let mut mesh = generate_mesh(&g, 1.0).unwrap();
        mesh.regions.iter_mut().for_each(|r| *r = 1);
        assert!(matches!(extract_fluid_submesh(&mesh), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn box_wall_submesh_walls_follow_the_box() {
        let g = make_geometry(CaseId::BoxWall, 64).unwrap();
        let mesh = generate_mesh(&g, 0.1).unwrap();
        let sub = extract_fluid_submesh(&mesh).unwrap();
        sub.mesh.check_invariants().unwrap();
        assert!((sub.mesh.area_where(|_| true) - (8.0 - 0.12)).abs() < 1e-10);
        for (i, &p) in sub.vertex_map.iter().enumerate() {
            assert_eq!(sub.mesh.vertices[i], mesh.vertices[p]);
        }
        assert!(sub.mesh.facets.iter().all(|f| f.tag != FacetTag::Interface));
        // Every submesh boundary vertex on the box outline sits on a wall facet.
        let on_box = |p: [f64; 2]| {
            (0.9..=1.1).contains(&p[0]) && p[1] > 0.0 && p[1] <= 0.6
        };
        for f in &sub.mesh.facets {
            for v in f.vertices {
                if on_box(sub.mesh.vertices[v]) {
                    assert_eq!(f.tag, FacetTag::Wall);
                }
            }
        }
    }
}
