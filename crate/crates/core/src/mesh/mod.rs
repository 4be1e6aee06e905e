//! Interface-conforming triangular meshes of the channel.

mod generate;
pub mod io;
mod submesh;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use generate::{generate_mesh, refine_uniform};
pub use submesh::{extract_fluid_submesh, SubmeshMap};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub const FLUID: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetTag {
    Inflow,
    Outflow,
    Wall,
    Interface,
}

impl FacetTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FacetTag::Inflow => "inflow",
            FacetTag::Outflow => "outflow",
            FacetTag::Wall => "wall",
            FacetTag::Interface => "interface",
        }
    }
}

impl fmt::Display for FacetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FacetTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inflow" => Ok(FacetTag::Inflow),
            "outflow" => Ok(FacetTag::Outflow),
            "wall" => Ok(FacetTag::Wall),
            "interface" => Ok(FacetTag::Interface),
            other => Err(Error::InvalidInput(format!("unknown facet tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub tag: FacetTag,
}

/// Conforming triangulation with region and boundary tags.
///
/// Triangles are counterclockwise. `regions[t]` is 0 for fluid and the
/// obstacle id otherwise. Interface facets separate a fluid triangle from a
/// solid one; boundary facets tile the channel boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<u32>,
    pub facets: Vec<Facet>,
    pub h_target: f64,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn is_solid(&self, t: usize) -> bool {
        self.regions[t] != FLUID
    }

    /// Sum of triangle areas over triangles whose region passes `filter`.
    pub fn area_where(&self, filter: impl Fn(u32) -> bool) -> f64 {
        (0..self.num_triangles())
            .filter(|&t| filter(self.regions[t]))
            .map(|t| self.signed_area(t))
            .sum()
    }

    pub fn circumdiameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        let la = dist(b, c);
        let lb = dist(a, c);
        let lc = dist(a, b);
        la * lb * lc / (2.0 * self.signed_area(t).abs())
    }

    pub fn min_angle_deg(&self, t: usize) -> f64 {
        let p = self.triangle_points(t);
        (0..3)
            .map(|i| {
                let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(a, b) * dist(a, c));
                cos.clamp(-1.0, 1.0).acos().to_degrees()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Unique edges as sorted vertex pairs, in lexicographic order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [sorted(a, b), sorted(b, c), sorted(c, a)])
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Map from sorted edge to the triangles containing it.
    pub fn edge_triangles(&self) -> BTreeMap<[usize; 2], Vec<usize>> {
        let mut map: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            for e in [sorted(a, b), sorted(b, c), sorted(c, a)] {
                map.entry(e).or_default().push(t);
            }
        }
        map
    }

    pub fn facet_length(&self, facet: &Facet) -> f64 {
        dist(self.vertices[facet.vertices[0]], self.vertices[facet.vertices[1]])
    }

    /// Checks the structural invariants: positive areas, each edge shared
    /// by at most two triangles, boundary edges exactly covered by boundary
    /// facets and interface facets exactly at fluid/solid transitions.
    pub fn check_invariants(&self) -> Result<()> {
        if self.regions.len() != self.triangles.len() {
            return Err(Error::Internal("region tag count differs from triangle count".into()));
        }
        for t in 0..self.num_triangles() {
            if self.triangles[t].iter().any(|&v| v >= self.num_vertices()) {
                return Err(Error::Internal(format!("triangle {t} references a missing vertex")));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::Internal(format!("triangle {t} has non-positive area")));
            }
        }
        let mut tagged: BTreeMap<[usize; 2], FacetTag> = BTreeMap::new();
        for f in &self.facets {
            let key = sorted(f.vertices[0], f.vertices[1]);
            if tagged.insert(key, f.tag).is_some() {
                return Err(Error::Internal(format!("duplicate facet {key:?}")));
            }
        }
        for (edge, tris) in self.edge_triangles() {
            match tris.as_slice() {
                [_] => match tagged.get(&edge) {
                    Some(FacetTag::Interface) | None => {
                        return Err(Error::Internal(format!("boundary edge {edge:?} lacks a boundary tag")))
                    }
                    Some(_) => {}
                },
                [a, b] => {
                    let transition = (self.regions[*a] == FLUID) != (self.regions[*b] == FLUID);
                    let is_interface = tagged.get(&edge) == Some(&FacetTag::Interface);
                    if transition != is_interface {
                        return Err(Error::Internal(format!("interface tagging wrong on edge {edge:?}")));
                    }
                }
                _ => return Err(Error::Internal(format!("edge {edge:?} shared by {} triangles", tris.len()))),
            }
        }
        Ok(())
    }
}

/// Facets of `mesh` carrying `tag`, in storage order.
pub fn boundary_facets(mesh: &Mesh, tag: FacetTag) -> Vec<Facet> {
    mesh.facets.iter().copied().filter(|f| f.tag == tag).collect()
}

pub fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
