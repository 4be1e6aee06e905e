//! Norms, error records and empirical rate fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::basis::{bary_grads, p2_grads, p2_values};
use crate::fem::quadrature::quadrature_rule;
use crate::fem::{Scheme, Spaces};
use crate::geometry::Point;
use crate::mesh::{SubmeshMap, FLUID};
use crate::solver::Solution;

/// Which triangles a norm integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    All,
    Fluid,
    Solid,
    /// One obstacle by id.
    Obstacle(u32),
}

impl Region {
    pub fn contains(self, tag: u32) -> bool {
        match self {
            Region::All => true,
            Region::Fluid => tag == FLUID,
            Region::Solid => tag != FLUID,
            Region::Obstacle(id) => tag == id,
        }
    }
}

/// Per-triangle `(∫|u|², ∫|∇u|²)` of a P2 velocity field.
fn triangle_integrals(field: &[f64], spaces: &Spaces) -> Result<Vec<(f64, f64)>> {
    if field.len() != spaces.n_u {
        return Err(Error::InvalidInput(format!(
            "velocity field has length {}, spaces need {}",
            field.len(),
            spaces.n_u
        )));
    }
    let rule = quadrature_rule(5)?;
    let mesh = &spaces.mesh;
    Ok((0..mesh.num_triangles())
        .map(|t| {
            let (dl, area) = bary_grads(&mesh.triangle_points(t));
            let nodes = &spaces.triangle_nodes[t];
            let coef: [[f64; 2]; 6] = std::array::from_fn(|i| [field[2 * nodes[i]], field[2 * nodes[i] + 1]]);
            let (mut l2, mut h1) = (0.0, 0.0);
            for (l, w) in rule.barycentric().zip(&rule.weights) {
                let phi = p2_values(l);
                let gphi = p2_grads(l, &dl);
                let mut u = [0.0; 2];
                let mut g = [[0.0; 2]; 2];
                for i in 0..6 {
                    for c in 0..2 {
                        u[c] += coef[i][c] * phi[i];
                        g[c][0] += coef[i][c] * gphi[i][0];
                        g[c][1] += coef[i][c] * gphi[i][1];
                    }
                }
                l2 += w * (u[0] * u[0] + u[1] * u[1]);
                h1 += w * (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]);
            }
            (2.0 * area * l2, 2.0 * area * h1)
        })
        .collect())
}

fn region_sum(spaces: &Spaces, ints: &[(f64, f64)], region: Region) -> (f64, f64) {
    let mesh = &spaces.mesh;
    let mut any = false;
    let (mut l2, mut h1) = (0.0, 0.0);
    for (t, &(a, b)) in ints.iter().enumerate() {
        if region.contains(mesh.regions[t]) {
            any = true;
            l2 += a;
            h1 += b;
        }
    }
    if !any {
        tracing::warn!(?region, "norm over an empty region");
    }
    (l2, h1)
}

/// `‖u‖_{L²(region)}`; zero (with a warning) for an empty region.
pub fn norm_l2(field: &[f64], spaces: &Spaces, region: Region) -> Result<f64> {
    Ok(region_sum(spaces, &triangle_integrals(field, spaces)?, region).0.sqrt())
}

/// `|u|_{H¹(region)}`.
pub fn seminorm_h1(field: &[f64], spaces: &Spaces, region: Region) -> Result<f64> {
    Ok(region_sum(spaces, &triangle_integrals(field, spaces)?, region).1.sqrt())
}

/// True if no triangle of the mesh lies in `region`.
pub fn region_is_empty(spaces: &Spaces, region: Region) -> bool {
    !spaces.mesh.regions.iter().any(|&r| region.contains(r))
}

/// L² and H¹-seminorm errors of a discrete field against an analytic one,
/// using the degree-6 rule.
pub fn analytic_errors(
    field: &[f64],
    spaces: &Spaces,
    exact: impl Fn(Point) -> [f64; 2],
    exact_grad: impl Fn(Point) -> [[f64; 2]; 2],
) -> Result<(f64, f64)> {
    if field.len() != spaces.n_u {
        return Err(Error::InvalidInput("velocity field does not match spaces".into()));
    }
    let rule = quadrature_rule(6)?;
    let mesh = &spaces.mesh;
    let (mut l2, mut h1) = (0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let pts = mesh.triangle_points(t);
        let (dl, area) = bary_grads(&pts);
        let nodes = &spaces.triangle_nodes[t];
        for (l, w) in rule.barycentric().zip(&rule.weights) {
            let x = [
                l[0] * pts[0][0] + l[1] * pts[1][0] + l[2] * pts[2][0],
                l[0] * pts[0][1] + l[1] * pts[1][1] + l[2] * pts[2][1],
            ];
            let phi = p2_values(l);
            let gphi = p2_grads(l, &dl);
            let (ue, ge) = (exact(x), exact_grad(x));
            let ww = 2.0 * area * w;
            for c in 0..2 {
                let mut u = 0.0;
                let mut g = [0.0; 2];
                for i in 0..6 {
                    let v = field[2 * nodes[i] + c];
                    u += v * phi[i];
                    g[0] += v * gphi[i][0];
                    g[1] += v * gphi[i][1];
                }
                l2 += ww * (u - ue[c]).powi(2);
                h1 += ww * ((g[0] - ge[c][0]).powi(2) + (g[1] - ge[c][1]).powi(2));
            }
        }
    }
    Ok((l2.sqrt(), h1.sqrt()))
}

/// Prolongs a velocity on the fluid submesh to the parent mesh by zero.
pub fn extend_by_zero(
    sub_velocity: &[f64],
    sub_spaces: &Spaces,
    submap: &SubmeshMap,
    spaces: &Spaces,
) -> Result<Vec<f64>> {
    if sub_velocity.len() != sub_spaces.n_u {
        return Err(Error::InvalidInput("submesh velocity does not match submesh spaces".into()));
    }
    if submap.vertex_map.len() != sub_spaces.mesh.num_vertices() {
        return Err(Error::Internal("submesh map does not match submesh spaces".into()));
    }
    let nv_sub = sub_spaces.mesh.num_vertices();
    let mut out = vec![0.0; spaces.n_u];
    let mut mapped = vec![false; spaces.num_nodes()];
    for node in 0..sub_spaces.num_nodes() {
        let parent = if node < nv_sub {
            submap.vertex_map[node]
        } else {
            let [a, b] = sub_spaces.edges[node - nv_sub];
            spaces
                .edge_node(submap.vertex_map[a], submap.vertex_map[b])
                .ok_or_else(|| Error::Internal(format!("submesh edge {a}-{b} has no parent edge")))?
        };
        out[2 * parent] = sub_velocity[2 * node];
        out[2 * parent + 1] = sub_velocity[2 * node + 1];
        mapped[parent] = true;
    }
    let mesh = &spaces.mesh;
    for t in (0..mesh.num_triangles()).filter(|&t| mesh.regions[t] == FLUID) {
        if let Some(&node) = spaces.triangle_nodes[t].iter().find(|&&k| !mapped[k]) {
            return Err(Error::Internal(format!("fluid node {node} of triangle {t} is not mapped")));
        }
    }
    Ok(out)
}

/// Errors of one penalized solve against the real-obstacle reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ErrorRecord {
    pub scheme: Scheme,
    pub m: f64,
    pub n: f64,
    pub err_L2_Omega: f64,
    pub err_H1semi_Omega: f64,
    pub err_L2_OmegaF: f64,
    pub err_H1semi_OmegaF: f64,
    pub norm_L2_OmegaS: f64,
    pub norm_H1semi_OmegaS: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    ErrL2Omega,
    ErrH1SemiOmega,
    ErrL2OmegaF,
    ErrH1SemiOmegaF,
    NormL2OmegaS,
    NormH1SemiOmegaS,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::ErrL2Omega,
        Metric::ErrH1SemiOmega,
        Metric::ErrL2OmegaF,
        Metric::ErrH1SemiOmegaF,
        Metric::NormL2OmegaS,
        Metric::NormH1SemiOmegaS,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Metric::ErrL2Omega => "err_L2_Omega",
            Metric::ErrH1SemiOmega => "err_H1semi_Omega",
            Metric::ErrL2OmegaF => "err_L2_OmegaF",
            Metric::ErrH1SemiOmegaF => "err_H1semi_OmegaF",
            Metric::NormL2OmegaS => "norm_L2_OmegaS",
            Metric::NormH1SemiOmegaS => "norm_H1semi_OmegaS",
        }
    }
}

impl ErrorRecord {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::ErrL2Omega => self.err_L2_Omega,
            Metric::ErrH1SemiOmega => self.err_H1semi_Omega,
            Metric::ErrL2OmegaF => self.err_L2_OmegaF,
            Metric::ErrH1SemiOmegaF => self.err_H1semi_OmegaF,
            Metric::NormL2OmegaS => self.norm_L2_OmegaS,
            Metric::NormH1SemiOmegaS => self.norm_H1semi_OmegaS,
        }
    }

    /// The penalty that drives this record's scheme.
    pub fn active_parameter(&self) -> f64 {
        self.scheme.active_parameter(self.m, self.n)
    }
}

/// All six metrics of `approx` against `reference` on the shared mesh.
pub fn error_record(reference: &[f64], approx: &Solution, spaces: &Spaces) -> Result<ErrorRecord> {
    if reference.len() != spaces.n_u || approx.velocity.len() != spaces.n_u {
        return Err(Error::InvalidInput(format!(
            "reference ({}) and approximation ({}) must both have {} velocity dofs",
            reference.len(),
            approx.velocity.len(),
            spaces.n_u
        )));
    }
    let diff: Vec<f64> = approx.velocity.iter().zip(reference).map(|(a, r)| a - r).collect();
    let err = triangle_integrals(&diff, spaces)?;
    let app = triangle_integrals(&approx.velocity, spaces)?;
    let (l2_all, h1_all) = region_sum(spaces, &err, Region::All);
    let (l2_f, h1_f) = region_sum(spaces, &err, Region::Fluid);
    let (l2_s, h1_s) = region_sum(spaces, &app, Region::Solid);
    let d = &approx.diagnostics;
    Ok(ErrorRecord {
        scheme: d.scheme,
        m: d.m,
        n: d.n,
        err_L2_Omega: l2_all.sqrt(),
        err_H1semi_Omega: h1_all.sqrt(),
        err_L2_OmegaF: l2_f.sqrt(),
        err_H1semi_OmegaF: h1_f.sqrt(),
        norm_L2_OmegaS: l2_s.sqrt(),
        norm_H1semi_OmegaS: h1_s.sqrt(),
        newton_iterations: d.newton_iterations,
    })
}

/// Least-squares line through `(log10 p, log10 e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// Root-mean-square misfit in log10 units.
    pub residual: f64,
    pub points: usize,
    /// Points in the window dropped because their error was zero.
    pub excluded_zero: usize,
}

pub fn fit_rate(points: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidInput(format!("invalid rate window [{lo:e}, {hi:e}]")));
    }
    let slack = 1e-9;
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(p, e)| p > 0.0 && p >= lo * (1.0 - slack) && p <= hi * (1.0 + slack) && e.is_finite())
        .collect();
    let excluded_zero = inside.iter().filter(|&&(_, e)| e <= 0.0).count();
    if excluded_zero > 0 {
        tracing::warn!(excluded_zero, "zero errors excluded from rate fit");
    }
    let logs: Vec<(f64, f64)> = inside
        .iter()
        .filter(|&&(_, e)| e > 0.0)
        .map(|&(p, e)| (p.log10(), e.log10()))
        .collect();
    if logs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable points in [{lo:e}, {hi:e}], need 3",
            logs.len()
        )));
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all parameters in the window coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / k).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        window,
        residual,
        points: logs.len(),
        excluded_zero,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem::build_spaces;
    use crate::geometry::{make_geometry, CaseId};
    use crate::mesh::{extract_fluid_submesh, generate_mesh, Mesh};
    use crate::solver::Diagnostics;

    fn channel(h: f64) -> Spaces {
        build_spaces(Arc::new(generate_mesh(&make_geometry(CaseId::NoObstacle, 64).unwrap(), h).unwrap()))
    }

    fn box_wall(h: f64) -> Mesh {
        generate_mesh(&make_geometry(CaseId::BoxWall, 64).unwrap(), h).unwrap()
    }

    fn solution(velocity: Vec<f64>, n_p: usize) -> Solution {
        Solution {
            velocity,
            pressure: vec![0.0; n_p],
            diagnostics: Diagnostics {
                scheme: Scheme::Mixed,
                m: 10.0,
                n: 1000.0,
                newton_iterations: 3,
                total_newton_iterations: 3,
                max_stage_iterations: 3,
                stages: 1,
                final_residual_norm: 0.0,
                residual_scale: 1.0,
                residual_history: vec![],
                converged: true,
                max_linear_residual: 0.0,
            },
        }
    }

    #[test]
    fn norms_of_simple_fields() {
        let s = channel(0.5);
        let one = s.interpolate_velocity(|_| [1.0, 0.0]);
        assert!((norm_l2(&one, &s, Region::All).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        assert!(seminorm_h1(&one, &s, Region::All).unwrap() < 1e-12);
        assert_eq!(norm_l2(&vec![0.0; s.n_u], &s, Region::All).unwrap(), 0.0);
        let lin = s.interpolate_velocity(|p| p);
        let exact = (160.0f64 / 3.0).sqrt();
        assert!((norm_l2(&lin, &s, Region::All).unwrap() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn poiseuille_seminorm() {
        let s = channel(0.5);
        let u = s.interpolate_velocity(|p| [100.0 * p[1] * (2.0 - p[1]), 0.0]);
        let exact = (320000.0f64 / 3.0).sqrt();
        assert!((seminorm_h1(&u, &s, Region::All).unwrap() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn empty_region_norm_is_zero() {
        let s = channel(1.0);
        let one = s.interpolate_velocity(|_| [1.0, 1.0]);
        assert!(region_is_empty(&s, Region::Solid));
        assert_eq!(norm_l2(&one, &s, Region::Solid).unwrap(), 0.0);
    }

    #[test]
    fn extension_by_zero_on_box_wall() {
        let mesh = Arc::new(box_wall(0.2));
        let spaces = build_spaces(mesh.clone());
        let sub = extract_fluid_submesh(&mesh).unwrap();
        let sub_spaces = build_spaces(Arc::new(sub.mesh.clone()));
        let f = |p: Point| [p[1] * (2.0 - p[1]), 0.3 * p[0] * (4.0 - p[0])];
        let mut sub_u = sub_spaces.interpolate_velocity(f);
        // No-slip on the former interface.
        for (k, p) in sub_spaces.node_coords.iter().enumerate() {
            if (0.9..=1.1).contains(&p[0]) && p[1] <= 0.6 {
                sub_u[2 * k] = 0.0;
                sub_u[2 * k + 1] = 0.0;
            }
        }
        let ext = extend_by_zero(&sub_u, &sub_spaces, &sub, &spaces).unwrap();
        for (k, p) in spaces.node_coords.iter().enumerate() {
            if p[0] > 0.9 && p[0] < 1.1 && p[1] < 0.6 {
                assert_eq!((ext[2 * k], ext[2 * k + 1]), (0.0, 0.0));
            }
        }
        let global = seminorm_h1(&ext, &spaces, Region::All).unwrap();
        let local = seminorm_h1(&sub_u, &sub_spaces, Region::All).unwrap();
        assert!((global - local).abs() <= 1e-12 * local);
        let l2g = norm_l2(&ext, &spaces, Region::Fluid).unwrap();
        let l2s = norm_l2(&sub_u, &sub_spaces, Region::All).unwrap();
        assert!((l2g - l2s).abs() <= 1e-12 * l2s);
    }

    #[test]
    fn extension_on_plain_channel_is_identity() {
        let mesh = Arc::new(generate_mesh(&make_geometry(CaseId::NoObstacle, 64).unwrap(), 0.7).unwrap());
        let spaces = build_spaces(mesh.clone());
        let sub = extract_fluid_submesh(&mesh).unwrap();
        let sub_spaces = build_spaces(Arc::new(sub.mesh.clone()));
        let u: Vec<f64> = (0..sub_spaces.n_u).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(extend_by_zero(&u, &sub_spaces, &sub, &spaces).unwrap(), u);
    }

    #[test]
    fn record_identities() {
        let mesh = Arc::new(box_wall(0.3));
        let s = build_spaces(mesh);
        let reference = s.interpolate_velocity(|p| [p[1] * (2.0 - p[1]), 0.1 * p[0]]);
        let same = error_record(&reference, &solution(reference.clone(), s.n_p), &s).unwrap();
        assert_eq!(same.err_L2_Omega, 0.0);
        assert_eq!(same.err_H1semi_Omega, 0.0);
        let shifted: Vec<f64> = reference.iter().enumerate().map(|(i, r)| r + if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let rec = error_record(&reference, &solution(shifted, s.n_p), &s).unwrap();
        assert!((rec.err_L2_Omega - 8f64.sqrt()).abs() < 1e-12);
        assert!(rec.err_H1semi_Omega < 1e-12);
        assert_eq!((rec.scheme, rec.m, rec.n, rec.newton_iterations), (Scheme::Mixed, 10.0, 1000.0, 3));
    }

    #[test]
    fn fit_exact_power_laws() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|k| (10f64.powi(k), 10f64.powi(-k))).collect();
        let fit = fit_rate(&pts, (1.0, 1e6)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12 && fit.residual < 1e-12);
        let flat: Vec<(f64, f64)> = (1..=5).map(|k| (10f64.powi(k), 3.0)).collect();
        assert!(fit_rate(&flat, (1.0, 1e6)).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn fit_needs_three_points() {
        let pts = [(1e6, 1.0), (1e7, 0.1), (1e8, 0.0), (1e12, 1e-6)];
        let err = fit_rate(&pts, (1e6, 1e10)).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn fit_of_draft_viscosity_column() {
        // Draft Table 1, viscosity column, penalties 1e6..1e10.
        let values = [1.246052e-1, 1.246381e-2, 1.246414e-3, 1.246417e-4, 1.246417e-5];
        let pts: Vec<(f64, f64)> = values.iter().enumerate().map(|(k, &e)| (10f64.powi(6 + k as i32), e)).collect();
        let fit = fit_rate(&pts, (1e6, 1e10)).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.01, "{}", fit.slope);
    }
}
