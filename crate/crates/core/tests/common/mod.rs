//! Property checks shared by the proptest suite and the acceptance runner.
//! Each returns the measured defect so callers choose how to report it.
#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use penalflow::fem::assembly::{assemble_with_constraints, weak_residual};
use penalflow::fem::{build_spaces, eval_basis, quadrature_rule, Coefficients, Constraints, Family, Scheme, Spaces};
use penalflow::geometry::{make_geometry, CaseId};
use penalflow::io::csv::{csv_bytes, format_float, parse_csv};
use penalflow::mesh::io::{mesh_fingerprint, mesh_from_str, mesh_to_string};
use penalflow::mesh::{generate_mesh, Mesh};
use penalflow::metrics::{norm_l2, seminorm_h1, ErrorRecord, Region};
use penalflow::study::SweepRow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn small_mesh(case: CaseId, h: f64) -> Mesh {
    generate_mesh(&make_geometry(case, 24).unwrap(), h).unwrap()
}

pub fn small_spaces(case: CaseId, h: f64) -> Arc<Spaces> {
    Arc::new(build_spaces(Arc::new(small_mesh(case, h))))
}

/// Deviation of Σφ from 1 and of Σ∇φ from 0, over both families.
pub fn partition_of_unity_defect(bary: [f64; 3]) -> f64 {
    [Family::P1, Family::P2]
        .into_iter()
        .map(|f| {
            let b = eval_basis(f, bary);
            let sum: f64 = b.values.iter().sum();
            let gx: f64 = b.ref_grads.iter().map(|g| g[0]).sum();
            let gy: f64 = b.ref_grads.iter().map(|g| g[1]).sum();
            (sum - 1.0).abs().max(gx.abs()).max(gy.abs())
        })
        .fold(0.0, f64::max)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Relative error of the degree-`degree` rule on x^a y^b over the
/// reference triangle, whose exact integral is a! b! / (a + b + 2)!.
pub fn quadrature_defect(degree: usize, a: u32, b: u32) -> f64 {
    let rule = quadrature_rule(degree).unwrap();
    let approx: f64 = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
        .sum();
    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
    ((approx - exact) / exact).abs()
}

fn random_state(spaces: &Spaces, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    (0..spaces.n_dofs()).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
}

/// Largest relative mismatch between J·d and a central difference of the
/// weak residual along `directions` random d.
pub fn jacobian_fd_defect(spaces: &Spaces, coeffs: &Coefficients, seed: u64, directions: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = random_state(spaces, &mut rng, 10.0);
    let sys = assemble_with_constraints(spaces, coeffs, &state, Constraints::new()).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..directions {
        let d = random_state(spaces, &mut rng, 1.0);
        let eps = 1e-6;
        let shifted = |s: f64| -> Vec<f64> {
            let x: Vec<f64> = state.iter().zip(&d).map(|(u, v)| u + s * v).collect();
            weak_residual(spaces, coeffs, &x).unwrap()
        };
        let (plus, minus) = (shifted(eps), shifted(-eps));
        let jd = sys.jacobian.mul_vec(&d);
        let fd: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let scale = jd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = jd.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(diff / scale);
    }
    worst
}

/// Entry-wise distance between the residuals and Jacobians of two schemes
/// at a random state, relative to the largest entry.
pub fn scheme_distance(spaces: &Spaces, a: &Coefficients, b: &Coefficients, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = random_state(spaces, &mut rng, 5.0);
    let sa = assemble_with_constraints(spaces, a, &state, Constraints::new()).unwrap();
    let sb = assemble_with_constraints(spaces, b, &state, Constraints::new()).unwrap();
    let scale = sa.jacobian.norm_inf().max(1.0);
    let res = sa.residual.iter().zip(&sb.residual).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let jac = sa
        .jacobian
        .values
        .iter()
        .zip(&sb.jacobian.values)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    res.max(jac) / scale
}

/// Largest relative defect of ‖·‖²_Ω = ‖·‖²_F + ‖·‖²_S and
/// ‖·‖²_S = Σ_k ‖·‖²_{obstacle k}, for L² and the H¹ seminorm.
pub fn region_additivity_defect(spaces: &Spaces, obstacle_ids: &[u32], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field: Vec<f64> = (0..spaces.n_u).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut worst = 0.0f64;
    for norm in [norm_l2, seminorm_h1] {
        let sq = |r: Region| norm(&field, spaces, r).unwrap().powi(2);
        let all = sq(Region::All);
        let solid = sq(Region::Solid);
        let split = (all - sq(Region::Fluid) - solid).abs() / all;
        let parts: f64 = obstacle_ids.iter().map(|&id| sq(Region::Obstacle(id))).sum();
        let obstacles = if solid > 0.0 { (solid - parts).abs() / solid } else { parts };
        worst = worst.max(split).max(obstacles);
    }
    worst
}

/// True when two generations of the same mesh are identical.
pub fn mesh_is_deterministic(case: CaseId, h: f64) -> bool {
    let a = small_mesh(case, h);
    let b = small_mesh(case, h);
    a == b && mesh_fingerprint(&a) == mesh_fingerprint(&b)
}

/// True when the mesh text format reproduces coordinates and connectivity
/// bit for bit.
pub fn mesh_round_trips(mesh: &Mesh) -> bool {
    let text = mesh_to_string(mesh);
    match mesh_from_str(&text, Path::new("<memory>")) {
        Ok(back) => {
            back.vertices.iter().zip(&mesh.vertices).all(|(a, b)| a[0].to_bits() == b[0].to_bits() && a[1].to_bits() == b[1].to_bits())
                && back.vertices.len() == mesh.vertices.len()
                && back.triangles == mesh.triangles
                && back.regions == mesh.regions
                && back.facets == mesh.facets
        }
        Err(_) => false,
    }
}

pub fn record(scheme: Scheme, m: f64, n: f64, values: [f64; 6], iterations: usize) -> ErrorRecord {
    ErrorRecord {
        scheme,
        m,
        n,
        err_L2_Omega: values[0],
        err_H1semi_Omega: values[1],
        err_L2_OmegaF: values[2],
        err_H1semi_OmegaF: values[3],
        norm_L2_OmegaS: values[4],
        norm_H1semi_OmegaS: values[5],
        newton_iterations: iterations,
    }
}

pub fn row(record: Option<ErrorRecord>, scheme: Scheme, m: f64, n: f64) -> SweepRow {
    SweepRow {
        scheme,
        m,
        n,
        failure: record.is_none().then(|| "failed".to_string()),
        record,
        diagnostics: None,
        certificate: None,
        obstacle_l2: Vec::new(),
    }
}

/// True when rows survive CSV writing and reading at the printed precision.
pub fn csv_round_trips(rows: &[SweepRow]) -> bool {
    let text = String::from_utf8(csv_bytes(rows).unwrap()).unwrap();
    let Ok(back) = parse_csv(&text, Path::new("<memory>")) else { return false };
    back.len() == rows.len()
        && back.iter().zip(rows).all(|(b, r)| {
            b.scheme == r.scheme
                && format_float(b.m) == format_float(r.m)
                && format_float(b.n) == format_float(r.n)
                && match (&b.record, &r.record) {
                    (None, None) => true,
                    (Some(x), Some(y)) => {
                        x.newton_iterations == y.newton_iterations
                            && penalflow::metrics::Metric::ALL
                                .iter()
                                .all(|&mt| format_float(x.get(mt)) == format_float(y.get(mt)))
                    }
                    _ => false,
                }
        })
}

pub fn coeffs(scheme: Scheme, m: f64, n: f64) -> Coefficients {
    Coefficients::new(scheme, 1.0, m, n).unwrap()
}
