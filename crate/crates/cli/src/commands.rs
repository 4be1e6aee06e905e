use std::path::{Path, PathBuf};
use std::time::Instant;

use penalflow::error::{Error, Result};
use penalflow::fem::Scheme;
use penalflow::geometry::{make_geometry, CaseId};
use penalflow::io::config::parse_window;
use penalflow::io::{self, parse_config, read_csv, write_vtk, RunManifest};
use penalflow::mesh::io::{mesh_fingerprint, write_mesh};
use penalflow::mesh::generate_mesh;
use penalflow::metrics::{fit_rate, ErrorRecord, Metric};
use penalflow::solver::{continuation_solve, residual_certificate};
use penalflow::study::{check_bounds, run_contour, run_mms, run_sweep, Manufactured, MmsConfig, Setup, StudyConfig};

fn load_config(path: &Path) -> Result<StudyConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut config = parse_config(&text)?;
    config.threads = io::threads_from_env(config.threads)?;
    Ok(config)
}

fn output_dir(config: &StudyConfig, out: Option<&Path>) -> Result<PathBuf> {
    out.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `output`".into()))
}

pub fn mesh(case: CaseId, h: f64, circle_segments: usize, out: &Path) -> Result<()> {
    let mesh = generate_mesh(&make_geometry(case, circle_segments)?, h)?;
    write_mesh(&mesh, out)?;
    let min_angle = (0..mesh.num_triangles()).map(|t| mesh.min_angle_deg(t)).fold(f64::INFINITY, f64::min);
    println!(
        "mesh {} vertices {} triangles {} min_angle {:.2} fingerprint {}",
        out.display(),
        mesh.num_vertices(),
        mesh.num_triangles(),
        min_angle,
        mesh_fingerprint(&mesh)
    );
    Ok(())
}

pub fn solve(config: &Path, scheme: Scheme, m: f64, n: f64, out: &Path) -> Result<()> {
    let config = load_config(config)?;
    let start = Instant::now();
    let setup = Setup::new(&config)?;
    let (solution, spaces, certificate) = if scheme == Scheme::Real {
        let reference = setup.solve_reference(&config)?;
        (reference.solution, setup.fluid_spaces.clone(), reference.certificate)
    } else {
        let problem = setup.problem(&config, scheme, m, n)?;
        let sol = continuation_solve(&problem, &config.solver)?;
        let cert = residual_certificate(&problem, &sol)?;
        (sol, setup.spaces.clone(), cert)
    };
    let manifest = RunManifest::new(&format!("solve {scheme} {m:e} {n:e}"), Some(&config), Some(&setup.mesh_fingerprint));
    write_vtk(&spaces, &solution, &format!("penalflow run {}", manifest.run_id), out)?;
    let d = &solution.diagnostics;
    println!(
        "solve {scheme} m {m:e} n {n:e} stages {} newton_iters {} residual {:.3e} certificate {:.3e} seconds {:.2} out {}",
        d.stages,
        d.total_newton_iterations,
        d.final_residual_norm,
        certificate,
        start.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

pub fn sweep(config: &Path, out: Option<&Path>) -> Result<()> {
    let config = load_config(config)?;
    let dir = output_dir(&config, out)?;
    let start = Instant::now();
    let table = run_sweep(&config)?;
    let manifest = io::write_sweep_results(&dir, &config, &table, start.elapsed().as_secs_f64())?;
    let failed = table.rows.iter().filter(|r| !r.converged()).count();
    println!(
        "sweep run {} rows {} failed {} out {}",
        manifest.run_id,
        table.rows.len(),
        failed,
        dir.display()
    );
    for (scheme, metric, fit) in &table.fits {
        if let Some(f) = fit {
            println!("fit {scheme} {} slope {:.4} points {}", metric.column(), f.slope, f.points);
        }
    }
    Ok(())
}

pub fn contour(config: &Path, out: Option<&Path>) -> Result<()> {
    let config = load_config(config)?;
    let dir = output_dir(&config, out)?;
    let start = Instant::now();
    let grid = run_contour(&config)?;
    let manifest = io::write_contour_results(&dir, &config, &grid, start.elapsed().as_secs_f64())?;
    println!(
        "contour run {} cells {} failed {} out {}",
        manifest.run_id,
        grid.rows().count(),
        grid.rows().filter(|r| !r.converged()).count(),
        dir.display()
    );
    if let Some(law) = &grid.max_law {
        println!(
            "max_law log10_C {:.3} slope {:.4} r_squared {:.4}",
            law.log10_c, law.slope, law.r_squared
        );
    }
    Ok(())
}

pub fn mms(levels: usize, base_h: f64, linear: bool, out: &Path) -> Result<()> {
    let config = MmsConfig {
        manufactured: if linear { Manufactured::Linear } else { Manufactured::Trigonometric },
        base_h,
        levels,
        ..MmsConfig::default()
    };
    let table = run_mms(&config)?;
    std::fs::write(out, io::mms_csv(&table)).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    for r in &table.rows {
        println!(
            "level {} h {:.4e} triangles {} err_L2 {:.4e} err_H1semi {:.4e}",
            r.level, r.h, r.triangles, r.err_L2, r.err_H1semi
        );
    }
    let show = |o: Option<f64>| o.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    println!("order_L2 {} order_H1 {}", show(table.order_l2), show(table.order_h1));
    Ok(())
}

pub fn rates(input: &Path, window: &str) -> Result<()> {
    let window = parse_window(window).ok_or_else(|| Error::Config(format!("window must be `lo:hi`, got `{window}`")))?;
    let rows = read_csv(input)?;
    let records: Vec<ErrorRecord> = rows.iter().filter_map(|r| r.record.clone()).collect();
    let mut schemes: Vec<Scheme> = Vec::new();
    for r in &records {
        if !schemes.contains(&r.scheme) {
            schemes.push(r.scheme);
        }
    }
    let mut first_error = None;
    for &scheme in &schemes {
        for metric in Metric::ALL {
            let pts: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.scheme == scheme)
                .map(|r| (r.active_parameter(), r.get(metric)))
                .collect();
            if let Ok(f) = fit_rate(&pts, window) {
                println!("fit {scheme} {} slope {:.4} points {}", metric.column(), f.slope, f.points);
            }
        }
        match check_bounds(&records, scheme, window) {
            Ok(report) => {
                for e in &report.entries {
                    println!(
                        "bound {scheme} {} {} exponent {:.3} slope {:.4} {} linear {}",
                        e.id,
                        e.metric.column(),
                        e.exponent,
                        e.measured_slope,
                        if e.pass { "pass" } else { "FAIL" },
                        e.observed_linear
                    );
                }
            }
            Err(e) => {
                println!("bound {scheme} unavailable: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    if schemes.is_empty() {
        return Err(Error::InsufficientData(format!("{} has no converged rows", input.display())));
    }
    first_error.map_or(Ok(()), Err)
}
