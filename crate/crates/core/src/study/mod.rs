//! Penalty sweeps, contour grids, bound checks and manufactured-solution
//! verification.

mod bounds;
mod contour;
mod mms;
mod sweep;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bounds::{bound_specs, check_bounds, BoundEntry, BoundReport, BoundSpec, BOUND_SLACK};
pub use contour::{fit_max_law, run_contour, ContourGrid, MaxLawFit};
pub use mms::{run_mms, Manufactured, MmsConfig, MmsRow, MmsTable};
pub use sweep::{rows_to_fits, run_sweep, sweep_points, SweepRow, SweepTable};

use crate::error::{Error, Result};
use crate::fem::{build_spaces, BoundaryConditions, Coefficients, Scheme, Spaces};
use crate::geometry::{make_geometry, CaseId, Geometry, CHANNEL_HEIGHT, CHANNEL_LENGTH, DEFAULT_CIRCLE_SEGMENTS};
use crate::mesh::io::{hex_digest, mesh_fingerprint};
use crate::mesh::{extract_fluid_submesh, generate_mesh, Mesh, SubmeshMap};
use crate::metrics::{error_record, extend_by_zero, norm_l2, Region};
use crate::solver::{continuation_solve, newton_solve, residual_certificate, solve_stokes, FlowProblem, Solution, SolverConfig};

/// Decades 10^lo ..= 10^hi.
pub fn decades(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 10f64.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub case: CaseId,
    pub h: f64,
    pub nu: f64,
    /// Peak inflow velocity U.
    pub u_peak: f64,
    pub length: f64,
    pub height: f64,
    pub circle_segments: usize,
    pub schemes: Vec<Scheme>,
    /// Viscosity penalties (Viscosity sweep, Mixed sweep, contour m axis).
    pub m_values: Vec<f64>,
    /// Volume penalties (Volume sweep, contour n axis).
    pub n_values: Vec<f64>,
    /// The Mixed sweep uses n = coupling * m.
    pub coupling: f64,
    pub solver: SolverConfig,
    pub output_dir: Option<PathBuf>,
    pub threads: usize,
    /// Parameter window of rate fits.
    pub window: (f64, f64),
    /// Contour cells with n below this are skipped; `None` picks the case default.
    pub contour_n_min: Option<f64>,
}

impl StudyConfig {
    pub fn new(case: CaseId) -> Self {
        StudyConfig {
            case,
            h: 0.05,
            nu: 1.0,
            u_peak: 100.0,
            length: CHANNEL_LENGTH,
            height: CHANNEL_HEIGHT,
            circle_segments: DEFAULT_CIRCLE_SEGMENTS,
            schemes: Scheme::PENALIZED.to_vec(),
            m_values: decades(1, 10),
            n_values: decades(1, 10),
            coupling: 100.0,
            solver: SolverConfig::default(),
            output_dir: None,
            threads: 1,
            window: (1e6, 1e10),
            contour_n_min: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("h", self.h)?;
        positive("nu", self.nu)?;
        positive("coupling", self.coupling)?;
        if !(self.u_peak.is_finite() && self.u_peak >= 0.0) {
            return Err(Error::Config(format!("U must be nonnegative, got {}", self.u_peak)));
        }
        if self.length != CHANNEL_LENGTH || self.height != CHANNEL_HEIGHT {
            return Err(Error::Config(format!(
                "only the {CHANNEL_LENGTH}x{CHANNEL_HEIGHT} channel is available, got {}x{}",
                self.length, self.height
            )));
        }
        for &m in &self.m_values {
            if !(m.is_finite() && m >= 1.0) {
                return Err(Error::Config(format!("viscosity penalty m must be >= 1, got {m}")));
            }
        }
        for &n in &self.n_values {
            if !(n.is_finite() && n >= 0.0) {
                return Err(Error::Config(format!("volume penalty n must be >= 0, got {n}")));
            }
        }
        if self.threads == 0 {
            return Err(Error::Config("thread budget must be at least 1".into()));
        }
        if !(self.window.0 > 0.0 && self.window.1 >= self.window.0) {
            return Err(Error::Config(format!("invalid rate window {:?}", self.window)));
        }
        self.solver.validate()
    }

    /// Lower bound on n for contour cells.
    pub fn effective_contour_n_min(&self) -> f64 {
        self.contour_n_min.unwrap_or(match self.case {
            CaseId::TwoObstacles => 1e7,
            _ => 0.0,
        })
    }

    /// Stable digest of every field that affects results (not the output
    /// directory).
    pub fn fingerprint(&self) -> String {
        let mut echo = self.clone();
        echo.output_dir = None;
        let json = serde_json::to_string(&echo).expect("config serializes");
        hex_digest(json.as_bytes())
    }
}

/// Mesh, spaces and reference data shared by every solve of a study.
#[derive(Debug, Clone)]
pub struct Setup {
    pub geometry: Geometry,
    pub mesh: Arc<Mesh>,
    pub spaces: Arc<Spaces>,
    pub submesh: SubmeshMap,
    pub fluid_spaces: Arc<Spaces>,
    pub bcs: BoundaryConditions,
    pub mesh_fingerprint: String,
}

impl Setup {
    pub fn new(config: &StudyConfig) -> Result<Self> {
        config.validate()?;
        let geometry = make_geometry(config.case, config.circle_segments)?;
        let mesh = Arc::new(generate_mesh(&geometry, config.h)?);
        let submesh = extract_fluid_submesh(&mesh)?;
        let fluid_spaces = Arc::new(build_spaces(Arc::new(submesh.mesh.clone())));
        Ok(Setup {
            mesh_fingerprint: mesh_fingerprint(&mesh),
            spaces: Arc::new(build_spaces(mesh.clone())),
            geometry,
            mesh,
            submesh,
            fluid_spaces,
            bcs: BoundaryConditions::channel(config.u_peak, config.height),
        })
    }

    pub fn problem(&self, config: &StudyConfig, scheme: Scheme, m: f64, n: f64) -> Result<FlowProblem> {
        let coeffs = Coefficients::new(scheme, config.nu, m, n)?;
        let spaces = match scheme {
            Scheme::Real => self.fluid_spaces.clone(),
            _ => self.spaces.clone(),
        };
        FlowProblem::new(spaces, coeffs, self.bcs.clone())
    }

    /// Real-obstacle solve on the fluid submesh.
    pub fn solve_reference(&self, config: &StudyConfig) -> Result<Reference> {
        let problem = self.problem(config, Scheme::Real, 1.0, 0.0)?;
        let stokes = solve_stokes(&problem)?;
        let solution = newton_solve(&problem, &stokes, &config.solver)?;
        if !solution.diagnostics.converged {
            return Err(Error::Divergence {
                iteration: solution.diagnostics.newton_iterations,
                message: format!(
                    "reference solve stopped at relative residual {:e}",
                    solution.diagnostics.final_residual_norm
                ),
            });
        }
        let certificate = residual_certificate(&problem, &solution)?;
        let velocity = extend_by_zero(&solution.velocity, &self.fluid_spaces, &self.submesh, &self.spaces)?;
        let bytes: Vec<u8> = velocity.iter().flat_map(|v| v.to_le_bytes()).collect();
        Ok(Reference {
            fingerprint: hex_digest(&bytes),
            solution,
            velocity,
            certificate,
        })
    }

    /// One penalized solve by continuation, with its error record.
    pub fn solve_point(&self, config: &StudyConfig, reference: &Reference, scheme: Scheme, m: f64, n: f64) -> SweepRow {
        let outcome = self.problem(config, scheme, m, n).and_then(|problem| {
            let sol = continuation_solve(&problem, &config.solver)?;
            let cert = residual_certificate(&problem, &sol)?;
            let mut record = error_record(&reference.velocity, &sol, &self.spaces)?;
            record.newton_iterations = sol.diagnostics.total_newton_iterations;
            let obstacle_l2 = self
                .geometry
                .obstacles
                .iter()
                .map(|o| Ok((o.id, norm_l2(&sol.velocity, &self.spaces, Region::Obstacle(o.id))?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((sol, cert, record, obstacle_l2))
        });
        match outcome {
            Ok((sol, certificate, record, obstacle_l2)) => SweepRow {
                scheme,
                m,
                n,
                record: Some(record),
                diagnostics: Some(sol.diagnostics),
                certificate: Some(certificate),
                obstacle_l2,
                failure: None,
            },
            Err(e) => {
                tracing::warn!(%scheme, m, n, error = %e, "solve failed");
                SweepRow {
                    scheme,
                    m,
                    n,
                    record: None,
                    diagnostics: None,
                    certificate: None,
                    obstacle_l2: Vec::new(),
                    failure: Some(e.to_string()),
                }
            }
        }
    }
}

/// The real-obstacle solution, extended by zero to the whole channel.
#[derive(Debug, Clone)]
pub struct Reference {
    pub solution: Solution,
    pub velocity: Vec<f64>,
    pub certificate: f64,
    pub fingerprint: String,
}

/// Runs `f` inside a pool of `threads` workers.
pub(crate) fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) fn digest_parts(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = StudyConfig::new(CaseId::BoxWall);
        assert!(c.validate().is_ok());
        assert_eq!(c.schemes, vec![Scheme::Volume, Scheme::Viscosity, Scheme::Mixed]);
        assert_eq!(c.m_values.len(), 10);
        let mut bad = c.clone();
        bad.n_values.push(-1.0);
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = c.clone();
        bad.height = 3.0;
        assert!(bad.validate().is_err());
        assert_eq!(StudyConfig::new(CaseId::TwoObstacles).effective_contour_n_min(), 1e7);
    }

    #[test]
    fn fingerprint_ignores_output_dir() {
        let a = StudyConfig::new(CaseId::BoxWall);
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.h = 0.1;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
