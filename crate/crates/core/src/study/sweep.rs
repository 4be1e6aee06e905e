use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{digest_parts, with_pool, Reference, Setup, StudyConfig};
use crate::error::{Error, Result};
use crate::fem::Scheme;
use crate::metrics::{fit_rate, ErrorRecord, Metric, RateFit};
use crate::solver::Diagnostics;

/// One grid point of a sweep; `record` is `None` when the solve failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub m: f64,
    pub n: f64,
    pub record: Option<ErrorRecord>,
    pub diagnostics: Option<Diagnostics>,
    /// Relative residual of the returned state, re-assembled from scratch.
    pub certificate: Option<f64>,
    /// L² norm of the velocity over each obstacle, by region id.
    pub obstacle_l2: Vec<(u32, f64)>,
    pub failure: Option<String>,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.record.is_some()
    }

    pub fn active_parameter(&self) -> f64 {
        self.scheme.active_parameter(self.m, self.n)
    }

    pub fn obstacle_norm(&self, id: u32) -> Option<f64> {
        self.obstacle_l2.iter().find(|(i, _)| *i == id).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Digest of the configuration and mesh.
    pub fingerprint: String,
    pub mesh_fingerprint: String,
    pub reference_fingerprint: String,
    pub reference_certificate: f64,
    /// Rate fits per scheme and metric; `None` when the window holds too
    /// few converged points.
    pub fits: Vec<(Scheme, Metric, Option<RateFit>)>,
}

impl SweepTable {
    pub fn rows_for(&self, scheme: Scheme) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    pub fn fit(&self, scheme: Scheme, metric: Metric) -> Option<&RateFit> {
        self.fits
            .iter()
            .find(|(s, m, _)| *s == scheme && *m == metric)
            .and_then(|(_, _, f)| f.as_ref())
    }

    /// Converged record of `scheme` at active parameter `p`.
    pub fn record_at(&self, scheme: Scheme, p: f64) -> Option<&ErrorRecord> {
        self.rows_for(scheme)
            .filter_map(|r| r.record.as_ref())
            .find(|r| (r.active_parameter() / p - 1.0).abs() < 1e-9)
    }
}

/// Grid points in output order: schemes as configured, active penalty
/// ascending within each.
pub fn sweep_points(config: &StudyConfig) -> Result<Vec<(Scheme, f64, f64)>> {
    let mut points = Vec::new();
    for &scheme in &config.schemes {
        let mut pts: Vec<(Scheme, f64, f64)> = match scheme {
            Scheme::Volume => config.n_values.iter().map(|&n| (scheme, 1.0, n)).collect(),
            Scheme::Viscosity => config.m_values.iter().map(|&m| (scheme, m, 0.0)).collect(),
            Scheme::Mixed => config.m_values.iter().map(|&m| (scheme, m, config.coupling * m)).collect(),
            Scheme::Real => {
                return Err(Error::Config("the real scheme is the reference and cannot be swept".into()))
            }
        };
        pts.sort_by(|a, b| scheme.active_parameter(a.1, a.2).total_cmp(&scheme.active_parameter(b.1, b.2)));
        points.extend(pts);
    }
    Ok(points)
}

/// Rate fits of every metric for each scheme present in `rows`.
pub fn rows_to_fits(rows: &[SweepRow], window: (f64, f64)) -> Vec<(Scheme, Metric, Option<RateFit>)> {
    let mut schemes: Vec<Scheme> = Vec::new();
    for r in rows {
        if !schemes.contains(&r.scheme) {
            schemes.push(r.scheme);
        }
    }
    let mut fits = Vec::new();
    for scheme in schemes {
        let records: Vec<&ErrorRecord> = rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .filter_map(|r| r.record.as_ref())
            .collect();
        for metric in Metric::ALL {
            let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.active_parameter(), r.get(metric))).collect();
            fits.push((scheme, metric, fit_rate(&pts, window).ok()));
        }
    }
    fits
}

/// One reference solve, then every grid point in parallel.
pub fn run_sweep(config: &StudyConfig) -> Result<SweepTable> {
    let points = sweep_points(config)?;
    let setup = Setup::new(config)?;
    let reference = setup.solve_reference(config)?;
    let rows = solve_points(&setup, config, &reference, &points)?;
    if !rows.is_empty() && rows.iter().all(|r| !r.converged()) {
        return Err(Error::Divergence {
            iteration: 0,
            message: format!("all {} sweep points failed", rows.len()),
        });
    }
    Ok(SweepTable {
        fits: rows_to_fits(&rows, config.window),
        rows,
        fingerprint: digest_parts(&[&config.fingerprint(), &setup.mesh_fingerprint]),
        mesh_fingerprint: setup.mesh_fingerprint.clone(),
        reference_fingerprint: reference.fingerprint,
        reference_certificate: reference.certificate,
    })
}

pub(crate) fn solve_points(
    setup: &Setup,
    config: &StudyConfig,
    reference: &Reference,
    points: &[(Scheme, f64, f64)],
) -> Result<Vec<SweepRow>> {
    with_pool(config.threads, || {
        points
            .par_iter()
            .with_max_len(1)
            .map(|&(scheme, m, n)| setup.solve_point(config, reference, scheme, m, n))
            .collect()
    })
}
