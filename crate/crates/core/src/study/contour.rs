use serde::{Deserialize, Serialize};

use super::sweep::solve_points;
use super::{digest_parts, Setup, StudyConfig, SweepRow};
use crate::error::{Error, Result};
use crate::fem::Scheme;
use crate::metrics::Metric;

/// Mixed-scheme errors over an (m, n) grid. `cells[i][j]` is (m_axis[i], n_axis[j]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourGrid {
    pub m_axis: Vec<f64>,
    pub n_axis: Vec<f64>,
    pub cells: Vec<Vec<SweepRow>>,
    pub fingerprint: String,
    pub mesh_fingerprint: String,
    pub reference_fingerprint: String,
    /// Max-law fit of `err_H1semi_Omega`; `None` with fewer than 3 converged cells.
    pub max_law: Option<MaxLawFit>,
}

impl ContourGrid {
    pub fn rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.cells.iter().flatten()
    }

    pub fn value(&self, i: usize, j: usize, metric: Metric) -> Option<f64> {
        self.cells[i][j].record.as_ref().map(|r| r.get(metric))
    }

    /// Pairs of adjacent converged cells where `metric` grows by more than
    /// `rel_tol` as m or n increases.
    pub fn monotonicity_violations(&self, metric: Metric, rel_tol: f64) -> Vec<((usize, usize), (usize, usize))> {
        let mut out = Vec::new();
        let (rows, cols) = (self.m_axis.len(), self.n_axis.len());
        for i in 0..rows {
            for j in 0..cols {
                let Some(here) = self.value(i, j, metric) else { continue };
                for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                    if ni >= rows || nj >= cols {
                        continue;
                    }
                    if let Some(next) = self.value(ni, nj, metric) {
                        if next > here * (1.0 + rel_tol) {
                            out.push(((i, j), (ni, nj)));
                        }
                    }
                }
            }
        }
        out
    }
}

/// `log10 e ≈ intercept + slope * log10 max(m, C n)` with C chosen to
/// minimize the squared misfit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxLawFit {
    pub log10_c: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

const LOG_C_RANGE: (f64, f64) = (-6.0, 6.0);
const SCAN_STEP: f64 = 0.01;

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    (slope, intercept, ss_res)
}

/// Fits the max-law to `(m, n, error)` triples.
pub fn fit_max_law(points: &[(f64, f64, f64)]) -> Result<MaxLawFit> {
    let pts: Vec<(f64, f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(m, n, e)| e > 0.0 && e.is_finite() && m.max(n) > 0.0)
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable grid cells, need 3", pts.len())));
    }
    let ys: Vec<f64> = pts.iter().map(|p| p.2.log10()).collect();
    let misfit = |log_c: f64| {
        let c = 10f64.powf(log_c);
        let xs: Vec<f64> = pts.iter().map(|&(m, n, _)| m.max(c * n).log10()).collect();
        line_fit(&xs, &ys)
    };
    let steps = ((LOG_C_RANGE.1 - LOG_C_RANGE.0) / SCAN_STEP).round() as usize;
    let mut best = (LOG_C_RANGE.0, f64::INFINITY);
    for k in 0..=steps {
        let lc = LOG_C_RANGE.0 + k as f64 * SCAN_STEP;
        let ss = misfit(lc).2;
        if ss < best.1 {
            best = (lc, ss);
        }
    }
    // Golden-section refinement inside the winning scan cell.
    let (mut a, mut b) = (
        (best.0 - SCAN_STEP).max(LOG_C_RANGE.0),
        (best.0 + SCAN_STEP).min(LOG_C_RANGE.1),
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let c1 = b - g * (b - a);
        let c2 = a + g * (b - a);
        if misfit(c1).2 <= misfit(c2).2 {
            b = c2;
        } else {
            a = c1;
        }
    }
    let mid = 0.5 * (a + b);
    let log10_c = if misfit(mid).2 <= best.1 { mid } else { best.0 };
    let (slope, intercept, ss_res) = misfit(log10_c);
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(MaxLawFit {
        log10_c,
        slope,
        intercept,
        r_squared,
        points: pts.len(),
    })
}

/// Mixed-scheme solves over `m_values × n_values`. Cells with n below the
/// contour minimum carry a failure marker instead of a solve.
pub fn run_contour(config: &StudyConfig) -> Result<ContourGrid> {
    if config.m_values.len() < 3 || config.n_values.len() < 3 {
        return Err(Error::Config(format!(
            "contour needs at least 3 values per axis, got {} x {}",
            config.m_values.len(),
            config.n_values.len()
        )));
    }
    let setup = Setup::new(config)?;
    let reference = setup.solve_reference(config)?;
    let n_min = config.effective_contour_n_min();
    let all: Vec<(Scheme, f64, f64)> = config
        .m_values
        .iter()
        .flat_map(|&m| config.n_values.iter().map(move |&n| (Scheme::Mixed, m, n)))
        .collect();
    let active: Vec<(Scheme, f64, f64)> = all.iter().copied().filter(|p| p.2 >= n_min).collect();
    let mut solved = solve_points(&setup, config, &reference, &active)?.into_iter();
    let flat: Vec<SweepRow> = all
        .iter()
        .map(|&(scheme, m, n)| {
            if n >= n_min {
                solved.next().expect("one row per active cell")
            } else {
                SweepRow {
                    scheme,
                    m,
                    n,
                    record: None,
                    diagnostics: None,
                    certificate: None,
                    obstacle_l2: Vec::new(),
                    failure: Some(format!("skipped: n below contour minimum {n_min:e}")),
                }
            }
        })
        .collect();
    let law_points: Vec<(f64, f64, f64)> = flat
        .iter()
        .filter_map(|r| r.record.as_ref().map(|rec| (r.m, r.n, rec.err_H1semi_Omega)))
        .collect();
    let cols = config.n_values.len();
    let cells = flat.chunks(cols).map(<[SweepRow]>::to_vec).collect();
    Ok(ContourGrid {
        m_axis: config.m_values.clone(),
        n_axis: config.n_values.clone(),
        cells,
        fingerprint: digest_parts(&[&config.fingerprint(), &setup.mesh_fingerprint, "contour"]),
        mesh_fingerprint: setup.mesh_fingerprint.clone(),
        reference_fingerprint: reference.fingerprint,
        max_law: fit_max_law(&law_points).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_planted_max_law() {
        let axis: [f64; 5] = [1e4, 1e5, 1e6, 1e7, 1e8];
        let c = 10f64.powf(-1.7);
        let pts: Vec<(f64, f64, f64)> = axis
            .iter()
            .flat_map(|&m| axis.iter().map(move |&n| (m, n, 3.0 / m.max(c * n))))
            .collect();
        let fit = fit_max_law(&pts).unwrap();
        assert!((fit.log10_c + 1.7).abs() < 1e-3, "{fit:?}");
        assert!((fit.slope + 1.0).abs() < 1e-6);
        assert!(fit.r_squared > 0.999_999);
    }

    #[test]
    fn product_law_fits_poorly() {
        let axis: [f64; 4] = [1e4, 1e6, 1e8, 1e10];
        let pts: Vec<(f64, f64, f64)> = axis
            .iter()
            .flat_map(|&m| axis.iter().map(move |&n| (m, n, 1.0 / (m * n).sqrt())))
            .collect();
        assert!(fit_max_law(&pts).unwrap().r_squared < 0.9);
    }

    #[test]
    fn too_few_cells() {
        assert!(matches!(
            fit_max_law(&[(1.0, 1.0, 1.0), (2.0, 2.0, 0.0)]),
            Err(Error::InsufficientData(_))
        ));
    }
}
