use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Scheme;
use crate::metrics::{fit_rate, ErrorRecord, Metric};

/// A bound passes when `slope <= -exponent + BOUND_SLACK`.
pub const BOUND_SLACK: f64 = 0.15;

/// Decay `metric <= C m^-m_exponent n^-n_exponent` (factors of ν dropped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSpec {
    pub id: &'static str,
    pub metric: Metric,
    pub m_exponent: f64,
    pub n_exponent: f64,
}

const fn bound(id: &'static str, metric: Metric, m_exponent: f64, n_exponent: f64) -> BoundSpec {
    BoundSpec {
        id,
        metric,
        m_exponent,
        n_exponent,
    }
}

const VOLUME_BOUNDS: [BoundSpec; 3] = [
    bound("vol:1.1", Metric::NormL2OmegaS, 0.0, 0.5),
    bound("vol:3", Metric::NormL2OmegaS, 0.0, 0.75),
    bound("vol:4", Metric::ErrH1SemiOmegaF, 0.0, 0.25),
];

const VISCOSITY_BOUNDS: [BoundSpec; 3] = [
    bound("visc:1", Metric::NormH1SemiOmegaS, 0.5, 0.0),
    bound("visc:3", Metric::NormH1SemiOmegaS, 1.0, 0.0),
    bound("visc:4", Metric::ErrH1SemiOmegaF, 0.5, 0.0),
];

const MIXED_BOUNDS: [BoundSpec; 3] = [
    bound("mix:3", Metric::NormH1SemiOmegaS, 0.75, 0.25),
    bound("mix:4", Metric::NormL2OmegaS, 0.25, 0.75),
    bound("mix:5", Metric::ErrH1SemiOmegaF, 0.25, 0.25),
];

/// Bounds that hold for `scheme`. The mixed scheme inherits the volume and
/// viscosity bounds.
pub fn bound_specs(scheme: Scheme) -> Vec<BoundSpec> {
    match scheme {
        Scheme::Real => Vec::new(),
        Scheme::Volume => VOLUME_BOUNDS.to_vec(),
        Scheme::Viscosity => VISCOSITY_BOUNDS.to_vec(),
        Scheme::Mixed => VOLUME_BOUNDS
            .iter()
            .chain(&VISCOSITY_BOUNDS)
            .chain(&MIXED_BOUNDS)
            .copied()
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub id: String,
    pub metric: Metric,
    /// Exponent in the active parameter along the sweep path.
    pub exponent: f64,
    pub measured_slope: f64,
    pub pass: bool,
    /// Whether the measured slope is -1 within the slack.
    pub observed_linear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub scheme: Scheme,
    pub window: (f64, f64),
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Slope of log10 q against log10 p over the window.
fn path_slope(pairs: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = pairs.iter().filter(|p| p.1 > 0.0).map(|&(p, q)| (p.log10(), q.log10())).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Compares measured decay of `scheme`'s records with every applicable bound.
pub fn check_bounds(records: &[ErrorRecord], scheme: Scheme, window: (f64, f64)) -> Result<BoundReport> {
    let specs = bound_specs(scheme);
    if specs.is_empty() {
        return Err(Error::InvalidInput(format!("no convergence bounds apply to the {scheme} scheme")));
    }
    let rows: Vec<&ErrorRecord> = records
        .iter()
        .filter(|r| r.scheme == scheme)
        .filter(|r| {
            let p = r.active_parameter();
            p >= window.0 * (1.0 - 1e-9) && p <= window.1 * (1.0 + 1e-9)
        })
        .collect();
    // How m and n move with the active parameter (1 for the driving one,
    // 0 for a fixed one, 1 for both on a coupled path).
    let dm = path_slope(&rows.iter().map(|r| (r.active_parameter(), r.m)).collect::<Vec<_>>());
    let dn = path_slope(&rows.iter().map(|r| (r.active_parameter(), r.n)).collect::<Vec<_>>());
    let entries = specs
        .iter()
        .map(|spec| {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.active_parameter(), r.get(spec.metric))).collect();
            let fit = fit_rate(&pts, window)?;
            let exponent = spec.m_exponent * dm + spec.n_exponent * dn;
            Ok(BoundEntry {
                id: spec.id.to_string(),
                metric: spec.metric,
                exponent,
                measured_slope: fit.slope,
                pass: fit.slope <= -exponent + BOUND_SLACK,
                observed_linear: (fit.slope + 1.0).abs() <= BOUND_SLACK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport { scheme, window, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(scheme: Scheme, coupling: f64, slope: f64) -> Vec<ErrorRecord> {
        (6..=10)
            .map(|k| {
                let p = 10f64.powi(k);
                let (m, n) = match scheme {
                    Scheme::Volume => (1.0, p),
                    Scheme::Viscosity => (p, 0.0),
                    _ => (p, coupling * p),
                };
                let e = 3.0 * p.powf(slope);
                ErrorRecord {
                    scheme,
                    m,
                    n,
                    err_L2_Omega: e,
                    err_H1semi_Omega: e,
                    err_L2_OmegaF: e,
                    err_H1semi_OmegaF: e,
                    norm_L2_OmegaS: e,
                    norm_H1semi_OmegaS: e,
                    newton_iterations: 3,
                }
            })
            .collect()
    }

    #[test]
    fn every_applicable_bound_appears_once() {
        for (scheme, count) in [(Scheme::Volume, 3), (Scheme::Viscosity, 3), (Scheme::Mixed, 9)] {
            let ids: Vec<&str> = bound_specs(scheme).iter().map(|b| b.id).collect();
            assert_eq!(ids.len(), count);
            let mut dedup = ids.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), count);
        }
    }

    #[test]
    fn linear_decay_passes_everything() {
        for scheme in Scheme::PENALIZED {
            let r = check_bounds(&synthetic(scheme, 100.0, -1.0), scheme, (1e6, 1e10)).unwrap();
            assert!(r.all_pass(), "{r:?}");
            assert!(r.entries.iter().all(|e| e.observed_linear));
        }
    }

    #[test]
    fn flat_table_fails_every_bound() {
        for scheme in Scheme::PENALIZED {
            let r = check_bounds(&synthetic(scheme, 100.0, 0.0), scheme, (1e6, 1e10)).unwrap();
            assert!(r.entries.iter().all(|e| !e.pass), "{r:?}");
        }
    }

    #[test]
    fn coupled_path_adds_exponents() {
        let r = check_bounds(&synthetic(Scheme::Mixed, 100.0, -1.0), Scheme::Mixed, (1e6, 1e10)).unwrap();
        let exp = |id: &str| r.entries.iter().find(|e| e.id == id).unwrap().exponent;
        assert!((exp("mix:3") - 1.0).abs() < 1e-12);
        assert!((exp("mix:4") - 1.0).abs() < 1e-12);
        assert!((exp("mix:5") - 0.5).abs() < 1e-12);
        assert!((exp("vol:3") - 0.75).abs() < 1e-12);
        assert!((exp("visc:3") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_just_inside_slack_passes() {
        // visc:3 has exponent 1, so -0.86 passes and -0.84 does not.
        let at = |s: f64| {
            let r = check_bounds(&synthetic(Scheme::Viscosity, 0.0, s), Scheme::Viscosity, (1e6, 1e10)).unwrap();
            r.entries.iter().find(|e| e.id == "visc:3").unwrap().pass
        };
        assert!(at(-0.86));
        assert!(!at(-0.84));
    }

    #[test]
    fn narrow_window_is_insufficient() {
        let r = check_bounds(&synthetic(Scheme::Volume, 0.0, -1.0), Scheme::Volume, (1e9, 1e10));
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }
}
