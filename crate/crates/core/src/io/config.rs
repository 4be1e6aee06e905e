//! INI-like run configuration.
//!
//! ```text
//! case = box_wall          # required
//! h = 0.05
//! schemes = volume, viscosity, mixed
//! [penalty]
//! m = 1e1:1e10             # decades, or a comma list
//! n = 1e1, 1e5, 1e10
//! coupling = "n=100*m"
//! ```
//!
//! A `[section]` header prefixes the keys that follow with `section.`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::fem::Scheme;
use crate::geometry::CaseId;
use crate::study::StudyConfig;

/// Every accepted key, after section prefixing.
pub const CONFIG_KEYS: [&str; 20] = [
    "case",
    "h",
    "nu",
    "U",
    "length",
    "height",
    "circle_segments",
    "schemes",
    "penalty.m",
    "penalty.n",
    "coupling",
    "window",
    "threads",
    "output",
    "contour.n_min",
    "solver.newton_tol",
    "solver.max_iterations",
    "solver.ladder_ratio",
    "solver.damping",
    "solver.ladder",
];

fn err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .or_else(|| v.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')))
        .unwrap_or(v)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' | ';' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn float(line: usize, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| err(line, key, format!("`{v}` is not a finite number")))
}

fn positive(line: usize, key: &str, v: &str) -> Result<f64> {
    let x = float(line, key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(err(line, key, format!("must be positive, got {x}")))
    }
}

fn count(line: usize, key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| err(line, key, format!("`{v}` is not a nonnegative integer")))
}

/// `lo:hi` (powers of ten from lo up to hi) or a comma list.
pub fn parse_values(v: &str) -> std::result::Result<Vec<f64>, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("`{}` is not a finite number", s.trim()))
    };
    if let Some((lo, hi)) = v.split_once(':') {
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if !(lo > 0.0 && hi >= lo) {
            return Err(format!("range {lo:e}:{hi:e} must satisfy 0 < lo <= hi"));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let k = (b - a + 1e-9).floor() as i32;
        return Ok((0..=k).map(|i| lo * 10f64.powi(i)).collect());
    }
    let values = v.split(',').map(parse).collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("empty value list".into());
    }
    Ok(values)
}

/// `n=100*m`, `100*m` or a plain number.
fn parse_coupling(v: &str) -> Option<f64> {
    let s: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.strip_prefix("n=").unwrap_or(&s);
    let s = s.strip_suffix("*m").or_else(|| s.strip_suffix("m")).unwrap_or(s);
    s.parse::<f64>().ok().filter(|c| c.is_finite() && *c > 0.0)
}

/// `lo:hi` with `0 < lo <= hi`.
pub fn parse_window(v: &str) -> Option<(f64, f64)> {
    let (a, b) = v.split_once(':')?;
    let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
    (a > 0.0 && b >= a && b.is_finite()).then_some((a, b))
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// Parses and validates a configuration document; unspecified keys take
/// the defaults of [`StudyConfig::new`].
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, content, "unterminated section header"))?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(line, content, "expected `key = value`"))?;
        let k = k.trim();
        let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        let key = match key.as_str() {
            "u" => "U".to_string(),
            "L" => "length".to_string(),
            "H" => "height".to_string(),
            _ => key,
        };
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(err(line, &key, "unknown key"));
        }
        if !seen.insert(key.clone()) {
            return Err(err(line, &key, "duplicate key"));
        }
        entries.push((line, key, unquote(v).to_string()));
    }
    let (case_line, case_value) = entries
        .iter()
        .find(|e| e.1 == "case")
        .map(|e| (e.0, e.2.clone()))
        .ok_or_else(|| err(0, "case", "missing required key"))?;
    let case: CaseId = case_value.parse().map_err(|e: Error| err(case_line, "case", e.to_string()))?;
    let mut c = StudyConfig::new(case);
    for (line, key, v) in &entries {
        let (line, key, v) = (*line, key.as_str(), v.as_str());
        match key {
            "case" => {}
            "h" => c.h = positive(line, key, v)?,
            "nu" => c.nu = positive(line, key, v)?,
            "U" => {
                c.u_peak = float(line, key, v)?;
                if c.u_peak < 0.0 {
                    return Err(err(line, key, "must be nonnegative"));
                }
            }
            "length" => c.length = positive(line, key, v)?,
            "height" => c.height = positive(line, key, v)?,
            "circle_segments" => c.circle_segments = count(line, key, v)?,
            "schemes" => {
                c.schemes = v
                    .split(',')
                    .map(|s| s.trim().parse::<Scheme>())
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| err(line, key, e.to_string()))?;
                if c.schemes.is_empty() || c.schemes.contains(&Scheme::Real) {
                    return Err(err(line, key, "list penalized schemes only"));
                }
            }
            "penalty.m" | "penalty.n" => {
                let values = parse_values(v).map_err(|m| err(line, key, m))?;
                let floor = if key == "penalty.m" { 1.0 } else { 0.0 };
                if let Some(bad) = values.iter().find(|&&x| x < floor) {
                    return Err(err(line, key, format!("penalty {bad} below {floor}")));
                }
                if key == "penalty.m" {
                    c.m_values = values;
                } else {
                    c.n_values = values;
                }
            }
            "coupling" => {
                c.coupling = parse_coupling(v).ok_or_else(|| err(line, key, format!("expected `n=c*m` with c > 0, got `{v}`")))?
            }
            "window" => c.window = parse_window(v).ok_or_else(|| err(line, key, format!("expected `lo:hi`, got `{v}`")))?,
            "threads" => {
                c.threads = count(line, key, v)?;
                if c.threads == 0 {
                    return Err(err(line, key, "must be at least 1"));
                }
            }
            "output" => c.output_dir = Some(v.into()),
            "contour.n_min" => {
                let x = float(line, key, v)?;
                if x < 0.0 {
                    return Err(err(line, key, "must be nonnegative"));
                }
                c.contour_n_min = Some(x);
            }
            "solver.newton_tol" => c.solver.newton_tol = positive(line, key, v)?,
            "solver.max_iterations" => c.solver.max_newton_iterations = count(line, key, v)?,
            "solver.ladder_ratio" => c.solver.ladder_ratio = positive(line, key, v)?,
            "solver.damping" => c.solver.damping = parse_bool(v).ok_or_else(|| err(line, key, format!("`{v}` is not a boolean")))?,
            "solver.ladder" => {
                let stages = v
                    .split(',')
                    .map(|s| {
                        let (m, n) = s.split_once('/')?;
                        Some((m.trim().parse::<f64>().ok()?, n.trim().parse::<f64>().ok()?))
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| err(line, key, "expected `m/n, m/n, ...`"))?;
                c.solver.ladder = Some(stages);
            }
            _ => unreachable!("key list checked above"),
        }
    }
    c.validate().map_err(|e| {
        let message = match e {
            Error::Config(m) => m,
            other => other.to_string(),
        };
        err(0, "", message)
    })?;
    Ok(c)
}

/// Renders a configuration that [`parse_config`] reads back to the same value.
pub fn config_to_string(c: &StudyConfig) -> String {
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
    let mut out = format!(
        "case = {}\nh = {:e}\nnu = {:e}\nU = {:e}\nlength = {:e}\nheight = {:e}\ncircle_segments = {}\n",
        c.case.as_str(),
        c.h,
        c.nu,
        c.u_peak,
        c.length,
        c.height,
        c.circle_segments
    );
    let schemes: Vec<&str> = c.schemes.iter().map(|s| s.as_str()).collect();
    out += &format!("schemes = {}\n", schemes.join(", "));
    out += &format!("coupling = \"n={:e}*m\"\n", c.coupling);
    out += &format!("window = {:e}:{:e}\n", c.window.0, c.window.1);
    out += &format!("threads = {}\n", c.threads);
    if let Some(dir) = &c.output_dir {
        out += &format!("output = \"{}\"\n", dir.display());
    }
    out += &format!("[penalty]\nm = {}\nn = {}\n", list(&c.m_values), list(&c.n_values));
    if let Some(n_min) = c.contour_n_min {
        out += &format!("[contour]\nn_min = {n_min:e}\n");
    }
    let s = &c.solver;
    out += &format!(
        "[solver]\nnewton_tol = {:e}\nmax_iterations = {}\nladder_ratio = {:e}\ndamping = {}\n",
        s.newton_tol, s.max_newton_iterations, s.ladder_ratio, s.damping
    );
    if let Some(ladder) = &s.ladder {
        let stages: Vec<String> = ladder.iter().map(|(m, n)| format!("{m:e}/{n:e}")).collect();
        out += &format!("ladder = {}\n", stages.join(", "));
    }
    out
}
