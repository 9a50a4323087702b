//! Log₂-slope fitting and the JSON/CSV decay report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Norms below this value are clamped before taking logarithms.
pub const NORM_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    pub j: i32,
    pub norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub r_squared: f64,
    /// At least one norm was clamped to the floor.
    pub clamped: bool,
    /// Every norm sat at the floor.
    pub all_floor: bool,
}

/// Ordinary least squares of `y` on `x`; returns `(slope, r²)`.
pub fn fit_slope_raw(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::FitRefused(format!("need matching abscissae and ordinates, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitRefused("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let r2 = if syy <= 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok((slope, r2))
}

/// Fits `log₂ norm` against `j`. Needs at least four distinct scales.
pub fn fit_slope(points: &[ScalePoint]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(Error::FitRefused(format!("need at least 4 scales, got {}", points.len())));
    }
    let mut js: Vec<i32> = points.iter().map(|p| p.j).collect();
    js.sort_unstable();
    js.dedup();
    if js.len() != points.len() {
        return Err(Error::FitRefused("scales must be distinct".into()));
    }
    let mut clamped = false;
    let mut all_floor = true;
    let x: Vec<f64> = points.iter().map(|p| p.j as f64).collect();
    let y: Vec<f64> = points
        .iter()
        .map(|p| {
            if !(p.norm > NORM_FLOOR) {
                clamped = true;
                NORM_FLOOR.log2()
            } else {
                all_floor = false;
                p.norm.log2()
            }
        })
        .collect();
    let (slope, r_squared) = fit_slope_raw(&x, &y)?;
    Ok(SlopeFit { slope, r_squared, clamped, all_floor })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub grid_size: usize,
    pub period: f64,
    pub n0: Option<u32>,
    #[serde(rename = "N")]
    pub n_trunc: Option<i32>,
    #[serde(rename = "N_tilde")]
    pub n_tilde: Option<i32>,
    pub seed: u64,
    pub notes: BTreeMap<String, Value>,
}

impl Environment {
    pub fn new(grid_size: usize, period: f64, seed: u64) -> Self {
        Self { grid_size, period, seed, ..Default::default() }
    }

    pub fn note(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.notes.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// Pass when the slope is at most `expected + tolerance`.
    Upper,
    /// Pass when the slope is at least `expected − tolerance`.
    Lower,
    /// Pass when the slope is within `tolerance` of `expected`.
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub suite_id: String,
    pub points: Vec<ScalePoint>,
    pub fitted_slope: f64,
    pub r_squared: f64,
    pub expected_bound: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub environment: Environment,
}

impl DecayReport {
    pub fn build(
        suite_id: &str,
        points: Vec<ScalePoint>,
        expected_bound: f64,
        tolerance: f64,
        kind: BoundKind,
        mut environment: Environment,
    ) -> Result<Self> {
        let fit = fit_slope(&points)?;
        let pass = match kind {
            BoundKind::Upper => fit.all_floor || fit.slope <= expected_bound + tolerance,
            BoundKind::Lower => fit.slope >= expected_bound - tolerance,
            BoundKind::Flat => (fit.slope - expected_bound).abs() <= tolerance,
        };
        let kind_name = match kind {
            BoundKind::Upper => "upper",
            BoundKind::Lower => "lower",
            BoundKind::Flat => "flat",
        };
        environment.notes.insert("bound_kind".into(), kind_name.into());
        if fit.clamped {
            environment.notes.insert("clamped_to_floor".into(), true.into());
        }
        if fit.all_floor {
            environment.notes.insert("slope".into(), "floor".into());
        }
        Ok(Self {
            suite_id: suite_id.to_string(),
            points,
            fitted_slope: fit.slope,
            r_squared: fit.r_squared,
            expected_bound,
            tolerance,
            pass,
            environment,
        })
    }

    pub fn upper(suite_id: &str, points: Vec<ScalePoint>, bound: f64, tol: f64, env: Environment) -> Result<Self> {
        Self::build(suite_id, points, bound, tol, BoundKind::Upper, env)
    }

    /// Marks the report failed and records why, e.g. a tripped audit.
    pub fn fail_with(&mut self, reason: &str) {
        self.pass = false;
        self.environment.notes.insert("failure".into(), reason.into());
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["suite_id", "j", "norm", "fitted_slope", "r_squared", "expected_bound", "tolerance", "pass"])?;
        for p in &self.points {
            w.write_record([
                self.suite_id.clone(),
                p.j.to_string(),
                format!("{:e}", p.norm),
                self.fitted_slope.to_string(),
                self.r_squared.to_string(),
                self.expected_bound.to_string(),
                self.tolerance.to_string(),
                self.pass.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path, csv: bool) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let text = if csv { self.to_csv()? } else { self.to_json()? };
        fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(f: impl Fn(i32) -> f64) -> Vec<ScalePoint> {
        (3..10).map(|j| ScalePoint { j, norm: f(j) }).collect()
    }

    #[test]
    fn exact_slope() {
        let fit = fit_slope(&pts(|j| 2f64.powi(-2 * j))).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_short_or_degenerate() {
        assert!(fit_slope(&pts(|j| j as f64)[..3]).is_err());
        let same = vec![ScalePoint { j: 1, norm: 1.0 }; 5];
        assert!(fit_slope(&same).is_err());
    }

    #[test]
    fn floor_forces_upper_pass() {
        let r = DecayReport::upper("t", pts(|_| 0.0), -5.0, 0.3, Environment::new(8, 1.0, 0)).unwrap();
        assert!(r.pass);
        assert_eq!(r.environment.notes["slope"], "floor");
    }

    #[test]
    fn json_keys_are_exact() {
        let r = DecayReport::upper("t", pts(|j| 2f64.powi(j)), 1.0, 0.3, Environment::new(8, 1.0, 0)).unwrap();
        let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort();
        assert_eq!(keys, ["environment", "expected_bound", "fitted_slope", "pass", "points", "r_squared", "suite_id", "tolerance"]);
        let p = &v["points"][0];
        assert!(p.get("j").is_some() && p.get("norm").is_some());
        assert!(r.to_csv().unwrap().lines().count() == 8);
    }
}
