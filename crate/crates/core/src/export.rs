//! CSV and JSON artifacts. Floats are written with Rust's shortest
//! round-trip formatting, so files are byte-stable for identical inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::laws::LimitLaw;
use crate::sim::{ExtinctionSamples, SamplePath};

/// `time,state` rows; the initial state is written at time 0.
pub fn path_csv(path: &SamplePath) -> String {
    let mut out = String::from("time,state\n");
    let _ = writeln!(out, "0,{}", path.states[0]);
    for (t, x) in path.times.iter().zip(&path.states[1..]) {
        let _ = writeln!(out, "{t},{x}");
    }
    out
}

/// One value per line under a `value` header.
pub fn samples_csv(samples: &ExtinctionSamples) -> String {
    let mut out = String::from("value\n");
    for v in &samples.values {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn samples_meta_json(samples: &ExtinctionSamples) -> Result<String> {
    Ok(serde_json::to_string_pretty(&samples.meta)?)
}

/// Write `<stem>.csv` and the `<stem>.json` sidecar; returns both paths.
pub fn write_samples(samples: &ExtinctionSamples, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let csv = stem.with_extension("csv");
    let json = stem.with_extension("json");
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&csv, samples_csv(samples))?;
    fs::write(&json, samples_meta_json(samples)? + "\n")?;
    Ok((csv, json))
}

/// `t,F` rows of a CDF over an explicit grid.
pub fn cdf_csv(grid: &[f64], values: &[f64]) -> String {
    let mut out = String::from("t,F\n");
    for (t, f) in grid.iter().zip(values) {
        let _ = writeln!(out, "{t},{f}");
    }
    out
}

/// Predicted CDF of the raw extinction time on `points + 1` equally spaced
/// times covering the law's 0.1% to 99.9% quantiles.
pub fn law_grid(law: &LimitLaw, points: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = law.unscale(law.quantile(0.001)).max(0.0);
    let hi = law.unscale(law.quantile(0.999));
    let points = points.max(1);
    let grid: Vec<f64> = (0..=points)
        .map(|k| lo + (hi - lo) * k as f64 / points as f64)
        .collect();
    let values = grid.iter().map(|&t| law.raw_cdf(t)).collect();
    (grid, values)
}
