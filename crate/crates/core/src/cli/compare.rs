//! Joins the outputs of several benchmark runs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{QcError, Result};
use crate::experiments::continuation::write_summary;
use crate::experiments::critical_error;
use crate::experiments::metrics::midpoint;

/// Manifest keys that must agree between compared runs.
const SHARED: &[&str] = &[
    "experiment",
    "potential.alpha",
    "cb.b6_stencil",
    "domain.columns",
    "domain.rows",
    "domain.boundary",
    "domain.boundary_depth",
    "calibration.lattice_constant",
    "loading",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub region: String,
    pub bracket: Option<(f64, f64)>,
    pub error_percent: Option<f64>,
}

/// `err_rel` columns of every trace, joined on the load.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorCurves {
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<Option<f64>>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// Sorted by decreasing bracket midpoint; runs without a bracket last.
    pub rows: Vec<SummaryRow>,
    pub curves: ErrorCurves,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| QcError::io(path, e))
}

pub fn read_manifest(dir: &Path) -> Result<BTreeMap<String, String>> {
    Ok(read(&dir.join("manifest.txt"))?
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

fn bad_csv(path: &Path, line: usize) -> QcError {
    QcError::Config {
        path: path.display().to_string(),
        line,
        message: "malformed row".into(),
    }
}

fn cell(s: &str) -> std::result::Result<Option<f64>, ()> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| ())
    }
}

pub fn read_summary(dir: &Path) -> Result<Vec<SummaryRow>> {
    let path = dir.join("summary.csv");
    let text = read(&path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let parsed = (f.len() == 5)
            .then(|| Some((cell(f[2]).ok()?, cell(f[3]).ok()?, cell(f[4]).ok()?)))
            .flatten();
        let (lo, hi, err) = parsed.ok_or_else(|| bad_csv(&path, n + 1))?;
        rows.push(SummaryRow {
            method: f[0].to_string(),
            region: f[1].to_string(),
            bracket: lo.zip(hi),
            error_percent: err,
        });
    }
    Ok(rows)
}

fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (n, line) in read(path)?.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let row = (f.len() >= 5)
            .then(|| Some((f[0].parse::<f64>().ok()?, f[3] == "1", cell(f[4]).ok()?)))
            .flatten();
        match row.ok_or_else(|| bad_csv(path, n + 1))? {
            (g, false, Some(e)) => out.push((g, e)),
            _ => {}
        }
    }
    Ok(out)
}

/// Reads the manifests, summaries and traces of `dirs`. Errors are
/// recomputed against the first atomistic row found.
pub fn compare(dirs: &[PathBuf]) -> Result<Comparison> {
    if dirs.is_empty() {
        return Err(QcError::InvalidParameter("nothing to compare".into()));
    }
    let first = read_manifest(&dirs[0])?;
    match first.get("experiment").map(String::as_str) {
        Some("dipole" | "tension") => {}
        other => {
            return Err(QcError::Mismatch(format!(
                "{}: experiment {other:?} has no critical strains",
                dirs[0].display()
            )))
        }
    }
    let mut rows = Vec::new();
    let mut traces: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for dir in dirs {
        let m = read_manifest(dir)?;
        for key in SHARED {
            if m.get(*key) != first.get(*key) {
                return Err(QcError::Mismatch(format!(
                    "{} and {} differ in `{key}`",
                    dirs[0].display(),
                    dir.display()
                )));
            }
        }
        rows.extend(read_summary(dir)?);
        let mut names: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| QcError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("trace_") && n.ends_with(".csv"))
            })
            .collect();
        names.sort();
        for p in names {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let mut name = stem.trim_start_matches("trace_").to_string();
            if traces.iter().any(|t| t.0 == name) {
                name = format!("{name}@{}", dir.display());
            }
            let curve = read_curve(&p)?;
            if !curve.is_empty() {
                traces.push((name, curve));
            }
        }
    }

    let reference = rows.iter().find(|r| r.method == "Atomistic").and_then(|r| r.bracket);
    for r in &mut rows {
        r.error_percent = reference.zip(r.bracket).and_then(|(at, qc)| critical_error(at, qc).ok());
    }
    let key = |r: &SummaryRow| r.bracket.map_or(f64::NEG_INFINITY, midpoint);
    rows.sort_by(|a, b| key(b).total_cmp(&key(a)));

    let mut loads: Vec<f64> = traces.iter().flat_map(|t| t.1.iter().map(|p| p.0)).collect();
    loads.sort_by(f64::total_cmp);
    loads.dedup();
    let curves = ErrorCurves {
        columns: traces.iter().map(|t| t.0.clone()).collect(),
        rows: loads
            .into_iter()
            .map(|g| (g, traces.iter().map(|t| t.1.iter().find(|p| p.0 == g).map(|p| p.1)).collect()))
            .collect(),
    };
    Ok(Comparison { rows, curves })
}

impl Comparison {
    pub fn write_table<W: Write>(&self, out: W) -> std::io::Result<()> {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| (r.method.clone(), r.region.clone(), r.bracket, r.error_percent))
            .collect();
        write_summary(&rows, out)
    }

    pub fn write_curves<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "gamma,{}", self.curves.columns.join(","))?;
        for (g, vals) in &self.curves.rows {
            let cells: Vec<String> = vals
                .iter()
                .map(|v| v.map(|e| format!("{e:.16e}")).unwrap_or_default())
                .collect();
            writeln!(out, "{g:.16e},{}", cells.join(","))?;
        }
        Ok(())
    }
}
