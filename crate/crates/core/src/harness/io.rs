//! Scenario files (JSON) and observed time series (tab-separated).

use crate::calibration::ObservedSeries;
use crate::scenario::{validate_scenario, Scenario, ValidationIssue};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: at `{field}`: {message}")]
    Schema { path: PathBuf, field: String, message: String },
    #[error("{path}: invalid scenario: {}", summarize(.issues))]
    Invalid { path: PathBuf, issues: Vec<ValidationIssue> },
    #[error("{path}: no records")]
    NoRecords { path: PathBuf },
    #[error("{path}: line {line}: {message}")]
    Record { path: PathBuf, line: u64, message: String },
    #[error("{path}: region {region}: period {period} follows period {previous}")]
    NonMonotone { path: PathBuf, region: String, period: usize, previous: usize },
    #[error("{path}: duplicate record for region {region} period {period}")]
    Duplicate { path: PathBuf, region: String, period: usize },
}

fn summarize(issues: &[ValidationIssue]) -> String {
    let shown: Vec<String> = issues.iter().take(3).map(|i| format!("{}: {}", i.field, i.message)).collect();
    let more = issues.len().saturating_sub(3);
    if more > 0 {
        format!("{} (and {more} more)", shown.join("; "))
    } else {
        shown.join("; ")
    }
}

pub(crate) fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

/// Parses, fills defaults and validates a scenario held in memory.
pub fn scenario_from_str(text: &str, path: &Path) -> Result<Scenario, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| IoError::Schema {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    s.apply_defaults();
    let report = validate_scenario(&s);
    if !report.is_valid() {
        return Err(IoError::Invalid { path: path.to_path_buf(), issues: report.issues });
    }
    Ok(s)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, IoError> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    scenario_from_str(&text, path)
}

pub fn write_scenario(path: &Path, s: &Scenario) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(s).expect("scenario serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(file_err(path))
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads `region_id, period, cases, doses` records into dense per-region
/// series over periods `0..=max`. Regions keep their order of first
/// appearance; missing periods are zero-filled and listed as gaps. The
/// population is left empty and the underreporting rate at zero.
pub fn parse_timeseries(path: &Path) -> Result<ObservedSeries, IoError> {
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').from_path(path).map_err(|e| IoError::Record {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| IoError::Record { path: path.to_path_buf(), line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IoError::NoRecords { path: path.to_path_buf() });
    }
    if header != ["region_id", "period", "cases", "doses"] {
        return Err(IoError::Record {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header region_id, period, cases, doses; found {}", header.join(", ")),
        });
    }
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, Vec<(usize, f64, f64)>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| IoError::Record {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| IoError::Record { path: path.to_path_buf(), line, message };
        let region = rec[0].to_string();
        let period: usize = rec[1].trim().parse().map_err(|_| bad(format!("bad period `{}`", &rec[1])))?;
        let cases: f64 = rec[2].trim().parse().map_err(|_| bad(format!("bad cases `{}`", &rec[2])))?;
        let doses: f64 = rec[3].trim().parse().map_err(|_| bad(format!("bad doses `{}`", &rec[3])))?;
        let series = rows.entry(region.clone()).or_insert_with(|| {
            order.push(region.clone());
            Vec::new()
        });
        if let Some(&(previous, _, _)) = series.last() {
            if period == previous {
                return Err(IoError::Duplicate { path: path.to_path_buf(), region, period });
            }
            if period < previous {
                return Err(IoError::NonMonotone { path: path.to_path_buf(), region, period, previous });
            }
        }
        series.push((period, cases, doses));
    }
    if order.is_empty() {
        return Err(IoError::NoRecords { path: path.to_path_buf() });
    }
    let periods = rows.values().flat_map(|r| r.iter().map(|x| x.0)).max().unwrap_or(0) + 1;
    let mut cases = Vec::with_capacity(order.len());
    let mut doses = Vec::with_capacity(order.len());
    let mut gaps = Vec::new();
    for (j, region) in order.iter().enumerate() {
        let mut c = vec![0.0; periods];
        let mut d = vec![0.0; periods];
        let mut seen = vec![false; periods];
        for &(t, cv, dv) in &rows[region] {
            c[t] = cv;
            d[t] = dv;
            seen[t] = true;
        }
        gaps.extend(seen.iter().enumerate().filter(|(_, s)| !**s).map(|(t, _)| (j, t)));
        cases.push(c);
        doses.push(d);
    }
    Ok(ObservedSeries { regions: order, cases, doses, population: Vec::new(), underreporting: 0.0, gaps })
}

/// Writes every non-gap record, region by region.
pub fn write_timeseries(path: &Path, obs: &ObservedSeries) -> Result<(), IoError> {
    let mut out = String::from("region_id\tperiod\tcases\tdoses\n");
    for (j, region) in obs.regions.iter().enumerate() {
        for t in 0..obs.cases[j].len() {
            if obs.gaps.contains(&(j, t)) {
                continue;
            }
            out.push_str(&format!("{region}\t{t}\t{}\t{}\n", fmt_f64(obs.cases[j][t]), fmt_f64(obs.doses[j][t])));
        }
    }
    let mut f = std::fs::File::create(path).map_err(file_err(path))?;
    f.write_all(out.as_bytes()).map_err(file_err(path))
}
