//! mean ± std summaries of sweep rows.

use std::path::Path;

use hinbal_core::metrics::mean_std;
use serde::{Deserialize, Serialize};

use crate::error::{self, CliError, Result};
use crate::sweep::SweepRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Hyper-parameter columns a report can group by.
pub const AXES: [&str; 5] = ["mu", "temperature", "lambda1", "lambda2", "imbalance_ratio"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub mu: Option<String>,
    pub temperature: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub imbalance_ratio: Option<f64>,
    pub runs: usize,
    pub failed: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub balanced_accuracy_mean: f64,
    pub balanced_accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
}

fn key(row: &SweepRow, by: &[&str]) -> Vec<String> {
    by.iter()
        .map(|&a| match a {
            "mu" => row.mu.clone(),
            "temperature" => row.temperature.to_string(),
            "lambda1" => row.lambda1.to_string(),
            "lambda2" => row.lambda2.to_string(),
            "imbalance_ratio" => format!("{:?}", row.imbalance_ratio.or(row.split_ratio)),
            _ => unreachable!("axes are validated"),
        })
        .collect()
}

/// Groups rows by `by` (every axis when empty), in order of first appearance.
pub fn aggregate(rows: &[SweepRow], by: &[&str]) -> Result<Vec<Group>> {
    if let Some(a) = by.iter().find(|a| !AXES.contains(a)) {
        return Err(CliError::Usage(format!("unknown axis `{a}` (expected one of {})", AXES.join(", "))));
    }
    let by: Vec<&str> = if by.is_empty() { AXES.to_vec() } else { by.to_vec() };
    let mut keys: Vec<Vec<String>> = Vec::new();
    let mut members: Vec<Vec<&SweepRow>> = Vec::new();
    for r in rows {
        let k = key(r, &by);
        match keys.iter().position(|x| *x == k) {
            Some(i) => members[i].push(r),
            None => {
                keys.push(k);
                members.push(vec![r]);
            }
        }
    }
    Ok(members
        .into_iter()
        .map(|m| {
            let first = m[0];
            let ok: Vec<&SweepRow> = m.iter().copied().filter(|r| r.status == "ok").collect();
            let stat = |f: fn(&SweepRow) -> Option<f64>| {
                let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                mean_std(&v)
            };
            let (am, asd) = stat(|r| r.accuracy);
            let (bm, bsd) = stat(|r| r.balanced_accuracy);
            let (fm, fsd) = stat(|r| r.macro_f1);
            let has = |a: &str| by.contains(&a);
            Group {
                mu: has("mu").then(|| first.mu.clone()),
                temperature: has("temperature").then_some(first.temperature),
                lambda1: has("lambda1").then_some(first.lambda1),
                lambda2: has("lambda2").then_some(first.lambda2),
                imbalance_ratio: if has("imbalance_ratio") { first.imbalance_ratio.or(first.split_ratio) } else { None },
                runs: ok.len(),
                failed: m.len() - ok.len(),
                accuracy_mean: am,
                accuracy_std: asd,
                balanced_accuracy_mean: bm,
                balanced_accuracy_std: bsd,
                macro_f1_mean: fm,
                macro_f1_std: fsd,
            }
        })
        .collect())
}

pub fn render(groups: &[Group], format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(groups).expect("groups serialize");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for g in groups {
                w.serialize(g).map_err(|e| CliError::Data(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
    }
}

/// Aggregates every input table and writes `report.csv` or `report.json`.
pub fn report(inputs: &[&Path], by: &[&str], format: Format, out: &Path) -> Result<Vec<Group>> {
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(crate::sweep::read_rows(p)?);
    }
    let groups = aggregate(&rows, by)?;
    let name = match format {
        Format::Csv => "report.csv",
        Format::Json => "report.json",
    };
    error::write(&out.join(name), render(&groups, format)?)?;
    Ok(groups)
}
