use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub schema_version: u32,
    pub inputs: Vec<PathBuf>,
    /// Columns whose values define a table row.
    pub group_by: Vec<String>,
    /// Numeric columns summarized per group.
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn stats(v: &mut [f64]) -> Stats {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    Stats {
        count: n,
        mean: if n == 0 { f64::NAN } else { v.iter().sum::<f64>() / n as f64 },
        median,
        min: v.first().copied().unwrap_or(f64::NAN),
        max: v.last().copied().unwrap_or(f64::NAN),
    }
}

/// Reads a CSV written by this tool, skipping `#` comment lines.
pub fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.map(|r| r.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
    Ok((header, rows))
}

const HEADER: [&str; 8] = ["input", "group", "column", "count", "mean", "median", "min", "max"];

pub fn run(cfg: &Loaded<ReportConfig>, out: &Path) -> CliResult<()> {
    let c = &cfg.config;
    if c.inputs.is_empty() || c.values.is_empty() {
        return Err(CliError::config("`inputs` and `values` must be non-empty"));
    }
    let mut table = Vec::new();
    for input in &c.inputs {
        let (header, rows) = read_table(input)?;
        let col = |name: &str| {
            header.iter().position(|h| h == name).ok_or_else(|| CliError::config(format!("{} has no column `{name}`", input.display())))
        };
        let keys = c.group_by.iter().map(|g| col(g)).collect::<CliResult<Vec<_>>>()?;
        let vals = c.values.iter().map(|v| col(v)).collect::<CliResult<Vec<_>>>()?;
        let mut groups: BTreeMap<Vec<String>, Vec<Vec<f64>>> = BTreeMap::new();
        for row in &rows {
            let key: Vec<String> = keys.iter().map(|&k| row[k].clone()).collect();
            let entry = groups.entry(key).or_insert_with(|| vec![Vec::new(); vals.len()]);
            for (slot, &v) in entry.iter_mut().zip(&vals) {
                let x: f64 = row[v].parse().map_err(|_| CliError::config(format!("non-numeric value `{}` in {}", row[v], input.display())))?;
                slot.push(x);
            }
        }
        for (key, mut cols) in groups {
            let label: Vec<String> = c.group_by.iter().zip(&key).map(|(g, k)| format!("{g}={k}")).collect();
            for (name, v) in c.values.iter().zip(cols.iter_mut()) {
                table.push((input.display().to_string(), label.join(";"), name.clone(), stats(v)));
            }
        }
    }
    let mut dir = OutDir::open(out)?;
    let mut w = dir.csv("report.csv", &cfg.hash, &HEADER)?;
    println!("| {} |", HEADER.join(" | "));
    println!("|{}", "---|".repeat(HEADER.len()));
    for (input, group, name, s) in &table {
        let fields = [
            input.clone(),
            group.clone(),
            name.clone(),
            s.count.to_string(),
            num(s.mean),
            num(s.median),
            num(s.min),
            num(s.max),
        ];
        println!("| {} |", fields.join(" | "));
        w.row(fields)?;
    }
    w.close()?;
    dir.finish("report", &cfg.value, &cfg.hash)?;
    Ok(())
}
