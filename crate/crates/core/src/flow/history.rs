use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::monitor::MonitorReport;
use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const HISTORY_COLUMNS: [&str; 10] = [
    "t",
    "min_omega",
    "max_omega",
    "min_tr_chi",
    "max_tr_chi",
    "u_max",
    "c0_low",
    "c0_high",
    "max_increment",
    "metric_residual",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub t: f64,
    pub min_omega: f64,
    pub max_omega: f64,
    pub min_tr_chi: f64,
    pub max_tr_chi: f64,
    pub u_max: f64,
    pub c0_low: f64,
    pub c0_high: f64,
    pub max_increment: f64,
    pub metric_residual: f64,
}

impl HistoryRow {
    pub fn new(t: f64, omega: &ScalarField, m: &MonitorReport) -> Self {
        Self {
            t,
            min_omega: omega.min(),
            max_omega: omega.max(),
            min_tr_chi: m.min_tr_chi,
            max_tr_chi: m.max_tr_chi,
            u_max: m.u_max,
            c0_low: m.c0_low,
            c0_high: m.c0_high,
            max_increment: m.max_increment.unwrap_or(f64::NAN),
            metric_residual: m.metric_residual.unwrap_or(f64::NAN),
        }
    }

    fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.min_omega,
            self.max_omega,
            self.min_tr_chi,
            self.max_tr_chi,
            self.u_max,
            self.c0_low,
            self.c0_high,
            self.max_increment,
            self.metric_residual,
        ]
    }
}

/// A stored cross-section of the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub t: f64,
    pub omega: ScalarField,
    /// ½ tr χ_ω of the leaf.
    pub expansion: ScalarField,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowHistory {
    pub rows: Vec<HistoryRow>,
    pub leaves: Vec<Leaf>,
}

impl FlowHistory {
    /// Tab-separated time series with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = HISTORY_COLUMNS.join("\t");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.values().iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn rows_from_tsv(text: &str) -> Result<Vec<HistoryRow>> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty time series".into()))?;
        if header.split('\t').collect::<Vec<_>>() != HISTORY_COLUMNS {
            return Err(Error::Parse("unexpected time-series header".into()));
        }
        lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let v: Vec<f64> = l
                    .split('\t')
                    .map(|c| c.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse(format!("line {}: invalid number", i + 2)))?;
                if v.len() != HISTORY_COLUMNS.len() {
                    return Err(Error::Parse(format!("line {}: wrong column count", i + 2)));
                }
                Ok(HistoryRow {
                    t: v[0],
                    min_omega: v[1],
                    max_omega: v[2],
                    min_tr_chi: v[3],
                    max_tr_chi: v[4],
                    u_max: v[5],
                    c0_low: v[6],
                    c0_high: v[7],
                    max_increment: v[8],
                    metric_residual: v[9],
                })
            })
            .collect()
    }
}
