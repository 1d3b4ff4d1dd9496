//! Run reports and their JSON and table renderings.

use serde::{Deserialize, Serialize};

use crate::cuts::CutFamily;
use crate::engine::IterationRecord;
use crate::model::{Assignment, QuboInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// The rounded bound met `η`, so `η` is the optimum.
    Closed,
    NotClosed,
    /// `η` is below the optimum or a certificate was wrong.
    Contradiction,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Closed => 0,
            RunStatus::NotClosed => 1,
            RunStatus::Contradiction => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub instance: String,
    pub m: usize,
    pub eta: i64,
    pub backend: String,
    pub seed: u64,
    pub max_iterations: usize,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub records: Vec<IterationRecord>,
    pub final_fixes: Assignment,
    pub final_family: CutFamily,
    pub final_instance: QuboInstance,
}

impl Report {
    pub fn final_bound(&self) -> Option<i64> {
        self.records.last().map(|r| r.zeta_hat_k)
    }
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> serde_json::Result<Report> {
    serde_json::from_str(text)
}

fn row(cells: &[String]) -> String {
    let mut out = String::from("|");
    for c in cells {
        if c.is_empty() {
            out.push_str(" |");
        } else {
            out.push(' ');
            out.push_str(c);
            out.push_str(" |");
        }
    }
    out
}

/// One cell per iteration slot: `d_k, ζ̂_k`, blank after the run stopped.
pub fn table_cells(records: &[IterationRecord], columns: usize) -> Vec<String> {
    (0..columns)
        .map(|k| {
            records
                .iter()
                .find(|r| r.k == k)
                .map(|r| format!("{}, {}", r.d_k, r.zeta_hat_k))
                .unwrap_or_default()
        })
        .collect()
}

/// Markdown-style table with one row per report and columns `k=0..`.
/// Reports without records contribute no row.
pub fn to_table(reports: &[Report]) -> String {
    let columns = reports.iter().map(|r| r.max_iterations).max().unwrap_or(0);
    let mut header = vec!["instance".to_string(), "eta".to_string()];
    header.extend((0..columns).map(|k| format!("k={k}")));
    let mut lines = vec![row(&header), row(&vec!["---".to_string(); header.len()])];
    for r in reports.iter().filter(|r| !r.records.is_empty()) {
        let mut cells = vec![r.instance.clone(), r.eta.to_string()];
        cells.extend(table_cells(&r.records, columns));
        lines.push(row(&cells));
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
