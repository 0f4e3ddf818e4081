//! Deterministic CSV and JSON serialization of sweep results.
//!
//! Every number is rounded to 9 significant digits (ties to even) before it
//! is written, so identical inputs give byte-identical files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::harness::run::{CaseResult, SweepReport};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "direction,bits,di_1,di_2,di_3,di_4,di_5,decoded,expected,residual";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// One row per case.
    Csv,
    /// The full reports.
    Json,
    /// One row per image with the Δi of every DER.
    Heatmap,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "heatmap" => Ok(Format::Heatmap),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Heatmap => "heatmap",
        })
    }
}

/// Rounds to 9 significant digits, ties to even.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        // normalises -0.0 too
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn num(x: f64) -> String {
    format!("{:e}", round_sig9(x))
}

fn csv_row(case: &CaseResult) -> String {
    let mut fields = vec![
        case.direction.short_name().to_string(),
        case.image.to_string(),
    ];
    fields.extend(case.delta_i.iter().map(|&x| num(x)));
    fields.push(case.decoded.to_string());
    fields.push(case.expected.to_string());
    fields.push(num(case.residual));
    fields.join(",")
}

pub fn emit_csv(reports: &[SweepReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for case in reports.iter().flat_map(|r| &r.cases) {
        out.push_str(&csv_row(case));
        out.push('\n');
    }
    out
}

/// 16×5 Δi matrices, one block per direction, for external plotting.
pub fn emit_heatmap(reports: &[SweepReport]) -> String {
    let mut out = String::from("direction,bits,di_1,di_2,di_3,di_4,di_5\n");
    for report in reports {
        for case in &report.cases {
            let row: Vec<String> = case.delta_i.iter().map(|&x| num(x)).collect();
            out.push_str(&format!(
                "{},{},{}\n",
                report.direction.short_name(),
                case.image,
                row.join(",")
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub reports: Vec<SweepReport>,
}

fn round_all(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&x| round_sig9(x)).collect()
}

/// A copy of the report with every number rounded as it is written out.
pub fn rounded(report: &SweepReport) -> SweepReport {
    SweepReport {
        grid_fingerprint: report.grid_fingerprint.clone(),
        direction: report.direction,
        weights: round_all(&report.weights),
        anchor_node: report.anchor_node,
        delta_r: round_all(&report.delta_r),
        v_sec: round_all(&report.v_sec),
        kappa: round_sig9(report.kappa),
        superposition_deviation: round_sig9(report.superposition_deviation),
        cases: report
            .cases
            .iter()
            .map(|c| CaseResult {
                delta_i: round_all(&c.delta_i),
                residual: round_sig9(c.residual),
                ..c.clone()
            })
            .collect(),
    }
}

pub fn emit_json(reports: &[SweepReport]) -> String {
    let document = ResultsDocument {
        reports: reports.iter().map(rounded).collect(),
    };
    let mut text = serde_json::to_string_pretty(&document).expect("reports serialize");
    text.push('\n');
    text
}

pub fn parse_json(text: &str) -> Result<Vec<SweepReport>> {
    let document: ResultsDocument = serde_json::from_str(text)?;
    Ok(document.reports)
}

pub fn emit(reports: &[SweepReport], format: Format) -> String {
    match format {
        Format::Csv => emit_csv(reports),
        Format::Json => emit_json(reports),
        Format::Heatmap => emit_heatmap(reports),
    }
}
