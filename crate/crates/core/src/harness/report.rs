//! CSV report and curve files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::PredictionType;
use crate::embedding::EncoderId;
use crate::engine::{accuracy, percent, ExperimentReport, IterationLog, Method, ReplayTrace};
use crate::selection::QueryVariant;
use crate::{Error, Result};

pub const REPORT_HEADER: [&str; 10] = [
    "prediction_type",
    "adl_variable",
    "adl_variant",
    "delta",
    "data_pct",
    "sensors_pct",
    "accuracy_pct",
    "test_loss",
    "seed",
    "error",
];

pub const CURVE_HEADER: [&str; 4] = ["iteration", "train_loss", "val_loss_unqueried", "val_loss_all_candidates"];

/// Identity of one grid row.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub prediction_type: PredictionType,
    /// `rf`, `pdl` or `adl`.
    pub method: String,
    pub variable: Option<EncoderId>,
    pub variant: Option<QueryVariant>,
    pub delta: f64,
    pub seed: u64,
}

impl GridCell {
    pub fn from_report(report: &ExperimentReport, seed: u64) -> Self {
        let (method, variable, variant) = match report.method {
            Method::Adl { variable, variant } => ("adl", Some(variable), Some(variant)),
            Method::Pdl => ("pdl", None, None),
        };
        GridCell {
            prediction_type: report.prediction_type,
            method: method.to_string(),
            variable,
            variant,
            delta: report.delta,
            seed,
        }
    }

    fn variable_label(&self) -> String {
        match self.variable {
            Some(v) if self.method == "adl" => v.name().to_string(),
            _ => self.method.clone(),
        }
    }

    fn variant_label(&self) -> String {
        self.variant.map(|v| v.name().to_string()).unwrap_or_default()
    }

    pub fn curve_file_name(&self) -> String {
        let mut name = format!("{}_{}", self.prediction_type.name(), self.variable_label());
        if let Some(v) = self.variant {
            name.push('_');
            name.push_str(v.name());
        }
        format!("{name}_d{}.csv", self.delta)
    }
}

/// Loss as printed in reports.
pub fn format_loss(loss: f64) -> String {
    format!("{loss:.6}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub prediction_type: String,
    pub adl_variable: String,
    pub adl_variant: String,
    pub delta: String,
    pub data_pct: Option<u32>,
    pub sensors_pct: Option<u32>,
    pub accuracy_pct: Option<u32>,
    pub test_loss: Option<String>,
    pub seed: u64,
    pub error: String,
}

impl ReportRow {
    fn empty(cell: &GridCell) -> Self {
        ReportRow {
            prediction_type: cell.prediction_type.name().to_string(),
            adl_variable: cell.variable_label(),
            adl_variant: cell.variant_label(),
            delta: format!("{}", cell.delta),
            data_pct: None,
            sensors_pct: None,
            accuracy_pct: None,
            test_loss: None,
            seed: cell.seed,
            error: String::new(),
        }
    }

    /// Accuracy is computed from the printed losses so the CSV is self-consistent.
    pub fn from_outcome(cell: &GridCell, outcome: Result<&ExperimentReport, &Error>, rf_loss: Option<f64>) -> Self {
        let report = match outcome {
            Ok(r) => r,
            Err(e) => return ReportRow::failed(cell, e),
        };
        let test_loss = format_loss(report.test_loss);
        let accuracy_pct = rf_loss.and_then(|rf| {
            let printed = |s: String| s.parse::<f64>().ok();
            let acc = accuracy(printed(test_loss.clone())?, printed(format_loss(rf))?).ok()?;
            Some(percent(100.0 * acc))
        });
        ReportRow {
            data_pct: Some(percent(report.data_pct)),
            sensors_pct: Some(percent(report.sensors_pct)),
            accuracy_pct,
            test_loss: Some(test_loss),
            ..ReportRow::empty(cell)
        }
    }

    pub fn baseline(cell: &GridCell, rf_loss: f64) -> Self {
        ReportRow {
            data_pct: Some(0),
            sensors_pct: Some(0),
            accuracy_pct: Some(0),
            test_loss: Some(format_loss(rf_loss)),
            ..ReportRow::empty(cell)
        }
    }

    pub fn failed(cell: &GridCell, error: &Error) -> Self {
        ReportRow {
            error: format!("{}: {}", error.kind(), error).replace(['\n', '\r'], " "),
            ..ReportRow::empty(cell)
        }
    }

    pub fn test_loss_value(&self) -> Option<f64> {
        self.test_loss.as_deref().and_then(|s| s.parse().ok())
    }
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(REPORT_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(Error::Format(format!("unexpected report header {header:?}")));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub iteration: usize,
    pub train_loss: Option<String>,
    pub val_loss_unqueried: Option<String>,
    pub val_loss_all_candidates: String,
}

pub fn write_curve(path: &Path, logs: &[IterationLog]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if logs.is_empty() {
        w.write_record(CURVE_HEADER)?;
    }
    for l in logs {
        w.serialize(CurveRow {
            iteration: l.iteration,
            train_loss: l.train_loss().map(format_loss),
            val_loss_unqueried: l.val_loss_unqueried.map(format_loss),
            val_loss_all_candidates: format_loss(l.val_loss_all_candidates),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub(super) fn write_replay(path: &Path, original: &ReplayTrace, shuffled: &ReplayTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "original_val_loss", "shuffled_val_loss"])?;
    for (i, (a, b)) in original.val_losses.iter().zip(&shuffled.val_losses).enumerate() {
        w.write_record([(i + 1).to_string(), format_loss(*a), format_loss(*b)])?;
    }
    w.flush()?;
    Ok(())
}
