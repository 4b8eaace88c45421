use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::RocPoint;

/// One evaluated cell of the grid.
///
/// `na_k` is the requested NA neighborhood size (NA clamps it to `N - 1`);
/// rows with `na_iterations = 0` carry the original detector scores. Failed
/// cells keep their coordinates, hold NaN metrics and a non-empty `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub detector: String,
    pub na_k: usize,
    pub na_iterations: usize,
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1_harmonic: f64,
    pub f1_paper: f64,
    pub detector_time_s: f64,
    pub na_time_s: f64,
    pub graph_reused: bool,
    #[serde(default)]
    pub error: String,
    #[serde(skip)]
    pub roc: Vec<RocPoint>,
}

impl ReportRow {
    pub fn failed(
        dataset: impl Into<String>,
        detector: impl Into<String>,
        (na_k, na_iterations): (usize, usize),
        error: impl ToString,
    ) -> Self {
        Self {
            dataset: dataset.into(),
            detector: detector.into(),
            na_k,
            na_iterations,
            auc: f64::NAN,
            precision: f64::NAN,
            recall: f64::NAN,
            f1_harmonic: f64::NAN,
            f1_paper: f64::NAN,
            detector_time_s: 0.0,
            na_time_s: 0.0,
            graph_reused: false,
            error: error.to_string(),
            roc: Vec::new(),
        }
    }

    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }

    pub fn is_original(&self) -> bool {
        self.na_iterations == 0
    }

    /// Metric columns only, for comparing runs whose timings differ.
    pub fn metrics(&self) -> (f64, f64, f64, f64, f64, bool) {
        (
            self.auc,
            self.precision,
            self.recall,
            self.f1_harmonic,
            self.f1_paper,
            self.graph_reused,
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(ReportRow::is_error)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(HEADER)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers()?.clone();
        if headers.iter().ne(HEADER.iter().copied()) {
            return Err(Error::Config(format!(
                "unexpected report header {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let rows = r.deserialize().collect::<std::result::Result<_, _>>()?;
        Ok(Self { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }
}

/// Report CSV columns, in order.
pub const HEADER: [&str; 13] = [
    "dataset",
    "detector",
    "na_k",
    "na_iterations",
    "auc",
    "precision",
    "recall",
    "f1_harmonic",
    "f1_paper",
    "detector_time_s",
    "na_time_s",
    "graph_reused",
    "error",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn row(auc: f64) -> ReportRow {
        ReportRow {
            dataset: "d".into(),
            detector: "lof_k10".into(),
            na_k: 100,
            na_iterations: 1,
            auc,
            precision: 0.5,
            recall: 0.5,
            f1_harmonic: 0.5,
            f1_paper: 0.5,
            detector_time_s: 0.25,
            na_time_s: 0.01,
            graph_reused: true,
            error: String::new(),
            roc: Vec::new(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let report = ExperimentReport {
            rows: vec![row(0.75), ReportRow::failed("d", "abod_k1", (0, 0), "k too small")],
        };
        let text = report.to_csv_string().unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
        let back = ExperimentReport::from_csv_str(&text).unwrap();
        assert_eq!(back.rows[0], report.rows[0]);
        assert!(back.rows[1].auc.is_nan());
        assert_eq!(back.rows[1].error, "k too small");
    }

    #[test]
    fn empty_report_still_has_header() {
        let text = ExperimentReport::default().to_csv_string().unwrap();
        assert_eq!(text.trim_end(), HEADER.join(","));
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(ExperimentReport::from_csv_str("a,b\n1,2\n").is_err());
    }
}
