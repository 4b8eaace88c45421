use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::report::{ExperimentReport, ReportRow};
use crate::error::{Error, Result};
use crate::na::{DEFAULT_ITERATIONS, DEFAULT_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Dataset,
    Detector,
    NaK,
    NaIterations,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Dataset => "dataset",
            Axis::Detector => "detector",
            Axis::NaK => "na_k",
            Axis::NaIterations => "na_iterations",
        }
    }

    fn key(self, row: &ReportRow) -> String {
        match self {
            Axis::Dataset => row.dataset.clone(),
            Axis::Detector => row.detector.clone(),
            Axis::NaK => row.na_k.to_string(),
            Axis::NaIterations => row.na_iterations.to_string(),
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dataset" => Ok(Axis::Dataset),
            "detector" => Ok(Axis::Detector),
            "na_k" => Ok(Axis::NaK),
            "na_iterations" => Ok(Axis::NaIterations),
            other => Err(Error::Config(format!("unknown axis {other:?}"))),
        }
    }
}

/// Plain table of strings, written out as CSV and as aligned text.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_aligned_text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&self.header);
        line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
        for row in &self.rows {
            line(row);
        }
        out
    }
}

fn fmt_metric(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.4}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), fmt_metric)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: Vec<String>,
    /// Rows in the group, including error rows.
    pub count: usize,
    pub errors: usize,
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1_harmonic: f64,
    pub f1_paper: f64,
    pub detector_time_s: f64,
    pub na_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub axes: Vec<Axis>,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn name(&self) -> String {
        if self.axes.is_empty() {
            "summary_all".into()
        } else {
            let axes: Vec<&str> = self.axes.iter().map(|a| a.as_str()).collect();
            format!("summary_by_{}", axes.join("_"))
        }
    }

    pub fn to_table(&self) -> Table {
        let mut header: Vec<String> = self.axes.iter().map(|a| a.as_str().to_owned()).collect();
        header.extend(
            [
                "count",
                "errors",
                "auc",
                "precision",
                "recall",
                "f1_harmonic",
                "f1_paper",
                "detector_time_s",
                "na_time_s",
            ]
            .map(String::from),
        );
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = r.key.clone();
                cells.push(r.count.to_string());
                cells.push(r.errors.to_string());
                cells.extend(
                    [
                        r.auc,
                        r.precision,
                        r.recall,
                        r.f1_harmonic,
                        r.f1_paper,
                        r.detector_time_s,
                        r.na_time_s,
                    ]
                    .map(fmt_metric),
                );
                cells
            })
            .collect();
        Table {
            name: self.name(),
            header,
            rows,
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Per-group means of every metric. Groups keep first-appearance order;
/// error rows count toward `count` but not toward the means.
pub fn summarize(report: &ExperimentReport, group_by: &[Axis]) -> Result<SummaryTable> {
    if report.rows.is_empty() {
        return Err(Error::Config("cannot summarize an empty report".into()));
    }
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: BTreeMap<Vec<String>, Vec<&ReportRow>> = BTreeMap::new();
    for row in &report.rows {
        let key: Vec<String> = group_by.iter().map(|a| a.key(row)).collect();
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(row);
    }
    let rows = order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let ok = || members.iter().filter(|r| !r.is_error());
            SummaryRow {
                count: members.len(),
                errors: members.len() - ok().count(),
                auc: mean(ok().map(|r| r.auc)),
                precision: mean(ok().map(|r| r.precision)),
                recall: mean(ok().map(|r| r.recall)),
                f1_harmonic: mean(ok().map(|r| r.f1_harmonic)),
                f1_paper: mean(ok().map(|r| r.f1_paper)),
                detector_time_s: mean(ok().map(|r| r.detector_time_s)),
                na_time_s: mean(ok().map(|r| r.na_time_s)),
                key,
            }
        })
        .collect();
    Ok(SummaryTable {
        axes: group_by.to_vec(),
        rows,
    })
}

/// Original / NA-default / NA-best comparison for one (dataset, detector)
/// pair, or a per-detector average over datasets when `dataset` is `AVG`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub dataset: String,
    pub detector: String,
    pub original_auc: f64,
    /// NA with `k = 100` and one iteration, when that cell was run.
    pub na_default_auc: Option<f64>,
    /// Best AUC over every cell of the pair, the original included.
    pub na_best_auc: f64,
    pub original_f1: f64,
    pub na_default_f1: Option<f64>,
    pub na_best_f1: f64,
}

impl ImprovementRow {
    pub fn diff_default(&self) -> Option<f64> {
        self.na_default_auc.map(|a| a - self.original_auc)
    }

    pub fn diff_best(&self) -> f64 {
        self.na_best_auc - self.original_auc
    }
}

/// Per (dataset, detector) original vs NA AUC and F1 (arithmetic-mean
/// variant), followed by per-detector averages over datasets. Pairs without
/// an original row are skipped.
pub fn improvement_table(report: &ExperimentReport) -> Vec<ImprovementRow> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&ReportRow>> = BTreeMap::new();
    for row in report.rows.iter().filter(|r| !r.is_error()) {
        let key = (row.dataset.clone(), row.detector.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(row);
    }
    let mut out = Vec::new();
    for key in order {
        let rows = &groups[&key];
        let Some(orig) = rows.iter().find(|r| r.is_original()) else {
            continue;
        };
        let default = rows
            .iter()
            .find(|r| r.na_k == DEFAULT_K && r.na_iterations == DEFAULT_ITERATIONS);
        out.push(ImprovementRow {
            dataset: key.0.clone(),
            detector: key.1.clone(),
            original_auc: orig.auc,
            na_default_auc: default.map(|r| r.auc),
            na_best_auc: rows.iter().map(|r| r.auc).fold(f64::NEG_INFINITY, f64::max),
            original_f1: orig.f1_paper,
            na_default_f1: default.map(|r| r.f1_paper),
            na_best_f1: rows.iter().map(|r| r.f1_paper).fold(f64::NEG_INFINITY, f64::max),
        });
    }

    let mut detectors: Vec<String> = Vec::new();
    for r in &out {
        if !detectors.contains(&r.detector) {
            detectors.push(r.detector.clone());
        }
    }
    let averages: Vec<ImprovementRow> = detectors
        .into_iter()
        .map(|det| {
            let rows: Vec<&ImprovementRow> = out.iter().filter(|r| r.detector == det).collect();
            let opt_mean = |f: fn(&ImprovementRow) -> Option<f64>| {
                rows.iter()
                    .map(|r| f(r))
                    .collect::<Option<Vec<f64>>>()
                    .map(|v| mean(v.into_iter()))
            };
            ImprovementRow {
                dataset: "AVG".into(),
                original_auc: mean(rows.iter().map(|r| r.original_auc)),
                na_default_auc: opt_mean(|r| r.na_default_auc),
                na_best_auc: mean(rows.iter().map(|r| r.na_best_auc)),
                original_f1: mean(rows.iter().map(|r| r.original_f1)),
                na_default_f1: opt_mean(|r| r.na_default_f1),
                na_best_f1: mean(rows.iter().map(|r| r.na_best_f1)),
                detector: det,
            }
        })
        .collect();
    out.extend(averages);
    out
}

impl ImprovementRow {
    pub fn table(rows: &[ImprovementRow]) -> Table {
        let header = [
            "dataset",
            "detector",
            "auc_original",
            "auc_na_default",
            "auc_na_best",
            "diff_default",
            "diff_best",
            "f1_original",
            "f1_na_default",
            "f1_na_best",
        ]
        .map(String::from)
        .to_vec();
        let rows = rows
            .iter()
            .map(|r| {
                vec![
                    r.dataset.clone(),
                    r.detector.clone(),
                    fmt_metric(r.original_auc),
                    fmt_opt(r.na_default_auc),
                    fmt_metric(r.na_best_auc),
                    fmt_opt(r.diff_default()),
                    fmt_metric(r.diff_best()),
                    fmt_metric(r.original_f1),
                    fmt_opt(r.na_default_f1),
                    fmt_metric(r.na_best_f1),
                ]
            })
            .collect();
        Table {
            name: "improvement".into(),
            header,
            rows,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dataset: &str, detector: &str, k: usize, it: usize, auc: f64) -> ReportRow {
        ReportRow {
            dataset: dataset.into(),
            detector: detector.into(),
            na_k: k,
            na_iterations: it,
            auc,
            precision: auc / 2.0,
            recall: auc / 2.0,
            f1_harmonic: auc / 2.0,
            f1_paper: auc / 2.0,
            detector_time_s: 1.0,
            na_time_s: 0.1,
            graph_reused: false,
            error: String::new(),
            roc: Vec::new(),
        }
    }

    #[test]
    fn single_row_summary_is_the_row() {
        let report = ExperimentReport {
            rows: vec![row("a", "lof", 100, 1, 0.8)],
        };
        let s = summarize(&report, &[Axis::Dataset, Axis::Detector]).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].key, vec!["a", "lof"]);
        assert_eq!((s.rows[0].auc, s.rows[0].f1_paper, s.rows[0].count), (0.8, 0.4, 1));
    }

    #[test]
    fn group_mean() {
        let report = ExperimentReport {
            rows: vec![row("a", "lof", 0, 0, 0.6), row("b", "lof", 0, 0, 0.8)],
        };
        let s = summarize(&report, &[Axis::Detector]).unwrap();
        assert!((s.rows[0].auc - 0.7).abs() < 1e-15);
    }

    #[test]
    fn groups_partition_rows() {
        let mut rows = Vec::new();
        for ds in ["a", "b", "c"] {
            for det in ["knn", "lof"] {
                for (k, it) in [(0, 0), (100, 1), (5, 1)] {
                    rows.push(row(ds, det, k, it, 0.5));
                }
            }
        }
        rows.push(ReportRow::failed("a", "abod", (0, 0), "boom"));
        let report = ExperimentReport { rows };
        for axes in [vec![], vec![Axis::Dataset], vec![Axis::Detector, Axis::NaK], vec![Axis::NaIterations]] {
            let s = summarize(&report, &axes).unwrap();
            assert_eq!(s.rows.iter().map(|r| r.count).sum::<usize>(), report.rows.len());
        }
        let by_det = summarize(&report, &[Axis::Detector]).unwrap();
        let abod = by_det.rows.iter().find(|r| r.key[0] == "abod").unwrap();
        assert_eq!((abod.count, abod.errors), (1, 1));
        assert!(abod.auc.is_nan());
    }

    #[test]
    fn unknown_axis_and_empty_report() {
        assert!("speed".parse::<Axis>().is_err());
        assert_eq!("na_k".parse::<Axis>().unwrap(), Axis::NaK);
        assert!(summarize(&ExperimentReport::default(), &[]).is_err());
    }

    #[test]
    fn improvement_triplets() {
        let report = ExperimentReport {
            rows: vec![
                row("a", "lof", 0, 0, 0.60),
                row("a", "lof", 100, 1, 0.70),
                row("a", "lof", 20, 1, 0.75),
                row("b", "lof", 0, 0, 0.80),
                row("b", "lof", 100, 1, 0.78),
            ],
        };
        let t = improvement_table(&report);
        assert_eq!(t.len(), 3);
        assert_eq!((t[0].original_auc, t[0].na_default_auc, t[0].na_best_auc), (0.60, Some(0.70), 0.75));
        // best never falls below the original
        assert_eq!(t[1].na_best_auc, 0.80);
        let avg = &t[2];
        assert_eq!(avg.dataset, "AVG");
        assert!((avg.original_auc - 0.70).abs() < 1e-12);
        assert!((avg.na_default_auc.unwrap() - 0.74).abs() < 1e-12);
        assert!((avg.diff_best() - 0.075).abs() < 1e-12);
        let table = ImprovementRow::table(&t);
        assert_eq!(table.rows.len(), 3);
        assert!(table.to_aligned_text().contains("AVG"));
    }

    #[test]
    fn aligned_text_pads_columns() {
        let t = Table {
            name: "t".into(),
            header: vec!["a".into(), "long_header".into()],
            rows: vec![vec!["value".into(), "1".into()]],
        };
        let text = t.to_aligned_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a      long_header");
        assert_eq!(lines[2], "value  1");
    }
}
