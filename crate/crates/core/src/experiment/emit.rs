use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::ExperimentReport;
use super::summary::Table;
use crate::error::{Error, Result};
use crate::eval::roc_to_csv;

pub const REPORT_FILE: &str = "report.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Lists every emitted artifact, relative to the output directory, together
/// with the hash of the config that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub artifacts: Vec<String>,
}

fn sanitize(part: &str) -> String {
    part.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-+()".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write(dir: &Path, rel: &str, contents: &str, artifacts: &mut Vec<String>) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    artifacts.push(rel.to_owned());
    Ok(())
}

/// Writes the raw report, every table as CSV and aligned text, one ROC curve
/// per row that carries one, and the manifest.
pub fn emit_reports(
    report: &ExperimentReport,
    tables: &[Table],
    output_dir: impl AsRef<Path>,
    config_hash: &str,
) -> Result<Manifest> {
    let dir = output_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut artifacts = Vec::new();
    write(dir, REPORT_FILE, &report.to_csv_string()?, &mut artifacts)?;
    for table in tables {
        let stem = sanitize(&table.name);
        write(dir, &format!("{stem}.csv"), &table.to_csv_string()?, &mut artifacts)?;
        write(dir, &format!("{stem}.txt"), &table.to_aligned_text(), &mut artifacts)?;
    }
    for row in report.rows.iter().filter(|r| !r.roc.is_empty()) {
        let rel = format!(
            "roc/{}__{}__k{}__it{}.csv",
            sanitize(&row.dataset),
            sanitize(&row.detector),
            row.na_k,
            row.na_iterations
        );
        write(dir, &rel, &roc_to_csv(&row.roc), &mut artifacts)?;
    }
    artifacts.sort();
    artifacts.dedup();
    let manifest = Manifest {
        config_hash: config_hash.to_owned(),
        artifacts,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RocPoint;
    use crate::experiment::report::ReportRow;

    fn report(with_roc: bool) -> ExperimentReport {
        let mut row = ReportRow::failed("data/set 1", "lof_k10", (100, 1), "");
        row.auc = 0.9;
        if with_roc {
            row.roc = vec![RocPoint { fpr: 0.0, tpr: 0.0 }, RocPoint { fpr: 1.0, tpr: 1.0 }];
        }
        ExperimentReport { rows: vec![row] }
    }

    #[test]
    fn empty_summaries_give_manifest_and_raw_csv() {
        let dir = tempfile::tempdir().unwrap();
        let m = emit_reports(&report(false), &[], dir.path(), "abc").unwrap();
        assert_eq!(m.artifacts, vec![REPORT_FILE.to_owned()]);
        let mut names: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        assert_eq!(names, vec![MANIFEST_FILE, REPORT_FILE]);
    }

    #[test]
    fn manifest_lists_existing_files_and_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let table = Table {
            name: "summary_by_detector".into(),
            header: vec!["detector".into()],
            rows: vec![vec!["lof".into()]],
        };
        let a = emit_reports(&report(true), std::slice::from_ref(&table), dir.path(), "h1").unwrap();
        for rel in &a.artifacts {
            assert!(dir.path().join(rel).is_file(), "{rel}");
        }
        assert!(a.artifacts.contains(&"roc/data_set_1__lof_k10__k100__it1.csv".to_owned()));
        let first = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let b = emit_reports(&report(true), &[table], dir.path(), "h1").unwrap();
        assert_eq!(a, b);
        assert_eq!(first, fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap());
        let parsed: Manifest = serde_json::from_str(&first).unwrap();
        assert_eq!(parsed.config_hash, "h1");
    }
}
