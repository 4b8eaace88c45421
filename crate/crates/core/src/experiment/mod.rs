//! Config-driven experiment runner.
//!
//! The grid is datasets × scorers × NA settings, where the scorers are the
//! configured detectors followed by one average ensemble per configured
//! group. Each (dataset, scorer) pair is detected once and then
//! post-processed with every NA setting. Every grid cell yields exactly one
//! report row; failures become error rows.

mod config;
mod emit;
mod report;
mod summary;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::data::Dataset;
use crate::detectors::{detect_with, Detection, DetectorConfig, ScoreVector};
use crate::ensemble::{average_ensemble, EnsembleInput};
use crate::error::{Error, Result};
use crate::eval::{evaluate, roc_curve};
use crate::na::{apply_na_with, na_iterate_with, NaConfig};
use crate::neighbors::{knn_indexed_with, NeighborGraph};
use crate::par::Exec;

pub use config::{DatasetSource, ExperimentConfig, NaVariant, RangeSpec};
pub use emit::{emit_reports, Manifest, MANIFEST_FILE, REPORT_FILE};
pub use report::{ExperimentReport, ReportRow, HEADER};
pub use summary::{improvement_table, summarize, Axis, ImprovementRow, SummaryRow, SummaryTable, Table};

/// Calls cheaper than this are repeated three times and the median is kept.
const REPEAT_BELOW_S: f64 = 0.1;

/// Runs `f`, returning its result and wall time in seconds.
pub fn timed<T>(mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    let first = start.elapsed().as_secs_f64();
    if first >= REPEAT_BELOW_S {
        return Ok((out, first));
    }
    let mut times = vec![first];
    for _ in 0..2 {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok((out, times[1]))
}

/// Deterministic per-cell seed from the experiment seed and cell coordinates.
pub fn cell_seed(seed: u64, dataset: usize, detector: usize, detector_seed: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    [dataset as u64, detector as u64, detector_seed]
        .into_iter()
        .fold(mix(seed), |acc, v| mix(acc ^ v))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, Exec::default())
}

/// Scorer of the grid: a configured detector or an ensemble group.
enum Scorer {
    Detector(usize),
    Ensemble(Vec<usize>),
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Exec) -> Result<ExperimentReport> {
    cfg.validate()?;
    let settings = cfg.na_settings();
    let mut scorers: Vec<(Scorer, String)> = cfg
        .detectors
        .iter()
        .enumerate()
        .map(|(i, d)| (Scorer::Detector(i), d.label()))
        .collect();
    for group in &cfg.ensemble_groups {
        let members = group
            .iter()
            .map(|m| cfg.find_detector(m))
            .collect::<Result<Vec<_>>>()?;
        let label = format!(
            "ensemble({})",
            members
                .iter()
                .map(|&m| cfg.detectors[m].label())
                .collect::<Vec<_>>()
                .join("+")
        );
        scorers.push((Scorer::Ensemble(members), label));
    }

    let mut rows = Vec::new();
    for (di, source) in cfg.datasets.iter().enumerate() {
        let name = source.display_name();
        match source.load() {
            Ok(d) => rows.extend(run_dataset(cfg, di, &d, &scorers, &settings, exec)),
            Err(e) => {
                for (_, label) in &scorers {
                    for s in &settings {
                        rows.push(ReportRow::failed(&name, label, s.coordinates(), &e));
                    }
                }
            }
        }
    }
    Ok(ExperimentReport { rows })
}

fn run_dataset(
    cfg: &ExperimentConfig,
    di: usize,
    d: &Dataset,
    scorers: &[(Scorer, String)],
    settings: &[NaVariant],
    exec: Exec,
) -> Vec<ReportRow> {
    // Detect with every configured detector once; ensembles reuse these.
    let detections: Vec<Result<(Detection, f64)>> = exec.map(cfg.detectors.len(), |i| {
        let mut dc: DetectorConfig = cfg.detectors[i].clone();
        dc.seed = cell_seed(cfg.seed, di, i, dc.seed);
        timed(|| detect_with(d, &dc, exec))
    });

    let scored: Vec<Result<(ScoreVector, Option<&NeighborGraph>, f64)>> = scorers
        .iter()
        .map(|(scorer, _)| match scorer {
            Scorer::Detector(i) => match &detections[*i] {
                Ok((det, t)) => Ok((det.scores.clone(), det.graph.as_ref(), *t)),
                Err(e) => Err(Error::Config(e.to_string())),
            },
            Scorer::Ensemble(members) => {
                let mut vectors = Vec::new();
                let mut total = 0.0;
                for &m in members {
                    match &detections[m] {
                        Ok((det, t)) => {
                            vectors.push(det.scores.clone());
                            total += t;
                        }
                        Err(e) => return Err(Error::Config(format!("member failed: {e}"))),
                    }
                }
                let input = EnsembleInput {
                    members: vectors,
                    normalization: cfg.ensemble_normalization,
                };
                let (s, t) = timed(|| average_ensemble(&input))?;
                Ok((s, None, total + t))
            }
        })
        .collect();

    // Graphs NA has to build itself, one per effective k, with their build time.
    let mut needed = BTreeSet::new();
    for result in &scored {
        for s in settings {
            if let (Ok((_, graph, _)), NaVariant::On(c)) = (result, s) {
                if c.iterations > 0 && !reusable(c, *graph, d.len()) {
                    needed.insert(c.effective_k(d.len()));
                }
            }
        }
    }
    let needed: Vec<usize> = needed.into_iter().collect();
    let built = exec.map(needed.len(), |t| timed(|| knn_indexed_with(d, needed[t], exec)));
    let graphs: BTreeMap<usize, Result<(NeighborGraph, f64)>> = needed.into_iter().zip(built).collect();

    let cells: Vec<(usize, &NaVariant)> = (0..scorers.len())
        .flat_map(|s| settings.iter().map(move |v| (s, v)))
        .collect();
    exec.map(cells.len(), |c| {
        let (si, setting) = cells[c];
        let label = &scorers[si].1;
        match &scored[si] {
            Ok((scores, graph, det_time)) => {
                run_cell(d, scores, *graph, *det_time, setting, &graphs, exec)
                    .map(|mut row| {
                        row.dataset = d.name().to_owned();
                        row.detector = label.clone();
                        row
                    })
                    .unwrap_or_else(|e| ReportRow::failed(d.name(), label, setting.coordinates(), e))
            }
            Err(e) => ReportRow::failed(d.name(), label, setting.coordinates(), e),
        }
    })
}

fn reusable(c: &NaConfig, graph: Option<&NeighborGraph>, n: usize) -> bool {
    c.reuse_graph && graph.is_some_and(|g| g.k() >= c.effective_k(n))
}

fn run_cell(
    d: &Dataset,
    scores: &ScoreVector,
    det_graph: Option<&NeighborGraph>,
    detector_time_s: f64,
    setting: &NaVariant,
    graphs: &BTreeMap<usize, Result<(NeighborGraph, f64)>>,
    exec: Exec,
) -> Result<ReportRow> {
    let (na_k, na_iterations) = setting.coordinates();
    let (out, na_time_s, graph_reused) = match setting {
        NaVariant::On(c) if c.iterations > 0 => {
            if reusable(c, det_graph, d.len()) {
                let (o, t) = timed(|| apply_na_with(d, scores, c, det_graph, exec))?;
                debug_assert!(o.graph_reused);
                (o.scores, t, true)
            } else {
                let k = c.effective_k(d.len());
                let (g, build) = match graphs.get(&k) {
                    Some(Ok(entry)) => (&entry.0, entry.1),
                    Some(Err(e)) => return Err(Error::Config(e.to_string())),
                    None => unreachable!("graph for k = {k} was prepared"),
                };
                let (s, t) = timed(|| na_iterate_with(g, scores, c.iterations, exec))?;
                (s, build + t, false)
            }
        }
        _ => (scores.clone(), 0.0, false),
    };
    let labels = d
        .labels()
        .ok_or_else(|| Error::InvalidDataset("dataset has no labels".into()))?;
    let eval = evaluate(&out.scores, labels)?;
    Ok(ReportRow {
        dataset: String::new(),
        detector: String::new(),
        na_k,
        na_iterations,
        auc: eval.auc,
        precision: eval.precision,
        recall: eval.recall,
        f1_harmonic: eval.f1_harmonic,
        f1_paper: eval.f1_paper,
        detector_time_s,
        na_time_s,
        graph_reused,
        error: String::new(),
        roc: roc_curve(&out.scores, labels)?,
    })
}
