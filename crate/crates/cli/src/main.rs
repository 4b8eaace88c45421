use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use outlier_na::data::SynthSpec;
use outlier_na::experiment::{
    emit_reports, improvement_table, run_experiment_with, summarize, Axis, DatasetSource, ExperimentConfig,
    ExperimentReport, ImprovementRow, RangeSpec, Table,
};
use outlier_na::{DetectorConfig, DetectorKind, Exec, LabelColumn};

/// Outlier detection with neighborhood averaging of scores.
#[derive(Parser, Debug)]
#[command(name = "outlier-na", version)]
struct Cli {
    /// Worker threads for the parallel backend (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment grid described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize an existing report.csv.
    Summarize {
        report: PathBuf,
        /// Comma-separated axes: dataset, detector, na_k, na_iterations.
        #[arg(long, value_delimiter = ',', default_value = "detector")]
        group_by: Vec<Axis>,
        /// Also write the tables here as CSV and text.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Sweep the NA neighborhood size; k = 1 is the detector alone.
    SweepK {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = 1)]
        from: usize,
        #[arg(long, default_value_t = 100)]
        to: usize,
    },
    /// Sweep the number of NA iterations at k = 100; 0 is the detector alone.
    SweepIterations {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = 0)]
        from: usize,
        #[arg(long, default_value_t = 10)]
        to: usize,
    },
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Labeled CSV input.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    csv: Option<PathBuf>,
    /// Label column, by zero-based index or header name.
    #[arg(long, default_value = "label")]
    label_column: LabelColumn,
    /// Synthetic data as `n_inliers,n_outliers,dim,spread,seed`.
    #[arg(long, value_parser = parse_synth)]
    synthetic: Option<SynthSpec>,
    #[arg(long, default_value = "lof")]
    detector: DetectorKind,
    /// Detector neighborhood size.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results")]
    output_dir: PathBuf,
}

fn parse_synth(s: &str) -> std::result::Result<SynthSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n_in, n_out, dim, spread, seed] = parts[..] else {
        return Err("expected n_inliers,n_outliers,dim,spread,seed".into());
    };
    let num = |v: &str| v.parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok(SynthSpec {
        n_inliers: num(n_in)?,
        n_outliers: num(n_out)?,
        dim: num(dim)?,
        spread: spread.parse().map_err(|e| format!("{spread:?}: {e}"))?,
        seed: seed.parse().map_err(|e| format!("{seed:?}: {e}"))?,
    })
}

impl SweepArgs {
    fn config(&self) -> ExperimentConfig {
        let source = match (&self.csv, &self.synthetic) {
            (Some(path), _) => DatasetSource::Csv {
                path: path.clone(),
                label_column: Some(self.label_column.clone()),
                name: None,
            },
            (None, Some(spec)) => DatasetSource::Synthetic {
                synthetic: *spec,
                name: None,
            },
            (None, None) => unreachable!("clap requires one input"),
        };
        let detector = DetectorConfig::new(self.detector).with_k(self.k).with_seed(self.seed);
        let mut cfg = ExperimentConfig::new(vec![source], vec![detector]);
        cfg.na = Vec::new();
        cfg.seed = self.seed;
        cfg.output_dir = self.output_dir.clone();
        cfg
    }
}

fn init_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads > 1 {
        eprintln!("warning: built without the parallel feature, --threads ignored");
    }
    Ok(())
}

fn standard_tables(report: &ExperimentReport) -> Result<Vec<Table>> {
    let mut tables = Vec::new();
    for axes in [
        vec![Axis::Detector],
        vec![Axis::Dataset, Axis::Detector],
        vec![Axis::NaK, Axis::NaIterations],
    ] {
        tables.push(summarize(report, &axes)?.to_table());
    }
    tables.push(ImprovementRow::table(&improvement_table(report)));
    Ok(tables)
}

/// Runs, writes every artifact, and prints the improvement table. Returns
/// whether any cell failed.
fn run_and_emit(cfg: &ExperimentConfig, exec: Exec) -> Result<bool> {
    let report = run_experiment_with(cfg, exec)?;
    let tables = standard_tables(&report)?;
    let manifest = emit_reports(&report, &tables, &cfg.output_dir, &cfg.content_hash())
        .with_context(|| format!("writing results to {}", cfg.output_dir.display()))?;
    if let Some(improvement) = tables.last() {
        print!("{}", improvement.to_aligned_text());
    }
    println!(
        "{} rows, {} artifacts in {}",
        report.rows.len(),
        manifest.artifacts.len(),
        cfg.output_dir.display()
    );
    for row in report.rows.iter().filter(|r| r.is_error()) {
        eprintln!(
            "error: {} / {} (k {}, it {}): {}",
            row.dataset, row.detector, row.na_k, row.na_iterations, row.error
        );
    }
    Ok(report.has_errors())
}

fn summarize_file(report: &Path, axes: &[Axis], output_dir: Option<&Path>) -> Result<()> {
    let report = ExperimentReport::load(report)?;
    if report.rows.is_empty() {
        bail!("report has no rows");
    }
    let tables = vec![
        summarize(&report, axes)?.to_table(),
        ImprovementRow::table(&improvement_table(&report)),
    ];
    for t in &tables {
        println!("{}", t.name);
        print!("{}", t.to_aligned_text());
        println!();
    }
    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for t in &tables {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv_string()?)?;
            std::fs::write(dir.join(format!("{}.txt", t.name)), t.to_aligned_text())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    init_threads(cli.threads)?;
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Run {
            config,
            output_dir,
            seed,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            run_and_emit(&cfg, exec)
        }
        Command::Summarize {
            report,
            group_by,
            output_dir,
        } => summarize_file(&report, &group_by, output_dir.as_deref()).map(|()| false),
        Command::SweepK { sweep, from, to } => {
            let mut cfg = sweep.config();
            cfg.k_sweep = Some(RangeSpec { start: from, end: to });
            run_and_emit(&cfg, exec)
        }
        Command::SweepIterations { sweep, from, to } => {
            let mut cfg = sweep.config();
            cfg.iteration_sweep = Some(RangeSpec { start: from, end: to });
            run_and_emit(&cfg, exec)
        }
    }
}
