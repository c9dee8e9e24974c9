//! Evaluation harness: blinded judging, benchmark rounds and report tables.
//!
//! A benchmark directory holds `runs/<scenario>/<system>.jsonl` traces,
//! `evaluations/<scenario>.json` records with their judge payload logs,
//! `scores.csv` and `costs.csv`, and rendered tables under `reports/`.

pub mod bench;
pub mod judge;
pub mod report;

use std::path::{Path, PathBuf};

pub use bench::{run_benchmark, BenchmarkConfig, BenchmarkResult, SystemEntry, TrajectoryRow};
pub use judge::{
    judge_outputs, judge_outputs_with, EvaluationRecord, JudgeConfig, JudgePayload, JudgeSpec, Judged,
    RUBRIC_CRITERIA,
};
pub use report::{build_report, render_report, Report};

use crate::error::{LarkError, Result};
use crate::util::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchLayout {
    pub root: PathBuf,
}

impl BenchLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        BenchLayout { root: root.into() }
    }

    pub fn create(&self) -> Result<()> {
        for d in [self.runs(), self.evaluations(), self.reports()] {
            std::fs::create_dir_all(&d).map_err(|e| LarkError::io(&d, e))?;
        }
        Ok(())
    }

    pub fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn evaluations(&self) -> PathBuf {
        self.root.join("evaluations")
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn scores_csv(&self) -> PathBuf {
        self.root.join("scores.csv")
    }

    pub fn costs_csv(&self) -> PathBuf {
        self.root.join("costs.csv")
    }

    pub fn trace_path(&self, scenario_id: &str, system_slug: &str) -> PathBuf {
        self.runs().join(scenario_id).join(format!("{system_slug}.jsonl"))
    }

    pub fn evaluation_path(&self, scenario_id: &str) -> PathBuf {
        self.evaluations().join(format!("{scenario_id}.json"))
    }

    pub fn payload_path(&self, scenario_id: &str) -> PathBuf {
        self.evaluations().join(format!("{scenario_id}.payloads.jsonl"))
    }

    /// Every trace under `runs/`, sorted by path.
    pub fn trace_files(&self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        collect_files(&self.runs(), "jsonl", &mut out)?;
        out.sort();
        Ok(out)
    }

    /// Every judge payload log under `evaluations/`, sorted by path.
    pub fn payload_files(&self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        collect_files(&self.evaluations(), "jsonl", &mut out)?;
        out.retain(|p| p.to_string_lossy().ends_with(".payloads.jsonl"));
        out.sort();
        Ok(out)
    }
}

fn collect_files(dir: &Path, ext: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    if !dir.exists() {
        return Ok(());
    }
    for entry in std::fs::read_dir(dir).map_err(|e| LarkError::io(dir, e))? {
        let path = entry.map_err(|e| LarkError::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(&path, ext, out)?;
        } else if path.extension().is_some_and(|e| e == ext) {
            out.push(path);
        }
    }
    Ok(())
}

/// Renders the report for the matrices in `layout` and writes
/// `reports/report.txt`, `reports/report.json` and, when traces exist,
/// `reports/efficiency.csv`.
pub fn write_report(layout: &BenchLayout, reference: &str) -> Result<Report> {
    let scores = crate::stats::ScoreMatrix::read(&layout.scores_csv())?;
    let costs = crate::stats::ScoreMatrix::read(&layout.costs_csv())?;
    let report = build_report(&scores, &costs, reference)?;
    std::fs::create_dir_all(layout.reports()).map_err(|e| LarkError::io(layout.reports(), e))?;
    write_atomic(&layout.reports().join("report.txt"), render_report(&report))?;
    write_atomic(
        &layout.reports().join("report.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;

    let mut rows = Vec::new();
    for path in layout.trace_files()? {
        let trace = crate::trace::RunTrace::read(&path)?;
        let system = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        rows.push(TrajectoryRow {
            scenario_id: trace.header.scenario.id.clone(),
            system,
            efficiency: trace.summary.efficiency_trajectory,
        });
    }
    if !rows.is_empty() {
        write_atomic(&layout.reports().join("efficiency.csv"), report::efficiency_csv(&rows)?)?;
    }
    Ok(report)
}
