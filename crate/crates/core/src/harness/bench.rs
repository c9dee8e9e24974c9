//! Benchmark rounds: run or load every system's output per scenario, judge
//! them blind, and collect score and cost matrices.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::judge::{judge_outputs, EvaluationRecord, JudgeConfig, JudgePayload};
use super::BenchLayout;
use crate::error::{LarkError, Result};
use crate::evolution::{run_with_provider, EvolutionConfig, Variant};
use crate::model::{Scenario, Tokenizer};
use crate::stats::ScoreMatrix;
use crate::trace::RunTrace;
use crate::util::{parallel_map, write_atomic};

/// A roster entry: either a runnable variant or a directory of
/// pre-generated outputs named `<scenario id>.txt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
}

impl SystemEntry {
    pub fn variant(v: Variant) -> Self {
        SystemEntry {
            name: v.display_name().to_owned(),
            variant: Some(v),
            outputs: None,
        }
    }

    pub fn external(name: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        SystemEntry {
            name: name.into(),
            variant: None,
            outputs: Some(dir.into()),
        }
    }

    /// File-name form of the system name.
    pub fn slug(&self) -> String {
        slugify(&self.name)
    }
}

pub(crate) fn slugify(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub evolution: EvolutionConfig,
    pub judge: JudgeConfig,
    pub roster: Vec<SystemEntry>,
    /// Scenario rounds run concurrently.
    pub parallel_rounds: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            evolution: EvolutionConfig::default(),
            judge: JudgeConfig::default(),
            roster: Variant::ALL.into_iter().map(SystemEntry::variant).collect(),
            parallel_rounds: 4,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        self.evolution.validate()?;
        self.judge.validate()?;
        if self.roster.len() < 2 {
            return Err(LarkError::validation("roster needs at least two systems"));
        }
        let mut slugs: Vec<String> = self.roster.iter().map(SystemEntry::slug).collect();
        slugs.sort();
        slugs.dedup();
        if slugs.len() != self.roster.len() {
            return Err(LarkError::validation("roster names must be distinct"));
        }
        for s in &self.roster {
            if s.variant.is_some() == s.outputs.is_some() {
                return Err(LarkError::validation(format!(
                    "system {:?} needs exactly one of `variant` or `outputs`",
                    s.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub scenario_id: String,
    pub system: String,
    pub efficiency: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub scores: ScoreMatrix,
    /// Generation plus judging cost per system and round.
    pub costs: ScoreMatrix,
    pub evaluations: Vec<EvaluationRecord>,
    /// Everything sent to judges, in round order.
    pub payloads: Vec<JudgePayload>,
    pub trajectories: Vec<TrajectoryRow>,
    /// One line per missing cell.
    pub failures: Vec<String>,
}

struct Round {
    evaluation: Option<EvaluationRecord>,
    payloads: Vec<JudgePayload>,
    scores: Vec<Option<f64>>,
    costs: Vec<Option<f64>>,
    trajectories: Vec<TrajectoryRow>,
    failures: Vec<String>,
}

/// Runs every roster system on every scenario and judges each round.
/// When `layout` is given, traces, evaluation records, judge payloads and
/// the score and cost matrices are written under it.
pub fn run_benchmark(
    scenarios: &[Scenario],
    config: &BenchmarkConfig,
    layout: Option<&BenchLayout>,
) -> Result<BenchmarkResult> {
    config.validate()?;
    if let Some(l) = layout {
        l.create()?;
    }
    let provider = config
        .evolution
        .provider
        .build(Tokenizer::new(config.evolution.tokenizer))?;
    let rounds: Vec<Result<Round>> = parallel_map(config.parallel_rounds, scenarios, |sc| {
        run_round(sc, config, provider.as_ref(), layout)
    });

    let systems: Vec<String> = config.roster.iter().map(|s| s.name.clone()).collect();
    let round_ids: Vec<String> = scenarios.iter().map(|s| s.id.clone()).collect();
    let mut scores = ScoreMatrix::new(systems.clone(), round_ids.clone());
    let mut costs = ScoreMatrix::new(systems, round_ids);
    let mut result = BenchmarkResult {
        scores: scores.clone(),
        costs: costs.clone(),
        evaluations: Vec::new(),
        payloads: Vec::new(),
        trajectories: Vec::new(),
        failures: Vec::new(),
    };
    for (r, round) in rounds.into_iter().enumerate() {
        let round = round?;
        for s in 0..config.roster.len() {
            scores.scores[s][r] = round.scores[s];
            costs.scores[s][r] = round.costs[s];
        }
        result.evaluations.extend(round.evaluation);
        result.payloads.extend(round.payloads);
        result.trajectories.extend(round.trajectories);
        result.failures.extend(round.failures);
    }
    result.scores = scores;
    result.costs = costs;
    if let Some(l) = layout {
        result.scores.write(&l.scores_csv())?;
        result.costs.write(&l.costs_csv())?;
    }
    Ok(result)
}

fn run_round(
    scenario: &Scenario,
    config: &BenchmarkConfig,
    provider: &dyn crate::generators::Provider,
    layout: Option<&BenchLayout>,
) -> Result<Round> {
    let n = config.roster.len();
    let mut texts: Vec<Option<String>> = vec![None; n];
    let mut gen_cost = vec![0.0; n];
    let mut trajectories = Vec::new();
    let mut failures = Vec::new();

    for (i, system) in config.roster.iter().enumerate() {
        if let Some(v) = system.variant {
            let cfg = config.evolution.clone().with_variant(v);
            let trace: RunTrace = run_with_provider(scenario, &cfg, provider, &mut |_| Ok(()))?;
            if let Some(l) = layout {
                trace.write(&l.trace_path(&scenario.id, &system.slug()))?;
            }
            trajectories.push(TrajectoryRow {
                scenario_id: scenario.id.clone(),
                system: system.name.clone(),
                efficiency: trace.summary.efficiency_trajectory.clone(),
            });
            gen_cost[i] = trace.summary.usage.cost;
            if trace.summary.status.is_completed() {
                texts[i] = trace.consensus().map(|s| s.text.clone());
            } else {
                failures.push(format!("{} / {}: run aborted", scenario.id, system.name));
            }
        } else if let Some(dir) = &system.outputs {
            let path = dir.join(format!("{}.txt", scenario.id));
            match std::fs::read_to_string(&path) {
                Ok(t) if !t.trim().is_empty() => texts[i] = Some(t.trim().to_owned()),
                _ => failures.push(format!("{} / {}: no output at {}", scenario.id, system.name, path.display())),
            }
        }
    }

    let present: Vec<usize> = (0..n).filter(|&i| texts[i].is_some()).collect();
    let mut scores = vec![None; n];
    let mut costs = vec![None; n];
    let mut evaluation = None;
    let mut payloads = Vec::new();
    if present.len() >= 2 {
        let outputs: Vec<(String, String)> = present
            .iter()
            .map(|&i| (config.roster[i].name.clone(), texts[i].clone().expect("present")))
            .collect();
        let judged = judge_outputs(scenario, &outputs, &config.judge)?;
        let share = judged.record.judge_cost / present.len() as f64;
        for &i in &present {
            scores[i] = judged.record.composite[&config.roster[i].name];
            costs[i] = Some(gen_cost[i] + share);
            if scores[i].is_none() {
                failures.push(format!("{} / {}: no valid judge score", scenario.id, config.roster[i].name));
            }
        }
        payloads = judged.payloads;
        evaluation = Some(judged.record);
    } else {
        failures.push(format!("{}: fewer than two outputs, round not judged", scenario.id));
    }

    if let Some(l) = layout {
        if let Some(e) = &evaluation {
            write_atomic(&l.evaluation_path(&scenario.id), serde_json::to_string(e)? + "\n")?;
        }
        let mut lines = String::new();
        for p in &payloads {
            lines.push_str(&serde_json::to_string(p)?);
            lines.push('\n');
        }
        write_atomic(&l.payload_path(&scenario.id), lines)?;
    }
    Ok(Round {
        evaluation,
        payloads,
        scores,
        costs,
        trajectories,
        failures,
    })
}
