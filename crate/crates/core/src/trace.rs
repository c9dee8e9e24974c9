//! Run traces: one JSON object per line.
//!
//! Line 1 is the run configuration (scenario snapshot, config, prompt
//! template stamps, initial population). Then one line per generation, and
//! a final summary line. Every line carries a `record` tag so the file can
//! be read back without outside context.
//!
//! [`replay`] recomputes every derived quantity from the recorded rankings
//! and token counts and reports any field that disagrees.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregation::consensus_cv;
use crate::error::{LarkError, Result};
use crate::evolution::{adjust_scores, score_pool, select_survivors, EvolutionConfig, TemperatureMode};
use crate::fitness::{adaptive_temperature, duplication_probabilities, efficiency};
use crate::model::{
    CallRecord, ComputeBudget, GenerationRecord, Measure, Scenario, ScoringMethod, Strategy, StrategyId, Tokenizer,
    UsageTotals,
};
use crate::util::{sha256_hex, write_atomic};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub schema_version: u32,
    pub scenario: Scenario,
    pub config: EvolutionConfig,
    pub model: String,
    /// `name@version` to SHA-256 of each prompt template.
    pub prompt_templates: BTreeMap<String, String>,
    pub initial_population: Vec<Strategy>,
    pub initial_calls: Vec<CallRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "state")]
pub enum RunStatus {
    Completed,
    /// A provider failure stopped the run before `generation` finished.
    Aborted { generation: u32, error: String },
}

impl RunStatus {
    pub fn aborted(generation: u32, error: &LarkError) -> Self {
        RunStatus::Aborted {
            generation,
            error: error.to_string(),
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub status: RunStatus,
    /// Best survivor of the last completed generation.
    pub consensus: Option<StrategyId>,
    pub final_population: Vec<Strategy>,
    pub efficiency_trajectory: Vec<f64>,
    pub usage: UsageTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "record")]
pub enum TraceLine {
    Config(TraceHeader),
    Generation(GenerationRecord),
    Summary(TraceSummary),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub generations: Vec<GenerationRecord>,
    pub summary: TraceSummary,
}

impl RunTrace {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        let mut push = |line: TraceLine| -> Result<()> {
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
            Ok(())
        };
        push(TraceLine::Config(self.header.clone()))?;
        for g in &self.generations {
            push(TraceLine::Generation(g.clone()))?;
        }
        push(TraceLine::Summary(self.summary.clone()))?;
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut header = None;
        let mut generations = Vec::new();
        let mut summary = None;
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: TraceLine = serde_json::from_str(line)
                .map_err(|e| LarkError::parse(format!("trace line {}", n + 1), e.to_string()))?;
            match parsed {
                TraceLine::Config(h) if header.is_none() && n == 0 => header = Some(h),
                TraceLine::Generation(g) if header.is_some() && summary.is_none() => generations.push(g),
                TraceLine::Summary(s) if header.is_some() && summary.is_none() => summary = Some(s),
                _ => {
                    return Err(LarkError::parse(
                        format!("trace line {}", n + 1),
                        "record out of order",
                    ))
                }
            }
        }
        let header = header.ok_or_else(|| LarkError::parse("trace", "missing config line"))?;
        if header.schema_version != TRACE_SCHEMA_VERSION {
            return Err(LarkError::parse(
                "schema_version",
                format!("unsupported trace schema {}", header.schema_version),
            ));
        }
        let summary = summary.ok_or_else(|| LarkError::parse("trace", "missing summary line"))?;
        Ok(RunTrace {
            header,
            generations,
            summary,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LarkError::io(path, e))?;
        Self::from_jsonl(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl()?)
    }

    /// SHA-256 of the serialized trace.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_jsonl()?))
    }

    pub fn initial_population_hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(&self.header.initial_population)?))
    }

    /// Every strategy that appears anywhere in the run.
    pub fn all_strategies(&self) -> impl Iterator<Item = &Strategy> {
        self.header
            .initial_population
            .iter()
            .chain(self.generations.iter().flat_map(|g| g.evaluated.iter().chain(&g.matured)))
    }

    /// The consensus strategy of the final population.
    pub fn consensus(&self) -> Option<&Strategy> {
        self.summary.final_population.first()
    }
}

/// Appends trace lines to a file as they are produced, flushing after each.
pub struct TraceWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| LarkError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| LarkError::io(path, e))?;
        Ok(TraceWriter {
            out: BufWriter::new(file),
            path: path.to_owned(),
        })
    }

    pub fn write_line(&mut self, line: &TraceLine) -> Result<()> {
        let io = |e| LarkError::io(&self.path, e);
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n").map_err(io)?;
        self.out.flush().map_err(io)
    }
}

/// A recorded value that differs from its recomputation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// `None` for header and summary fields.
    pub generation: Option<u32>,
    pub field: String,
    pub recorded: String,
    pub recomputed: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.generation {
            Some(g) => write!(f, "generation {g} ")?,
            None => {}
        }
        write!(
            f,
            "{}: recorded {}, recomputed {}",
            self.field, self.recorded, self.recomputed
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

const REPLAY_TOLERANCE: f64 = 1e-9;

struct Audit {
    report: ReplayReport,
    generation: Option<u32>,
}

impl Audit {
    fn eq<T: PartialEq + fmt::Debug>(&mut self, field: impl Into<String>, recorded: T, recomputed: T) {
        self.report.checked += 1;
        if recorded != recomputed {
            self.push(field.into(), format!("{recorded:?}"), format!("{recomputed:?}"));
        }
    }

    fn close(&mut self, field: impl Into<String>, recorded: f64, recomputed: f64) {
        self.report.checked += 1;
        let tol = REPLAY_TOLERANCE * recomputed.abs().max(1.0);
        if !((recorded - recomputed).abs() <= tol) {
            self.push(field.into(), recorded.to_string(), recomputed.to_string());
        }
    }

    fn push(&mut self, field: String, recorded: String, recomputed: String) {
        self.report.mismatches.push(Mismatch {
            generation: self.generation,
            field,
            recorded,
            recomputed,
        });
    }
}

fn ids_of(v: &[Strategy]) -> Vec<StrategyId> {
    v.iter().map(|s| s.id.clone()).collect()
}

/// Recomputes scores, penalties, probabilities, efficiency, consensus,
/// survivor sets and usage totals from the recorded inputs of `trace`.
pub fn replay(trace: &RunTrace) -> ReplayReport {
    let mut a = Audit {
        report: ReplayReport::default(),
        generation: None,
    };
    let h = &trace.header;
    let config = &h.config;
    let budget = config.effective_budget(&h.scenario);
    let weights = h.scenario.weights();
    let tokenizer = Tokenizer::new(config.tokenizer);
    let text_derived = config.tokenizer.is_text_derived();

    a.close("scenario.weight_sum", weights.iter().sum(), 1.0);
    if text_derived {
        for s in &h.initial_population {
            a.eq(format!("initial[{}].token_count", s.id), s.token_count, tokenizer.count(&s.text));
        }
    }

    let mut population = h.initial_population.clone();
    for g in &trace.generations {
        a.generation = Some(g.generation);
        replay_generation(&mut a, g, &population, config, &weights, &budget, &tokenizer);
        // Carry the recorded survivors forward so one bad generation does
        // not cascade into every later one.
        population = g
            .survivors
            .iter()
            .filter_map(|id| g.strategy(id).cloned())
            .collect();
    }

    a.generation = None;
    let s = &trace.summary;
    a.eq(
        "summary.efficiency_trajectory.len",
        s.efficiency_trajectory.len(),
        trace.generations.len(),
    );
    for (g, e) in trace.generations.iter().zip(&s.efficiency_trajectory) {
        a.close(format!("summary.efficiency_trajectory[{}]", g.generation), *e, g.efficiency);
    }
    a.eq("summary.final_population", ids_of(&s.final_population), ids_of(&population));
    a.eq(
        "summary.consensus",
        s.consensus.clone(),
        population.first().map(|p| p.id.clone()),
    );
    let mut usage = UsageTotals::from_calls(&h.initial_calls);
    for g in &trace.generations {
        usage.merge(&UsageTotals::from_calls(&g.calls));
    }
    a.eq("summary.usage.requests", s.usage.requests, usage.requests);
    a.eq("summary.usage.prompt_tokens", s.usage.prompt_tokens, usage.prompt_tokens);
    a.eq(
        "summary.usage.completion_tokens",
        s.usage.completion_tokens,
        usage.completion_tokens,
    );
    a.close("summary.usage.cost", s.usage.cost, usage.cost);
    a.report
}

#[allow(clippy::too_many_arguments)]
fn replay_generation(
    a: &mut Audit,
    g: &GenerationRecord,
    previous: &[Strategy],
    config: &EvolutionConfig,
    weights: &[f64],
    budget: &ComputeBudget,
    tokenizer: &Tokenizer,
) {
    let flags = config.ablation;

    // Population continuity through plasticity replacements.
    let mut expected: Vec<StrategyId> = ids_of(previous);
    for ev in &g.plasticity {
        if let Some(child) = &ev.child {
            if let Some(slot) = expected.iter_mut().find(|id| **id == ev.parent) {
                *slot = child.clone();
            }
        }
    }
    a.eq("evaluated", ids_of(&g.evaluated), expected);
    if flags.plasticity_off {
        a.eq("plasticity.len", g.plasticity.len(), 0);
    }
    if config.tokenizer.is_text_derived() {
        for s in g.evaluated.iter().chain(&g.matured) {
            a.eq(format!("{}.token_count", s.id), s.token_count, tokenizer.count(&s.text));
        }
    }

    // Scores and everything derived from them.
    let method = if flags.rcv_off {
        ScoringMethod::SimpleAverage
    } else {
        ScoringMethod::WeightedBorda
    };
    a.eq("scoring", g.scoring, method);
    a.eq(
        "fitness.ids",
        g.fitness.iter().map(|f| f.strategy_id.clone()).collect::<Vec<_>>(),
        ids_of(&g.evaluated),
    );
    let scored = match score_pool(&g.profiles, weights, &g.evaluated, flags.rcv_off) {
        Ok((_, s)) => s,
        Err(e) => {
            a.push("profiles".into(), "invalid".into(), e.to_string());
            return;
        }
    };
    let adjusted = match adjust_scores(&scored.scores, &g.evaluated, budget, flags.penalty_off) {
        Ok(v) => v,
        Err(e) => {
            a.push("adjusted".into(), "invalid".into(), e.to_string());
            return;
        }
    };
    let r: Vec<f64> = adjusted.iter().map(|x| x.0).collect();
    let tau = match config.temperature {
        TemperatureMode::Adaptive => adaptive_temperature(&r),
        TemperatureMode::Constant(t) => t,
    };
    a.close("temperature", g.temperature, tau);
    let p_dup = duplication_probabilities(&r, tau).unwrap_or_default();
    for (i, f) in g.fitness.iter().enumerate().take(g.evaluated.len()) {
        let id = &f.strategy_id;
        a.eq(format!("fitness[{id}].token_count"), f.token_count, g.evaluated[i].token_count);
        a.close(format!("fitness[{id}].borda"), f.borda, scored.scores[i]);
        a.close(format!("fitness[{id}].adjusted"), f.adjusted, r[i]);
        a.eq(format!("fitness[{id}].penalized"), f.penalized, adjusted[i].1);
        a.eq(format!("fitness[{id}].clamped"), f.clamped, adjusted[i].2);
        if let Some(p) = p_dup.get(i) {
            a.close(format!("fitness[{id}].p_dup"), f.p_dup, *p);
        }
    }
    a.eq("consensus_id", g.consensus_id.clone(), scored.consensus_id.clone());
    let cv = consensus_cv(&scored.scores).unwrap_or(Measure::Undefined);
    match (g.consensus_cv, cv) {
        (Measure::Defined(x), Measure::Defined(y)) => a.close("consensus_cv", x, y),
        (x, y) => a.eq("consensus_cv", x, y),
    }
    let tokens: Vec<u64> = g.evaluated.iter().map(|s| s.token_count).collect();
    if let Ok(e) = efficiency(&scored.scores, &tokens) {
        a.close("efficiency", g.efficiency, e.value);
    }

    // Duplication bookkeeping.
    if flags.dup_mat_off {
        a.eq("duplications.len", g.duplications.len(), 0);
    }
    let children: Vec<StrategyId> = g.duplications.iter().filter_map(|d| d.child.clone()).collect();
    a.eq("matured", ids_of(&g.matured), children);
    for d in &g.duplications {
        a.eq(
            format!("duplication[{}].parent_present", d.parent),
            g.evaluated.iter().any(|s| s.id == d.parent),
            true,
        );
    }

    // Survivor selection.
    let survivors = if g.matured.is_empty() {
        a.eq("union.present", g.union.is_some(), false);
        let c: Vec<(Strategy, f64)> = g.evaluated.iter().cloned().zip(r.iter().copied()).collect();
        select_survivors(&c, config.population_size)
    } else {
        let pool: Vec<Strategy> = g.evaluated.iter().chain(&g.matured).cloned().collect();
        let Some(u) = &g.union else {
            a.push("union.present".into(), "false".into(), "true".into());
            return;
        };
        a.eq("union.pool", u.pool.clone(), ids_of(&pool));
        let ur = score_pool(&u.profiles, weights, &pool, flags.rcv_off)
            .and_then(|(_, s)| {
                let adj = adjust_scores(&s.scores, &pool, budget, flags.penalty_off)?;
                Ok((s.scores, adj.into_iter().map(|x| x.0).collect::<Vec<_>>()))
            });
        match ur {
            Ok((ub, uadj)) => {
                for (i, id) in ids_of(&pool).iter().enumerate() {
                    if let (Some(rb), Some(ra)) = (u.borda.get(i), u.adjusted.get(i)) {
                        a.close(format!("union[{id}].borda"), *rb, ub[i]);
                        a.close(format!("union[{id}].adjusted"), *ra, uadj[i]);
                    }
                }
                let c: Vec<(Strategy, f64)> = pool.into_iter().zip(uadj).collect();
                select_survivors(&c, config.population_size)
            }
            Err(e) => Err(e),
        }
    };
    match survivors {
        Ok(s) => a.eq("survivors", g.survivors.clone(), ids_of(&s)),
        Err(e) => a.push("survivors".into(), format!("{:?}", g.survivors), e.to_string()),
    }

    let usage = UsageTotals::from_calls(&g.calls);
    a.eq("usage.requests", g.usage.requests, usage.requests);
    a.eq("usage.prompt_tokens", g.usage.prompt_tokens, usage.prompt_tokens);
    a.eq("usage.completion_tokens", g.usage.completion_tokens, usage.completion_tokens);
    a.close("usage.cost", g.usage.cost, usage.cost);
}
