use serde::{Deserialize, Serialize};

use super::{Measure, RankingProfile, Strategy, StrategyId};
use crate::fitness::FitnessRecord;
use crate::generators::{ProviderUsage, RequestKind, SubgroupHint};

/// Which aggregation rule produced the per-strategy scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringMethod {
    WeightedBorda,
    /// Unweighted mean of positional points (ranked-choice ablation).
    SimpleAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CallOutcome {
    Ok,
    /// Refinement returned nothing usable; the subject was kept unchanged.
    NoOp,
    /// Ranking response was repaired into a permutation.
    Repaired,
    Failed,
}

/// One provider request as accounted in the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub kind: RequestKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<StrategyId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stakeholder: Option<String>,
    pub attempts: u32,
    pub outcome: CallOutcome,
    pub usage: ProviderUsage,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UsageTotals {
    pub requests: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: f64,
}

impl UsageTotals {
    pub fn add(&mut self, usage: &ProviderUsage) {
        self.requests += 1;
        self.prompt_tokens += usage.prompt_tokens;
        self.completion_tokens += usage.completion_tokens;
        self.cost += usage.cost;
    }

    pub fn merge(&mut self, other: &UsageTotals) {
        self.requests += other.requests;
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
        self.cost += other.cost;
    }

    pub fn from_calls<'a>(calls: impl IntoIterator<Item = &'a CallRecord>) -> Self {
        let mut t = UsageTotals::default();
        for c in calls {
            t.add(&c.usage);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlasticityEvent {
    pub parent: StrategyId,
    /// Absent when the refinement was a no-op.
    pub child: Option<StrategyId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicationEvent {
    pub parent: StrategyId,
    pub child: Option<StrategyId>,
    pub hint: SubgroupHint,
}

/// A ranking that had to be repaired into a valid permutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairEvent {
    pub stakeholder_id: String,
    pub raw: Vec<String>,
    pub repaired: Vec<StrategyId>,
}

/// Supplementary scoring of the parent population plus matured duplicates,
/// used for survivor selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionScoring {
    /// Pool order: evaluated population first, then matured strategies.
    pub pool: Vec<StrategyId>,
    pub profiles: Vec<RankingProfile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repairs: Vec<RepairEvent>,
    pub borda: Vec<f64>,
    pub adjusted: Vec<f64>,
}

/// Everything that happened in one generation `t ≥ 1`.
///
/// `fitness` holds one entry per member of `evaluated`, the population that
/// the stakeholders ranked this generation (after plasticity). `survivors` is
/// the population carried into the next generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub evaluated: Vec<Strategy>,
    pub plasticity: Vec<PlasticityEvent>,
    pub plasticity_probability: f64,
    pub scoring: ScoringMethod,
    pub profiles: Vec<RankingProfile>,
    pub repairs: Vec<RepairEvent>,
    pub fitness: Vec<FitnessRecord>,
    pub temperature: f64,
    pub consensus_id: StrategyId,
    pub consensus_cv: Measure,
    pub efficiency: f64,
    pub duplications: Vec<DuplicationEvent>,
    pub matured: Vec<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub union: Option<UnionScoring>,
    pub survivors: Vec<StrategyId>,
    pub calls: Vec<CallRecord>,
    pub usage: UsageTotals,
    pub duration_ms: u64,
}

impl GenerationRecord {
    pub fn best_adjusted(&self) -> f64 {
        self.fitness
            .iter()
            .map(|f| f.adjusted)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn strategy(&self, id: &StrategyId) -> Option<&Strategy> {
        self.evaluated
            .iter()
            .chain(self.matured.iter())
            .find(|s| &s.id == id)
    }
}
