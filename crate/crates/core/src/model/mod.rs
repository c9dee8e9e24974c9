//! Domain vocabulary shared across the crate: scenarios, stakeholders,
//! strategies, populations, ranking profiles and per-generation records.
//!
//! Every type here is immutable once built. The evolution loop produces the
//! next generation by constructing new values rather than mutating old ones.

mod record;
mod scenario;
mod tokenizer;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LarkError, Result};

pub use record::{
    CallOutcome, CallRecord, DuplicationEvent, GenerationRecord, PlasticityEvent, RepairEvent,
    ScoringMethod, UnionScoring, UsageTotals,
};
pub use scenario::{
    load_scenario, load_scenario_dir, load_scenario_file, normalize_weights, ComputeBudget, DomainTag, Scenario,
    Stakeholder, SCENARIO_SCHEMA_VERSION,
};
pub use tokenizer::{Tokenizer, TokenizerMode};

/// Run-scoped strategy identifier of the form `g<generation>-<serial>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyId(String);

impl StrategyId {
    pub fn new(id: impl Into<String>) -> Self {
        StrategyId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StrategyId {
    fn from(s: &str) -> Self {
        StrategyId(s.to_owned())
    }
}

/// Hands out monotonically increasing ids, prefixed by the generation that
/// created the strategy, e.g. `g3-07`.
#[derive(Debug, Clone, Default)]
pub struct IdAllocator {
    next: u32,
}

impl IdAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&mut self, generation: u32) -> StrategyId {
        let id = StrategyId(format!("g{generation}-{:02}", self.next));
        self.next += 1;
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "seed")]
    Seed,
    #[serde(rename = "plasticity")]
    Plasticity,
    #[serde(rename = "duplication+maturation")]
    DuplicationMaturation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub parent: Option<StrategyId>,
    pub origin: Origin,
}

impl Lineage {
    pub fn seed() -> Self {
        Lineage {
            parent: None,
            origin: Origin::Seed,
        }
    }

    pub fn child_of(parent: &StrategyId, origin: Origin) -> Self {
        Lineage {
            parent: Some(parent.clone()),
            origin,
        }
    }
}

/// One natural-language candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub id: StrategyId,
    pub text: String,
    pub token_count: u64,
    pub lineage: Lineage,
    pub generation_born: u32,
}

impl Strategy {
    /// Builds a strategy, counting tokens with `tokenizer`.
    pub fn new(
        id: StrategyId,
        text: impl Into<String>,
        tokenizer: &Tokenizer,
        lineage: Lineage,
        generation_born: u32,
    ) -> Self {
        let text = text.into();
        let token_count = tokenizer.count(&text);
        Strategy {
            id,
            text,
            token_count,
            lineage,
            generation_born,
        }
    }

    /// Builds a strategy from provider output; `reported` is the provider's
    /// completion token count, used only in provider-reported mode.
    pub fn generated(
        id: StrategyId,
        text: impl Into<String>,
        tokenizer: &Tokenizer,
        reported: Option<u64>,
        lineage: Lineage,
        generation_born: u32,
    ) -> Self {
        let text = text.into();
        let token_count = tokenizer.count_generated(&text, reported);
        Strategy {
            id,
            text,
            token_count,
            lineage,
            generation_born,
        }
    }
}

/// Exactly `k` strategies with distinct ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub generation: u32,
    pub members: Vec<Strategy>,
}

impl Population {
    pub fn new(generation: u32, members: Vec<Strategy>) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &members {
            if !seen.insert(&m.id) {
                return Err(LarkError::validation(format!(
                    "duplicate strategy id {} in population",
                    m.id
                )));
            }
        }
        Ok(Population {
            generation,
            members,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> Vec<StrategyId> {
        self.members.iter().map(|m| m.id.clone()).collect()
    }
}

/// One stakeholder's ordering of the pool; position 0 is most preferred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingProfile {
    pub stakeholder_id: String,
    pub ranking: Vec<StrategyId>,
}

impl RankingProfile {
    /// 1-based position of `id`, if present.
    pub fn rank_of(&self, id: &StrategyId) -> Option<usize> {
        self.ranking.iter().position(|r| r == id).map(|p| p + 1)
    }

    /// Checks that the ranking is a permutation of `ids`.
    pub fn validate_against(&self, ids: &[StrategyId]) -> Result<()> {
        let mut expected: Vec<&StrategyId> = ids.iter().collect();
        let mut got: Vec<&StrategyId> = self.ranking.iter().collect();
        expected.sort();
        got.sort();
        if expected != got {
            return Err(LarkError::validation(format!(
                "ranking from stakeholder {} is not a permutation of the pool",
                self.stakeholder_id
            )));
        }
        Ok(())
    }
}

/// A statistic that may be undefined (zero mean, zero variance, too few samples).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Defined(f64),
    Undefined,
}

impl Measure {
    pub fn value(self) -> Option<f64> {
        match self {
            Measure::Defined(v) => Some(v),
            Measure::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Measure::Defined(_))
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Defined(v) => write!(f, "{v}"),
            Measure::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Measure::Defined(v) => s.serialize_f64(*v),
            Measure::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Measure::Defined(v)),
            Raw::Str(s) if s == "undefined" => Ok(Measure::Undefined),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"undefined\", got {s:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_generation_prefixed_and_monotone() {
        let mut ids = IdAllocator::new();
        assert_eq!(ids.next_id(0).as_str(), "g0-00");
        assert_eq!(ids.next_id(0).as_str(), "g0-01");
        assert_eq!(ids.next_id(3).as_str(), "g3-02");
    }

    #[test]
    fn population_rejects_duplicate_ids() {
        let t = Tokenizer::default();
        let a = Strategy::new("a".into(), "x", &t, Lineage::seed(), 0);
        let err = Population::new(0, vec![a.clone(), a]).unwrap_err();
        assert!(matches!(err, LarkError::Validation(_)));
    }

    #[test]
    fn ranking_permutation_check() {
        let ids: Vec<StrategyId> = ["a", "b", "c"].into_iter().map(Into::into).collect();
        let ok = RankingProfile {
            stakeholder_id: "s".into(),
            ranking: vec!["c".into(), "a".into(), "b".into()],
        };
        ok.validate_against(&ids).unwrap();
        assert_eq!(ok.rank_of(&"a".into()), Some(2));
        let bad = RankingProfile {
            stakeholder_id: "s".into(),
            ranking: vec!["a".into(), "a".into(), "b".into()],
        };
        assert!(bad.validate_against(&ids).is_err());
    }

    #[test]
    fn measure_serializes_undefined_as_marker() {
        let json = serde_json::to_string(&[Measure::Defined(0.5), Measure::Undefined]).unwrap();
        assert_eq!(json, r#"[0.5,"undefined"]"#);
        let back: Vec<Measure> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Measure::Defined(0.5), Measure::Undefined]);
    }

    #[test]
    fn origin_tags_match_trace_vocabulary() {
        assert_eq!(
            serde_json::to_string(&Origin::DuplicationMaturation).unwrap(),
            "\"duplication+maturation\""
        );
    }
}
