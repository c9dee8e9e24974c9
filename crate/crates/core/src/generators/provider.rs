use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::prompts::Prompt;
use crate::model::{Scenario, Stakeholder, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestKind {
    Seed,
    Plasticity,
    Maturation,
    StakeholderRank,
    JudgeScore,
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RequestKind::Seed => "seed",
            RequestKind::Plasticity => "plasticity",
            RequestKind::Maturation => "maturation",
            RequestKind::StakeholderRank => "stakeholder-rank",
            RequestKind::JudgeScore => "judge-score",
        })
    }
}

/// What a maturation should specialize for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubgroupHint {
    Stakeholder(String),
    /// Index into the scenario's objectives.
    Objective(usize),
}

impl SubgroupHint {
    pub fn describe(&self, scenario: &Scenario) -> String {
        match self {
            SubgroupHint::Stakeholder(id) => match scenario.stakeholder(id) {
                Some(s) => format!("stakeholder {id} ({})", s.persona),
                None => format!("stakeholder {id}"),
            },
            SubgroupHint::Objective(i) => format!(
                "objective: {}",
                scenario.objectives.get(*i).map(String::as_str).unwrap_or("unspecified")
            ),
        }
    }

    /// Short label used by the mock generator.
    pub fn label(&self) -> String {
        match self {
            SubgroupHint::Stakeholder(id) => id.clone(),
            SubgroupHint::Objective(i) => format!("objective-{}", i + 1),
        }
    }
}

/// An anonymized system output presented to a judge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedItem {
    pub anon_id: String,
    pub text: String,
}

/// Everything a provider needs to serve one call.
///
/// Live providers only read `prompt`, `temperature` and `max_output_tokens`;
/// the structured fields exist so the deterministic mock can act on them.
#[derive(Debug, Clone)]
pub struct GenerationRequest<'a> {
    pub kind: RequestKind,
    pub scenario: &'a Scenario,
    pub subject: Option<&'a Strategy>,
    pub hint: Option<&'a SubgroupHint>,
    pub stakeholder: Option<&'a Stakeholder>,
    pub candidates: &'a [Strategy],
    pub judged: &'a [JudgedItem],
    /// Slot number for seed requests.
    pub index: usize,
    pub temperature: f64,
    pub max_output_tokens: Option<u64>,
    /// Per-request seed, derived from the run seed and request identity.
    pub seed: u64,
    pub prompt: Prompt,
}

impl<'a> GenerationRequest<'a> {
    fn base(kind: RequestKind, scenario: &'a Scenario, prompt: Prompt, seed: u64) -> Self {
        GenerationRequest {
            kind,
            scenario,
            subject: None,
            hint: None,
            stakeholder: None,
            candidates: &[],
            judged: &[],
            index: 0,
            temperature: 0.7,
            max_output_tokens: None,
            seed,
            prompt,
        }
    }

    pub fn seed(scenario: &'a Scenario, index: usize, prompt: Prompt, seed: u64) -> Self {
        GenerationRequest {
            index,
            ..Self::base(RequestKind::Seed, scenario, prompt, seed)
        }
    }

    pub fn plasticity(
        scenario: &'a Scenario,
        subject: &'a Strategy,
        prompt: Prompt,
        seed: u64,
    ) -> Self {
        GenerationRequest {
            subject: Some(subject),
            ..Self::base(RequestKind::Plasticity, scenario, prompt, seed)
        }
    }

    pub fn maturation(
        scenario: &'a Scenario,
        subject: &'a Strategy,
        hint: &'a SubgroupHint,
        prompt: Prompt,
        seed: u64,
    ) -> Self {
        GenerationRequest {
            subject: Some(subject),
            hint: Some(hint),
            ..Self::base(RequestKind::Maturation, scenario, prompt, seed)
        }
    }

    pub fn rank(
        scenario: &'a Scenario,
        stakeholder: &'a Stakeholder,
        candidates: &'a [Strategy],
        prompt: Prompt,
        seed: u64,
    ) -> Self {
        GenerationRequest {
            stakeholder: Some(stakeholder),
            candidates,
            ..Self::base(RequestKind::StakeholderRank, scenario, prompt, seed)
        }
    }

    pub fn judge(
        scenario: &'a Scenario,
        judged: &'a [JudgedItem],
        prompt: Prompt,
        seed: u64,
    ) -> Self {
        GenerationRequest {
            judged,
            ..Self::base(RequestKind::JudgeScore, scenario, prompt, seed)
        }
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn with_max_output_tokens(mut self, n: Option<u64>) -> Self {
        self.max_output_tokens = n;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderError {
    pub message: String,
    pub retryable: bool,
}

impl ProviderError {
    pub fn transient(message: impl Into<String>) -> Self {
        ProviderError {
            message: message.into(),
            retryable: true,
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        ProviderError {
            message: message.into(),
            retryable: false,
        }
    }
}

impl fmt::Display for ProviderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ProviderError {}

/// A text generation backend.
pub trait Provider: Send + Sync {
    /// Model name used for price lookup.
    fn model(&self) -> &str;

    fn complete(&self, request: &GenerationRequest<'_>) -> Result<Completion, ProviderError>;
}

/// Per-model prices in currency units per one million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelPrice {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceTable {
    pub models: BTreeMap<String, ModelPrice>,
}

impl PriceTable {
    pub fn with_model(mut self, model: impl Into<String>, price: ModelPrice) -> Self {
        self.models.insert(model.into(), price);
        self
    }

    /// Usage and cost of one call. Unknown models are free.
    pub fn usage(&self, model: &str, prompt_tokens: u64, completion_tokens: u64) -> ProviderUsage {
        let price = self.models.get(model).copied().unwrap_or_default();
        ProviderUsage {
            prompt_tokens,
            completion_tokens,
            cost: prompt_tokens as f64 * price.input_per_million / 1e6
                + completion_tokens as f64 * price.output_per_million / 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProviderUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: f64,
}
