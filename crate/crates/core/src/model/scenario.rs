use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LarkError, Result};
use crate::sim::SyntheticUtility;

/// Current scenario file schema version.
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainTag {
    MultiStakeholderTradeoffs,
    PolicyProposal,
    ProductRoadmap,
    CampaignPlan,
    InfrastructureSiting,
    ClinicalDecisionMaking,
}

impl DomainTag {
    pub const ALL: [DomainTag; 6] = [
        DomainTag::MultiStakeholderTradeoffs,
        DomainTag::PolicyProposal,
        DomainTag::ProductRoadmap,
        DomainTag::CampaignPlan,
        DomainTag::InfrastructureSiting,
        DomainTag::ClinicalDecisionMaking,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            DomainTag::MultiStakeholderTradeoffs => "multi-stakeholder-tradeoffs",
            DomainTag::PolicyProposal => "policy-proposal",
            DomainTag::ProductRoadmap => "product-roadmap",
            DomainTag::CampaignPlan => "campaign-plan",
            DomainTag::InfrastructureSiting => "infrastructure-siting",
            DomainTag::ClinicalDecisionMaking => "clinical-decision-making",
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stakeholder {
    pub id: String,
    pub persona: String,
    pub influence_weight: f64,
}

/// Token target `T_target` and penalty coefficient `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComputeBudget {
    pub target_tokens: u64,
    pub lambda: f64,
}

impl ComputeBudget {
    pub fn validate(&self) -> Result<()> {
        if self.target_tokens == 0 {
            return Err(LarkError::validation("budget.target_tokens must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(LarkError::validation(format!(
                "budget.lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// A decision-making scenario: context, objectives and stakeholder roster.
///
/// Stakeholder weights are always normalized to sum to one. `synthetic`
/// carries optional simulated stakeholder utilities; live runs ignore it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub domain: DomainTag,
    pub context: String,
    pub objectives: Vec<String>,
    pub stakeholders: Vec<Stakeholder>,
    pub budget: ComputeBudget,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synthetic: Vec<SyntheticUtility>,
}

impl Scenario {
    /// Validates invariants and normalizes stakeholder weights.
    pub fn new(
        id: impl Into<String>,
        domain: DomainTag,
        context: impl Into<String>,
        objectives: Vec<String>,
        mut stakeholders: Vec<Stakeholder>,
        budget: ComputeBudget,
        synthetic: Vec<SyntheticUtility>,
    ) -> Result<Self> {
        if objectives.is_empty() {
            return Err(LarkError::parse("objectives", "at least one objective is required"));
        }
        if stakeholders.is_empty() {
            return Err(LarkError::parse(
                "stakeholders",
                "at least one stakeholder is required",
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &stakeholders {
            if !seen.insert(s.id.as_str()) {
                return Err(LarkError::validation(format!(
                    "duplicate stakeholder id {}",
                    s.id
                )));
            }
        }
        let raw: Vec<f64> = stakeholders.iter().map(|s| s.influence_weight).collect();
        let normalized = normalize_weights(&raw)?;
        for (s, w) in stakeholders.iter_mut().zip(normalized) {
            s.influence_weight = w;
        }
        budget.validate()?;
        Ok(Scenario {
            id: id.into(),
            domain,
            context: context.into(),
            objectives,
            stakeholders,
            budget,
            synthetic,
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.stakeholders.iter().map(|s| s.influence_weight).collect()
    }

    pub fn stakeholder(&self, id: &str) -> Option<&Stakeholder> {
        self.stakeholders.iter().find(|s| s.id == id)
    }

    pub fn utility_for(&self, stakeholder_id: &str) -> Option<&SyntheticUtility> {
        self.synthetic
            .iter()
            .find(|u| u.stakeholder_id == stakeholder_id)
    }

    /// Serializes to the scenario file format.
    pub fn to_toml(&self) -> String {
        let file = ScenarioFile {
            version: SCENARIO_SCHEMA_VERSION,
            id: self.id.clone(),
            domain: self.domain,
            context: self.context.clone(),
            objectives: self.objectives.clone(),
            budget: BudgetEntry {
                target_tokens: self.budget.target_tokens,
                lambda: self.budget.lambda,
            },
            stakeholders: self
                .stakeholders
                .iter()
                .map(|s| StakeholderEntry {
                    id: s.id.clone(),
                    persona: s.persona.clone(),
                    weight: s.influence_weight,
                })
                .collect(),
            synthetic: if self.synthetic.is_empty() {
                None
            } else {
                Some(SyntheticBlock {
                    utilities: self.synthetic.clone(),
                })
            },
        };
        toml::to_string(&file).expect("scenario serializes to TOML")
    }
}

/// Divides each weight by the total. Rejects negative or non-finite weights
/// and a zero total. Already-normalized input is returned unchanged.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    if let Some((i, w)) = raw
        .iter()
        .enumerate()
        .find(|(_, w)| !w.is_finite() || **w < 0.0)
    {
        return Err(LarkError::validation(format!(
            "stakeholder weight #{i} must be finite and non-negative, got {w}"
        )));
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(LarkError::validation("stakeholder weights sum to zero"));
    }
    if (total - 1.0).abs() <= WEIGHT_TOLERANCE {
        return Ok(raw.to_vec());
    }
    Ok(raw.iter().map(|w| w / total).collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    version: u32,
    id: String,
    domain: DomainTag,
    context: String,
    objectives: Vec<String>,
    budget: BudgetEntry,
    stakeholders: Vec<StakeholderEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    synthetic: Option<SyntheticBlock>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BudgetEntry {
    target_tokens: u64,
    lambda: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct StakeholderEntry {
    id: String,
    persona: String,
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SyntheticBlock {
    utilities: Vec<SyntheticUtility>,
}

/// Parses a scenario document (TOML) and normalizes stakeholder weights.
pub fn load_scenario(source: &str) -> Result<Scenario> {
    let table: toml::Table = source
        .parse()
        .map_err(|e: toml::de::Error| LarkError::parse("document", e.message().to_owned()))?;

    for field in [
        "version",
        "id",
        "domain",
        "context",
        "objectives",
        "stakeholders",
        "budget",
    ] {
        if !table.contains_key(field) {
            return Err(LarkError::parse(field, "missing required field"));
        }
    }
    match table.get("version").and_then(|v| v.as_integer()) {
        Some(v) if v == SCENARIO_SCHEMA_VERSION as i64 => {}
        Some(v) => {
            return Err(LarkError::parse(
                "version",
                format!("unsupported schema version {v}"),
            ))
        }
        None => return Err(LarkError::parse("version", "must be an integer")),
    }

    // Deserialize field by field so errors name the offending field.
    let mut file = ScenarioFile {
        version: SCENARIO_SCHEMA_VERSION,
        id: field(&table, "id")?,
        domain: field(&table, "domain")?,
        context: field(&table, "context")?,
        objectives: field(&table, "objectives")?,
        budget: field(&table, "budget")?,
        stakeholders: field(&table, "stakeholders")?,
        synthetic: None,
    };
    if table.contains_key("synthetic") {
        file.synthetic = Some(field(&table, "synthetic")?);
    }

    let stakeholders = file
        .stakeholders
        .into_iter()
        .map(|s| Stakeholder {
            id: s.id,
            persona: s.persona,
            influence_weight: s.weight,
        })
        .collect();
    Scenario::new(
        file.id,
        file.domain,
        file.context,
        file.objectives,
        stakeholders,
        ComputeBudget {
            target_tokens: file.budget.target_tokens,
            lambda: file.budget.lambda,
        },
        file.synthetic.map(|s| s.utilities).unwrap_or_default(),
    )
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| LarkError::io(path, e))?;
    load_scenario(&text)
}

/// Loads every `*.toml` scenario in `dir`, sorted by file name.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| LarkError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            load_scenario_file(p).map_err(|e| match e {
                LarkError::Parse { field, message } => LarkError::Parse {
                    field: format!("{}: {field}", p.display()),
                    message,
                },
                other => other,
            })
        })
        .collect()
}

fn field<T: serde::de::DeserializeOwned>(table: &toml::Table, name: &str) -> Result<T> {
    let value = table
        .get(name)
        .cloned()
        .ok_or_else(|| LarkError::parse(name, "missing required field"))?;
    value
        .try_into()
        .map_err(|e: toml::de::Error| LarkError::parse(name, e.message().to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(weights: &[f64]) -> String {
        let mut s = String::from(
            "version = 1\nid = \"s1\"\ndomain = \"policy-proposal\"\ncontext = \"A city.\"\n\
             objectives = [\"cut emissions\"]\n[budget]\ntarget_tokens = 100\nlambda = 0.5\n",
        );
        for (i, w) in weights.iter().enumerate() {
            s.push_str(&format!(
                "[[stakeholders]]\nid = \"st{i}\"\npersona = \"p\"\nweight = {w:?}\n"
            ));
        }
        s
    }

    #[test]
    fn equal_weights_normalize_to_half() {
        let sc = load_scenario(&doc(&[2.0, 2.0])).unwrap();
        assert_eq!(sc.weights(), vec![0.5, 0.5]);
    }

    #[test]
    fn single_stakeholder_gets_unit_weight() {
        let sc = load_scenario(&doc(&[7.3])).unwrap();
        assert_eq!(sc.weights(), vec![1.0]);
    }

    #[test]
    fn uneven_weights_divide_by_sum() {
        let sc = load_scenario(&doc(&[1.0, 2.0, 1.0])).unwrap();
        let w = sc.weights();
        assert_eq!(w, vec![0.25, 0.5, 0.25]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_total_weight_is_a_validation_error() {
        let err = load_scenario(&doc(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, LarkError::Validation(_)), "{err}");
    }

    #[test]
    fn missing_field_is_named() {
        let text = doc(&[1.0]).replace("context = \"A city.\"\n", "");
        match load_scenario(&text).unwrap_err() {
            LarkError::Parse { field, .. } => assert_eq!(field, "context"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_field_is_named() {
        let text = doc(&[1.0]).replace("objectives = [\"cut emissions\"]", "objectives = 3");
        match load_scenario(&text).unwrap_err() {
            LarkError::Parse { field, .. } => assert_eq!(field, "objectives"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn empty_roster_and_objectives_are_rejected() {
        let no_obj = doc(&[1.0]).replace("[\"cut emissions\"]", "[]");
        assert!(matches!(
            load_scenario(&no_obj).unwrap_err(),
            LarkError::Parse { field, .. } if field == "objectives"
        ));
        let no_st = "version = 1\nid = \"s\"\ndomain = \"policy-proposal\"\ncontext = \"c\"\n\
                     objectives = [\"o\"]\nstakeholders = []\n[budget]\ntarget_tokens = 10\nlambda = 0.1\n";
        assert!(matches!(
            load_scenario(no_st).unwrap_err(),
            LarkError::Parse { field, .. } if field == "stakeholders"
        ));
    }

    #[test]
    fn version_is_mandatory() {
        let text = doc(&[1.0]).replace("version = 1\n", "");
        assert!(matches!(
            load_scenario(&text).unwrap_err(),
            LarkError::Parse { field, .. } if field == "version"
        ));
        let text = doc(&[1.0]).replace("version = 1\n", "version = 9\n");
        assert!(load_scenario(&text).is_err());
    }

    #[test]
    fn budget_bounds_are_checked() {
        let text = doc(&[1.0]).replace("lambda = 0.5", "lambda = 1.5");
        assert!(matches!(load_scenario(&text).unwrap_err(), LarkError::Validation(_)));
        let text = doc(&[1.0]).replace("target_tokens = 100", "target_tokens = 0");
        assert!(matches!(load_scenario(&text).unwrap_err(), LarkError::Validation(_)));
    }

    #[test]
    fn toml_round_trip_is_stable() {
        let sc = load_scenario(&doc(&[1.0, 2.0, 1.0])).unwrap();
        let text = sc.to_toml();
        let again = load_scenario(&text).unwrap();
        assert_eq!(sc, again);
        assert_eq!(text, again.to_toml());
    }

    #[test]
    fn normalization_is_idempotent() {
        let once = normalize_weights(&[0.3, 1.7, 2.2]).unwrap();
        let twice = normalize_weights(&once).unwrap();
        assert_eq!(once, twice);
    }
}
