//! Blinded multi-judge scoring of system outputs.
//!
//! Each system's output is given an anonymized id derived from a salt.
//! Every judge sees the anonymized outputs in its own seeded order and
//! returns five criterion scores per response. Judges are combined with
//! uniform-weight Borda over the rankings their composites induce; the mean
//! composite is reported next to it. The id-to-system mapping lives only in
//! the [`EvaluationRecord`], never in what a judge is sent.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{borda_scores, tie_break};
use crate::error::{LarkError, Result};
use crate::evolution::ProviderChoice;
use crate::generators::prompts::{PromptTemplate, TemplateKind};
use crate::generators::{GeneratorSettings, Generators, JudgedItem, PriceTable, Provider, RetryPolicy};
use crate::model::{CallRecord, Lineage, RankingProfile, Scenario, Strategy, StrategyId, Tokenizer, TokenizerMode};
use crate::util::{derive_seed, sha256_hex};

pub const RUBRIC_CRITERIA: [&str; 5] = [
    "coverage/completeness",
    "feasibility/realism",
    "specificity/thoroughness",
    "constraint-adherence",
    "clarity/structure",
];
pub const CRITERION_MAX: f64 = 10.0;
pub const RUBRIC_TOTAL: f64 = CRITERION_MAX * RUBRIC_CRITERIA.len() as f64;

pub const EVALUATION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeSpec {
    pub name: String,
    #[serde(default)]
    pub provider: ProviderChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub judges: Vec<JudgeSpec>,
    pub temperature: f64,
    /// Mixed into anonymized ids so they cannot be matched across benchmarks.
    pub blinding_salt: String,
    /// Base seed for the per-judge presentation shuffles.
    pub shuffle_seed: u64,
    pub tokenizer: TokenizerMode,
    pub prices: PriceTable,
    pub retry: RetryPolicy,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            judges: vec![
                JudgeSpec {
                    name: "judge-a".into(),
                    provider: ProviderChoice::Mock,
                },
                JudgeSpec {
                    name: "judge-b".into(),
                    provider: ProviderChoice::Mock,
                },
            ],
            temperature: 0.1,
            blinding_salt: "lark-blind".into(),
            shuffle_seed: 0,
            tokenizer: TokenizerMode::Whitespace,
            prices: PriceTable::default(),
            retry: RetryPolicy::default(),
        }
    }
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.judges.is_empty() {
            return Err(LarkError::validation("at least one judge is required"));
        }
        let mut names: Vec<&str> = self.judges.iter().map(|j| j.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.judges.len() {
            return Err(LarkError::validation("judge names must be distinct"));
        }
        Ok(())
    }

    /// Salted anonymized id for `system` within `scenario_id`.
    pub fn anon_id(&self, scenario_id: &str, system: &str) -> String {
        let h = sha256_hex(format!("{}\0{scenario_id}\0{system}", self.blinding_salt));
        format!("R-{}", &h[..10])
    }

    pub fn judge_seed(&self, judge: &str, scenario_id: &str) -> u64 {
        derive_seed(self.shuffle_seed, &["judge", judge, scenario_id])
    }

    pub fn build_providers(&self) -> Result<Vec<Box<dyn Provider>>> {
        let tok = Tokenizer::new(self.tokenizer);
        self.judges.iter().map(|j| j.provider.build(tok)).collect()
    }
}

/// One judge's view of one scenario round, keyed by anonymized id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub judge: String,
    pub presentation_order: Vec<String>,
    /// `None` marks a cell the judge never scored validly.
    pub scores: BTreeMap<String, Option<[f64; 5]>>,
    pub calls: Vec<CallRecord>,
}

impl JudgeVerdict {
    pub fn composite(&self, anon: &str) -> Option<f64> {
        self.scores.get(anon).copied().flatten().map(|s| s.iter().sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub schema_version: u32,
    pub scenario_id: String,
    /// `judge@v1` stamp and template hash.
    pub judge_template: String,
    pub aggregation: String,
    /// Anonymized id to system name.
    pub blinding: BTreeMap<String, String>,
    pub verdicts: Vec<JudgeVerdict>,
    /// Mean composite over judges with a valid cell, per system.
    pub composite: BTreeMap<String, Option<f64>>,
    /// Uniform-weight Borda score over judge-induced rankings, per system.
    pub judge_borda: BTreeMap<String, f64>,
    /// Systems best first under the judge aggregation.
    pub ranking: Vec<String>,
    pub judge_cost: f64,
}

/// Exactly what one judge request contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgePayload {
    pub scenario_id: String,
    pub judge: String,
    pub attempt: u32,
    pub system_prompt: String,
    pub user_prompt: String,
}

#[derive(Debug, Clone)]
pub struct Judged {
    pub record: EvaluationRecord,
    pub payloads: Vec<JudgePayload>,
}

/// Extracts per-response criterion vectors from a judge reply. Responses
/// that are absent, not length five, or out of range map to `None`.
pub fn parse_judge_reply(text: &str, expected: &[String]) -> BTreeMap<String, Option<[f64; 5]>> {
    let value = match (text.find('{'), text.rfind('}')) {
        (Some(a), Some(b)) if a < b => serde_json::from_str::<serde_json::Value>(&text[a..=b]).ok(),
        _ => None,
    };
    let scores = value.as_ref().and_then(|v| v.get("scores"));
    expected
        .iter()
        .map(|id| {
            let cell = scores
                .and_then(|s| s.get(id))
                .and_then(|a| a.as_array())
                .filter(|a| a.len() == 5)
                .and_then(|a| {
                    let mut out = [0.0; 5];
                    for (o, x) in out.iter_mut().zip(a) {
                        *o = x.as_f64().filter(|v| (0.0..=CRITERION_MAX).contains(v))?;
                    }
                    Some(out)
                });
            (id.clone(), cell)
        })
        .collect()
}

/// Judges `outputs` (system name, text) with the providers named in `config`.
pub fn judge_outputs(scenario: &Scenario, outputs: &[(String, String)], config: &JudgeConfig) -> Result<Judged> {
    config.validate()?;
    let providers = config.build_providers()?;
    let refs: Vec<&dyn Provider> = providers.iter().map(|p| p.as_ref()).collect();
    judge_outputs_with(scenario, outputs, config, &refs)
}

/// As [`judge_outputs`], with one explicit provider per configured judge.
pub fn judge_outputs_with(
    scenario: &Scenario,
    outputs: &[(String, String)],
    config: &JudgeConfig,
    providers: &[&dyn Provider],
) -> Result<Judged> {
    config.validate()?;
    if providers.len() != config.judges.len() {
        return Err(LarkError::validation("one provider per judge is required"));
    }
    if outputs.len() < 2 {
        return Err(LarkError::validation("judging needs at least two systems"));
    }
    let tokenizer = Tokenizer::new(config.tokenizer);
    let blinding: BTreeMap<String, String> = outputs
        .iter()
        .map(|(name, _)| (config.anon_id(&scenario.id, name), name.clone()))
        .collect();
    if blinding.len() != outputs.len() {
        return Err(LarkError::validation("system names must be distinct"));
    }
    let items: Vec<JudgedItem> = outputs
        .iter()
        .map(|(name, text)| JudgedItem {
            anon_id: config.anon_id(&scenario.id, name),
            text: text.clone(),
        })
        .collect();
    let settings = GeneratorSettings {
        judge_temperature: config.temperature,
        retry: config.retry,
        ..GeneratorSettings::default()
    };

    let mut verdicts = Vec::new();
    let mut payloads = Vec::new();
    for (spec, provider) in config.judges.iter().zip(providers) {
        let gens = Generators::new(*provider, tokenizer, config.prices.clone(), settings.clone());
        let seed = config.judge_seed(&spec.name, &scenario.id);
        let mut order = items.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let expected: Vec<String> = order.iter().map(|i| i.anon_id.clone()).collect();

        let mut scores: BTreeMap<String, Option<[f64; 5]>> = expected.iter().map(|id| (id.clone(), None)).collect();
        let mut calls = Vec::new();
        // First attempt, then one re-prompt for any cell still invalid.
        for attempt in 0..2u32 {
            let pending: Vec<String> = scores.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| k.clone()).collect();
            if pending.is_empty() {
                break;
            }
            let prompt = gens.judge_prompt(scenario, &order);
            payloads.push(JudgePayload {
                scenario_id: scenario.id.clone(),
                judge: spec.name.clone(),
                attempt,
                system_prompt: prompt.system.clone(),
                user_prompt: prompt.user.clone(),
            });
            let (reply, call) = gens.judge(scenario, &order, prompt, derive_seed(seed, &[&attempt.to_string()]));
            calls.push(call);
            if let Some(text) = reply {
                for (id, cell) in parse_judge_reply(&text, &pending) {
                    if cell.is_some() {
                        scores.insert(id, cell);
                    }
                }
            }
        }
        for (id, cell) in &scores {
            if cell.is_none() {
                log::warn!("{}: judge {} gave no valid score for {id}", scenario.id, spec.name);
            }
        }
        verdicts.push(JudgeVerdict {
            judge: spec.name.clone(),
            presentation_order: expected,
            scores,
            calls,
        });
    }

    let composite: BTreeMap<String, Option<f64>> = blinding
        .iter()
        .map(|(anon, name)| {
            let vals: Vec<f64> = verdicts.iter().filter_map(|v| v.composite(anon)).collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            (name.clone(), mean)
        })
        .collect();

    // Each judge's composites induce a ranking; unscored cells go last.
    let pool: Vec<Strategy> = items
        .iter()
        .map(|i| Strategy::new(StrategyId::new(i.anon_id.clone()), i.text.clone(), &tokenizer, Lineage::seed(), 0))
        .collect();
    let profiles: Vec<RankingProfile> = verdicts
        .iter()
        .map(|v| {
            let mut ids: Vec<&String> = blinding.keys().collect();
            ids.sort_by(|a, b| {
                let (ca, cb) = (v.composite(a), v.composite(b));
                match (ca, cb) {
                    (Some(x), Some(y)) => y.total_cmp(&x).then(a.cmp(b)),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => a.cmp(b),
                }
            });
            RankingProfile {
                stakeholder_id: v.judge.clone(),
                ranking: ids.into_iter().map(|s| StrategyId::new(s.clone())).collect(),
            }
        })
        .collect();
    let weights = vec![1.0 / verdicts.len() as f64; verdicts.len()];
    let borda = borda_scores(&profiles, &weights, &pool)?;
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        tie_break(
            (borda.scores[a], pool[a].token_count, &pool[a].id),
            (borda.scores[b], pool[b].token_count, &pool[b].id),
        )
    });
    let ranking = order.iter().map(|&i| blinding[pool[i].id.as_str()].clone()).collect();
    let judge_borda = pool
        .iter()
        .zip(&borda.scores)
        .map(|(s, b)| (blinding[s.id.as_str()].clone(), *b))
        .collect();
    let judge_cost = verdicts
        .iter()
        .flat_map(|v| &v.calls)
        .map(|c| c.usage.cost)
        .sum();

    let template = PromptTemplate::load(TemplateKind::Judge);
    Ok(Judged {
        record: EvaluationRecord {
            schema_version: EVALUATION_SCHEMA_VERSION,
            scenario_id: scenario.id.clone(),
            judge_template: format!("judge@v{}:{}", template.version, template.hash()),
            aggregation: "uniform-borda".into(),
            blinding,
            verdicts,
            composite,
            judge_borda,
            ranking,
            judge_cost,
        },
        payloads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{Completion, GenerationRequest, MockProvider, ProviderError};
    use crate::sim::make_benchmark_scenarios;

    fn outputs() -> Vec<(String, String)> {
        vec![
            ("alpha".into(), "Use open-data and a pilot-program. Then report.".into()),
            ("beta".into(), "Do something.".into()),
            ("gamma".into(), "Adopt phased-rollout, open-data, cost-sharing. Review yearly.".into()),
        ]
    }

    #[test]
    fn parse_accepts_wrapped_json_and_rejects_bad_cells() {
        let ids = vec!["A".to_owned(), "B".to_owned(), "C".to_owned()];
        let text = r#"Here you go: {"scores": {"A": [1,2,3,4,5], "B": [1,2,3], "C": [1,2,3,4,11]}}"#;
        let p = parse_judge_reply(text, &ids);
        assert_eq!(p["A"], Some([1.0, 2.0, 3.0, 4.0, 5.0]));
        assert_eq!(p["B"], None);
        assert_eq!(p["C"], None);
        assert!(parse_judge_reply("no json", &ids).values().all(Option::is_none));
    }

    #[test]
    fn judges_see_independent_orders_and_no_names() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let many: Vec<(String, String)> = (0..6).map(|i| (format!("system-{i}"), format!("text {i} open-data."))).collect();
        let j = judge_outputs(&sc, &many, &JudgeConfig::default()).unwrap();
        let v = &j.record.verdicts;
        assert_ne!(v[0].presentation_order, v[1].presentation_order);
        for p in &j.payloads {
            assert!(!p.user_prompt.contains("system-"));
        }
    }

    #[test]
    fn agreeing_judges_give_their_common_ranking() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let j = judge_outputs(&sc, &outputs(), &JudgeConfig::default()).unwrap();
        let r = &j.record;
        let by_composite = {
            let mut names: Vec<&String> = r.composite.keys().collect();
            names.sort_by(|a, b| r.composite[*b].unwrap().total_cmp(&r.composite[*a].unwrap()));
            names.into_iter().cloned().collect::<Vec<_>>()
        };
        assert_eq!(r.ranking, by_composite);
        assert!(r.composite.values().all(|c| c.unwrap() <= RUBRIC_TOTAL));
    }

    #[test]
    fn scores_do_not_depend_on_shuffle_seed() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let a = judge_outputs(&sc, &outputs(), &JudgeConfig::default()).unwrap();
        let cfg = JudgeConfig { shuffle_seed: 99, ..Default::default() };
        let b = judge_outputs(&sc, &outputs(), &cfg).unwrap();
        assert_eq!(a.record.composite, b.record.composite);
    }

    /// Omits one response on the first call, answers fully on the re-prompt.
    struct Forgetful(std::sync::atomic::AtomicUsize, MockProvider);

    impl Provider for Forgetful {
        fn model(&self) -> &str {
            "forgetful"
        }
        fn complete(&self, req: &GenerationRequest<'_>) -> std::result::Result<Completion, ProviderError> {
            let n = self.0.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            let mut c = self.1.complete(req)?;
            if n == 0 {
                let mut v: serde_json::Value = serde_json::from_str(&c.text).unwrap();
                let first = req.judged[0].anon_id.clone();
                v["scores"].as_object_mut().unwrap().remove(&first);
                c.text = v.to_string();
            }
            Ok(c)
        }
    }

    #[test]
    fn missing_cell_is_reprompted_once() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let cfg = JudgeConfig {
            judges: vec![JudgeSpec { name: "only".into(), provider: ProviderChoice::Mock }],
            ..Default::default()
        };
        let p = Forgetful(Default::default(), MockProvider::default());
        let j = judge_outputs_with(&sc, &outputs(), &cfg, &[&p]).unwrap();
        assert_eq!(j.record.verdicts[0].calls.len(), 2);
        assert_eq!(j.payloads.len(), 2);
        assert!(j.record.composite.values().all(Option::is_some));
    }
}
