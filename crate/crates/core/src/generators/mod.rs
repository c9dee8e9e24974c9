//! Strategy text production behind a single provider interface.
//!
//! [`Generators`] wraps any [`Provider`] with prompt rendering, retries,
//! token accounting, pricing and ranking repair. The evolution loop and the
//! judge harness talk only to this layer.

mod mock;
mod openai;
pub mod prompts;
mod provider;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use mock::{mock_rubric, MockProvider, MOCK_MODEL};
pub use openai::{EndpointConfig, OpenAiCompatible, API_KEY_ENV, CACHE_DIR_ENV};
pub use provider::{
    Completion, GenerationRequest, JudgedItem, ModelPrice, PriceTable, Provider, ProviderError,
    ProviderUsage, RequestKind, SubgroupHint,
};

use crate::aggregation::repair_ranking;
use crate::error::{LarkError, Result};
use crate::model::{
    CallOutcome, CallRecord, IdAllocator, Lineage, Origin, RankingProfile, RepairEvent, Scenario,
    Stakeholder, Strategy, StrategyId, Tokenizer,
};
use crate::util::{derive_seed, parallel_map};
use prompts::{Prompt, PromptTemplate, TemplateKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSettings {
    pub seed_temperature: f64,
    pub refine_temperature: f64,
    pub rank_temperature: f64,
    pub judge_temperature: f64,
    /// Output length hint for seed requests, in words.
    pub seed_max_words: u64,
    /// Plasticity may grow a strategy by this fraction of its token count.
    pub plasticity_growth: f64,
    pub retry: RetryPolicy,
    pub parallelism: usize,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        GeneratorSettings {
            seed_temperature: 0.8,
            refine_temperature: 0.7,
            rank_temperature: 0.1,
            judge_temperature: 0.1,
            seed_max_words: 120,
            plasticity_growth: 0.2,
            retry: RetryPolicy::default(),
            parallelism: 4,
        }
    }
}

/// Result of one refinement call: the new strategy, or `None` on a no-op.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub strategy: Option<Strategy>,
    pub call: CallRecord,
}

#[derive(Debug, Clone)]
pub struct Ranked {
    pub profile: RankingProfile,
    pub repair: Option<RepairEvent>,
    pub call: CallRecord,
}

pub struct Generators<'p> {
    provider: &'p dyn Provider,
    tokenizer: Tokenizer,
    prices: PriceTable,
    settings: GeneratorSettings,
    seed_t: PromptTemplate,
    plasticity_t: PromptTemplate,
    maturation_t: PromptTemplate,
    rank_t: PromptTemplate,
    judge_t: PromptTemplate,
}

impl<'p> Generators<'p> {
    pub fn new(
        provider: &'p dyn Provider,
        tokenizer: Tokenizer,
        prices: PriceTable,
        settings: GeneratorSettings,
    ) -> Self {
        Generators {
            provider,
            tokenizer,
            prices,
            settings,
            seed_t: PromptTemplate::load(TemplateKind::Seed),
            plasticity_t: PromptTemplate::load(TemplateKind::Plasticity),
            maturation_t: PromptTemplate::load(TemplateKind::Maturation),
            rank_t: PromptTemplate::load(TemplateKind::Rank),
            judge_t: PromptTemplate::load(TemplateKind::Judge),
        }
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn settings(&self) -> &GeneratorSettings {
        &self.settings
    }

    /// Runs one request with the retry policy. Returns the last error after
    /// all attempts fail, plus the number of attempts made.
    fn call(&self, req: &GenerationRequest<'_>) -> (std::result::Result<Completion, ProviderError>, u32) {
        let policy = self.settings.retry;
        let attempts = policy.attempts.max(1);
        let mut backoff = Duration::from_millis(policy.initial_backoff_ms);
        let mut last = None;
        for attempt in 1..=attempts {
            match self.provider.complete(req) {
                Ok(c) => return (Ok(c), attempt),
                Err(e) => {
                    log::warn!("{} request failed (attempt {attempt}/{attempts}): {e}", req.kind);
                    let retry = e.retryable && attempt < attempts;
                    last = Some(e);
                    if !retry {
                        return (Err(last.expect("set above")), attempt);
                    }
                    std::thread::sleep(backoff);
                    backoff *= 2;
                }
            }
        }
        (Err(last.expect("at least one attempt")), attempts)
    }

    fn usage(&self, req: &GenerationRequest<'_>, completion: &Completion) -> ProviderUsage {
        let prompt_tokens = completion.prompt_tokens.unwrap_or_else(|| {
            self.tokenizer.count(&req.prompt.system) + self.tokenizer.count(&req.prompt.user)
        });
        let completion_tokens = completion
            .completion_tokens
            .unwrap_or_else(|| self.tokenizer.count(&completion.text));
        self.prices
            .usage(self.provider.model(), prompt_tokens, completion_tokens)
    }

    fn record(
        &self,
        req: &GenerationRequest<'_>,
        completion: Option<&Completion>,
        attempts: u32,
        outcome: CallOutcome,
    ) -> CallRecord {
        CallRecord {
            kind: req.kind,
            subject: req.subject.map(|s| s.id.clone()),
            stakeholder: req.stakeholder.map(|s| s.id.clone()),
            attempts,
            outcome,
            usage: completion.map(|c| self.usage(req, c)).unwrap_or_default(),
        }
    }

    fn seed_prompt(&self, scenario: &Scenario, index: usize, count: usize) -> Prompt {
        self.seed_t.render(&[
            ("context", &scenario.context),
            ("objectives", &bullets(&scenario.objectives)),
            ("stakeholders", &roster(scenario)),
            ("index", &(index + 1).to_string()),
            ("count", &count.to_string()),
            ("max_tokens", &self.settings.seed_max_words.to_string()),
        ])
    }

    /// Samples `k` initial strategies. Any seed that fails after retries
    /// aborts with a provider error.
    pub fn sample_seeds(
        &self,
        scenario: &Scenario,
        k: usize,
        seed: u64,
        ids: &mut IdAllocator,
    ) -> Result<(Vec<Strategy>, Vec<CallRecord>)> {
        if k == 0 {
            return Err(LarkError::validation("cannot sample zero seeds"));
        }
        let slots: Vec<(usize, StrategyId)> = (0..k).map(|i| (i, ids.next_id(0))).collect();
        let results = parallel_map(self.settings.parallelism, &slots, |(i, id)| {
            let req = GenerationRequest::seed(
                scenario,
                *i,
                self.seed_prompt(scenario, *i, k),
                derive_seed(seed, &["seed", &i.to_string()]),
            )
            .with_temperature(self.settings.seed_temperature);
            let (res, attempts) = self.call(&req);
            match res {
                Ok(c) if !c.text.trim().is_empty() => {
                    let s = Strategy::generated(
                        id.clone(),
                        c.text.trim(),
                        &self.tokenizer,
                        c.completion_tokens,
                        Lineage::seed(),
                        0,
                    );
                    Ok((s, self.record(&req, Some(&c), attempts, CallOutcome::Ok)))
                }
                Ok(_) => Err(LarkError::Provider {
                    kind: RequestKind::Seed,
                    message: format!("empty seed text for slot {i}"),
                }),
                Err(e) => Err(LarkError::Provider {
                    kind: RequestKind::Seed,
                    message: e.message,
                }),
            }
        });
        let mut strategies = Vec::with_capacity(k);
        let mut calls = Vec::with_capacity(k);
        for r in results {
            let (s, c) = r?;
            strategies.push(s);
            calls.push(c);
        }
        Ok((strategies, calls))
    }

    /// Bounded, context-aware edit of `strategy`. A provider failure or empty
    /// reply is a logged no-op.
    pub fn plasticity(
        &self,
        strategy: &Strategy,
        scenario: &Scenario,
        new_id: StrategyId,
        generation: u32,
        seed: u64,
    ) -> Refinement {
        let bound = strategy.token_count
            + (strategy.token_count as f64 * self.settings.plasticity_growth).floor() as u64;
        let prompt = self.plasticity_t.render(&[
            ("context", &scenario.context),
            ("strategy", &strategy.text),
            ("max_tokens", &bound.to_string()),
        ]);
        let req = GenerationRequest::plasticity(
            scenario,
            strategy,
            prompt,
            derive_seed(seed, &["plasticity", strategy.id.as_str()]),
        )
        .with_temperature(self.settings.refine_temperature);
        self.refine(&req, new_id, generation, Origin::Plasticity)
    }

    /// Specializes a duplicate of `strategy` towards `hint`. The parent is
    /// left untouched.
    pub fn maturation(
        &self,
        strategy: &Strategy,
        scenario: &Scenario,
        hint: &SubgroupHint,
        new_id: StrategyId,
        generation: u32,
        seed: u64,
    ) -> Refinement {
        let prompt = self.maturation_t.render(&[
            ("context", &scenario.context),
            ("objectives", &bullets(&scenario.objectives)),
            ("strategy", &strategy.text),
            ("hint", &hint.describe(scenario)),
        ]);
        let req = GenerationRequest::maturation(
            scenario,
            strategy,
            hint,
            prompt,
            derive_seed(seed, &["maturation", strategy.id.as_str(), &hint.label()]),
        )
        .with_temperature(self.settings.refine_temperature);
        self.refine(&req, new_id, generation, Origin::DuplicationMaturation)
    }

    fn refine(
        &self,
        req: &GenerationRequest<'_>,
        new_id: StrategyId,
        generation: u32,
        origin: Origin,
    ) -> Refinement {
        let parent = req.subject.expect("refinement requests carry a subject");
        let (res, attempts) = self.call(req);
        match res {
            Ok(c) if !c.text.trim().is_empty() => {
                let s = Strategy::generated(
                    new_id,
                    c.text.trim(),
                    &self.tokenizer,
                    c.completion_tokens,
                    Lineage::child_of(&parent.id, origin),
                    generation,
                );
                let call = self.record(req, Some(&c), attempts, CallOutcome::Ok);
                Refinement {
                    strategy: Some(s),
                    call,
                }
            }
            Ok(c) => {
                log::info!("{} of {} returned empty text; no-op", req.kind, parent.id);
                Refinement {
                    strategy: None,
                    call: self.record(req, Some(&c), attempts, CallOutcome::NoOp),
                }
            }
            Err(e) => {
                log::warn!("{} of {} failed after retries ({e}); no-op", req.kind, parent.id);
                Refinement {
                    strategy: None,
                    call: self.record(req, None, attempts, CallOutcome::NoOp),
                }
            }
        }
    }

    /// Asks one stakeholder to order `pool`; malformed replies are repaired.
    pub fn rank_population(
        &self,
        stakeholder: &Stakeholder,
        pool: &[Strategy],
        scenario: &Scenario,
        seed: u64,
    ) -> Result<Ranked> {
        let candidates = pool
            .iter()
            .map(|s| format!("[{}]\n{}", s.id, s.text))
            .collect::<Vec<_>>()
            .join("\n\n");
        let prompt = self.rank_t.render(&[
            ("persona", &stakeholder.persona),
            ("context", &scenario.context),
            ("candidates", &candidates),
        ]);
        let pool_key = pool.iter().map(|s| s.id.as_str()).collect::<Vec<_>>().join(",");
        let req = GenerationRequest::rank(
            scenario,
            stakeholder,
            pool,
            prompt,
            derive_seed(seed, &["rank", &stakeholder.id, &pool_key]),
        )
        .with_temperature(self.settings.rank_temperature);
        let (res, attempts) = self.call(&req);
        let completion = res.map_err(|e| LarkError::Provider {
            kind: RequestKind::StakeholderRank,
            message: e.message,
        })?;
        let raw = parse_id_list(&completion.text);
        let ids: Vec<StrategyId> = pool.iter().map(|s| s.id.clone()).collect();
        let (ranking, repair) = repair_ranking(&stakeholder.id, &raw, &ids);
        let outcome = if repair.is_some() {
            CallOutcome::Repaired
        } else {
            CallOutcome::Ok
        };
        Ok(Ranked {
            profile: RankingProfile {
                stakeholder_id: stakeholder.id.clone(),
                ranking,
            },
            repair,
            call: self.record(&req, Some(&completion), attempts, outcome),
        })
    }

    /// Every stakeholder ranks `pool`, in roster order.
    pub fn rank_all(&self, scenario: &Scenario, pool: &[Strategy], seed: u64) -> Result<Vec<Ranked>> {
        parallel_map(self.settings.parallelism, &scenario.stakeholders, |sh| {
            self.rank_population(sh, pool, scenario, seed)
        })
        .into_iter()
        .collect()
    }

    /// Renders the judge payload for anonymized `items`.
    pub fn judge_prompt(&self, scenario: &Scenario, items: &[JudgedItem]) -> Prompt {
        let responses = items
            .iter()
            .map(|i| format!("[{}]\n{}", i.anon_id, i.text))
            .collect::<Vec<_>>()
            .join("\n\n");
        self.judge_t.render(&[
            ("context", &scenario.context),
            ("objectives", &bullets(&scenario.objectives)),
            ("responses", &responses),
        ])
    }

    /// Sends a judge request; returns the raw reply text and the call record.
    pub fn judge(
        &self,
        scenario: &Scenario,
        items: &[JudgedItem],
        prompt: Prompt,
        seed: u64,
    ) -> (Option<String>, CallRecord) {
        let req = GenerationRequest::judge(scenario, items, prompt, seed)
            .with_temperature(self.settings.judge_temperature);
        let (res, attempts) = self.call(&req);
        match res {
            Ok(c) => {
                let rec = self.record(&req, Some(&c), attempts, CallOutcome::Ok);
                (Some(c.text), rec)
            }
            Err(_) => (None, self.record(&req, None, attempts, CallOutcome::Failed)),
        }
    }
}

fn bullets(items: &[String]) -> String {
    items
        .iter()
        .map(|o| format!("- {o}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn roster(scenario: &Scenario) -> String {
    scenario
        .stakeholders
        .iter()
        .map(|s| format!("- {} (influence {:.2}): {}", s.id, s.influence_weight, s.persona))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Splits a free-text id list on commas, whitespace and list punctuation.
pub fn parse_id_list(text: &str) -> Vec<String> {
    text.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .map(|t| t.trim_matches(|c: char| !(c.is_alphanumeric() || c == '-' || c == '_')))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Population, TokenizerMode};
    use crate::sim::{make_benchmark_scenarios, SyntheticUtility};
    use std::sync::atomic::{AtomicU32, Ordering};

    fn mock_gen(m: &MockProvider) -> Generators<'_> {
        Generators::new(
            m,
            Tokenizer::new(TokenizerMode::Whitespace),
            PriceTable::default(),
            GeneratorSettings::default(),
        )
    }

    #[test]
    fn seeds_are_reproducible() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let m = MockProvider::default();
        let g = mock_gen(&m);
        let (a, _) = g.sample_seeds(&sc, 6, 9, &mut IdAllocator::new()).unwrap();
        let (b, _) = g.sample_seeds(&sc, 6, 9, &mut IdAllocator::new()).unwrap();
        let (c, _) = g.sample_seeds(&sc, 6, 10, &mut IdAllocator::new()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(Population::new(0, a.clone()).is_ok());
        let texts: std::collections::HashSet<_> = a.iter().map(|s| &s.text).collect();
        assert_eq!(texts.len(), 6);
        let (one, _) = g.sample_seeds(&sc, 1, 9, &mut IdAllocator::new()).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].lineage.origin, Origin::Seed);
    }

    #[test]
    fn plasticity_respects_growth_bound() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let m = MockProvider::default();
        let g = mock_gen(&m);
        let mut ids = IdAllocator::new();
        let (seeds, _) = g.sample_seeds(&sc, 5, 1, &mut ids).unwrap();
        for trial in 0..100u64 {
            let parent = &seeds[trial as usize % seeds.len()];
            let r = g.plasticity(parent, &sc, ids.next_id(1), 1, trial);
            let child = r.strategy.expect("mock never no-ops");
            let bound = parent.token_count + (parent.token_count as f64 * 0.2).floor() as u64;
            assert!(child.token_count <= bound);
            assert_eq!(child.lineage.parent.as_ref(), Some(&parent.id));
            assert_eq!(child.lineage.origin, Origin::Plasticity);
        }
    }

    #[test]
    fn ranking_follows_synthetic_length_preference() {
        let mut sc = make_benchmark_scenarios(1, 2).remove(0);
        let sh = sc.stakeholders[0].clone();
        sc.synthetic = vec![SyntheticUtility::new(&sh.id).with_length_preference(-1.0)];
        let t = Tokenizer::default();
        let pool = vec![
            Strategy::new("a".into(), "one two three", &t, Lineage::seed(), 0),
            Strategy::new("b".into(), "one", &t, Lineage::seed(), 0),
            Strategy::new("c".into(), "one two", &t, Lineage::seed(), 0),
        ];
        let m = MockProvider::default();
        let r = mock_gen(&m).rank_population(&sh, &pool, &sc, 0).unwrap();
        let order: Vec<&str> = r.profile.ranking.iter().map(|s| s.as_str()).collect();
        assert_eq!(order, ["b", "c", "a"]);
        assert!(r.repair.is_none());

        let single = &pool[..1];
        let r = mock_gen(&m).rank_population(&sh, single, &sc, 0).unwrap();
        assert_eq!(r.profile.ranking, vec![StrategyId::from("a")]);
    }

    struct Scripted {
        reply: &'static str,
        failures_before_success: u32,
        calls: AtomicU32,
    }

    impl Provider for Scripted {
        fn model(&self) -> &str {
            "scripted"
        }
        fn complete(&self, _req: &GenerationRequest<'_>) -> std::result::Result<Completion, ProviderError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures_before_success {
                return Err(ProviderError::transient("boom"));
            }
            Ok(Completion {
                text: self.reply.into(),
                prompt_tokens: Some(10),
                completion_tokens: Some(3),
            })
        }
    }

    fn fast() -> GeneratorSettings {
        GeneratorSettings {
            retry: RetryPolicy {
                attempts: 3,
                initial_backoff_ms: 1,
            },
            ..Default::default()
        }
    }

    #[test]
    fn malformed_live_ranking_is_repaired() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let t = Tokenizer::default();
        let pool: Vec<Strategy> = ["a", "b", "c"]
            .iter()
            .map(|id| Strategy::new((*id).into(), "x", &t, Lineage::seed(), 0))
            .collect();
        let p = Scripted {
            reply: "a, a, c",
            failures_before_success: 0,
            calls: AtomicU32::new(0),
        };
        let g = Generators::new(&p, t, PriceTable::default(), fast());
        let r = g.rank_population(&sc.stakeholders[0], &pool, &sc, 0).unwrap();
        let order: Vec<&str> = r.profile.ranking.iter().map(|s| s.as_str()).collect();
        assert_eq!(order, ["a", "c", "b"]);
        assert!(r.repair.is_some());
        assert_eq!(r.call.outcome, CallOutcome::Repaired);
    }

    #[test]
    fn retries_then_succeeds() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let p = Scripted {
            reply: "A strategy.",
            failures_before_success: 2,
            calls: AtomicU32::new(0),
        };
        let g = Generators::new(&p, Tokenizer::default(), PriceTable::default(), fast());
        let (s, calls) = g.sample_seeds(&sc, 1, 0, &mut IdAllocator::new()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(calls[0].attempts, 3);
        assert_eq!(calls[0].usage.prompt_tokens, 10);
    }

    #[test]
    fn seed_failure_after_retries_is_a_provider_error() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let p = Scripted {
            reply: "",
            failures_before_success: 10,
            calls: AtomicU32::new(0),
        };
        let g = Generators::new(&p, Tokenizer::default(), PriceTable::default(), fast());
        let err = g.sample_seeds(&sc, 1, 0, &mut IdAllocator::new()).unwrap_err();
        assert!(matches!(err, LarkError::Provider { kind: RequestKind::Seed, .. }));
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn empty_refinement_is_a_noop() {
        let sc = make_benchmark_scenarios(1, 2).remove(0);
        let p = Scripted {
            reply: "   ",
            failures_before_success: 0,
            calls: AtomicU32::new(0),
        };
        let t = Tokenizer::default();
        let g = Generators::new(&p, t, PriceTable::default(), fast());
        let parent = Strategy::new("g0-00".into(), "keep me", &t, Lineage::seed(), 0);
        let r = g.plasticity(&parent, &sc, "g1-01".into(), 1, 0);
        assert!(r.strategy.is_none());
        assert_eq!(r.call.outcome, CallOutcome::NoOp);
    }

    #[test]
    fn id_list_parsing() {
        assert_eq!(parse_id_list("g1-02, g1-03;g0-01\n 4. g2-10."), ["g1-02", "g1-03", "g0-01", "4", "g2-10"]);
    }
}
