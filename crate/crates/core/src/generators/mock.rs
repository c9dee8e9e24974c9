//! Deterministic offline provider.
//!
//! Output is a pure function of the request fields and its seed:
//! seeds are templates built from the scenario objectives plus seeded
//! feature tokens, plasticity makes one bounded edit, maturation appends a
//! subgroup clause, ranking defers to synthetic stakeholders, and judging
//! scores each response from its length-normalized feature count.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::provider::{Completion, GenerationRequest, Provider, ProviderError, RequestKind};
use crate::model::{Tokenizer, TokenizerMode};
use crate::sim::{self, features_in, SyntheticUtility, FEATURE_VOCABULARY};

pub const MOCK_MODEL: &str = "mock";

#[derive(Debug, Clone)]
pub struct MockProvider {
    tokenizer: Tokenizer,
    /// Plasticity may grow a strategy by at most this fraction of its tokens.
    growth: f64,
}

impl Default for MockProvider {
    fn default() -> Self {
        MockProvider::new(Tokenizer::new(TokenizerMode::Whitespace))
    }
}

impl MockProvider {
    pub fn new(tokenizer: Tokenizer) -> Self {
        MockProvider {
            tokenizer,
            growth: 0.2,
        }
    }

    pub fn with_growth(mut self, growth: f64) -> Self {
        self.growth = growth;
        self
    }

    fn growth_bound(&self, tokens: u64) -> u64 {
        tokens + (tokens as f64 * self.growth).floor() as u64
    }

    fn seed_text(&self, req: &GenerationRequest<'_>) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let sc = req.scenario;
        let objective = &sc.objectives[req.index % sc.objectives.len()];
        let n = rng.gen_range(2..=5);
        let feats: Vec<&str> = FEATURE_VOCABULARY.choose_multiple(&mut rng, n).copied().collect();
        let (last, head) = feats.split_last().expect("at least two features");
        format!(
            "Option {}: focus on {objective}. Key measures: {} and {last}. \
             Sequence the work in stages and report progress to affected groups.",
            req.index + 1,
            head.join(", "),
        )
    }

    fn plasticity_text(&self, req: &GenerationRequest<'_>) -> String {
        let subject = req.subject.expect("plasticity request carries a subject");
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let words: Vec<&str> = subject.text.split_whitespace().collect();
        let present = features_in(&subject.text);
        let absent: Vec<&str> = FEATURE_VOCABULARY
            .iter()
            .copied()
            .filter(|f| !present.contains(f))
            .collect();
        let positions: Vec<usize> = words
            .iter()
            .enumerate()
            .filter(|(_, w)| !features_in(w).is_empty())
            .map(|(i, _)| i)
            .collect();

        let substitute = |rng: &mut ChaCha8Rng| -> Option<String> {
            let &pos = positions.choose(rng)?;
            let new = *absent.choose(rng)?;
            let old = features_in(words[pos]).into_iter().next()?;
            let mut w = words.clone();
            let replaced = words[pos].replacen(old, new, 1);
            w[pos] = &replaced;
            Some(w.join(" "))
        };
        let append = |rng: &mut ChaCha8Rng| -> Option<String> {
            let new = *absent.choose(rng)?;
            Some(format!("{} Add {new}.", words.join(" ")))
        };
        let drop = |rng: &mut ChaCha8Rng| -> Option<String> {
            if positions.len() < 2 {
                return None;
            }
            let &pos = positions.choose(rng)?;
            let mut w = words.clone();
            w.remove(pos);
            Some(w.join(" "))
        };

        let bound = self.growth_bound(self.tokenizer.count(&subject.text));
        let first = rng.gen_range(0..3);
        let mut candidates = Vec::new();
        match first {
            0 => candidates.push(substitute(&mut rng)),
            1 => candidates.push(append(&mut rng)),
            _ => candidates.push(drop(&mut rng)),
        }
        candidates.push(drop(&mut rng));
        candidates.push(substitute(&mut rng));
        candidates
            .into_iter()
            .flatten()
            .find(|t| self.tokenizer.count(t) <= bound)
            .unwrap_or_else(|| subject.text.clone())
    }

    fn maturation_text(&self, req: &GenerationRequest<'_>) -> String {
        let subject = req.subject.expect("maturation request carries a subject");
        let hint = req.hint.expect("maturation request carries a hint");
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let present = features_in(&subject.text);
        let absent: Vec<&str> = FEATURE_VOCABULARY
            .iter()
            .copied()
            .filter(|f| !present.contains(f))
            .collect();
        let feature = absent
            .choose(&mut rng)
            .copied()
            .unwrap_or(FEATURE_VOCABULARY[0]);
        format!(
            "{} Specialization for {}: add {feature} tailored to their concerns.",
            subject.text,
            hint.label()
        )
    }

    fn rank_text(&self, req: &GenerationRequest<'_>) -> String {
        let sh = req.stakeholder.expect("rank request carries a stakeholder");
        let profile = match req.scenario.utility_for(&sh.id) {
            Some(u) => sim::rank_by_utility(u, req.candidates),
            None => {
                let u = SyntheticUtility::derived(&format!("{}/{}", req.scenario.id, sh.id), 0);
                let mut p = sim::rank_by_utility(&u, req.candidates);
                p.stakeholder_id = sh.id.clone();
                p
            }
        };
        profile
            .ranking
            .iter()
            .map(|id| id.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn judge_text(&self, req: &GenerationRequest<'_>) -> String {
        let scores: BTreeMap<&str, [f64; 5]> = req
            .judged
            .iter()
            .map(|item| (item.anon_id.as_str(), mock_rubric(&self.tokenizer, &item.text)))
            .collect();
        serde_json::json!({ "scores": scores }).to_string()
    }
}

/// Rubric scores from feature count and length; order-blind by construction.
pub fn mock_rubric(tokenizer: &Tokenizer, text: &str) -> [f64; 5] {
    let features = features_in(text).len() as f64;
    let tokens = tokenizer.count(text).max(1) as f64;
    let density = features / tokens * 100.0;
    let sentences = text.matches('.').count() as f64;
    let round1 = |x: f64| (x.clamp(0.0, 10.0) * 10.0).round() / 10.0;
    [
        round1(1.5 * features),
        round1(10.0 - (tokens - 40.0).abs() / 8.0),
        round1(density),
        round1(10.0 * (60.0 / tokens).min(1.0)),
        round1(3.0 + 1.5 * sentences.min(4.0)),
    ]
}

impl Provider for MockProvider {
    fn model(&self) -> &str {
        MOCK_MODEL
    }

    fn complete(&self, req: &GenerationRequest<'_>) -> Result<Completion, ProviderError> {
        let text = match req.kind {
            RequestKind::Seed => self.seed_text(req),
            RequestKind::Plasticity => self.plasticity_text(req),
            RequestKind::Maturation => self.maturation_text(req),
            RequestKind::StakeholderRank => self.rank_text(req),
            RequestKind::JudgeScore => self.judge_text(req),
        };
        Ok(Completion {
            text,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::prompts::Prompt;
    use crate::generators::SubgroupHint;
    use crate::model::{Lineage, Strategy};
    use crate::sim::make_benchmark_scenarios;

    fn prompt() -> Prompt {
        Prompt {
            system: String::new(),
            user: String::new(),
        }
    }

    #[test]
    fn seeds_are_deterministic_and_seed_sensitive() {
        let sc = make_benchmark_scenarios(1, 1).remove(0);
        let m = MockProvider::default();
        let a = m.complete(&GenerationRequest::seed(&sc, 0, prompt(), 42)).unwrap();
        let b = m.complete(&GenerationRequest::seed(&sc, 0, prompt(), 42)).unwrap();
        let c = m.complete(&GenerationRequest::seed(&sc, 0, prompt(), 43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.text, c.text);
        assert!(features_in(&a.text).len() >= 2);
    }

    #[test]
    fn maturation_mentions_hint() {
        let sc = make_benchmark_scenarios(1, 1).remove(0);
        let t = Tokenizer::default();
        let parent = Strategy::new("g0-00".into(), "Use open-data.", &t, Lineage::seed(), 0);
        let m = MockProvider::default();
        let h1 = SubgroupHint::Stakeholder("sh1".into());
        let h2 = SubgroupHint::Stakeholder("sh2".into());
        let a = m
            .complete(&GenerationRequest::maturation(&sc, &parent, &h1, prompt(), 5))
            .unwrap();
        let b = m
            .complete(&GenerationRequest::maturation(&sc, &parent, &h2, prompt(), 5))
            .unwrap();
        assert!(a.text.contains("sh1"));
        assert!(b.text.contains("sh2"));
        assert_ne!(a.text, b.text);
    }

    #[test]
    fn judge_output_is_order_blind() {
        use crate::generators::JudgedItem;
        let sc = make_benchmark_scenarios(1, 1).remove(0);
        let items = vec![
            JudgedItem { anon_id: "A".into(), text: "open-data and pilot-program.".into() },
            JudgedItem { anon_id: "B".into(), text: "nothing much here".into() },
        ];
        let mut rev = items.clone();
        rev.reverse();
        let m = MockProvider::default();
        let a = m.complete(&GenerationRequest::judge(&sc, &items, prompt(), 1)).unwrap();
        let b = m.complete(&GenerationRequest::judge(&sc, &rev, prompt(), 2)).unwrap();
        assert_eq!(a.text, b.text);
    }

    #[test]
    fn rubric_scores_stay_in_range() {
        let t = Tokenizer::default();
        for text in ["", "x", &"open-data ".repeat(300)] {
            for s in mock_rubric(&t, text) {
                assert!((0.0..=10.0).contains(&s));
            }
        }
    }
}
