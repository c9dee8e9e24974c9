//! Synthetic stakeholders with known utility functions.
//!
//! A [`SyntheticUtility`] scores a strategy by which feature tokens from
//! [`FEATURE_VOCABULARY`] its text mentions, plus a signed preference on its
//! length. Because the utilities are explicit, ranking, aggregation and
//! selection can be checked against ground truth without any network access.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    ComputeBudget, DomainTag, RankingProfile, Scenario, Stakeholder, Strategy, StrategyId,
};
use crate::util::derive_seed;

/// Feature tokens the mock generator writes and synthetic stakeholders value.
pub const FEATURE_VOCABULARY: [&str; 24] = [
    "phased-rollout",
    "community-forum",
    "cost-sharing",
    "pilot-program",
    "risk-register",
    "open-data",
    "equity-audit",
    "subsidy-scheme",
    "public-dashboard",
    "stakeholder-council",
    "impact-assessment",
    "training-program",
    "green-procurement",
    "local-hiring",
    "privacy-safeguards",
    "budget-cap",
    "milestone-reviews",
    "independent-oversight",
    "feedback-loop",
    "partnership-model",
    "contingency-fund",
    "accessibility-plan",
    "outcome-metrics",
    "sunset-clause",
];

/// Vocabulary features mentioned in `text`.
pub fn features_in(text: &str) -> BTreeSet<&'static str> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !(c.is_alphanumeric() || c == '-')))
        .filter_map(|w| FEATURE_VOCABULARY.iter().copied().find(|f| *f == w))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticUtility {
    pub stakeholder_id: String,
    pub features: BTreeMap<String, f64>,
    /// Utility per token; negative values favour brevity.
    pub length_preference: f64,
    /// Amplitude of the seeded per-strategy jitter; zero disables it.
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub jitter_seed: u32,
}

impl SyntheticUtility {
    pub fn new(stakeholder_id: impl Into<String>) -> Self {
        SyntheticUtility {
            stakeholder_id: stakeholder_id.into(),
            features: BTreeMap::new(),
            length_preference: 0.0,
            jitter: 0.0,
            jitter_seed: 0,
        }
    }

    pub fn with_feature(mut self, feature: &str, weight: f64) -> Self {
        self.features.insert(feature.to_owned(), weight);
        self
    }

    pub fn with_length_preference(mut self, per_token: f64) -> Self {
        self.length_preference = per_token;
        self
    }

    /// A stand-in utility for a stakeholder without an explicit one, derived
    /// from the stakeholder id so it is stable across runs.
    pub fn derived(stakeholder_id: &str, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["utility", stakeholder_id]));
        let mut u = SyntheticUtility::new(stakeholder_id);
        for f in FEATURE_VOCABULARY {
            u.features.insert(f.to_owned(), round3(rng.gen_range(-1.0..1.0)));
        }
        u.length_preference = -round3(rng.gen_range(0.0..0.05));
        u
    }

    /// Same features with every weight negated.
    pub fn reversed(&self) -> Self {
        let mut u = self.clone();
        for w in u.features.values_mut() {
            *w = -*w;
        }
        u.length_preference = -u.length_preference;
        u
    }
}

/// `Σ weight(f)·[f ∈ text] + length_preference·T(x) + jitter`.
pub fn utility(u: &SyntheticUtility, strategy: &Strategy) -> f64 {
    let present = features_in(&strategy.text);
    let features: f64 = present
        .iter()
        .filter_map(|f| u.features.get(*f))
        .sum();
    let length = u.length_preference * strategy.token_count as f64;
    features + length + jitter(u, &strategy.id)
}

fn jitter(u: &SyntheticUtility, id: &StrategyId) -> f64 {
    if u.jitter == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        u64::from(u.jitter_seed),
        &[&u.stakeholder_id, id.as_str()],
    ));
    u.jitter * rng.gen_range(-1.0..=1.0)
}

/// Ranks by descending utility; exact ties fall back to ascending id.
pub fn rank_by_utility(u: &SyntheticUtility, population: &[Strategy]) -> RankingProfile {
    let mut scored: Vec<(f64, &StrategyId)> = population
        .iter()
        .map(|s| (utility(u, s), &s.id))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    RankingProfile {
        stakeholder_id: u.stakeholder_id.clone(),
        ranking: scored.into_iter().map(|(_, id)| id.clone()).collect(),
    }
}

const MIN_STAKEHOLDERS: usize = 3;
const MAX_STAKEHOLDERS: usize = 7;

struct DomainProfile {
    settings: &'static [&'static str],
    objectives: &'static [&'static str],
    roles: &'static [&'static str],
}

fn domain_profile(domain: DomainTag) -> DomainProfile {
    match domain {
        DomainTag::MultiStakeholderTradeoffs => DomainProfile {
            settings: &[
                "A regional water authority must reallocate a shrinking supply between farms, households and industry.",
                "A university is splitting a fixed capital budget between housing, research labs and athletics.",
                "A port city is deciding how to share waterfront land between shipping, tourism and residents.",
            ],
            objectives: &[
                "keep essential services reliable",
                "distribute costs fairly across groups",
                "stay within the approved budget",
                "protect long-term environmental health",
                "maintain public trust",
            ],
            roles: &["farmer cooperative", "household association", "industrial users", "environmental board", "finance office", "labor union", "regional regulator"],
        },
        DomainTag::PolicyProposal => DomainProfile {
            settings: &[
                "A mid-sized city is drafting a congestion pricing policy for its downtown core.",
                "A state agency is designing a rental assistance program under a fixed appropriation.",
                "A county is proposing new zoning rules to increase housing supply near transit.",
            ],
            objectives: &[
                "reduce harm to low-income residents",
                "achieve measurable policy outcomes within two years",
                "remain legally defensible",
                "limit administrative overhead",
                "win broad public support",
            ],
            roles: &["city council", "tenant advocates", "small business owners", "transit agency", "legal counsel", "budget office", "neighborhood groups"],
        },
        DomainTag::ProductRoadmap => DomainProfile {
            settings: &[
                "A software company must choose next year's roadmap for its accounting product.",
                "A medical device startup is prioritizing features ahead of its next funding round.",
                "A consumer app team is balancing growth features against platform stability.",
            ],
            objectives: &[
                "grow retained revenue",
                "reduce technical debt",
                "ship within the current headcount",
                "meet compliance requirements",
                "improve customer satisfaction",
            ],
            roles: &["engineering lead", "sales director", "key customers", "compliance officer", "support team", "investors", "design lead"],
        },
        DomainTag::CampaignPlan => DomainProfile {
            settings: &[
                "A public health department is planning a vaccination awareness campaign.",
                "A nonprofit is launching a fundraising campaign for flood recovery.",
                "A transit agency wants to increase ridership after a service overhaul.",
            ],
            objectives: &[
                "reach underserved audiences",
                "stay within the media budget",
                "measure campaign impact credibly",
                "avoid messaging backlash",
                "coordinate with community partners",
            ],
            roles: &["communications team", "community leaders", "donors", "field volunteers", "program evaluators", "local media", "partner organizations"],
        },
        DomainTag::InfrastructureSiting => DomainProfile {
            settings: &[
                "A utility must site a new electrical substation in a growing suburb.",
                "A county needs a location for a regional recycling facility.",
                "A rail authority is choosing a route for a new commuter line.",
            ],
            objectives: &[
                "minimize disruption to residents",
                "meet engineering and safety standards",
                "control construction and land costs",
                "comply with environmental review",
                "deliver on schedule",
            ],
            roles: &["nearby residents", "utility engineers", "environmental regulators", "landowners", "county planners", "construction contractors", "emergency services"],
        },
        DomainTag::ClinicalDecisionMaking => DomainProfile {
            settings: &[
                "A hospital is deciding how to allocate scarce ICU beds during a seasonal surge.",
                "A clinic network is choosing a care pathway for patients with early-stage diabetes.",
                "A health system is planning how to roll out remote monitoring for heart failure patients.",
            ],
            objectives: &[
                "improve patient outcomes",
                "respect patient autonomy and consent",
                "control per-patient costs",
                "reduce clinician workload",
                "ensure equitable access to care",
            ],
            roles: &["attending physicians", "nursing staff", "patient advocates", "hospital administration", "insurers", "ethics committee", "pharmacy team"],
        },
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Generates `count` scenarios round-robin across the six domain tags, each
/// with 3–7 stakeholders, seeded weights and attached synthetic utilities.
///
/// Stakeholders alternate between agreeing with and opposing a shared
/// scenario-level preference direction, so every scenario has built-in
/// conflict.
pub fn make_benchmark_scenarios(count: usize, seed: u64) -> Vec<Scenario> {
    (0..count)
        .map(|i| {
            let domain = DomainTag::ALL[i % DomainTag::ALL.len()];
            let ordinal = i / DomainTag::ALL.len() + 1;
            let id = format!("{}-{ordinal:02}", domain.slug());
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["scenario", &id]));
            let profile = domain_profile(domain);

            let context = (*profile.settings.choose(&mut rng).expect("settings")).to_owned();
            let n_obj = rng.gen_range(2..=4);
            let objectives: Vec<String> = profile
                .objectives
                .choose_multiple(&mut rng, n_obj)
                .map(|s| (*s).to_owned())
                .collect();

            let m = rng.gen_range(MIN_STAKEHOLDERS..=MAX_STAKEHOLDERS);
            let roles: Vec<&str> = profile.roles.choose_multiple(&mut rng, m).copied().collect();
            let stakeholders: Vec<Stakeholder> = roles
                .iter()
                .enumerate()
                .map(|(j, role)| Stakeholder {
                    id: format!("sh{}", j + 1),
                    persona: format!("Represents the {role}; cares most about how the plan affects them."),
                    influence_weight: round3(rng.gen_range(0.5..2.0)),
                })
                .collect();

            let direction: Vec<f64> = FEATURE_VOCABULARY
                .iter()
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let synthetic: Vec<SyntheticUtility> = stakeholders
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let mut u = SyntheticUtility::new(&s.id);
                    for (f, d) in FEATURE_VOCABULARY.iter().zip(&direction) {
                        let own: f64 = rng.gen_range(-1.0..1.0);
                        u.features.insert((*f).to_owned(), round3(0.6 * sign * d + 0.4 * own));
                    }
                    u.length_preference = -round3(rng.gen_range(0.0..0.04));
                    u
                })
                .collect();

            let budget = ComputeBudget {
                target_tokens: rng.gen_range(35..=55),
                lambda: round3(rng.gen_range(0.3..0.8)),
            };
            Scenario::new(id, domain, context, objectives, stakeholders, budget, synthetic)
                .expect("generated scenarios are valid")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Lineage, Tokenizer};

    fn strat(id: &str, text: &str) -> Strategy {
        Strategy::new(id.into(), text, &Tokenizer::default(), Lineage::seed(), 0)
    }

    #[test]
    fn empty_text_and_no_length_preference_is_zero() {
        let u = SyntheticUtility::new("s").with_feature("open-data", 3.0);
        assert_eq!(utility(&u, &strat("a", "")), 0.0);
    }

    #[test]
    fn single_feature_contributes_its_weight() {
        let u = SyntheticUtility::new("s")
            .with_feature("pilot-program", 2.0)
            .with_feature("budget-cap", -5.0);
        assert_eq!(utility(&u, &strat("a", "Start with a pilot-program, then expand.")), 2.0);
    }

    #[test]
    fn identical_texts_score_identically() {
        let u = SyntheticUtility::derived("s", 9);
        let text = "phased-rollout with open-data and a budget-cap";
        assert_eq!(utility(&u, &strat("a", text)), utility(&u, &strat("b", text)));
    }

    #[test]
    fn jitter_is_seeded_and_bounded() {
        let mut u = SyntheticUtility::new("s");
        u.jitter = 0.1;
        u.jitter_seed = 4;
        let a = utility(&u, &strat("a", "x"));
        assert_eq!(a, utility(&u, &strat("a", "x")));
        assert!(a.abs() <= 0.1);
    }

    #[test]
    fn ranks_by_descending_utility() {
        let u = SyntheticUtility::new("s")
            .with_feature("open-data", 3.0)
            .with_feature("budget-cap", 1.0)
            .with_feature("pilot-program", 2.0);
        let pop = [
            strat("a", "open-data"),
            strat("b", "budget-cap"),
            strat("c", "pilot-program"),
        ];
        let r = rank_by_utility(&u, &pop);
        let order: Vec<&str> = r.ranking.iter().map(|s| s.as_str()).collect();
        assert_eq!(order, ["a", "c", "b"]);
    }

    #[test]
    fn equal_utilities_rank_in_id_order() {
        let u = SyntheticUtility::new("s");
        let pop = [strat("c", "x"), strat("a", "y"), strat("b", "z")];
        let order: Vec<String> = rank_by_utility(&u, &pop)
            .ranking
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(order, ["a", "b", "c"]);
    }

    #[test]
    fn reversing_weights_reverses_distinct_utilities() {
        let u = SyntheticUtility::new("s")
            .with_feature("open-data", 3.0)
            .with_feature("budget-cap", 1.0)
            .with_feature("pilot-program", 2.0);
        let pop = [
            strat("a", "open-data"),
            strat("b", "budget-cap"),
            strat("c", "pilot-program"),
        ];
        let mut fwd = rank_by_utility(&u, &pop).ranking;
        let back = rank_by_utility(&u.reversed(), &pop).ranking;
        fwd.reverse();
        assert_eq!(fwd, back);
    }

    #[test]
    fn shortest_text_wins_under_brevity_preference() {
        let u = SyntheticUtility::new("s").with_length_preference(-1.0);
        let pop = [
            strat("a", "one two three four"),
            strat("b", "one"),
            strat("c", "one two"),
        ];
        let order: Vec<String> = rank_by_utility(&u, &pop)
            .ranking
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(order, ["b", "c", "a"]);
    }

    #[test]
    fn benchmark_scenarios_round_robin_domains() {
        let sc = make_benchmark_scenarios(30, 7);
        for d in DomainTag::ALL {
            assert_eq!(sc.iter().filter(|s| s.domain == d).count(), 5);
        }
        let six = make_benchmark_scenarios(6, 7);
        let domains: BTreeSet<_> = six.iter().map(|s| s.domain).collect();
        assert_eq!(domains.len(), 6);
        for s in &sc {
            assert!((MIN_STAKEHOLDERS..=MAX_STAKEHOLDERS).contains(&s.stakeholders.len()));
            assert_eq!(s.synthetic.len(), s.stakeholders.len());
            assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn benchmark_scenarios_are_byte_deterministic() {
        let a: Vec<String> = make_benchmark_scenarios(12, 3).iter().map(|s| s.to_toml()).collect();
        let b: Vec<String> = make_benchmark_scenarios(12, 3).iter().map(|s| s.to_toml()).collect();
        assert_eq!(a, b);
        let c: Vec<String> = make_benchmark_scenarios(12, 4).iter().map(|s| s.to_toml()).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_block_round_trips_through_scenario_file() {
        let sc = make_benchmark_scenarios(1, 11).remove(0);
        let back = crate::model::load_scenario(&sc.to_toml()).unwrap();
        assert_eq!(back.synthetic, sc.synthetic);
    }
}
