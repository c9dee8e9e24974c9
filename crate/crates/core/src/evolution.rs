//! The generational loop.
//!
//! Each generation runs, in order: plasticity on the current population,
//! stakeholder ranking, scoring (weighted Borda or plain averaging), the
//! token penalty, duplication probabilities, duplication sampling,
//! maturation of duplicates, a supplementary ranking over parents plus
//! duplicates, top-k survivor selection, and efficiency tracking. Four
//! ablation flags switch individual mechanisms off.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{average_scores, borda_scores, tie_break, BordaResult};
use crate::error::{LarkError, Result};
use crate::fitness::{
    adaptive_temperature, compute_adjusted_for, duplication_probabilities, efficiency,
    FitnessRecord,
};
use crate::generators::prompts::template_stamps;
use crate::generators::{
    EndpointConfig, GeneratorSettings, Generators, MockProvider, OpenAiCompatible, PriceTable,
    Provider, SubgroupHint,
};
use crate::model::{
    CallRecord, ComputeBudget, DuplicationEvent, GenerationRecord, IdAllocator, PlasticityEvent,
    RankingProfile, RepairEvent, Scenario, ScoringMethod, Strategy, StrategyId, Tokenizer,
    TokenizerMode, UnionScoring, UsageTotals,
};
use crate::trace::{RunStatus, RunTrace, TraceHeader, TraceLine, TraceSummary, TRACE_SCHEMA_VERSION};
use crate::util::{derive_seed, parallel_map};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationFlags {
    pub plasticity_off: bool,
    pub rcv_off: bool,
    pub dup_mat_off: bool,
    pub penalty_off: bool,
}

impl AblationFlags {
    pub fn all() -> Self {
        AblationFlags {
            plasticity_off: true,
            rcv_off: true,
            dup_mat_off: true,
            penalty_off: true,
        }
    }
}

/// The full system and its four single-mechanism ablations. Serialized by
/// slug, the same spelling the CLI accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "lark-full")]
    Full,
    #[serde(rename = "lark-no-plasticity")]
    NoPlasticity,
    #[serde(rename = "lark-no-rcv")]
    NoRankedChoiceVoting,
    #[serde(rename = "lark-no-dup-mat")]
    NoDuplicationMaturation,
    #[serde(rename = "lark-no-penalty")]
    NoPenalty,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoPlasticity,
        Variant::NoRankedChoiceVoting,
        Variant::NoDuplicationMaturation,
        Variant::NoPenalty,
    ];

    pub fn flags(self) -> AblationFlags {
        let mut f = AblationFlags::default();
        match self {
            Variant::Full => {}
            Variant::NoPlasticity => f.plasticity_off = true,
            Variant::NoRankedChoiceVoting => f.rcv_off = true,
            Variant::NoDuplicationMaturation => f.dup_mat_off = true,
            Variant::NoPenalty => f.penalty_off = true,
        }
        f
    }

    /// Machine name used in files and rosters.
    pub fn slug(self) -> &'static str {
        match self {
            Variant::Full => "lark-full",
            Variant::NoPlasticity => "lark-no-plasticity",
            Variant::NoRankedChoiceVoting => "lark-no-rcv",
            Variant::NoDuplicationMaturation => "lark-no-dup-mat",
            Variant::NoPenalty => "lark-no-penalty",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Full => "Lark Full",
            Variant::NoPlasticity => "Lark NoPlasticity",
            Variant::NoRankedChoiceVoting => "Lark NoRankedChoiceVoting",
            Variant::NoDuplicationMaturation => "Lark NoMutationAndNoDuplication",
            Variant::NoPenalty => "Lark NoPenalty",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Variant {
    type Err = LarkError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.slug() == s || v.display_name() == s)
            .ok_or_else(|| LarkError::validation(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum TemperatureMode {
    /// A quarter of the fitness range, recomputed every generation.
    #[default]
    Adaptive,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ProviderChoice {
    #[default]
    Mock,
    Live(EndpointConfig),
}

impl ProviderChoice {
    pub fn build(&self, tokenizer: Tokenizer) -> Result<Box<dyn Provider>> {
        match self {
            ProviderChoice::Mock => Ok(Box::new(MockProvider::new(tokenizer))),
            ProviderChoice::Live(endpoint) => OpenAiCompatible::from_env(endpoint.clone())
                .map(|p| Box::new(p) as Box<dyn Provider>)
                .map_err(|e| LarkError::validation(format!("live provider: {e}"))),
        }
    }

    pub fn is_mock(&self) -> bool {
        matches!(self, ProviderChoice::Mock)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    /// Population size `k`.
    pub population_size: usize,
    /// Number of generations `G`.
    pub generations: u32,
    /// Initial plasticity probability.
    pub plasticity_probability: f64,
    /// Per-generation decay factor applied to the plasticity probability.
    pub plasticity_decay: f64,
    pub temperature: TemperatureMode,
    /// Overrides the scenario's token target and penalty coefficient.
    pub budget: Option<ComputeBudget>,
    pub ablation: AblationFlags,
    pub seed: u64,
    pub tokenizer: TokenizerMode,
    pub provider: ProviderChoice,
    pub prices: PriceTable,
    pub generator: GeneratorSettings,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 6,
            generations: 5,
            plasticity_probability: 0.6,
            plasticity_decay: 0.8,
            temperature: TemperatureMode::Adaptive,
            budget: None,
            ablation: AblationFlags::default(),
            seed: 0,
            tokenizer: TokenizerMode::Whitespace,
            provider: ProviderChoice::Mock,
            prices: PriceTable::default(),
            generator: GeneratorSettings::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(LarkError::validation("population_size must be >= 1"));
        }
        if self.generations == 0 {
            return Err(LarkError::validation("generations must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.plasticity_probability) {
            return Err(LarkError::validation("plasticity_probability must lie in [0, 1]"));
        }
        if !(self.plasticity_decay > 0.0 && self.plasticity_decay <= 1.0) {
            return Err(LarkError::validation("plasticity_decay must lie in (0, 1]"));
        }
        if let TemperatureMode::Constant(t) = self.temperature {
            if !(t > 0.0) {
                return Err(LarkError::validation("constant temperature must be > 0"));
            }
        }
        if let Some(b) = &self.budget {
            b.validate()?;
        }
        Ok(())
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.ablation = variant.flags();
        self
    }

    pub fn effective_budget(&self, scenario: &Scenario) -> ComputeBudget {
        self.budget.unwrap_or(scenario.budget)
    }

    /// Plasticity probability at generation `t ≥ 1`.
    pub fn plasticity_at(&self, t: u32) -> f64 {
        self.plasticity_probability * self.plasticity_decay.powi(t as i32 - 1)
    }
}

/// Picks the `k` best candidates by adjusted fitness, ties broken towards
/// fewer tokens and then smaller id. Output is ordered best first.
pub fn select_survivors(candidates: &[(Strategy, f64)], k: usize) -> Result<Vec<Strategy>> {
    if candidates.len() < k {
        return Err(LarkError::validation(format!(
            "need at least {k} candidates for survivor selection, got {}",
            candidates.len()
        )));
    }
    let mut order: Vec<&(Strategy, f64)> = candidates.iter().collect();
    order.sort_by(|a, b| {
        tie_break(
            (a.1, a.0.token_count, &a.0.id),
            (b.1, b.0.token_count, &b.0.id),
        )
    });
    Ok(order.into_iter().take(k).map(|(s, _)| s.clone()).collect())
}

/// Independent Bernoulli(p_dup) draw per member, in population order.
pub fn sample_duplications<R: Rng + ?Sized>(fitness: &[FitnessRecord], rng: &mut R) -> Vec<StrategyId> {
    fitness
        .iter()
        .filter(|f| rng.gen::<f64>() < f.p_dup)
        .map(|f| f.strategy_id.clone())
        .collect()
}

/// Scores `pool` with the rule selected by the ablation flags.
pub fn score_pool(
    profiles: &[RankingProfile],
    weights: &[f64],
    pool: &[Strategy],
    rcv_off: bool,
) -> Result<(ScoringMethod, BordaResult)> {
    if rcv_off {
        Ok((ScoringMethod::SimpleAverage, average_scores(profiles, pool)?))
    } else {
        Ok((ScoringMethod::WeightedBorda, borda_scores(profiles, weights, pool)?))
    }
}

/// Token-penalized fitness for each pool member; identity when the penalty is off.
pub fn adjust_scores(
    scores: &[f64],
    pool: &[Strategy],
    budget: &ComputeBudget,
    penalty_off: bool,
) -> Result<Vec<(f64, bool, bool)>> {
    scores
        .iter()
        .zip(pool)
        .map(|(&b, s)| {
            if penalty_off {
                Ok((b, s.token_count > budget.target_tokens, false))
            } else {
                let a = compute_adjusted_for(b, s.token_count, budget)?;
                Ok((a.value, a.penalized, a.clamped))
            }
        })
        .collect()
}

/// Runs the loop with the provider named in `config`.
pub fn run(scenario: &Scenario, config: &EvolutionConfig) -> Result<RunTrace> {
    config.validate()?;
    let provider = config.provider.build(Tokenizer::new(config.tokenizer))?;
    run_with_provider(scenario, config, provider.as_ref(), &mut |_| Ok(()))
}

/// Runs the loop against `provider`, handing each trace line to `sink` as
/// soon as it is complete. Provider failures end the run early with an
/// aborted status; only invalid configuration is returned as an error.
pub fn run_with_provider(
    scenario: &Scenario,
    config: &EvolutionConfig,
    provider: &dyn Provider,
    sink: &mut dyn FnMut(&TraceLine) -> Result<()>,
) -> Result<RunTrace> {
    config.validate()?;
    let tokenizer = Tokenizer::new(config.tokenizer);
    let gens = Generators::new(provider, tokenizer, config.prices.clone(), config.generator.clone());
    let budget = config.effective_budget(scenario);
    let k = config.population_size;
    let timed = !config.provider.is_mock();
    let mut ids = IdAllocator::new();

    let mut header = TraceHeader {
        schema: "lark-trace".into(),
        schema_version: TRACE_SCHEMA_VERSION,
        scenario: scenario.clone(),
        config: config.clone(),
        model: provider.model().to_owned(),
        prompt_templates: template_stamps(),
        initial_population: Vec::new(),
        initial_calls: Vec::new(),
    };
    let mut generations: Vec<GenerationRecord> = Vec::new();

    let seeds = gens.sample_seeds(scenario, k, config.seed, &mut ids);
    let mut population = match seeds {
        Ok((s, calls)) => {
            header.initial_population = s.clone();
            header.initial_calls = calls;
            s
        }
        Err(e) => {
            sink(&TraceLine::Config(header.clone()))?;
            let summary = summarize(&header, &generations, RunStatus::aborted(0, &e));
            sink(&TraceLine::Summary(summary.clone()))?;
            return Ok(RunTrace {
                header,
                generations,
                summary,
            });
        }
    };
    sink(&TraceLine::Config(header.clone()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &["loop"]));
    let mut status = RunStatus::Completed;
    for t in 1..=config.generations {
        match step(scenario, config, &gens, &budget, &mut ids, &mut rng, population.clone(), t, timed) {
            Ok(record) => {
                population = record
                    .survivors
                    .iter()
                    .map(|id| record.strategy(id).cloned().expect("survivor in pool"))
                    .collect();
                sink(&TraceLine::Generation(record.clone()))?;
                generations.push(record);
            }
            Err(e @ LarkError::Provider { .. }) => {
                log::error!("generation {t} aborted: {e}");
                status = RunStatus::aborted(t, &e);
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let summary = summarize(&header, &generations, status);
    sink(&TraceLine::Summary(summary.clone()))?;
    Ok(RunTrace {
        header,
        generations,
        summary,
    })
}

fn split_ranked(ranked: Vec<crate::generators::Ranked>) -> (Vec<RankingProfile>, Vec<RepairEvent>, Vec<CallRecord>) {
    let mut profiles = Vec::with_capacity(ranked.len());
    let mut repairs = Vec::new();
    let mut calls = Vec::with_capacity(ranked.len());
    for r in ranked {
        profiles.push(r.profile);
        repairs.extend(r.repair);
        calls.push(r.call);
    }
    (profiles, repairs, calls)
}

#[allow(clippy::too_many_arguments)]
fn step(
    scenario: &Scenario,
    config: &EvolutionConfig,
    gens: &Generators<'_>,
    budget: &ComputeBudget,
    ids: &mut IdAllocator,
    rng: &mut ChaCha8Rng,
    mut population: Vec<Strategy>,
    t: u32,
    timed: bool,
) -> Result<GenerationRecord> {
    let started = Instant::now();
    let flags = config.ablation;
    let k = config.population_size;
    let weights = scenario.weights();
    let parallelism = config.generator.parallelism;
    let mut calls: Vec<CallRecord> = Vec::new();

    // Plasticity: Bernoulli(p_plast · γ^(t−1)) per member, replacing in place.
    let p_plast = config.plasticity_at(t);
    let mut plasticity = Vec::new();
    if !flags.plasticity_off {
        let chosen: Vec<(usize, StrategyId)> = (0..population.len())
            .filter(|_| rng.gen::<f64>() < p_plast)
            .map(|i| (i, ids.next_id(t)))
            .collect();
        let refined = parallel_map(parallelism, &chosen, |(i, id)| {
            gens.plasticity(&population[*i], scenario, id.clone(), t, config.seed)
        });
        for ((i, _), r) in chosen.iter().zip(refined) {
            calls.push(r.call);
            let parent = population[*i].id.clone();
            match r.strategy {
                Some(s) => {
                    plasticity.push(PlasticityEvent {
                        parent,
                        child: Some(s.id.clone()),
                    });
                    population[*i] = s;
                }
                None => plasticity.push(PlasticityEvent {
                    parent,
                    child: None,
                }),
            }
        }
    }
    let evaluated = population;

    // Stakeholder ranking and scoring.
    let (profiles, repairs, rank_calls) = split_ranked(gens.rank_all(scenario, &evaluated, config.seed)?);
    calls.extend(rank_calls);
    let (scoring, scored) = score_pool(&profiles, &weights, &evaluated, flags.rcv_off)?;
    let adjusted = adjust_scores(&scored.scores, &evaluated, budget, flags.penalty_off)?;
    let r_values: Vec<f64> = adjusted.iter().map(|a| a.0).collect();
    let temperature = match config.temperature {
        TemperatureMode::Adaptive => adaptive_temperature(&r_values),
        TemperatureMode::Constant(tau) => tau,
    };
    let p_dup = duplication_probabilities(&r_values, temperature)?;
    let fitness: Vec<FitnessRecord> = evaluated
        .iter()
        .enumerate()
        .map(|(i, s)| FitnessRecord {
            strategy_id: s.id.clone(),
            borda: scored.scores[i],
            adjusted: adjusted[i].0,
            token_count: s.token_count,
            p_dup: p_dup[i],
            penalized: adjusted[i].1,
            clamped: adjusted[i].2,
        })
        .collect();
    let tokens: Vec<u64> = evaluated.iter().map(|s| s.token_count).collect();
    let eff = efficiency(&scored.scores, &tokens)?.value;

    // Duplication and maturation.
    let mut duplications = Vec::new();
    let mut matured: Vec<Strategy> = Vec::new();
    if !flags.dup_mat_off {
        let parents = sample_duplications(&fitness, rng);
        let jobs: Vec<(usize, SubgroupHint, StrategyId)> = parents
            .iter()
            .map(|pid| {
                let i = evaluated.iter().position(|s| &s.id == pid).expect("parent in population");
                let sh = &scenario.stakeholders[rng.gen_range(0..scenario.stakeholders.len())];
                (i, SubgroupHint::Stakeholder(sh.id.clone()), ids.next_id(t))
            })
            .collect();
        let results = parallel_map(parallelism, &jobs, |(i, hint, id)| {
            gens.maturation(&evaluated[*i], scenario, hint, id.clone(), t, config.seed)
        });
        for ((i, hint, _), r) in jobs.into_iter().zip(results) {
            calls.push(r.call);
            duplications.push(DuplicationEvent {
                parent: evaluated[i].id.clone(),
                child: r.strategy.as_ref().map(|s| s.id.clone()),
                hint,
            });
            matured.extend(r.strategy);
        }
    }

    // Survivor selection over parents ∪ matured duplicates.
    let (union, survivors) = if matured.is_empty() {
        let cands: Vec<(Strategy, f64)> = evaluated.iter().cloned().zip(r_values.iter().copied()).collect();
        (None, select_survivors(&cands, k)?)
    } else {
        let pool: Vec<Strategy> = evaluated.iter().chain(&matured).cloned().collect();
        let (u_profiles, u_repairs, u_calls) = split_ranked(gens.rank_all(scenario, &pool, config.seed)?);
        calls.extend(u_calls);
        let (_, u_scored) = score_pool(&u_profiles, &weights, &pool, flags.rcv_off)?;
        let u_adjusted: Vec<f64> = adjust_scores(&u_scored.scores, &pool, budget, flags.penalty_off)?
            .into_iter()
            .map(|a| a.0)
            .collect();
        let cands: Vec<(Strategy, f64)> = pool.iter().cloned().zip(u_adjusted.iter().copied()).collect();
        let survivors = select_survivors(&cands, k)?;
        (
            Some(UnionScoring {
                pool: pool.iter().map(|s| s.id.clone()).collect(),
                profiles: u_profiles,
                repairs: u_repairs,
                borda: u_scored.scores,
                adjusted: u_adjusted,
            }),
            survivors,
        )
    };

    let usage = UsageTotals::from_calls(&calls);
    Ok(GenerationRecord {
        generation: t,
        evaluated,
        plasticity,
        plasticity_probability: if flags.plasticity_off { 0.0 } else { p_plast },
        scoring,
        profiles,
        repairs,
        fitness,
        temperature,
        consensus_id: scored.consensus_id,
        consensus_cv: scored.cv,
        efficiency: eff,
        duplications,
        matured,
        union,
        survivors: survivors.iter().map(|s| s.id.clone()).collect(),
        calls,
        usage,
        duration_ms: if timed {
            started.elapsed().as_millis() as u64
        } else {
            0
        },
    })
}

fn summarize(header: &TraceHeader, generations: &[GenerationRecord], status: RunStatus) -> TraceSummary {
    let final_population = match generations.last() {
        Some(last) => last
            .survivors
            .iter()
            .map(|id| last.strategy(id).cloned().expect("survivor in pool"))
            .collect(),
        None => header.initial_population.clone(),
    };
    let mut usage = UsageTotals::from_calls(&header.initial_calls);
    for g in generations {
        usage.merge(&g.usage);
    }
    TraceSummary {
        status,
        consensus: final_population.first().map(|s: &Strategy| s.id.clone()),
        final_population,
        efficiency_trajectory: generations.iter().map(|g| g.efficiency).collect(),
        usage,
    }
}

/// One cell of an ablation suite.
#[derive(Debug)]
pub struct AblationRun {
    pub scenario_id: String,
    pub variant: Variant,
    pub outcome: Result<RunTrace>,
}

/// Runs the full system and each single-flag ablation on every scenario with
/// identical seeds. Runs execute in parallel; a failing run only loses its
/// own cell.
pub fn run_ablation_suite(
    scenarios: &[Scenario],
    base: &EvolutionConfig,
    provider: &dyn Provider,
    parallel_runs: usize,
) -> Vec<AblationRun> {
    let cells: Vec<(&Scenario, Variant)> = scenarios
        .iter()
        .flat_map(|s| Variant::ALL.into_iter().map(move |v| (s, v)))
        .collect();
    parallel_map(parallel_runs, &cells, |(scenario, variant)| {
        let config = base.clone().with_variant(*variant);
        let outcome = run_with_provider(scenario, &config, provider, &mut |_| Ok(()));
        if let Err(e) = &outcome {
            log::error!("{} / {variant} failed: {e}", scenario.id);
        }
        AblationRun {
            scenario_id: scenario.id.clone(),
            variant: *variant,
            outcome,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Lineage, Origin};
    use crate::sim::make_benchmark_scenarios;

    fn cand(id: &str, words: usize, r: f64) -> (Strategy, f64) {
        let text = vec!["w"; words].join(" ");
        (
            Strategy::new(id.into(), text, &Tokenizer::default(), Lineage::seed(), 0),
            r,
        )
    }

    fn ids(v: &[Strategy]) -> Vec<&str> {
        v.iter().map(|s| s.id.as_str()).collect()
    }

    #[test]
    fn survivors_break_ties_by_tokens() {
        let c = [cand("a", 90, 5.0), cand("b", 80, 3.0), cand("c", 70, 3.0), cand("d", 60, 1.0)];
        assert_eq!(ids(&select_survivors(&c, 2).unwrap()), ["a", "c"]);
        assert_eq!(ids(&select_survivors(&c, 4).unwrap()), ["a", "c", "b", "d"]);
        let flat = [cand("a", 9, 1.0), cand("b", 3, 1.0), cand("c", 5, 1.0)];
        assert_eq!(ids(&select_survivors(&flat, 2).unwrap()), ["b", "c"]);
        assert!(select_survivors(&c, 5).is_err());
    }

    #[test]
    fn duplication_sampling_is_seeded() {
        let f: Vec<FitnessRecord> = (0..10)
            .map(|i| FitnessRecord {
                strategy_id: StrategyId::new(format!("s{i}")),
                borda: 0.0,
                adjusted: 0.0,
                token_count: 1,
                p_dup: 0.5,
                penalized: false,
                clamped: false,
            })
            .collect();
        let a = sample_duplications(&f, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_duplications(&f, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_is_rejected_before_any_call() {
        let sc = make_benchmark_scenarios(1, 0).remove(0);
        for bad in [
            EvolutionConfig { population_size: 0, ..Default::default() },
            EvolutionConfig { generations: 0, ..Default::default() },
            EvolutionConfig { plasticity_probability: 1.5, ..Default::default() },
            EvolutionConfig { plasticity_decay: 0.0, ..Default::default() },
            EvolutionConfig { temperature: TemperatureMode::Constant(0.0), ..Default::default() },
        ] {
            assert!(matches!(run(&sc, &bad), Err(LarkError::Validation(_))));
        }
    }

    #[test]
    fn plasticity_schedule_decays_geometrically() {
        let c = EvolutionConfig::default();
        assert_eq!(c.plasticity_at(1), 0.6);
        assert!((c.plasticity_at(3) - 0.6 * 0.64).abs() < 1e-15);
    }

    #[test]
    fn full_run_has_k_members_every_generation() {
        let sc = make_benchmark_scenarios(1, 5).remove(0);
        let trace = run(&sc, &EvolutionConfig { seed: 11, ..Default::default() }).unwrap();
        assert_eq!(trace.generations.len(), 5);
        for g in &trace.generations {
            assert_eq!(g.evaluated.len(), 6);
            assert_eq!(g.survivors.len(), 6);
            assert_eq!(g.fitness.len(), 6);
        }
        assert_eq!(trace.summary.efficiency_trajectory.len(), 5);
        assert!(trace.summary.status.is_completed());
    }

    #[test]
    fn flags_leave_their_signature() {
        let sc = make_benchmark_scenarios(1, 5).remove(0);
        let base = EvolutionConfig { seed: 2, ..Default::default() };
        let t = run(&sc, &base.clone().with_variant(Variant::NoDuplicationMaturation)).unwrap();
        assert!(t.all_strategies().all(|s| s.lineage.origin != Origin::DuplicationMaturation));
        let t = run(&sc, &base.clone().with_variant(Variant::NoPenalty)).unwrap();
        assert!(t.generations.iter().flat_map(|g| &g.fitness).all(|f| f.adjusted == f.borda));
        let t = run(&sc, &base.clone().with_variant(Variant::NoPlasticity)).unwrap();
        assert!(t.generations.iter().all(|g| g.plasticity.is_empty()));
        let t = run(&sc, &base.with_variant(Variant::NoRankedChoiceVoting)).unwrap();
        assert!(t.generations.iter().all(|g| g.scoring == ScoringMethod::SimpleAverage));
    }

    #[test]
    fn variant_names_parse() {
        for v in Variant::ALL {
            assert_eq!(v.slug().parse::<Variant>().unwrap(), v);
            assert_eq!(v.display_name().parse::<Variant>().unwrap(), v);
        }
        assert!("lark-bogus".parse::<Variant>().is_err());
    }
}
