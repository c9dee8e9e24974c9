//! Stakeholder preference aggregation.
//!
//! Each stakeholder submits an ordinal ranking of the pool. Influence-weighted
//! Borda scoring gives strategy `x` the points `Σ_j w_j · (k − rank_j(x))`;
//! the consensus strategy is the argmax, ties broken towards fewer tokens and
//! then the lexicographically smaller id. Dispersion of the score vector is
//! summarized by its coefficient of variation.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{LarkError, Result};
use crate::model::{Measure, RankingProfile, RepairEvent, Strategy, StrategyId};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BordaResult {
    /// Scores aligned with the pool order passed in.
    pub scores: Vec<f64>,
    pub consensus_id: StrategyId,
    pub cv: Measure,
}

/// Orders `(score, tokens, id)` triples best-first: higher score, then fewer
/// tokens, then smaller id.
pub fn tie_break(a: (f64, u64, &StrategyId), b: (f64, u64, &StrategyId)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(a.1.cmp(&b.1))
        .then_with(|| a.2.cmp(b.2))
}

/// Influence-weighted Borda scores over `pool` (`k = pool.len()`).
///
/// `weights[j]` belongs to `profiles[j]` and the weights must sum to one.
pub fn borda_scores(
    profiles: &[RankingProfile],
    weights: &[f64],
    pool: &[Strategy],
) -> Result<BordaResult> {
    if weights.len() != profiles.len() {
        return Err(LarkError::validation(format!(
            "{} weights supplied for {} ranking profiles",
            weights.len(),
            profiles.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(LarkError::validation("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(LarkError::validation(format!(
            "weights must be normalized, sum is {total}"
        )));
    }
    positional_scores(profiles, weights, pool)
}

/// Unweighted mean of positional points across stakeholders, ignoring
/// influence weights.
pub fn average_scores(profiles: &[RankingProfile], pool: &[Strategy]) -> Result<BordaResult> {
    if profiles.is_empty() {
        return Err(LarkError::validation("no ranking profiles supplied"));
    }
    let uniform = vec![1.0 / profiles.len() as f64; profiles.len()];
    positional_scores(profiles, &uniform, pool)
}

fn positional_scores(
    profiles: &[RankingProfile],
    weights: &[f64],
    pool: &[Strategy],
) -> Result<BordaResult> {
    let k = pool.len();
    if k == 0 {
        return Err(LarkError::validation("cannot score an empty pool (k = 0)"));
    }
    if profiles.is_empty() {
        return Err(LarkError::validation("no ranking profiles supplied"));
    }
    let index: HashMap<&StrategyId, usize> =
        pool.iter().enumerate().map(|(i, s)| (&s.id, i)).collect();
    if index.len() != k {
        return Err(LarkError::validation("pool contains duplicate ids"));
    }

    let mut scores = vec![0.0; k];
    for (profile, &w) in profiles.iter().zip(weights) {
        if profile.ranking.len() != k {
            return Err(mismatch(profile));
        }
        let mut seen = vec![false; k];
        for (pos, id) in profile.ranking.iter().enumerate() {
            let &i = index.get(id).ok_or_else(|| mismatch(profile))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(mismatch(profile));
            }
            scores[i] += w * (k - (pos + 1)) as f64;
        }
    }

    let consensus = (0..k)
        .min_by(|&a, &b| {
            tie_break(
                (scores[a], pool[a].token_count, &pool[a].id),
                (scores[b], pool[b].token_count, &pool[b].id),
            )
        })
        .expect("k > 0");
    let cv = consensus_cv(&scores)?;
    Ok(BordaResult {
        consensus_id: pool[consensus].id.clone(),
        scores,
        cv,
    })
}

fn mismatch(profile: &RankingProfile) -> LarkError {
    LarkError::validation(format!(
        "ranking from stakeholder {} does not cover the pool ids exactly once",
        profile.stakeholder_id
    ))
}

/// Population standard deviation (divisor `k`) over the mean. A zero mean
/// yields [`Measure::Undefined`].
pub fn consensus_cv(scores: &[f64]) -> Result<Measure> {
    if scores.is_empty() {
        return Err(LarkError::validation("consensus CV of an empty score vector"));
    }
    let k = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / k;
    if mean == 0.0 {
        log::warn!("consensus CV undefined: mean Borda score is zero");
        return Ok(Measure::Undefined);
    }
    let var = scores.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / k;
    Ok(Measure::Defined(var.sqrt() / mean))
}

/// Turns a possibly malformed ranking into a permutation of `pool`: unknown
/// ids are dropped, the first occurrence of each id is kept, and missing ids
/// are appended in pool order. Returns the repair event when anything changed.
pub fn repair_ranking(
    stakeholder_id: &str,
    raw: &[String],
    pool: &[StrategyId],
) -> (Vec<StrategyId>, Option<RepairEvent>) {
    let members: HashSet<&str> = pool.iter().map(|p| p.as_str()).collect();
    let mut seen = HashSet::new();
    let mut ranking: Vec<StrategyId> = Vec::with_capacity(pool.len());
    for r in raw {
        let r = r.as_str();
        if members.contains(r) && seen.insert(r) {
            ranking.push(StrategyId::new(r));
        }
    }
    for id in pool {
        if seen.insert(id.as_str()) {
            ranking.push(id.clone());
        }
    }
    let intact = raw.len() == pool.len() && raw.iter().zip(&ranking).all(|(a, b)| a == b.as_str());
    let event = (!intact).then(|| {
        log::info!("repaired ranking from stakeholder {stakeholder_id}: {raw:?} -> {ranking:?}");
        RepairEvent {
            stakeholder_id: stakeholder_id.to_owned(),
            raw: raw.to_vec(),
            repaired: ranking.clone(),
        }
    });
    (ranking, event)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Lineage, Tokenizer};

    fn pool(ids: &[&str]) -> Vec<Strategy> {
        let t = Tokenizer::default();
        ids.iter()
            .map(|id| Strategy::new((*id).into(), "same length", &t, Lineage::seed(), 0))
            .collect()
    }

    fn profile(who: &str, order: &[&str]) -> RankingProfile {
        RankingProfile {
            stakeholder_id: who.into(),
            ranking: order.iter().map(|&s| s.into()).collect(),
        }
    }

    #[test]
    fn single_voter_two_candidates() {
        let r = borda_scores(&[profile("s", &["x1", "x2"])], &[1.0], &pool(&["x1", "x2"])).unwrap();
        assert_eq!(r.scores, vec![1.0, 0.0]);
        assert_eq!(r.consensus_id.as_str(), "x1");
    }

    #[test]
    fn two_equal_voters_split_the_top() {
        let p = pool(&["a", "b", "c"]);
        let profiles = [profile("1", &["a", "b", "c"]), profile("2", &["b", "a", "c"])];
        let r = borda_scores(&profiles, &[0.5, 0.5], &p).unwrap();
        assert_eq!(r.scores, vec![1.5, 1.5, 0.0]);
        // tie on score and tokens: smaller id wins
        assert_eq!(r.consensus_id.as_str(), "a");
    }

    #[test]
    fn identical_rankings_collapse_to_single_voter() {
        let p = pool(&["a", "b", "c", "d"]);
        let order = ["c", "a", "d", "b"];
        let profiles: Vec<_> = (0..3).map(|j| profile(&j.to_string(), &order)).collect();
        let r = borda_scores(&profiles, &[0.2, 0.3, 0.5], &p).unwrap();
        // a=2, b=0, c=3, d=1
        for (got, want) in r.scores.iter().zip([2.0, 0.0, 3.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn tie_break_prefers_fewer_tokens() {
        let t = Tokenizer::default();
        let p = vec![
            Strategy::new("a".into(), "one two three", &t, Lineage::seed(), 0),
            Strategy::new("b".into(), "one", &t, Lineage::seed(), 0),
        ];
        let profiles = [profile("1", &["a", "b"]), profile("2", &["b", "a"])];
        let r = borda_scores(&profiles, &[0.5, 0.5], &p).unwrap();
        assert_eq!(r.consensus_id.as_str(), "b");
    }

    #[test]
    fn mismatched_ids_and_empty_pool_are_rejected() {
        let p = pool(&["a", "b"]);
        assert!(borda_scores(&[profile("1", &["a", "z"])], &[1.0], &p).is_err());
        assert!(borda_scores(&[profile("1", &["a", "a"])], &[1.0], &p).is_err());
        assert!(borda_scores(&[profile("1", &["a"])], &[1.0], &p).is_err());
        assert!(borda_scores(&[profile("1", &[])], &[1.0], &[]).is_err());
        assert!(borda_scores(&[profile("1", &["a", "b"])], &[0.7], &p).is_err());
    }

    #[test]
    fn cv_examples() {
        assert_eq!(consensus_cv(&[5.0, 5.0, 5.0]).unwrap(), Measure::Defined(0.0));
        assert_eq!(consensus_cv(&[1.0, 3.0]).unwrap(), Measure::Defined(0.5));
        assert_eq!(consensus_cv(&[0.0, 0.0]).unwrap(), Measure::Undefined);
        assert!(consensus_cv(&[]).is_err());
    }

    #[test]
    fn averaging_matches_borda_at_equal_weights() {
        let p = pool(&["a", "b", "c"]);
        let profiles = [profile("1", &["a", "b", "c"]), profile("2", &["b", "a", "c"])];
        let avg = average_scores(&profiles, &p).unwrap();
        assert_eq!(avg.scores, vec![1.5, 1.5, 0.0]);
    }

    #[test]
    fn averaging_ignores_skewed_weights() {
        let p = pool(&["a", "b", "c"]);
        let profiles = [profile("1", &["a", "b", "c"]), profile("2", &["c", "b", "a"])];
        let borda = borda_scores(&profiles, &[0.9, 0.1], &p).unwrap();
        let avg = average_scores(&profiles, &p).unwrap();
        assert!((borda.scores[0] - 1.8).abs() < 1e-12);
        assert!((borda.scores[2] - 0.2).abs() < 1e-12);
        assert_eq!(avg.scores, vec![1.0, 1.0, 1.0]);
        assert_eq!(borda.consensus_id.as_str(), "a");
        assert_ne!(borda.scores, avg.scores);
    }

    #[test]
    fn averaging_single_stakeholder_equals_borda() {
        let p = pool(&["a", "b", "c"]);
        let profiles = [profile("1", &["b", "c", "a"])];
        assert_eq!(
            average_scores(&profiles, &p).unwrap(),
            borda_scores(&profiles, &[1.0], &p).unwrap()
        );
    }

    #[test]
    fn repair_keeps_first_occurrence_and_appends_missing() {
        let pool_ids: Vec<StrategyId> = ["a", "b", "c"].into_iter().map(Into::into).collect();
        let raw: Vec<String> = ["a", "a", "c"].into_iter().map(String::from).collect();
        let (fixed, event) = repair_ranking("s", &raw, &pool_ids);
        let fixed: Vec<&str> = fixed.iter().map(|s| s.as_str()).collect();
        assert_eq!(fixed, ["a", "c", "b"]);
        assert!(event.is_some());

        let raw: Vec<String> = ["c", "a", "b"].into_iter().map(String::from).collect();
        let (_, event) = repair_ranking("s", &raw, &pool_ids);
        assert!(event.is_none());

        let raw: Vec<String> = ["zz", "b"].into_iter().map(String::from).collect();
        let (fixed, event) = repair_ranking("s", &raw, &pool_ids);
        assert_eq!(fixed.iter().map(|s| s.as_str()).collect::<Vec<_>>(), ["b", "a", "c"]);
        assert!(event.is_some());
    }
}
