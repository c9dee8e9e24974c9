use proptest::prelude::*;

use lark::aggregation::{borda_scores, consensus_cv, repair_ranking, tie_break};
use lark::fitness::{adaptive_temperature, compute_adjusted, duplication_probabilities, efficiency};
use lark::model::{normalize_weights, Lineage, RankingProfile, Strategy as Plan, StrategyId, Tokenizer};
use lark::stats::{cohens_dz, holm_adjust, wilcoxon_signed_rank};

fn pool(k: usize) -> Vec<Plan> {
    let tok = Tokenizer::default();
    (0..k)
        .map(|i| Plan::new(StrategyId::new(format!("s{i:02}")), format!("option {i}"), &tok, Lineage::seed(), 0))
        .collect()
}

/// `m` stakeholders, each a permutation of `k` strategies, plus raw weights.
fn electorate() -> impl Strategy<Value = (usize, Vec<Vec<usize>>, Vec<f64>)> {
    (2usize..8, 1usize..7).prop_flat_map(|(k, m)| {
        let perm = Just((0..k).collect::<Vec<_>>()).prop_shuffle();
        (Just(k), proptest::collection::vec(perm, m), proptest::collection::vec(0.01f64..10.0, m))
    })
}

fn profiles(pool: &[Plan], orders: &[Vec<usize>]) -> Vec<RankingProfile> {
    orders
        .iter()
        .enumerate()
        .map(|(j, o)| RankingProfile {
            stakeholder_id: format!("sh{j}"),
            ranking: o.iter().map(|&i| pool[i].id.clone()).collect(),
        })
        .collect()
}

proptest! {
    #[test]
    fn borda_sums_to_pairs_count((k, orders, raw) in electorate()) {
        let p = pool(k);
        let w = normalize_weights(&raw).unwrap();
        let r = borda_scores(&profiles(&p, &orders), &w, &p).unwrap();
        let total: f64 = r.scores.iter().sum();
        let expected = (k * (k - 1)) as f64 / 2.0;
        prop_assert!((total - expected).abs() < 1e-9);
        prop_assert!(r.scores.iter().all(|b| *b >= 0.0 && *b <= (k - 1) as f64 + 1e-12));
    }

    #[test]
    fn consensus_is_the_tie_broken_maximum((k, orders, raw) in electorate()) {
        let p = pool(k);
        let w = normalize_weights(&raw).unwrap();
        let r = borda_scores(&profiles(&p, &orders), &w, &p).unwrap();
        let best = (0..k)
            .min_by(|&a, &b| tie_break((r.scores[a], p[a].token_count, &p[a].id), (r.scores[b], p[b].token_count, &p[b].id)))
            .unwrap();
        prop_assert_eq!(&r.consensus_id, &p[best].id);
        if let Some(cv) = consensus_cv(&r.scores).unwrap().value() {
            prop_assert!(cv >= 0.0);
        }
    }

    #[test]
    fn unanimous_electorate_puts_its_top_first(k in 2usize..8, m in 1usize..6, top in 0usize..8) {
        let top = top % k;
        let p = pool(k);
        let mut order: Vec<usize> = (0..k).filter(|&i| i != top).collect();
        order.insert(0, top);
        let orders = vec![order; m];
        let w = vec![1.0 / m as f64; m];
        let r = borda_scores(&profiles(&p, &orders), &w, &p).unwrap();
        prop_assert!((r.scores[top] - (k - 1) as f64).abs() < 1e-9);
        prop_assert_eq!(&r.consensus_id, &p[top].id);
    }

    #[test]
    fn repaired_ranking_is_a_permutation(raw in proptest::collection::vec("s0[0-9]|zz|", 0..12), k in 1usize..8) {
        let p = pool(k);
        let ids: Vec<StrategyId> = p.iter().map(|s| s.id.clone()).collect();
        let (fixed, _) = repair_ranking("sh", &raw, &ids);
        let mut sorted = fixed.clone();
        sorted.sort();
        let mut expected = ids.clone();
        expected.sort();
        prop_assert_eq!(sorted, expected);
    }

    #[test]
    fn penalty_never_rewards_more_tokens(b in 0.0f64..20.0, t1 in 0u64..1000, t2 in 0u64..1000, target in 1u64..500, lambda in 0.0f64..=1.0) {
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let r_lo = compute_adjusted(b, lo, target, lambda).unwrap().value;
        let r_hi = compute_adjusted(b, hi, target, lambda).unwrap().value;
        prop_assert!(r_hi <= r_lo + 1e-12);
        prop_assert!(r_lo >= 0.0 && r_lo <= b + 1e-12);
        if lo <= target {
            prop_assert_eq!(r_lo, b);
        }
    }

    #[test]
    fn duplication_probabilities_are_ordered_and_open(r in proptest::collection::vec(0.0f64..10.0, 1..12)) {
        let tau = adaptive_temperature(&r);
        let p = duplication_probabilities(&r, tau).unwrap();
        for i in 0..r.len() {
            prop_assert!(p[i] > 0.0 && p[i] < 1.0);
            for j in 0..r.len() {
                if r[i] > r[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn efficiency_skips_zero_token_members(b in proptest::collection::vec(0.0f64..10.0, 1..10), t in proptest::collection::vec(0u64..50, 1..10)) {
        let n = b.len().min(t.len());
        let (b, t) = (&b[..n], &t[..n]);
        match efficiency(b, t) {
            Ok(e) => {
                let kept: Vec<f64> = (0..n).filter(|&i| t[i] > 0).map(|i| b[i] / t[i] as f64).collect();
                let want = if kept.is_empty() { 0.0 } else { kept.iter().sum::<f64>() / kept.len() as f64 };
                prop_assert!((e.value - want).abs() <= 1e-12 * want.abs().max(1.0));
                prop_assert_eq!(e.excluded.len(), n - kept.len());
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn normalize_is_idempotent(raw in proptest::collection::vec(0.01f64..100.0, 1..9)) {
        let once = normalize_weights(&raw).unwrap();
        let twice = normalize_weights(&once).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!((once.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn holm_commutes_with_permutation(p in proptest::collection::vec(0.0f64..=1.0, 1..10).prop_shuffle(), seed in any::<u64>()) {
        let adj = holm_adjust(&p).unwrap();
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.rotate_left((seed as usize) % p.len());
        let permuted: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
        let adj_perm = holm_adjust(&permuted).unwrap();
        for (pos, &i) in idx.iter().enumerate() {
            prop_assert!((adj_perm[pos] - adj[i]).abs() < 1e-15);
        }
        for (a, raw) in adj.iter().zip(&p) {
            prop_assert!(*a >= *raw && *a <= 1.0);
        }
    }

    #[test]
    fn signed_rank_sums_cover_all_ranks(d in proptest::collection::vec(-5i32..=5, 1..30)) {
        let d: Vec<f64> = d.into_iter().map(f64::from).collect();
        let w = wilcoxon_signed_rank(&d).unwrap();
        let n = w.n_effective as f64;
        prop_assert!((w.w_plus + w.w_minus - n * (n + 1.0) / 2.0).abs() < 1e-9);
        prop_assert!(w.p_value >= 0.0 && w.p_value <= 1.0);
    }

    #[test]
    fn effect_size_follows_mean_sign(d in proptest::collection::vec(-10.0f64..10.0, 2..20)) {
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        if let Some(dz) = cohens_dz(&d).value() {
            if mean.abs() > 1e-9 {
                prop_assert_eq!(dz > 0.0, mean > 0.0);
            }
        }
    }
}
