//! Influence-weighted Borda against plain averaging on a skewed electorate.
//!
//! One heavy stakeholder prefers `a`; two light ones prefer `b`. Weighted
//! Borda follows the weight, averaging follows the head count.

use lark::aggregation::{average_scores, borda_scores, repair_ranking};
use lark::model::{Lineage, RankingProfile, Strategy, StrategyId, Tokenizer};

fn profile(who: &str, order: &[&str]) -> RankingProfile {
    RankingProfile {
        stakeholder_id: who.into(),
        ranking: order.iter().map(|s| StrategyId::from(*s)).collect(),
    }
}

fn main() -> lark::Result<()> {
    let tok = Tokenizer::default();
    let pool: Vec<Strategy> = [
        ("a", "Expand the bus network in phases."),
        ("b", "Cap fares and publish ridership data monthly."),
        ("c", "Commission a study."),
    ]
    .into_iter()
    .map(|(id, text)| Strategy::new(id.into(), text, &tok, Lineage::seed(), 0))
    .collect();

    let profiles = vec![
        profile("city", &["a", "b", "c"]),
        profile("riders", &["b", "c", "a"]),
        profile("unions", &["b", "a", "c"]),
    ];
    let weights = [0.8, 0.1, 0.1];

    let weighted = borda_scores(&profiles, &weights, &pool)?;
    let averaged = average_scores(&profiles, &pool)?;
    println!("weights {weights:?}");
    for (i, s) in pool.iter().enumerate() {
        println!("{}  borda {:.3}  average {:.3}", s.id, weighted.scores[i], averaged.scores[i]);
    }
    println!("weighted consensus {} (cv {:.3})", weighted.consensus_id, weighted.cv.value().unwrap_or(f64::NAN));
    println!("averaged consensus {} (cv {:.3})", averaged.consensus_id, averaged.cv.value().unwrap_or(f64::NAN));

    // A sloppy reply: a duplicate, an unknown id, a missing one.
    let raw: Vec<String> = ["b", "b", "zz", "a"].into_iter().map(String::from).collect();
    let ids: Vec<StrategyId> = pool.iter().map(|s| s.id.clone()).collect();
    let (fixed, event) = repair_ranking("riders", &raw, &ids);
    let fixed: Vec<&str> = fixed.iter().map(|s| s.as_str()).collect();
    println!("repaired {raw:?} -> {fixed:?} (logged: {})", event.is_some());
    Ok(())
}
