//! Runs the evolutionary loop offline on a generated scenario and prints
//! what happened each generation.
//!
//! cargo run --example evolve_mock -- [seed]

use lark::evolution::{run, EvolutionConfig};
use lark::model::Origin;
use lark::sim::make_benchmark_scenarios;

fn main() -> lark::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let scenario = make_benchmark_scenarios(6, seed).remove(2);
    let config = EvolutionConfig { seed, ..Default::default() };

    println!("{} ({} stakeholders, target {} tokens, lambda {})",
        scenario.id, scenario.stakeholders.len(), scenario.budget.target_tokens, scenario.budget.lambda);
    let trace = run(&scenario, &config)?;

    for g in &trace.generations {
        let edited = g.plasticity.iter().filter(|e| e.child.is_some()).count();
        println!(
            "gen {}  p_plast {:.3}  edited {edited}  duplicated {}  best R {:.3}  E {:.4}  consensus {}  cv {:.3}",
            g.generation,
            g.plasticity_probability,
            g.matured.len(),
            g.best_adjusted(),
            g.efficiency,
            g.consensus_id,
            g.consensus_cv.value().unwrap_or(f64::NAN),
        );
    }

    let best = trace.consensus().expect("non-empty population");
    println!("\nfinal consensus {} ({} tokens, born in generation {})", best.id, best.token_count, best.generation_born);
    println!("{}", best.text);
    let matured = trace.all_strategies().filter(|s| s.lineage.origin == Origin::DuplicationMaturation).count();
    println!("\n{matured} matured strategies over the run, {} provider calls", trace.summary.usage.requests);
    Ok(())
}
