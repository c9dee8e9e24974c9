//! Blinded two-judge scoring of three system outputs.

use lark::harness::{judge_outputs, JudgeConfig};
use lark::sim::make_benchmark_scenarios;

fn main() -> lark::Result<()> {
    let scenario = make_benchmark_scenarios(1, 3).remove(0);
    let outputs = vec![
        ("system-north".to_owned(), "Start a pilot-program with open-data reporting. Expand after review.".to_owned()),
        ("system-south".to_owned(), "Do what the largest group wants.".to_owned()),
        ("system-east".to_owned(), "Use phased-rollout and cost-sharing; add an independent-audit. Publish results.".to_owned()),
    ];
    let judged = judge_outputs(&scenario, &outputs, &JudgeConfig::default())?;
    let rec = &judged.record;

    println!("blinding map (persisted in the record only):");
    for (anon, name) in &rec.blinding {
        println!("  {anon} -> {name}");
    }
    for v in &rec.verdicts {
        println!("{} saw {:?}", v.judge, v.presentation_order);
    }
    println!("aggregated ({}):", rec.aggregation);
    for name in &rec.ranking {
        println!("  {name:<13} composite {:?}  judge borda {:.2}", rec.composite[name], rec.judge_borda[name]);
    }

    let leaks = judged
        .payloads
        .iter()
        .filter(|p| outputs.iter().any(|(n, _)| p.user_prompt.contains(n.as_str()) || p.system_prompt.contains(n.as_str())))
        .count();
    println!("{} judge payloads, {leaks} mention a system name", judged.payloads.len());
    Ok(())
}
