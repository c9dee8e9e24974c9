//! Writes a trace, reads it back, audits it, then edits one score and
//! audits again.

use lark::evolution::{run_with_provider, EvolutionConfig};
use lark::generators::MockProvider;
use lark::sim::make_benchmark_scenarios;
use lark::trace::{replay, RunTrace, TraceWriter};

fn main() -> lark::Result<()> {
    let scenario = make_benchmark_scenarios(2, 4).remove(1);
    let config = EvolutionConfig { seed: 4, ..Default::default() };
    let path = std::env::temp_dir().join("lark-replay-audit.jsonl");

    let mut writer = TraceWriter::create(&path)?;
    let written = run_with_provider(&scenario, &config, &MockProvider::default(), &mut |l| writer.write_line(l))?;
    let trace = RunTrace::read(&path)?;
    println!("{} lines, hash {}", 2 + trace.generations.len(), written.hash()?);

    let clean = replay(&trace);
    println!("clean trace: {} checks, {} mismatches", clean.checked, clean.mismatches.len());

    let mut edited = trace.clone();
    edited.generations[2].fitness[0].borda += 0.1;
    for m in replay(&edited).mismatches {
        println!("edited trace: {m}");
    }
    Ok(())
}
