//! Full offline benchmark: five variants on generated scenarios, blinded
//! mock judging, then the three summary tables.
//!
//! cargo run --release --example benchmark_report -- [out-dir] [scenario-count]

use std::path::PathBuf;

use lark::generators::{ModelPrice, PriceTable, MOCK_MODEL};
use lark::harness::{run_benchmark, write_report, BenchLayout, BenchmarkConfig};
use lark::sim::make_benchmark_scenarios;

fn main() -> lark::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lark-bench"));
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);

    // Made-up prices so the cost column has something in it.
    let prices = PriceTable::default().with_model(
        MOCK_MODEL,
        ModelPrice { input_per_million: 0.5, output_per_million: 1.5 },
    );
    let mut config = BenchmarkConfig::default();
    config.evolution.prices = prices.clone();
    config.judge.prices = prices;

    let scenarios = make_benchmark_scenarios(count, 7);
    let layout = BenchLayout::new(&out);
    let result = run_benchmark(&scenarios, &config, Some(&layout))?;
    for f in &result.failures {
        eprintln!("missing: {f}");
    }
    let report = write_report(&layout, "Lark Full")?;
    print!("{}", lark::harness::render_report(&report));
    println!("\nartifacts in {}", out.display());
    Ok(())
}
