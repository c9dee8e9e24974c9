//! One generation against a live OpenAI-compatible endpoint.
//!
//! LARK_API_KEY=... LARK_BASE_URL=https://host/v1 LARK_MODEL=name \
//!     cargo run --example live_provider
//!
//! Set LARK_CACHE_DIR to replay responses from disk on later runs.

use lark::evolution::{run_with_provider, EvolutionConfig, ProviderChoice};
use lark::generators::{EndpointConfig, OpenAiCompatible, API_KEY_ENV};
use lark::sim::make_benchmark_scenarios;

fn main() -> lark::Result<()> {
    let (Ok(base_url), Ok(model)) = (std::env::var("LARK_BASE_URL"), std::env::var("LARK_MODEL")) else {
        println!("set LARK_BASE_URL, LARK_MODEL and {API_KEY_ENV} to run against a live endpoint");
        return Ok(());
    };
    let endpoint = EndpointConfig { base_url, model, timeout_secs: 120 };
    let provider = OpenAiCompatible::from_env(endpoint.clone())
        .map_err(|e| lark::LarkError::validation(e.to_string()))?;

    let mut scenario = make_benchmark_scenarios(1, 0).remove(0);
    // Live stakeholders rank from their personas, not from synthetic utilities.
    scenario.synthetic.clear();
    let config = EvolutionConfig {
        population_size: 4,
        generations: 1,
        provider: ProviderChoice::Live(endpoint),
        ..Default::default()
    };
    let trace = run_with_provider(&scenario, &config, &provider, &mut |_| Ok(()))?;
    println!("status {:?}", trace.summary.status);
    println!("usage {:?}", trace.summary.usage);
    if let Some(best) = trace.consensus() {
        println!("consensus {}:\n{}", best.id, best.text);
    }
    Ok(())
}
