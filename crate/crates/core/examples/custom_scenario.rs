//! A hand-written scenario file with synthetic stakeholders, run with a
//! custom config and streamed to disk.

use lark::evolution::{run_with_provider, EvolutionConfig, TemperatureMode};
use lark::generators::MockProvider;
use lark::model::{load_scenario, Tokenizer, TokenizerMode};
use lark::trace::TraceWriter;

const SCENARIO: &str = r#"
version = 1
id = "library-hours"
domain = "policy-proposal"
context = "A town library must cut opening hours by a fifth without losing its core users."
objectives = ["keep access for students", "protect staff jobs", "stay within budget"]

[budget]
target_tokens = 40
lambda = 0.5

[[stakeholders]]
id = "students"
persona = "Secondary-school students who study there in the evenings."
weight = 2.0

[[stakeholders]]
id = "staff"
persona = "Library employees worried about reduced shifts."
weight = 1.0

[[stakeholders]]
id = "council"
persona = "Town council finance committee."
weight = 1.5

[[synthetic.utilities]]
stakeholder_id = "students"
length_preference = -0.01
features = { extended-hours = 1.0, digital-access = 0.6, job-guarantee = -0.2 }

[[synthetic.utilities]]
stakeholder_id = "staff"
length_preference = 0.0
features = { job-guarantee = 1.0, retraining = 0.7, extended-hours = -0.3 }

[[synthetic.utilities]]
stakeholder_id = "council"
length_preference = -0.03
features = { cost-sharing = 1.0, independent-audit = 0.5, extended-hours = -0.4 }
"#;

fn main() -> lark::Result<()> {
    let scenario = load_scenario(SCENARIO)?;
    println!("normalized weights {:?}", scenario.weights());
    let config = EvolutionConfig {
        population_size: 5,
        generations: 4,
        temperature: TemperatureMode::Constant(0.5),
        tokenizer: TokenizerMode::CharsDiv4,
        seed: 21,
        ..Default::default()
    };
    let path = std::env::temp_dir().join("lark-library-hours.jsonl");
    let mut w = TraceWriter::create(&path)?;
    let trace = run_with_provider(&scenario, &config, &MockProvider::new(Tokenizer::new(config.tokenizer)), &mut |l| w.write_line(l))?;
    println!("efficiency by generation {:?}", trace.summary.efficiency_trajectory);
    if let Some(best) = trace.consensus() {
        println!("consensus ({} tokens): {}", best.token_count, best.text);
    }
    println!("trace at {}", path.display());
    Ok(())
}
