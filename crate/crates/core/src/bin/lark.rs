use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use lark::evolution::{self, EvolutionConfig, Variant};
use lark::harness::{self, report, BenchLayout, BenchmarkConfig, JudgeConfig};
use lark::model::{load_scenario_dir, load_scenario_file, Tokenizer};
use lark::sim::make_benchmark_scenarios;
use lark::stats::{compare_family, ScoreMatrix};
use lark::trace::{replay, RunTrace, TraceWriter};
use lark::util::write_atomic;
use lark::{LarkError, Result};

#[derive(Parser)]
#[command(name = "lark", version, about = "Compute-aware evolutionary strategy search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic benchmark scenarios as TOML files.
    GenScenarios {
        #[arg(long, default_value_t = 30)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the evolutionary loop on one scenario and stream its trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Evolution config (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full system and all four ablations on every scenario.
    Ablate {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Judge system outputs for one scenario under blinding.
    Judge {
        #[arg(long)]
        scenario: PathBuf,
        /// `name=path`; a `.jsonl` path is read as a trace and its consensus is judged.
        #[arg(long = "output", required = true, value_parser = parse_output)]
        outputs: Vec<(String, PathBuf)>,
        /// Judge config (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run, judge and tabulate a roster over a scenario set.
    Bench {
        #[arg(long)]
        scenarios: PathBuf,
        /// Benchmark config (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "Lark Full")]
        reference: String,
    },
    /// Paired tests of a reference system against every other column of a score matrix.
    Stats {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value = "Lark Full")]
        reference: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render report tables for a benchmark directory, or from hand-entered overall rows.
    Report {
        #[arg(long, conflicts_with = "overall_csv")]
        bench: Option<PathBuf>,
        #[arg(long, default_value = "Lark Full")]
        reference: String,
        /// CSV of `system,rank,rank_lo,rank_hi,score,score_lo,score_hi,cost`.
        #[arg(long)]
        overall_csv: Option<PathBuf>,
    },
    /// Recompute every derived field of a trace and report differences.
    Replay { trace: PathBuf },
}

fn parse_output(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or("expected name=path")?;
    if name.is_empty() || path.is_empty() {
        return Err("expected name=path".into());
    }
    Ok((name.to_owned(), PathBuf::from(path)))
}

fn load_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| LarkError::io(p, e))?;
            toml::from_str(&text).map_err(|e| LarkError::parse(p.display().to_string(), e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// `Ok(false)` means the command ran but some item failed.
fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::GenScenarios { count, seed, out } => {
            for sc in make_benchmark_scenarios(count, seed) {
                write_atomic(&out.join(format!("{}.toml", sc.id)), sc.to_toml())?;
            }
            println!("wrote {count} scenarios to {}", out.display());
            Ok(true)
        }
        Command::Run {
            scenario,
            config,
            seed,
            variant,
            out,
        } => {
            let sc = load_scenario_file(&scenario)?;
            let mut cfg: EvolutionConfig = load_toml(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(v) = variant {
                cfg = cfg.with_variant(v);
            }
            cfg.validate()?;
            let provider = cfg.provider.build(Tokenizer::new(cfg.tokenizer))?;
            let mut w = TraceWriter::create(&out)?;
            let trace = evolution::run_with_provider(&sc, &cfg, provider.as_ref(), &mut |l| w.write_line(l))?;
            let consensus = trace.consensus().map(|s| s.id.to_string()).unwrap_or_default();
            println!(
                "{}: {} generations, consensus {consensus}, cost {:.6}",
                sc.id,
                trace.generations.len(),
                trace.summary.usage.cost
            );
            if !trace.summary.status.is_completed() {
                eprintln!("run aborted: {:?}", trace.summary.status);
            }
            Ok(trace.summary.status.is_completed())
        }
        Command::Ablate {
            scenarios,
            config,
            seed,
            out,
        } => {
            let scs = load_scenario_dir(&scenarios)?;
            let mut cfg: EvolutionConfig = load_toml(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let provider = cfg.provider.build(Tokenizer::new(cfg.tokenizer))?;
            let runs = evolution::run_ablation_suite(&scs, &cfg, provider.as_ref(), 4);
            let mut ok = true;
            for r in runs {
                let path = out.join(&r.scenario_id).join(format!("{}.jsonl", r.variant.slug()));
                match r.outcome {
                    Ok(t) => {
                        t.write(&path)?;
                        let done = t.summary.status.is_completed();
                        ok &= done;
                        println!("{} {} {}", r.scenario_id, r.variant, if done { "ok" } else { "aborted" });
                    }
                    Err(e) => {
                        ok = false;
                        println!("{} {} failed: {e}", r.scenario_id, r.variant);
                    }
                }
            }
            Ok(ok)
        }
        Command::Judge {
            scenario,
            outputs,
            config,
            out,
        } => {
            let sc = load_scenario_file(&scenario)?;
            let cfg: JudgeConfig = load_toml(config.as_deref())?;
            let mut texts = Vec::new();
            for (name, path) in outputs {
                let text = if path.extension().is_some_and(|e| e == "jsonl") {
                    let t = RunTrace::read(&path)?;
                    t.consensus()
                        .map(|s| s.text.clone())
                        .ok_or_else(|| LarkError::validation(format!("{}: empty final population", path.display())))?
                } else {
                    std::fs::read_to_string(&path).map_err(|e| LarkError::io(&path, e))?
                };
                texts.push((name, text.trim().to_owned()));
            }
            let judged = harness::judge_outputs(&sc, &texts, &cfg)?;
            let layout = BenchLayout::new(&out);
            write_atomic(
                &layout.evaluation_path(&sc.id),
                serde_json::to_string(&judged.record)? + "\n",
            )?;
            let mut lines = String::new();
            for p in &judged.payloads {
                lines.push_str(&serde_json::to_string(p)?);
                lines.push('\n');
            }
            write_atomic(&layout.payload_path(&sc.id), lines)?;
            for name in &judged.record.ranking {
                let c = judged.record.composite[name];
                println!("{name}\t{}", c.map(|x| format!("{x:.1}")).unwrap_or_else(|| "invalid".into()));
            }
            Ok(judged.record.composite.values().all(Option::is_some))
        }
        Command::Bench {
            scenarios,
            config,
            out,
            reference,
        } => {
            let scs = load_scenario_dir(&scenarios)?;
            let cfg: BenchmarkConfig = load_toml(config.as_deref())?;
            let layout = BenchLayout::new(&out);
            let result = harness::run_benchmark(&scs, &cfg, Some(&layout))?;
            for f in &result.failures {
                eprintln!("missing: {f}");
            }
            let rep = harness::write_report(&layout, &reference)?;
            print!("{}", harness::render_report(&rep));
            Ok(result.failures.is_empty())
        }
        Command::Stats {
            scores,
            reference,
            out,
        } => {
            let m = ScoreMatrix::read(&scores)?;
            let reference_row = m
                .row(&reference)
                .ok_or_else(|| LarkError::validation(format!("no column {reference:?}")))?
                .to_vec();
            let comps: Vec<(String, Vec<Option<f64>>)> = m
                .systems
                .iter()
                .zip(&m.scores)
                .filter(|(n, _)| **n != reference)
                .map(|(n, s)| (n.clone(), s.clone()))
                .collect();
            let results = compare_family(&reference_row, &comps)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["comparator", "delta_mean", "d_z", "w", "p_raw", "p_holm", "n_pairs", "n_effective"])?;
            for r in &results {
                w.write_record([
                    r.comparator.clone(),
                    r.delta_mean.to_string(),
                    r.d_z.value().map(|x| x.to_string()).unwrap_or_else(|| "undefined".into()),
                    r.wilcoxon.statistic.to_string(),
                    r.p_raw.to_string(),
                    r.p_holm.to_string(),
                    r.n_pairs.to_string(),
                    r.n_effective.to_string(),
                ])?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| LarkError::validation(format!("csv buffer: {e}")))?;
            match out {
                Some(p) => write_atomic(&p, bytes)?,
                None => print!("{}", String::from_utf8_lossy(&bytes)),
            }
            Ok(true)
        }
        Command::Report {
            bench,
            reference,
            overall_csv,
        } => {
            if let Some(p) = overall_csv {
                let text = std::fs::read_to_string(&p).map_err(|e| LarkError::io(&p, e))?;
                print!("{}", report::render_overall(&report::overall_rows_from_csv(&text)?));
                return Ok(true);
            }
            let dir = bench.ok_or_else(|| LarkError::validation("pass --bench DIR or --overall-csv FILE"))?;
            let rep = harness::write_report(&BenchLayout::new(dir), &reference)?;
            print!("{}", harness::render_report(&rep));
            Ok(true)
        }
        Command::Replay { trace } => {
            let t = RunTrace::read(&trace)?;
            let r = replay(&t);
            for m in &r.mismatches {
                println!("{m}");
            }
            println!("{} checks, {} mismatches", r.checked, r.mismatches.len());
            Ok(r.is_clean())
        }
    }
}
