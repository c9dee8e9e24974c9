//! Summary tables: overall quality/rank/cost, ablation deltas, and pairwise
//! tests against a reference system.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bench::TrajectoryRow;
use crate::error::{LarkError, Result};
use crate::evolution::Variant;
use crate::model::Measure;
use crate::stats::{compare_family, mean_ci, paired, MeanCi, ScoreMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallRow {
    pub system: String,
    pub rank: MeanCi,
    pub score: MeanCi,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub system: String,
    /// Reference score minus variant score.
    pub delta_score: MeanCi,
    /// Variant rank minus reference rank.
    pub delta_rank: MeanCi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub comparator: String,
    pub delta_mean: f64,
    pub d_z: Measure,
    pub p_raw: f64,
    pub p_holm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub reference: String,
    pub rounds: usize,
    pub overall: Vec<OverallRow>,
    pub ablations: Vec<AblationRow>,
    pub pairwise: Vec<PairwiseRow>,
}

fn present(v: &[Option<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

/// Builds all three tables from per-round scores and costs.
pub fn build_report(scores: &ScoreMatrix, costs: &ScoreMatrix, reference: &str) -> Result<Report> {
    let ref_idx = scores
        .system_index(reference)
        .ok_or_else(|| LarkError::validation(format!("reference system {reference:?} not in score matrix")))?;
    let ranks = scores.ranks();

    let mut overall = Vec::new();
    for (s, name) in scores.systems.iter().enumerate() {
        let sc = present(&scores.scores[s]);
        if sc.is_empty() {
            log::warn!("{name}: no scored rounds, left out of the overall table");
            continue;
        }
        let cost_cells = costs.row(name).map(present).unwrap_or_default();
        let cost = if cost_cells.is_empty() {
            0.0
        } else {
            cost_cells.iter().sum::<f64>() / cost_cells.len() as f64
        };
        overall.push(OverallRow {
            system: name.clone(),
            rank: mean_ci(&present(&ranks[s]))?,
            score: mean_ci(&sc)?,
            cost,
        });
    }
    overall.sort_by(|a, b| b.score.mean.total_cmp(&a.score.mean).then_with(|| a.system.cmp(&b.system)));

    let is_ablation = |name: &str| matches!(name.parse::<Variant>(), Ok(v) if v != Variant::Full);
    let mut ablations = Vec::new();
    for (s, name) in scores.systems.iter().enumerate() {
        if s == ref_idx || !is_ablation(name) {
            continue;
        }
        let ds: Vec<f64> = paired(&scores.scores[ref_idx], &scores.scores[s])
            .iter()
            .map(|(r, v)| r - v)
            .collect();
        let dr: Vec<f64> = paired(&ranks[ref_idx], &ranks[s]).iter().map(|(r, v)| v - r).collect();
        if ds.is_empty() {
            continue;
        }
        ablations.push(AblationRow {
            system: name.clone(),
            delta_score: mean_ci(&ds)?,
            delta_rank: mean_ci(&dr)?,
        });
    }

    // Ablations first, then every other comparator in roster order.
    let mut order: Vec<usize> = (0..scores.systems.len()).filter(|&s| s != ref_idx).collect();
    order.sort_by_key(|&s| !is_ablation(&scores.systems[s]));
    let comparators: Vec<(String, Vec<Option<f64>>)> = order
        .iter()
        .filter(|&&s| !paired(&scores.scores[ref_idx], &scores.scores[s]).is_empty())
        .map(|&s| (scores.systems[s].clone(), scores.scores[s].clone()))
        .collect();
    let pairwise = if comparators.is_empty() {
        Vec::new()
    } else {
        compare_family(&scores.scores[ref_idx], &comparators)?
            .into_iter()
            .map(|t| PairwiseRow {
                comparator: t.comparator,
                delta_mean: t.delta_mean,
                d_z: t.d_z,
                p_raw: t.p_raw,
                p_holm: t.p_holm,
            })
            .collect()
    };

    Ok(Report {
        reference: reference.to_owned(),
        rounds: scores.rounds.len(),
        overall,
        ablations,
        pairwise,
    })
}

/// `value [lo, hi]`, or `value [n/a]` when the interval is undefined.
pub fn fmt_ci(ci: &MeanCi, value_decimals: usize, ci_decimals: usize) -> String {
    match ci.interval {
        Some((lo, hi)) => format!(
            "{:.vd$} [{:.cd$}, {:.cd$}]",
            ci.mean,
            lo,
            hi,
            vd = value_decimals,
            cd = ci_decimals
        ),
        None => format!("{:.vd$} [n/a]", ci.mean, vd = value_decimals),
    }
}

/// Three decimals, or two-digit-exponent scientific notation below 0.001.
pub fn fmt_p(p: f64) -> String {
    if p >= 0.001 || p == 0.0 {
        return format!("{p:.3}");
    }
    let s = format!("{p:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

pub fn fmt_measure(m: Measure, decimals: usize) -> String {
    match m {
        Measure::Defined(x) => format!("{x:.decimals$}"),
        Measure::Undefined => "undefined".into(),
    }
}

/// Left-aligned first column, remaining columns left-aligned with two spaces between.
fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == cols {
                s.push_str(c);
            } else {
                let _ = write!(s, "{c:<w$}  ", w = widths[i]);
            }
        }
        s.trim_end().to_owned() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn render_overall(rows: &[OverallRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.system.clone(),
                fmt_ci(&r.rank, 2, 2),
                fmt_ci(&r.score, 1, 2),
                format!("{:.6}", r.cost),
            ]
        })
        .collect();
    render_table(
        &["Model", "Mean Rank [95% CI]", "Mean Score /50 [95% CI]", "Avg. Cost ($/task)"],
        &body,
    )
}

pub fn render_ablations(rows: &[AblationRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.system.clone(), fmt_ci(&r.delta_score, 1, 2), fmt_ci(&r.delta_rank, 2, 2)])
        .collect();
    render_table(&["Variant", "dScore (/50) [95% CI]", "dRank (pos.) [95% CI]"], &body)
}

pub fn render_pairwise(rows: &[PairwiseRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.comparator.clone(),
                format!("{:.1}", r.delta_mean),
                fmt_measure(r.d_z, 2),
                fmt_p(r.p_raw),
                fmt_p(r.p_holm),
            ]
        })
        .collect();
    render_table(&["Comparator", "dMean (/50)", "d_z", "Wilcoxon p", "Holm p"], &body)
}

pub fn render_report(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Overall quality, rank and cost ({} rounds)\n", report.rounds);
    out.push_str(&render_overall(&report.overall));
    let _ = writeln!(out, "\nAblation deltas vs. {}\n", report.reference);
    out.push_str(&render_ablations(&report.ablations));
    let _ = writeln!(out, "\n{} vs. comparators\n", report.reference);
    out.push_str(&render_pairwise(&report.pairwise));
    out
}

/// Hand-entered overall rows: `system,rank,rank_lo,rank_hi,score,score_lo,score_hi,cost`.
pub fn overall_rows_from_csv(text: &str) -> Result<Vec<OverallRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| LarkError::parse(format!("overall row column {i}"), "expected a number"))
        };
        rows.push(OverallRow {
            system: rec.get(0).unwrap_or("").trim().to_owned(),
            rank: MeanCi {
                mean: num(1)?,
                interval: Some((num(2)?, num(3)?)),
            },
            score: MeanCi {
                mean: num(4)?,
                interval: Some((num(5)?, num(6)?)),
            },
            cost: num(7)?,
        });
    }
    Ok(rows)
}

/// `scenario,system,generation,efficiency`, one line per generation.
pub fn efficiency_csv(rows: &[TrajectoryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "system", "generation", "efficiency"])?;
    for r in rows {
        for (t, e) in r.efficiency.iter().enumerate() {
            w.write_record([r.scenario_id.as_str(), r.system.as_str(), &(t + 1).to_string(), &e.to_string()])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| LarkError::validation(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
