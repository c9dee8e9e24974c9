//! Paired comparison statistics over per-round scores.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{LarkError, Result};
use crate::model::Measure;
use crate::util::write_atomic;

/// Largest effective sample size tested by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PMethod {
    Exact,
    NormalApprox,
    /// Every difference was zero.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(w_plus, w_minus)`.
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: PMethod,
}

/// Non-zero differences with their average ranks by magnitude.
fn signed_ranks(d: &[f64]) -> Vec<(f64, f64)> {
    let mut nz: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i;
        while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for x in &nz[i..=j] {
            out.push((*x, rank));
        }
        i = j + 1;
    }
    out
}

fn rank_sums(ranked: &[(f64, f64)]) -> (f64, f64) {
    ranked.iter().fold((0.0, 0.0), |(p, m), (x, r)| {
        if *x > 0.0 {
            (p + r, m)
        } else {
            (p, m + r)
        }
    })
}

/// Exact two-sided p over all `2^n` sign assignments of the observed ranks.
///
/// Counts assignments by their positive rank sum (ranks doubled so tied
/// half-ranks stay integral), which enumerates the same set without
/// materializing it.
pub fn wilcoxon_exact_p(d: &[f64]) -> f64 {
    let ranked = signed_ranks(d);
    if ranked.is_empty() {
        return 1.0;
    }
    let doubled: Vec<usize> = ranked.iter().map(|(_, r)| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let (wp, wm) = rank_sums(&ranked);
    let w = (wp.min(wm) * 2.0).round() as usize;
    let tail: f64 = counts[..=w].iter().sum();
    let all = 2f64.powi(ranked.len() as i32);
    (2.0 * tail / all).min(1.0)
}

/// Normal approximation with tie and continuity corrections.
pub fn wilcoxon_normal_p(d: &[f64]) -> f64 {
    let ranked = signed_ranks(d);
    let n = ranked.len() as f64;
    if ranked.is_empty() {
        return 1.0;
    }
    let (wp, wm) = rank_sums(&ranked);
    let mean = n * (n + 1.0) / 4.0;
    let mut ties = 0.0;
    let mut i = 0;
    while i < ranked.len() {
        let j = ranked[i..].iter().take_while(|(_, r)| *r == ranked[i].1).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((wp.min(wm) - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

/// Two-sided signed-rank test. Zero differences are dropped; tied
/// magnitudes share average ranks.
pub fn wilcoxon_signed_rank(d: &[f64]) -> Result<Wilcoxon> {
    if d.is_empty() {
        return Err(LarkError::validation("wilcoxon needs at least one difference"));
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(LarkError::validation("differences must be finite"));
    }
    let ranked = signed_ranks(d);
    let (w_plus, w_minus) = rank_sums(&ranked);
    let n = ranked.len();
    let (p_value, method) = if n == 0 {
        (1.0, PMethod::Degenerate)
    } else if n <= EXACT_MAX_N {
        (wilcoxon_exact_p(d), PMethod::Exact)
    } else {
        (wilcoxon_normal_p(d), PMethod::NormalApprox)
    };
    Ok(Wilcoxon {
        w_plus,
        w_minus,
        statistic: w_plus.min(w_minus),
        p_value,
        n_effective: n,
        method,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// Paired effect size: mean difference over its sample standard deviation.
pub fn cohens_dz(d: &[f64]) -> Measure {
    if d.len() < 2 {
        return Measure::Undefined;
    }
    let sd = sample_sd(d);
    if sd == 0.0 || !sd.is_finite() {
        return Measure::Undefined;
    }
    Measure::Defined(mean(d) / sd)
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(LarkError::validation(format!("p value {bad} outside [0, 1]")));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut running = 0.0f64;
    for (i, &idx) in order.iter().enumerate() {
        running = running.max(p[idx] * (m - i) as f64).min(1.0);
        out[idx] = running;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    /// Absent below two observations.
    pub interval: Option<(f64, f64)>,
}

impl MeanCi {
    pub fn half_width(&self) -> Option<f64> {
        self.interval.map(|(lo, hi)| (hi - lo) / 2.0)
    }
}

/// Mean with a 95% normal-approximation interval.
pub fn mean_ci(values: &[f64]) -> Result<MeanCi> {
    if values.is_empty() {
        return Err(LarkError::validation("mean_ci needs at least one value"));
    }
    let m = mean(values);
    let interval = (values.len() >= 2).then(|| {
        let h = Z_95 * sample_sd(values) / (values.len() as f64).sqrt();
        (m - h, m + h)
    });
    Ok(MeanCi { mean: m, interval })
}

/// Ranks systems within each round (1 = best, ties averaged). `scores` is
/// systems × rounds; missing cells stay missing and are not ranked.
pub fn per_round_ranks(scores: &[Vec<Option<f64>>]) -> Vec<Vec<Option<f64>>> {
    let rounds = scores.first().map_or(0, Vec::len);
    let mut out = vec![vec![None; rounds]; scores.len()];
    for r in 0..rounds {
        let present: Vec<(usize, f64)> = scores
            .iter()
            .enumerate()
            .filter_map(|(s, row)| row.get(r).copied().flatten().map(|x| (s, x)))
            .collect();
        for &(s, x) in &present {
            let better = present.iter().filter(|(_, y)| *y > x).count() as f64;
            let equal = present.iter().filter(|(_, y)| *y == x).count() as f64;
            out[s][r] = Some(better + (equal + 1.0) / 2.0);
        }
    }
    out
}

/// Rounds where both cells are present.
pub fn paired(a: &[Option<f64>], b: &[Option<f64>]) -> Vec<(f64, f64)> {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub comparator: String,
    /// Reference minus comparator.
    pub delta_mean: f64,
    pub d_z: Measure,
    pub wilcoxon: Wilcoxon,
    pub p_raw: f64,
    pub p_holm: f64,
    /// Rounds where both systems have a score.
    pub n_pairs: usize,
    pub n_effective: usize,
}

/// Reference-vs-comparator tests with Holm adjustment across the family.
/// Rounds missing either score are left out of that comparison only.
pub fn compare_family(
    reference: &[Option<f64>],
    comparators: &[(String, Vec<Option<f64>>)],
) -> Result<Vec<TestResult>> {
    let mut results = Vec::with_capacity(comparators.len());
    for (name, scores) in comparators {
        let pairs = paired(reference, scores);
        if pairs.is_empty() {
            return Err(LarkError::validation(format!("no complete rounds for {name}")));
        }
        let skipped = reference.len() - pairs.len();
        if skipped > 0 {
            log::warn!("{name}: {skipped} round(s) missing, excluded from this comparison");
        }
        let d: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
        let w = wilcoxon_signed_rank(&d)?;
        results.push(TestResult {
            comparator: name.clone(),
            delta_mean: mean(&d),
            d_z: cohens_dz(&d),
            p_raw: w.p_value,
            p_holm: w.p_value,
            n_pairs: d.len(),
            n_effective: w.n_effective,
            wilcoxon: w,
        });
    }
    let raw: Vec<f64> = results.iter().map(|r| r.p_raw).collect();
    for (r, p) in results.iter_mut().zip(holm_adjust(&raw)?) {
        r.p_holm = p;
    }
    Ok(results)
}

/// Per-round composite scores, systems × rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub systems: Vec<String>,
    pub rounds: Vec<String>,
    pub scores: Vec<Vec<Option<f64>>>,
}

impl ScoreMatrix {
    pub fn new(systems: Vec<String>, rounds: Vec<String>) -> Self {
        let scores = vec![vec![None; rounds.len()]; systems.len()];
        ScoreMatrix {
            systems,
            rounds,
            scores,
        }
    }

    pub fn system_index(&self, name: &str) -> Option<usize> {
        self.systems.iter().position(|s| s == name)
    }

    pub fn row(&self, name: &str) -> Option<&[Option<f64>]> {
        self.system_index(name).map(|i| self.scores[i].as_slice())
    }

    /// CSV with one row per round and one column per system; missing cells are empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["round".to_owned()];
        header.extend(self.systems.iter().cloned());
        w.write_record(&header)?;
        for (r, round) in self.rounds.iter().enumerate() {
            let mut rec = vec![round.clone()];
            rec.extend(
                self.scores
                    .iter()
                    .map(|row| row[r].map(|x| x.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| LarkError::validation(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("round") {
            return Err(LarkError::parse("score matrix", "first column must be `round`"));
        }
        let systems: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        let mut m = ScoreMatrix::new(systems, Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let round = rec.get(0).unwrap_or_default().to_owned();
            for (s, row) in m.scores.iter_mut().enumerate() {
                let cell = rec.get(s + 1).unwrap_or("").trim();
                let v = if cell.is_empty() {
                    None
                } else {
                    Some(cell.parse::<f64>().map_err(|e| {
                        LarkError::parse(format!("score matrix {round}"), e.to_string())
                    })?)
                };
                row.push(v);
            }
            m.rounds.push(round);
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path).map_err(|e| LarkError::io(path, e))?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?)
    }

    pub fn ranks(&self) -> Vec<Vec<Option<f64>>> {
        per_round_ranks(&self.scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute force over every sign pattern.
    fn enumerate_p(d: &[f64]) -> f64 {
        let ranked = signed_ranks(d);
        let n = ranked.len();
        let (wp, wm) = rank_sums(&ranked);
        let w = wp.min(wm);
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let plus: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranked[i].1).sum();
            let total: f64 = ranked.iter().map(|r| r.1).sum();
            if plus.min(total - plus) <= w + 1e-9 {
                hits += 1;
            }
        }
        (hits as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn wilcoxon_reference_cases() {
        let w = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(w.w_minus, 0.0);
        assert_eq!(w.p_value, 0.0625);
        let w = wilcoxon_signed_rank(&[1.0, -1.0]).unwrap();
        assert_eq!((w.w_plus, w.w_minus, w.p_value), (1.5, 1.5, 1.0));
        assert_eq!(wilcoxon_signed_rank(&[5.0; 6]).unwrap().p_value, 0.03125);
        let w = wilcoxon_signed_rank(&[0.0, 0.0]).unwrap();
        assert_eq!((w.p_value, w.method), (1.0, PMethod::Degenerate));
        assert!(wilcoxon_signed_rank(&[]).is_err());
    }

    #[test]
    fn exact_p_matches_enumeration_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-4i32..=4) as f64).collect();
            let got = wilcoxon_exact_p(&d);
            let want = if signed_ranks(&d).is_empty() { 1.0 } else { enumerate_p(&d) };
            assert!((got - want).abs() < 1e-12, "{d:?}: {got} vs {want}");
        }
    }

    #[test]
    fn rank_sums_cover_all_ranks() {
        let d = [3.0, -1.0, 0.0, 2.0, -2.0, 7.0];
        let w = wilcoxon_signed_rank(&d).unwrap();
        let n = w.n_effective as f64;
        assert_eq!(w.w_plus + w.w_minus, n * (n + 1.0) / 2.0);
    }

    #[test]
    fn large_samples_use_the_approximation() {
        let d: Vec<f64> = (1..=30).map(|i| i as f64 * if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let w = wilcoxon_signed_rank(&d).unwrap();
        assert_eq!(w.method, PMethod::NormalApprox);
        assert!(w.p_value > 0.0 && w.p_value < 1.0);
    }

    #[test]
    fn effect_size() {
        assert_eq!(cohens_dz(&[1.0, 2.0, 3.0]), Measure::Defined(2.0));
        assert_eq!(cohens_dz(&[-1.0, -2.0, -3.0]), Measure::Defined(-2.0));
        assert_eq!(cohens_dz(&[4.0, 4.0, 4.0]), Measure::Undefined);
        assert_eq!(cohens_dz(&[4.0]), Measure::Undefined);
    }

    #[test]
    fn holm_reference_cases() {
        let h = holm_adjust(&[0.01, 0.04, 0.03]).unwrap();
        for (a, b) in h.iter().zip([0.03, 0.06, 0.06]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(holm_adjust(&[0.2]).unwrap(), vec![0.2]);
        assert_eq!(holm_adjust(&[0.5, 0.9]).unwrap(), vec![1.0, 1.0]);
        assert!(holm_adjust(&[1.2]).is_err());
    }

    #[test]
    fn interval_reference_cases() {
        let ci = mean_ci(&[1.0, 2.0, 3.0]).unwrap();
        let (lo, hi) = ci.interval.unwrap();
        assert!((lo - 0.8684).abs() < 1e-4 && (hi - 3.1316).abs() < 1e-4);
        assert_eq!(mean_ci(&[7.0, 7.0]).unwrap().interval, Some((7.0, 7.0)));
        assert_eq!(mean_ci(&[7.0]).unwrap().interval, None);
    }

    #[test]
    fn ranks_average_ties_and_skip_missing() {
        let m = vec![vec![Some(30.0), Some(30.0)], vec![Some(20.0), None], vec![Some(10.0), Some(30.0)]];
        let r = per_round_ranks(&m);
        assert_eq!(r[0], vec![Some(1.0), Some(1.5)]);
        assert_eq!(r[1], vec![Some(2.0), None]);
        assert_eq!(r[2], vec![Some(3.0), Some(1.5)]);
    }

    #[test]
    fn family_drops_incomplete_rounds_pairwise() {
        let full = vec![Some(10.0), Some(11.0), Some(12.0), None];
        let comps = vec![
            ("a".to_owned(), vec![Some(9.0), Some(9.5), Some(9.0), Some(1.0)]),
            ("b".to_owned(), vec![Some(10.0), None, Some(13.0), Some(1.0)]),
        ];
        let r = compare_family(&full, &comps).unwrap();
        assert_eq!(r[0].n_pairs, 3);
        assert_eq!(r[1].n_pairs, 2);
        assert!(r.iter().all(|t| t.p_holm >= t.p_raw));
    }

    #[test]
    fn score_matrix_csv_keeps_missing_cells() {
        let mut m = ScoreMatrix::new(vec!["x".into(), "y".into()], vec!["r1".into(), "r2".into()]);
        m.scores[0] = vec![Some(29.4), None];
        m.scores[1] = vec![Some(1.0), Some(2.5)];
        let back = ScoreMatrix::from_csv(&m.to_csv().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
