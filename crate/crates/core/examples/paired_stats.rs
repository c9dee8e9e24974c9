//! Paired comparison of one system against others over per-round scores.

use lark::model::Measure;
use lark::stats::{cohens_dz, compare_family, holm_adjust, mean_ci, per_round_ranks, wilcoxon_signed_rank};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lark::Result<()> {
    let w = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0])?;
    println!("all-positive n=5: W+ {} W- {} p {} ({:?})", w.w_plus, w.w_minus, w.p_value, w.method);
    println!("d_z of (1, 2, 3): {:?}", cohens_dz(&[1.0, 2.0, 3.0]));
    println!("holm (0.01, 0.04, 0.03): {:?}", holm_adjust(&[0.01, 0.04, 0.03])?);
    println!("mean_ci (1, 2, 3): {:?}", mean_ci(&[1.0, 2.0, 3.0])?);

    // Thirty rounds, three systems, one round missing for the last system.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rounds = 30;
    let mut reference = Vec::new();
    let mut close = Vec::new();
    let mut weak = Vec::new();
    for r in 0..rounds {
        let base: f64 = rng.gen_range(22.0..34.0);
        reference.push(Some(base + 1.0));
        close.push(Some(base + rng.gen_range(-1.5..1.5)));
        weak.push(if r == 7 { None } else { Some(base - 3.0 + rng.gen_range(-1.0..1.0)) });
    }
    let comps = vec![("close".to_owned(), close.clone()), ("weak".to_owned(), weak.clone())];
    for t in compare_family(&reference, &comps)? {
        let dz = match t.d_z {
            Measure::Defined(x) => format!("{x:.2}"),
            Measure::Undefined => "undefined".into(),
        };
        println!(
            "vs {:<6} n={} dMean {:+.2}  d_z {dz}  p {:.3e}  holm {:.3e} ({:?})",
            t.comparator, t.n_pairs, t.delta_mean, t.p_raw, t.p_holm, t.wilcoxon.method
        );
    }

    let ranks = per_round_ranks(&[reference, close, weak]);
    for (name, row) in ["reference", "close", "weak"].iter().zip(&ranks) {
        let present: Vec<f64> = row.iter().flatten().copied().collect();
        let ci = mean_ci(&present)?;
        println!("{name:<9} mean rank {:.2} {:?}", ci.mean, ci.interval);
    }
    Ok(())
}
