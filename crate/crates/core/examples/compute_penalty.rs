//! Token penalty, duplication probabilities and per-generation efficiency
//! for a handful of hand-made candidates.

use lark::fitness::{adaptive_temperature, compute_adjusted, duplication_probabilities, efficiency};

fn main() -> lark::Result<()> {
    let target = 100;
    let lambda = 0.5;
    let candidates = [(4.0, 60u64), (4.0, 150), (3.0, 100), (1.0, 400), (2.5, 0)];

    let mut adjusted = Vec::new();
    println!("target {target} tokens, lambda {lambda}");
    for (b, t) in candidates {
        let r = compute_adjusted(b, t, target, lambda)?;
        println!(
            "B {b:>4}  T {t:>4}  ->  R {:.3}{}{}",
            r.value,
            if r.penalized { "  (over budget)" } else { "" },
            if r.clamped { "  (clamped)" } else { "" }
        );
        adjusted.push(r.value);
    }

    let tau = adaptive_temperature(&adjusted);
    let p = duplication_probabilities(&adjusted, tau)?;
    println!("temperature {tau:.4}");
    for (r, p) in adjusted.iter().zip(&p) {
        println!("R {r:.3}  p_dup {p:.4}");
    }

    let borda: Vec<f64> = candidates.iter().map(|c| c.0).collect();
    let tokens: Vec<u64> = candidates.iter().map(|c| c.1).collect();
    let e = efficiency(&borda, &tokens)?;
    println!("efficiency {:.5} ({} zero-token member(s) left out)", e.value, e.excluded.len());
    Ok(())
}
