//! Compute-aware fitness shaping.
//!
//! * The token penalty scales a Borda score by
//!   `1 − λ · max(0, (T − T_target) / T_target)`, clamped so fitness never
//!   goes negative.
//! * Duplication probability is the logistic of the centred, temperature
//!   scaled fitness.
//! * Efficiency is the mean quality-per-token across the population.

use serde::{Deserialize, Serialize};

use crate::error::{LarkError, Result};
use crate::model::{ComputeBudget, StrategyId};

/// Guards the adaptive temperature against uniform populations.
pub const TEMPERATURE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub strategy_id: StrategyId,
    pub borda: f64,
    pub adjusted: f64,
    pub token_count: u64,
    pub p_dup: f64,
    /// `T > T_target`.
    pub penalized: bool,
    /// The penalty factor went negative and `adjusted` was clamped to zero.
    #[serde(default)]
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjusted {
    pub value: f64,
    pub penalized: bool,
    pub clamped: bool,
}

/// Token-penalized fitness `R` for Borda score `borda` and token count `tokens`.
pub fn compute_adjusted(borda: f64, tokens: u64, target: u64, lambda: f64) -> Result<Adjusted> {
    if target == 0 {
        return Err(LarkError::validation("token target must be > 0"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LarkError::validation(format!(
            "penalty coefficient must lie in [0, 1], got {lambda}"
        )));
    }
    if borda < 0.0 || !borda.is_finite() {
        return Err(LarkError::validation(format!(
            "Borda score must be finite and non-negative, got {borda}"
        )));
    }
    let penalized = tokens > target;
    let excess = if penalized {
        (tokens - target) as f64 / target as f64
    } else {
        0.0
    };
    let factor = 1.0 - lambda * excess;
    if factor < 0.0 {
        return Ok(Adjusted {
            value: 0.0,
            penalized,
            clamped: true,
        });
    }
    Ok(Adjusted {
        value: borda * factor,
        penalized,
        clamped: false,
    })
}

pub fn compute_adjusted_for(borda: f64, tokens: u64, budget: &ComputeBudget) -> Result<Adjusted> {
    compute_adjusted(borda, tokens, budget.target_tokens, budget.lambda)
}

/// Numerically stable logistic function.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `σ((R_i − R̄) / τ)`, kept strictly inside (0, 1).
pub fn duplication_probability(adjusted: f64, mean: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(LarkError::validation(format!(
            "duplication temperature must be > 0, got {temperature}"
        )));
    }
    let p = logistic((adjusted - mean) / temperature);
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Scale-free default temperature: a quarter of the fitness range.
pub fn adaptive_temperature(adjusted: &[f64]) -> f64 {
    let (lo, hi) = adjusted
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    if adjusted.is_empty() {
        return 0.25 * TEMPERATURE_EPSILON;
    }
    0.25 * (hi - lo + TEMPERATURE_EPSILON)
}

/// Duplication probabilities for a whole population.
pub fn duplication_probabilities(adjusted: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if adjusted.is_empty() {
        return Ok(Vec::new());
    }
    let mean = adjusted.iter().sum::<f64>() / adjusted.len() as f64;
    adjusted
        .iter()
        .map(|&r| duplication_probability(r, mean, temperature))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Efficiency {
    pub value: f64,
    /// Indices whose token count was zero and were left out.
    pub excluded: Vec<usize>,
}

/// Mean of `B/T` across the population. Zero-token entries are excluded and
/// the mean is taken over the remaining terms.
pub fn efficiency(borda: &[f64], tokens: &[u64]) -> Result<Efficiency> {
    if borda.len() != tokens.len() {
        return Err(LarkError::validation(format!(
            "efficiency needs equal-length vectors, got {} scores and {} token counts",
            borda.len(),
            tokens.len()
        )));
    }
    if borda.is_empty() {
        return Err(LarkError::validation("efficiency of an empty population"));
    }
    let mut excluded = Vec::new();
    let mut sum = 0.0;
    for (i, (&b, &t)) in borda.iter().zip(tokens).enumerate() {
        if t == 0 {
            log::warn!("efficiency: strategy #{i} has zero tokens, term excluded");
            excluded.push(i);
        } else {
            sum += b / t as f64;
        }
    }
    let used = borda.len() - excluded.len();
    let value = if used == 0 { 0.0 } else { sum / used as f64 };
    Ok(Efficiency { value, excluded })
}
