use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

/// Area under the ROC curve via the Mann–Whitney statistic; tied scores
/// count one half. `None` when either class is empty.
pub fn auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(positive).filter(|(_, &p)| p).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(positive).filter(|(_, &p)| !p).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub positive: usize,
    pub negative: usize,
    pub ties: usize,
    /// One-sided `P(X ≥ positive)` for `X ~ Binomial(positive + negative, 1/2)`.
    pub p_value: f64,
}

/// Paired one-sided sign test that the differences tend to be positive.
/// Exact zeros are dropped.
pub fn sign_test(differences: &[f64]) -> SignTest {
    let positive = differences.iter().filter(|&&d| d > 0.0).count();
    let negative = differences.iter().filter(|&&d| d < 0.0).count();
    let ties = differences.len() - positive - negative;
    let n = (positive + negative) as u64;
    let p_value = if n == 0 {
        1.0
    } else {
        let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
        (positive as u64..=n)
            .map(|k| (ln_binomial(n, k) + ln_half_n).exp())
            .sum::<f64>()
            .min(1.0)
    };
    SignTest {
        positive,
        negative,
        ties,
        p_value,
    }
}
