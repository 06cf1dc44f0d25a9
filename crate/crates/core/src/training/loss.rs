//! Self-adversarial negative-sampling loss.
//!
//! `L = -log σ(F⁺) - Σᵢ pᵢ log σ(-Fᵢ⁻)` with `p = softmax(F⁻ / T)`. The
//! weights `p` are treated as constants when differentiating.

use crate::geometry::{sigmoid, softplus};

/// Softmax of `scores / temperature`, shift-stabilized.
pub fn adversarial_weights(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = scores
        .iter()
        .map(|s| ((s - max) / temperature).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

pub fn nss_loss(positive: f64, negatives: &[f64], temperature: f64) -> f64 {
    assert!(!negatives.is_empty(), "at least one negative required");
    let p = adversarial_weights(negatives, temperature);
    nss_loss_weighted(positive, negatives, &p)
}

/// Loss with externally fixed negative weights.
pub fn nss_loss_weighted(positive: f64, negatives: &[f64], weights: &[f64]) -> f64 {
    // -log σ(x) = softplus(-x)
    softplus(-positive)
        + negatives
            .iter()
            .zip(weights)
            .map(|(s, p)| p * softplus(*s))
            .sum::<f64>()
}

/// Loss value plus `∂L/∂F⁺` and `∂L/∂Fᵢ⁻` (weights held constant). The
/// negative gradients are written into `grad_neg`.
pub fn nss_loss_grad(
    positive: f64,
    negatives: &[f64],
    temperature: f64,
    grad_neg: &mut Vec<f64>,
) -> (f64, f64) {
    let p = adversarial_weights(negatives, temperature);
    let loss = nss_loss_weighted(positive, negatives, &p);
    grad_neg.clear();
    grad_neg.extend(negatives.iter().zip(&p).map(|(s, w)| w * sigmoid(*s)));
    (loss, -sigmoid(-positive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_separation_limit() {
        assert!(nss_loss(60.0, &[-60.0, -80.0], 1.0) < 1e-20);
    }

    #[test]
    fn single_negative_has_unit_weight() {
        let (pos, neg) = (0.7, -0.4);
        let expected = -sigmoid(pos).ln() - sigmoid(-neg).ln();
        assert_abs_diff_eq!(nss_loss(pos, &[neg], 1.0), expected, epsilon = 1e-15);
    }

    #[test]
    fn zero_scores_give_two_log_two() {
        let l = nss_loss(0.0, &[0.0, 0.0], 1.0);
        assert_abs_diff_eq!(l, 2.0 * 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(l, 1.386294, epsilon = 1e-6);
    }

    #[test]
    fn weights_sum_to_one_and_ignore_shifts() {
        let s = [0.3, -1.2, 2.5, 0.0];
        let w = adversarial_weights(&s, 0.5);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        let shifted: Vec<f64> = s.iter().map(|v| v + 17.0).collect();
        for (a, b) in w.iter().zip(adversarial_weights(&shifted, 0.5)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_with_fixed_weights() {
        let pos = 0.37;
        let negs = [0.2, -1.1, 0.9];
        let p = adversarial_weights(&negs, 1.0);
        let mut gn = Vec::new();
        let (_, gp) = nss_loss_grad(pos, &negs, 1.0, &mut gn);
        let h = 1e-6;
        let num = (nss_loss_weighted(pos + h, &negs, &p) - nss_loss_weighted(pos - h, &negs, &p))
            / (2.0 * h);
        assert_abs_diff_eq!(gp, num, epsilon = 1e-9);
        for i in 0..3 {
            let mut a = negs;
            let mut b = negs;
            a[i] += h;
            b[i] -= h;
            let num = (nss_loss_weighted(pos, &a, &p) - nss_loss_weighted(pos, &b, &p)) / (2.0 * h);
            assert_abs_diff_eq!(gn[i], num, epsilon = 1e-9);
        }
    }
}
