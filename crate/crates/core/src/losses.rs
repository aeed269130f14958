//! Binary cross-entropy, Dice, their weighted combination, and the
//! pseudo-label composite `supervised + α · pseudo`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Probabilities are clamped into `[PROB_CLAMP, 1 − PROB_CLAMP]` before `ln`.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub bce: f64,
    pub dice: f64,
    pub dice_smooth: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            bce: 0.5,
            dice: 0.5,
            dice_smooth: 1e-6,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.bce >= 0.0 && self.dice >= 0.0) || self.bce + self.dice <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "loss weights must be nonnegative with a positive sum, got bce={} dice={}",
                self.bce, self.dice
            )));
        }
        if !(self.dice_smooth > 0.0) {
            return Err(Error::InvalidArgument("dice smoothing must be positive".into()));
        }
        Ok(())
    }
}

fn same_shape<T: Scalar>(what: &str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "{what}: prediction {:?} vs target {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Mean of `−[t·ln p + (1 − t)·ln(1 − p)]` over all elements.
pub fn bce<T: Scalar>(pred_prob: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape("bce", pred_prob, target)?;
    let eps = T::of(PROB_CLAMP);
    let p = pred_prob.clamp(eps, T::one() - eps)?;
    let log_p = p.ln()?;
    let log_q = p.neg().add_scalar(T::one()).ln()?;
    let t = target.detach();
    let one_minus_t = t.neg().add_scalar(T::one());
    let ll = t.mul(&log_p)?.add(&one_minus_t.mul(&log_q)?)?;
    Ok(ll.mean().neg())
}

/// `1 − mean_c (2·Σ p·t + s) / (Σ p + Σ t + s)`, sums over batch and pixels
/// of each class channel.
pub fn dice_loss<T: Scalar>(pred_prob: &Tensor<T>, target_onehot: &Tensor<T>, smooth: T) -> Result<Tensor<T>> {
    same_shape("dice_loss", pred_prob, target_onehot)?;
    let t = target_onehot.detach();
    let inter = pred_prob.mul(&t)?.channel_sum()?;
    let denom = pred_prob
        .channel_sum()?
        .add(&t.channel_sum()?)?
        .add_scalar(smooth);
    let dice = inter.mul_scalar(T::of(2.0)).add_scalar(smooth).div(&denom)?;
    Ok(dice.mean().neg().add_scalar(T::one()))
}

/// `w_bce · BCE(sigmoid(logits), target) + w_dice · Dice(softmax(logits), target)`.
pub fn combined_seg_loss<T: Scalar>(
    pred_logits: &Tensor<T>,
    target_onehot: &Tensor<T>,
    weights: &LossWeights,
) -> Result<Tensor<T>> {
    weights.validate()?;
    same_shape("combined_seg_loss", pred_logits, target_onehot)?;
    let bce_term = bce(&pred_logits.sigmoid(), target_onehot)?;
    let dice_term = dice_loss(
        &pred_logits.softmax_channels()?,
        target_onehot,
        T::of(weights.dice_smooth),
    )?;
    bce_term
        .mul_scalar(T::of(weights.bce))
        .add(&dice_term.mul_scalar(T::of(weights.dice)))
}

/// `sup + α · pseudo`. With `α = 0` the supervised loss is returned as is.
pub fn semi_supervised_loss<T: Scalar>(sup: &Tensor<T>, pseudo: Option<&Tensor<T>>, alpha: T) -> Result<Tensor<T>> {
    if !(alpha >= T::zero()) {
        return Err(Error::InvalidArgument(format!("alpha must be nonnegative, got {alpha}")));
    }
    match pseudo {
        Some(p) if alpha > T::zero() => sup.add(&p.mul_scalar(alpha)),
        _ => Ok(sup.clone()),
    }
}
