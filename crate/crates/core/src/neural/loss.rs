use super::lps::LpsOutput;
use crate::error::{Error, Result};
use crate::oracle::{LpsRecord, N_QUANTILES};

const BCE_CLIP: f64 = 1e-7;

/// Smooth-L1: `0.5 e²/δ` inside `|e| < δ`, `|e| − δ/2` outside.
pub fn smooth_l1(e: f64, delta: f64) -> f64 {
    let a = e.abs();
    if a < delta {
        0.5 * e * e / delta
    } else {
        a - 0.5 * delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpsLossParams {
    pub delta: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl Default for LpsLossParams {
    fn default() -> Self {
        Self {
            delta: 0.5,
            gamma: 0.2,
            eta: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpsLoss {
    pub total: f64,
    pub smooth_l1: f64,
    pub slope_mae: f64,
    pub bce: f64,
}

/// Masked smooth-L1 over valid quantiles, slope MAE over adjacent valid
/// pairs within each CDF, and mask BCE over all 48 entries.
pub fn lps_loss(pred: &LpsOutput, label: &LpsRecord, p: LpsLossParams) -> Result<LpsLoss> {
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(Error::invalid(format!("δ_LPS must lie in (0, 1), got {}", p.delta)));
    }
    let q = label.quantiles48();
    let m = label.mask48();

    let (mut sl_sum, mut sl_n) = (0.0, 0usize);
    for k in 0..48 {
        if m[k] {
            sl_sum += smooth_l1(pred.quantiles48[k] - q[k], p.delta);
            sl_n += 1;
        }
    }
    let (mut sm_sum, mut sm_n) = (0.0, 0usize);
    for g in 0..3 {
        for k in 0..N_QUANTILES - 1 {
            let (a, b) = (g * N_QUANTILES + k, g * N_QUANTILES + k + 1);
            if m[a] && m[b] {
                let dp = pred.quantiles48[b] - pred.quantiles48[a];
                let dl = q[b] - q[a];
                sm_sum += (dp - dl).abs();
                sm_n += 1;
            }
        }
    }
    let bce = (0..48)
        .map(|k| {
            let pr = pred.mask_prob48[k].clamp(BCE_CLIP, 1.0 - BCE_CLIP);
            if m[k] {
                -pr.ln()
            } else {
                -(1.0 - pr).ln()
            }
        })
        .sum::<f64>()
        / 48.0;
    let smooth = if sl_n > 0 { sl_sum / sl_n as f64 } else { 0.0 };
    let slope = if sm_n > 0 { sm_sum / sm_n as f64 } else { 0.0 };
    Ok(LpsLoss {
        total: smooth + p.gamma * slope + p.eta * bce,
        smooth_l1: smooth,
        slope_mae: slope,
        bce,
    })
}

pub fn se_loss(pred: f64, label: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("δ_SE must lie in (0, 1], got {delta}")));
    }
    Ok(smooth_l1(pred - label, delta))
}
