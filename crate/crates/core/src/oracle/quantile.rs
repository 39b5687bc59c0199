use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{DB_FLOOR, DB_SENTINEL};

pub const N_QUANTILES: usize = 16;

/// Quantile level of index `k` (0-based): `(2k+1)/32`.
pub fn quantile_level(k: usize) -> f64 {
    (2 * k + 1) as f64 / (2 * N_QUANTILES) as f64
}

/// 16-point quantile summary of a power distribution in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileCdf {
    pub q_db: [f64; N_QUANTILES],
    pub mask: [bool; N_QUANTILES],
}

impl QuantileCdf {
    /// Builds a CDF from stored values, deriving validity from the floor.
    pub fn from_values(q_db: [f64; N_QUANTILES]) -> Self {
        let mut mask = [false; N_QUANTILES];
        let mut q = q_db;
        for (v, m) in q.iter_mut().zip(mask.iter_mut()) {
            *m = *v >= DB_FLOOR;
            if !*m {
                *v = DB_SENTINEL;
            }
        }
        Self { q_db: q, mask }
    }

    pub fn constant(db: f64) -> Self {
        Self::from_values([db; N_QUANTILES])
    }

    pub fn all_invalid() -> Self {
        Self {
            q_db: [DB_SENTINEL; N_QUANTILES],
            mask: [false; N_QUANTILES],
        }
    }

    pub fn is_monotone(&self) -> bool {
        let valid: Vec<f64> = self
            .q_db
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect();
        valid.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Nearest-rank quantiles at levels `(2k−1)/32` of samples in dB.
/// Samples below the floor (including `-inf`) count as zero power.
pub fn quantile_cdf(samples_db: &[f64]) -> Result<QuantileCdf> {
    let n = samples_db.len();
    if n < N_QUANTILES {
        return Err(Error::TooFewSamples(n));
    }
    let mut sorted = samples_db.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut q = [0.0; N_QUANTILES];
    for (k, out) in q.iter_mut().enumerate() {
        let rank = (quantile_level(k) * n as f64).ceil() as usize;
        *out = sorted[rank.max(1) - 1];
    }
    Ok(QuantileCdf::from_values(q))
}

/// Convenience: quantiles of linear powers, converted to dB first.
pub fn quantile_cdf_lin(samples: &[f64]) -> Result<QuantileCdf> {
    let db: Vec<f64> = samples.iter().map(|&p| crate::units::lin_to_db(p)).collect();
    quantile_cdf(&db)
}
