//! Monte Carlo SE from categorized link-power CDFs.
//!
//! Each link power is drawn independently by inverse-CDF sampling and every
//! signal term gets an independent uniform phase. Power CDFs carry no joint
//! phase information, so this is the table method's inherent approximation
//! of the true composition.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::{quantile_level, QuantileCdf, SeEstimate, CAT_DIRECT, CAT_NOISE, N_QUANTILES};
use crate::rng::{self, tag};
use crate::units::db_to_lin;

/// Linear power at CDF level `u`: linear interpolation in dB between
/// neighboring quantiles, flat beyond the end levels, zero when a
/// neighboring quantile is invalid.
pub fn inverse_cdf_power(cdf: &QuantileCdf, u: f64) -> f64 {
    let first = quantile_level(0);
    let last = quantile_level(N_QUANTILES - 1);
    let db = if u <= first {
        if !cdf.mask[0] {
            return 0.0;
        }
        cdf.q_db[0]
    } else if u >= last {
        if !cdf.mask[N_QUANTILES - 1] {
            return 0.0;
        }
        cdf.q_db[N_QUANTILES - 1]
    } else {
        let pos = (u - first) * N_QUANTILES as f64;
        let k = (pos.floor() as usize).min(N_QUANTILES - 2);
        if !(cdf.mask[k] && cdf.mask[k + 1]) {
            return 0.0;
        }
        let t = pos - k as f64;
        cdf.q_db[k] + t * (cdf.q_db[k + 1] - cdf.q_db[k])
    };
    db_to_lin(db)
}

fn check(cats: &[u8], n: usize, n_samples: usize) -> Result<()> {
    if n_samples < 1 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    if cats.len() != n {
        return Err(Error::invalid(format!("{n} CDFs but {} categories", cats.len())));
    }
    if let Some(&c) = cats.iter().find(|&&c| !(CAT_DIRECT..=CAT_NOISE).contains(&c)) {
        return Err(Error::InvalidCategory(c));
    }
    if !cats.contains(&CAT_DIRECT) {
        return Err(Error::MissingDirectCdf);
    }
    Ok(())
}

pub fn compose_se_mc_estimate(
    cdfs: &[QuantileCdf],
    cats: &[u8],
    n_samples: usize,
    seed: u64,
    sigma0_sq: f64,
    p_rb: f64,
) -> Result<SeEstimate> {
    check(cats, cdfs.len(), n_samples)?;
    let mut r = rng::stream(seed, &[tag::COMPOSE]);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let mut sig = C64::new(0.0, 0.0);
        let mut noise = sigma0_sq;
        for (cdf, &cat) in cdfs.iter().zip(cats) {
            let p = inverse_cdf_power(cdf, r.random::<f64>());
            if cat == CAT_NOISE {
                noise += p;
            } else {
                sig += C64::from_polar(p.sqrt(), r.random_range(0.0..TAU));
            }
        }
        let se = (1.0 + p_rb * sig.norm_sqr() / noise).log2();
        sum += se;
        sum_sq += se * se;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SeEstimate {
        mean,
        std_err: (var / n).sqrt(),
    })
}

pub fn compose_se_mc(
    cdfs: &[QuantileCdf],
    cats: &[u8],
    n_samples: usize,
    seed: u64,
    sigma0_sq: f64,
    p_rb: f64,
) -> Result<f64> {
    Ok(compose_se_mc_estimate(cdfs, cats, n_samples, seed, sigma0_sq, p_rb)?.mean)
}
