//! Monte Carlo ground truth: per-RB SNR, ergodic SE, link-power quantile
//! CDFs and dataset generation for the neural CKM.

mod dataset;
mod quantile;
mod sampler;

pub use dataset::{
    gen_lps_dataset, gen_se_dataset, lps_features, lps_records_for_ue, read_jsonl, se_record_for_ue,
    se_record_serving,
    LpsRecord, SeRecord, CAT_CASCADED, CAT_DIRECT, CAT_NOISE, CAT_SCATTERED, N_FEATURES,
};
pub use quantile::{quantile_cdf, quantile_cdf_lin, quantile_level, QuantileCdf, N_QUANTILES};
pub use sampler::UeSampler;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::airs::{self, amplification_factor, combine};
use crate::channel::{mean_link_powers, sample_links, FadingSpec, LinkRealizations};
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::scene::{SceneConfig, UePos};
use crate::units::dbm_to_mw;

/// Instantaneous SNR of one RB.
pub fn snr_sample(
    direct: C64,
    cascade_serving: C64,
    scattered: &[C64],
    noise_norms: &[f64],
    p_rb: f64,
    sigma_v2: f64,
    sigma_02: f64,
) -> f64 {
    let sig = direct + cascade_serving + scattered.iter().sum::<C64>();
    let noise = noise_norms.iter().sum::<f64>() * sigma_v2 + sigma_02;
    p_rb * sig.norm_sqr() / noise
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseScheme {
    Mccm,
    Los,
    Random,
}

/// Monte Carlo estimate with its standard error over realizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Per-(realization, RB) reduced terms for one UE.
///
/// Holds the combined cascades of every AIRS both when it serves (chosen
/// phase scheme) and when it scatters (per-realization random phases), so SE
/// under any serving choice is cheap to evaluate from the same draws.
#[derive(Debug, Clone)]
pub struct UeEval {
    pub n_real: usize,
    pub n_rb: usize,
    pub p_rb: f64,
    pub sigma0_sq: f64,
    /// `h_{b,u,s}`, `[r*S+s]`.
    pub direct: Vec<C64>,
    /// Per AIRS, `F_i φᵀ a` with the serving phases.
    pub beam: Vec<Vec<C64>>,
    /// Per AIRS, `F_i φᵀ a` with random scattering phases.
    pub scatter: Vec<Vec<C64>>,
    /// Per AIRS, dynamic-noise power at the UE `F_i² ‖h_{i,u,s}‖² σ_v²` in mW.
    pub noise: Vec<Vec<f64>>,
    pub amp: Vec<f64>,
}

/// Common amplification factor of every AIRS, sized from the mean incident
/// power across the whole band.
pub fn amplification_factors(scene: &SceneConfig, lr: &LinkRealizations) -> Result<Vec<f64>> {
    let mp = mean_link_powers(lr);
    let p_bs = dbm_to_mw(scene.bs_power_dbm);
    scene
        .airs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            amplification_factor(
                dbm_to_mw(a.amp_power_dbm),
                p_bs * mp.incident_per_elem[i],
                a.n_elements(),
                dbm_to_mw(a.dyn_noise_psd_dbm_hz) * scene.bandwidth,
            )
        })
        .collect()
}

/// Serving phases of AIRS `i`. A panel with no cascade power has no
/// preferred direction; it gets unit phases (its contribution is zero).
pub fn serving_phases(
    scene: &SceneConfig,
    ue: &UePos,
    lr: &LinkRealizations,
    i: usize,
    scheme: PhaseScheme,
) -> Result<Vec<C64>> {
    match scheme {
        PhaseScheme::Mccm => match airs::mccm_phases(lr, i) {
            Err(Error::DarkPanel) => Ok(vec![C64::new(1.0, 0.0); lr.n_elem[i]]),
            other => other,
        },
        PhaseScheme::Los => Ok(airs::los_phases(scene, i, ue)),
        PhaseScheme::Random => {
            let mut r = rng::stream(lr.seed, &[tag::RANDOM_PHASE, rng::position_key(&ue.pos), i as u64]);
            Ok(airs::random_phases_from(&mut r, lr.n_elem[i]))
        }
    }
}

impl UeEval {
    pub fn new(scene: &SceneConfig, ue: &UePos, scheme: PhaseScheme, spec: &FadingSpec) -> Result<Self> {
        let lr = sample_links(scene, ue, spec)?;
        Self::from_links(scene, ue, &lr, scheme)
    }

    pub fn from_links(
        scene: &SceneConfig,
        ue: &UePos,
        lr: &LinkRealizations,
        scheme: PhaseScheme,
    ) -> Result<Self> {
        let amp = amplification_factors(scene, lr)?;
        let n_cells = lr.n_real * lr.n_rb;
        let ue_key = rng::position_key(&ue.pos);
        let mut beam = Vec::with_capacity(lr.n_airs());
        let mut scatter = Vec::with_capacity(lr.n_airs());
        let mut noise = Vec::with_capacity(lr.n_airs());
        for i in 0..lr.n_airs() {
            let phases = serving_phases(scene, ue, lr, i, scheme)?;
            let sv2 = scene.sigma_v_sq_mw(i);
            let f = amp[i];
            let mut b = Vec::with_capacity(n_cells);
            let mut sc = Vec::with_capacity(n_cells);
            let mut nz = Vec::with_capacity(n_cells);
            for r in 0..lr.n_real {
                let mut prng = rng::stream(lr.seed, &[tag::SCATTER_PHASE, ue_key, r as u64, i as u64]);
                let rand_ph = airs::random_phases_from(&mut prng, lr.n_elem[i]);
                for s in 0..lr.n_rb {
                    let a = lr.cascade(i, r, s);
                    b.push(combine(&phases, a) * f);
                    sc.push(combine(&rand_ph, a) * f);
                    nz.push(f * f * lr.norm_sq(r, s, i) * sv2);
                }
            }
            beam.push(b);
            scatter.push(sc);
            noise.push(nz);
        }
        Ok(Self {
            n_real: lr.n_real,
            n_rb: lr.n_rb,
            p_rb: scene.p_rb_mw(),
            sigma0_sq: scene.sigma0_sq_mw(),
            direct: lr.direct.clone(),
            beam,
            scatter,
            noise,
            amp,
        })
    }

    pub fn n_airs(&self) -> usize {
        self.beam.len()
    }

    /// SNR of cell `k = r*S+s` under the given serving AIRS.
    pub fn snr(&self, k: usize, serving: Option<usize>) -> f64 {
        let mut sig = self.direct[k];
        let mut nz = self.sigma0_sq;
        for i in 0..self.n_airs() {
            sig += if Some(i) == serving { self.beam[i][k] } else { self.scatter[i][k] };
            nz += self.noise[i][k];
        }
        self.p_rb * sig.norm_sqr() / nz
    }

    pub fn se(&self, serving: Option<usize>) -> SeEstimate {
        let per_real: Vec<f64> = (0..self.n_real)
            .map(|r| {
                (0..self.n_rb)
                    .map(|s| (1.0 + self.snr(r * self.n_rb + s, serving)).log2())
                    .sum::<f64>()
                    / self.n_rb as f64
            })
            .collect();
        let n = per_real.len() as f64;
        let mean = per_real.iter().sum::<f64>() / n;
        let var = if per_real.len() > 1 {
            per_real.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        SeEstimate {
            mean,
            std_err: (var / n).sqrt(),
        }
    }

    /// `[η_{u,0}, η_{u,1}, …, η_{u,I}]`.
    pub fn se_vector(&self) -> Vec<f64> {
        std::iter::once(None)
            .chain((0..self.n_airs()).map(Some))
            .map(|s| self.se(s).mean)
            .collect()
    }

    pub fn max_snr(&self, serving: Option<usize>) -> f64 {
        (0..self.n_real * self.n_rb)
            .map(|k| self.snr(k, serving))
            .fold(0.0, f64::max)
    }
}

/// Ergodic SE of `ue` with the chosen serving AIRS (or BS-only service).
pub fn ergodic_se(
    scene: &SceneConfig,
    ue: &UePos,
    serving: Option<usize>,
    scheme: PhaseScheme,
    spec: &FadingSpec,
) -> Result<f64> {
    Ok(ergodic_se_estimate(scene, ue, serving, scheme, spec)?.mean)
}

pub fn ergodic_se_estimate(
    scene: &SceneConfig,
    ue: &UePos,
    serving: Option<usize>,
    scheme: PhaseScheme,
    spec: &FadingSpec,
) -> Result<SeEstimate> {
    if let Some(i) = serving {
        if i >= scene.n_airs() {
            return Err(Error::invalid(format!("serving AIRS {i} out of range")));
        }
    }
    Ok(UeEval::new(scene, ue, scheme, spec)?.se(serving))
}

/// Per-UE throughput `R = ρ · S · η`.
#[inline]
pub fn throughput(rho: f64, n_rb: usize, eta: f64) -> f64 {
    rho * n_rb as f64 * eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::AirsConfig;
    use std::f64::consts::PI;

    #[test]
    fn snr_examples() {
        let h = C64::new(0.3, -0.4);
        assert!((snr_sample(h, C64::new(0.0, 0.0), &[], &[], 2.0, 1.0, 0.5) - 2.0 * 0.25 / 0.5).abs() < 1e-15);
        assert_eq!(
            snr_sample(C64::new(1.0, 0.0), C64::new(-1.0, 0.0), &[], &[], 1.0, 1.0, 1.0),
            0.0
        );
        let g = snr_sample(C64::new(1.0, 0.0), C64::new(0.0, 1.0), &[], &[2.0], 1.0, 0.5, 1.0);
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn throughput_is_linear_in_rho() {
        for rho in [0.0, 0.25, 0.5, 1.0] {
            assert_eq!(throughput(rho, 48, 2.5), rho * 120.0);
        }
    }

    fn det_spec() -> FadingSpec {
        FadingSpec {
            n_large: 1,
            n_small: 1,
            n_taps: 1,
            deterministic: true,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_direct_only_is_exact() {
        let scene = SceneConfig::default();
        let ue = UePos::new(100.0, 30.0, 1.5);
        let se = ergodic_se(&scene, &ue, None, PhaseScheme::Mccm, &det_spec()).unwrap();
        let d = crate::scene::dist(&scene.bs_pos(), &ue.pos);
        let gain = crate::units::db_to_lin(-crate::channel::pathloss_nlos_db(d, scene.carrier_freq));
        let gamma = scene.p_rb_mw() * gain / scene.sigma0_sq_mw();
        assert!((se - (1.0 + gamma).log2()).abs() < 1e-12, "{se}");
    }

    #[test]
    fn dark_serving_airs_equals_bs_only() {
        // Panel faces away from the UE, so serving it changes nothing.
        let scene = SceneConfig {
            n_rb: 8,
            airs: vec![AirsConfig {
                pos: [400.0, 0.0, 10.0],
                rot: [0.0, 0.0, PI],
                grid: (2, 2),
                ..Default::default()
            }],
            ..Default::default()
        };
        let ue = UePos::new(450.0, 5.0, 1.5);
        let spec = FadingSpec { n_large: 2, n_small: 20, seed: 3, ..Default::default() };
        let none = ergodic_se_estimate(&scene, &ue, None, PhaseScheme::Mccm, &spec).unwrap();
        let served = ergodic_se_estimate(&scene, &ue, Some(0), PhaseScheme::Mccm, &spec).unwrap();
        assert!((none.mean - served.mean).abs() <= 3.0 * none.std_err.max(1e-12));
    }

    #[test]
    fn rb_permutation_invariance() {
        let scene = SceneConfig {
            n_rb: 6,
            airs: vec![AirsConfig {
                pos: [60.0, 40.0, 10.0],
                rot: [0.0, 0.0, PI],
                grid: (2, 2),
                ..Default::default()
            }],
            ..Default::default()
        };
        let ue = UePos::new(30.0, 50.0, 1.5);
        let spec = FadingSpec { n_large: 1, n_small: 4, seed: 5, ..Default::default() };
        let lr = sample_links(&scene, &ue, &spec).unwrap();
        let mut perm = lr.clone();
        let order = [3usize, 0, 5, 1, 4, 2];
        let w = lr.n_elem[0];
        for r in 0..lr.n_real {
            for (s_new, &s_old) in order.iter().enumerate() {
                perm.direct[r * 6 + s_new] = lr.direct(r, s_old);
                let dst = (r * 6 + s_new) * w;
                perm.cascade_elem[0][dst..dst + w].copy_from_slice(lr.cascade(0, r, s_old));
                perm.airs_ue_norm_sq[r * 6 + s_new] = lr.norm_sq(r, s_old, 0);
                perm.incident_sq[r * 6 + s_new] = lr.incident(r, s_old, 0);
            }
        }
        for serving in [None, Some(0)] {
            let a = UeEval::from_links(&scene, &ue, &lr, PhaseScheme::Mccm).unwrap().se(serving).mean;
            let b = UeEval::from_links(&scene, &ue, &perm, PhaseScheme::Mccm).unwrap().se(serving).mean;
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
