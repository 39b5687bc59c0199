//! AIRS amplification sizing and phase configuration (MCCM, LoS steering,
//! random).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::channel::LinkRealizations;
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::scene::{dist, SceneConfig, UePos};

const POWER_ITER_TOL: f64 = 1e-9;
const POWER_ITER_CAP: usize = 500;
const TINY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub phases: Vec<C64>,
    pub amp: f64,
}

impl PhaseConfig {
    /// Combined cascade `F · Σ_w φ_w a_w`.
    pub fn combine(&self, a: &[C64]) -> C64 {
        combine(&self.phases, a) * self.amp
    }
}

#[inline]
pub fn combine(phases: &[C64], a: &[C64]) -> C64 {
    phases.iter().zip(a).map(|(p, x)| p * x).sum()
}

/// Largest common amplitude meeting the AIRS output-power budget.
pub fn amplification_factor(
    amp_power_mw: f64,
    incident_per_elem_mw: f64,
    w: usize,
    dyn_noise_band_mw: f64,
) -> Result<f64> {
    let denom = w as f64 * (incident_per_elem_mw + dyn_noise_band_mw);
    if !(denom > 0.0) {
        return Err(Error::NoIncidentPower);
    }
    Ok((amp_power_mw / denom).sqrt())
}

/// Accumulates the mean channel covariance `E[a aᴴ]` of cascade vectors.
/// Stored as a dense row-major `W×W` Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Mccm {
    w: usize,
    sum: Vec<C64>,
    count: usize,
}

impl Mccm {
    pub fn new(w: usize) -> Self {
        Self {
            w,
            sum: vec![C64::new(0.0, 0.0); w * w],
            count: 0,
        }
    }

    pub fn push(&mut self, a: &[C64]) {
        debug_assert_eq!(a.len(), self.w);
        // Upper triangle only; the lower half is filled on demand.
        for (j, aj) in a.iter().enumerate() {
            let row = &mut self.sum[j * self.w..(j + 1) * self.w];
            for k in j..self.w {
                row[k] += aj * a[k].conj();
            }
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The mean covariance, full matrix.
    pub fn matrix(&self) -> Vec<C64> {
        let w = self.w;
        let n = self.count.max(1) as f64;
        let mut m = vec![C64::new(0.0, 0.0); w * w];
        for j in 0..w {
            for k in j..w {
                let v = self.sum[j * w + k] / n;
                m[j * w + k] = v;
                m[k * w + j] = v.conj();
            }
        }
        m
    }

    /// Unit-modulus projection of the principal eigenvector.
    pub fn phases(&self) -> Result<Vec<C64>> {
        principal_phases(&self.matrix(), self.w)
    }
}

fn mat_vec(r: &[C64], w: usize, v: &[C64]) -> Vec<C64> {
    (0..w)
        .map(|j| r[j * w..(j + 1) * w].iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn vnorm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Principal eigenvector of a Hermitian PSD matrix by power iteration.
pub fn principal_eigenvector(r: &[C64], w: usize) -> Result<Vec<C64>> {
    let scale = r.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::DarkPanel);
    }
    let mut v = vec![C64::new(1.0, 0.0); w];
    let mut rv = mat_vec(r, w, &v);
    if vnorm(&rv) <= TINY * scale * (w as f64).sqrt() {
        let best = (0..w)
            .max_by(|&a, &b| r[a * w + a].re.total_cmp(&r[b * w + b].re))
            .unwrap_or(0);
        v = vec![C64::new(0.0, 0.0); w];
        v[best] = C64::new(1.0, 0.0);
        rv = mat_vec(r, w, &v);
    }
    for _ in 0..POWER_ITER_CAP {
        let n = vnorm(&rv);
        if !(n > 0.0) {
            break;
        }
        let next: Vec<C64> = rv.iter().map(|x| x / n).collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        v = next;
        if delta < POWER_ITER_TOL {
            break;
        }
        rv = mat_vec(r, w, &v);
    }
    Ok(v)
}

/// `φ_w = conj(u_w)/|u_w|`, with `1` where `|u_w|` vanishes.
pub fn project_unit(u: &[C64]) -> Vec<C64> {
    u.iter()
        .map(|x| {
            let m = x.norm();
            if m < TINY {
                C64::new(1.0, 0.0)
            } else {
                x.conj() / m
            }
        })
        .collect()
}

fn principal_phases(r: &[C64], w: usize) -> Result<Vec<C64>> {
    Ok(project_unit(&principal_eigenvector(r, w)?))
}

/// MCCM phases for AIRS `i`, averaging over all realizations and RBs.
pub fn mccm_phases(lr: &LinkRealizations, airs: usize) -> Result<Vec<C64>> {
    let w = lr.n_elem[airs];
    let mut acc = Mccm::new(w);
    for r in 0..lr.n_real {
        for s in 0..lr.n_rb {
            acc.push(lr.cascade(airs, r, s));
        }
    }
    acc.phases()
}

/// Phases that co-phase the geometric BS→element→UE paths, normalized so
/// the first element has phase zero.
pub fn los_phases(scene: &SceneConfig, airs: usize, ue: &UePos) -> Vec<C64> {
    let a = &scene.airs[airs];
    let k = 2.0 * PI / scene.wavelength();
    let bs = scene.bs_pos();
    let raw: Vec<C64> = a
        .element_positions(scene.wavelength())
        .iter()
        .map(|e| C64::from_polar(1.0, k * (dist(&bs, e) + dist(e, &ue.pos))))
        .collect();
    let ref0 = raw[0].conj();
    raw.iter().map(|p| (p * ref0).unscale((p * ref0).norm())).collect()
}

/// I.i.d. uniform unit phases, deterministic in `seed`.
pub fn random_phases(w: usize, seed: u64) -> Vec<C64> {
    let mut rng = rng::stream(seed, &[tag::RANDOM_PHASE]);
    random_phases_from(&mut rng, w)
}

pub fn random_phases_from<R: Rng>(rng: &mut R, w: usize) -> Vec<C64> {
    (0..w)
        .map(|_| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)))
        .collect()
}
