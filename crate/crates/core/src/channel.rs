//! Stochastic link generation.
//!
//! Simplified urban-macro model standing in for a ray-based generator:
//!
//! * Pathloss: LoS `28.0 + 22 log10(d) + 20 log10(f_GHz)`, NLoS
//!   `32.4 + 30 log10(d) + 20 log10(f_GHz)` (d in meters, 3D, floored at 1 m).
//! * Log-normal shadowing drawn once per large-scale realization.
//! * Frequency selectivity from a tapped-delay line with an exponential
//!   power-delay profile whose RMS delay spread equals `rms_delay_spread_s`.
//!   RB `s` sees `Σ_n c_n e^{-j2π f_s τ_n}` at its center offset `f_s`.
//! * BS→UE and AIRS→UE are Rayleigh. BS→AIRS is Rician with the LoS part
//!   phased by exact element distances.
//! * Each tap of an AIRS-side link comes from a point scatterer placed at the
//!   link range along the geometric direction perturbed by a Gaussian angle
//!   offset (drawn per large-scale realization). Elements see the tap with
//!   spherical-wavefront phases, so all elements share the small-scale tap
//!   gains and differ only by geometry.
//! * The element radiation pattern is applied per element, at the element's
//!   geometric direction toward the BS (incidence) and the UE (departure).

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::scene::{dist, erp_gain, local_angles, SceneConfig, UePos, Vec3};
use crate::units::db_to_lin;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingSpec {
    pub n_large: usize,
    pub n_small: usize,
    pub n_taps: usize,
    pub rms_delay_spread_s: f64,
    /// Rician K of the BS→AIRS links in dB; `inf` gives pure LoS.
    #[serde(serialize_with = "ser_k", deserialize_with = "de_k")]
    pub rician_k_db: f64,
    pub shadow_sigma_los_db: f64,
    pub shadow_sigma_nlos_db: f64,
    /// Standard deviation of scatterer azimuth offsets; elevation uses half.
    pub angle_spread_deg: f64,
    /// Freeze all randomness: unit-power taps with fixed phases, no
    /// shadowing, no angle offsets.
    pub deterministic: bool,
    pub seed: u64,
}

impl Default for FadingSpec {
    fn default() -> Self {
        Self {
            n_large: 4,
            n_small: 50,
            n_taps: 8,
            rms_delay_spread_s: 100e-9,
            rician_k_db: 10.0,
            shadow_sigma_los_db: 4.0,
            shadow_sigma_nlos_db: 6.0,
            angle_spread_deg: 10.0,
            deterministic: false,
            seed: 0,
        }
    }
}

fn ser_k<S: Serializer>(k: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if k.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*k)
    }
}

fn de_k<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum K {
        Num(f64),
        Str(String),
    }
    match K::deserialize(d)? {
        K::Num(v) => Ok(v),
        K::Str(s) if s == "inf" => Ok(f64::INFINITY),
        K::Str(s) => Err(serde::de::Error::custom(format!(
            "expected a number or \"inf\", got {s:?}"
        ))),
    }
}

impl FadingSpec {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.n_large < 1 {
            v.push(crate::error::Violation::new("fading.n_large", "must be >= 1"));
        }
        if self.n_small < 1 {
            v.push(crate::error::Violation::new("fading.n_small", "must be >= 1"));
        }
        if self.n_taps < 1 {
            v.push(crate::error::Violation::new("fading.n_taps", "must be >= 1"));
        }
        if !(self.rms_delay_spread_s >= 0.0) {
            v.push(crate::error::Violation::new(
                "fading.rms_delay_spread_s",
                "must be >= 0",
            ));
        }
        if self.rician_k_db.is_nan() {
            v.push(crate::error::Violation::new("fading.rician_k_db", "must not be NaN"));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    pub fn n_realizations(&self) -> usize {
        self.n_large * self.n_small
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub fn pathloss_los_db(d: f64, fc_hz: f64) -> f64 {
    28.0 + 22.0 * d.max(1.0).log10() + 20.0 * (fc_hz / 1e9).log10()
}

pub fn pathloss_nlos_db(d: f64, fc_hz: f64) -> f64 {
    32.4 + 30.0 * d.max(1.0).log10() + 20.0 * (fc_hz / 1e9).log10()
}

/// Exponential power-delay profile with the requested RMS delay spread.
/// Returns `(delays_s, powers)` with powers summing to one.
pub fn tap_profile(n_taps: usize, rms_delay_spread_s: f64) -> (Vec<f64>, Vec<f64>) {
    if n_taps == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let raw: Vec<f64> = (0..n_taps)
        .map(|n| (-3.0 * n as f64 / n_taps as f64).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let powers: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let mean: f64 = powers.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let var: f64 = powers
        .iter()
        .enumerate()
        .map(|(n, p)| p * (n as f64 - mean).powi(2))
        .sum();
    let spacing = rms_delay_spread_s / var.sqrt();
    let delays = (0..n_taps).map(|n| n as f64 * spacing).collect();
    (delays, powers)
}

/// Channel draws for one UE. Index layout: realization `r`, RB `s`, AIRS `i`,
/// element `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRealizations {
    pub n_real: usize,
    pub n_rb: usize,
    pub n_elem: Vec<usize>,
    /// `h_{b,u,s}`, `[r][s]`.
    pub direct: Vec<C64>,
    /// Per AIRS, element-wise cascade `h_{i,u,s}[w] · h_{b,i,s}[w]`, `[r][s][w]`.
    pub cascade_elem: Vec<Vec<C64>>,
    /// `‖h_{i,u,s}‖²`, `[r][s][i]`.
    pub airs_ue_norm_sq: Vec<f64>,
    /// Mean over elements of `|h_{b,i,s}[w]|²`, `[r][s][i]`.
    pub incident_sq: Vec<f64>,
    pub seed: u64,
}

impl LinkRealizations {
    fn empty(n_rb: usize, n_elem: Vec<usize>, seed: u64) -> Self {
        let n_airs = n_elem.len();
        Self {
            n_real: 0,
            n_rb,
            cascade_elem: vec![Vec::new(); n_airs],
            n_elem,
            direct: Vec::new(),
            airs_ue_norm_sq: Vec::new(),
            incident_sq: Vec::new(),
            seed,
        }
    }

    pub fn n_airs(&self) -> usize {
        self.n_elem.len()
    }

    #[inline]
    pub fn direct(&self, r: usize, s: usize) -> C64 {
        self.direct[r * self.n_rb + s]
    }

    #[inline]
    pub fn cascade(&self, i: usize, r: usize, s: usize) -> &[C64] {
        let w = self.n_elem[i];
        let off = (r * self.n_rb + s) * w;
        &self.cascade_elem[i][off..off + w]
    }

    #[inline]
    pub fn norm_sq(&self, r: usize, s: usize, i: usize) -> f64 {
        self.airs_ue_norm_sq[(r * self.n_rb + s) * self.n_airs() + i]
    }

    #[inline]
    pub fn incident(&self, r: usize, s: usize, i: usize) -> f64 {
        self.incident_sq[(r * self.n_rb + s) * self.n_airs() + i]
    }

    pub fn append(&mut self, mut other: LinkRealizations) {
        assert_eq!(self.n_rb, other.n_rb);
        assert_eq!(self.n_elem, other.n_elem);
        self.n_real += other.n_real;
        self.direct.append(&mut other.direct);
        for (a, b) in self.cascade_elem.iter_mut().zip(other.cascade_elem.iter_mut()) {
            a.append(b);
        }
        self.airs_ue_norm_sq.append(&mut other.airs_ue_norm_sq);
        self.incident_sq.append(&mut other.incident_sq);
    }
}

/// Arithmetic means over realizations and RBs (linear power).
#[derive(Debug, Clone, PartialEq)]
pub struct MeanLinkPowers {
    pub direct: f64,
    /// Per AIRS, mean per-element incident power `E|h_{b,i,s}[w]|²`.
    pub incident_per_elem: Vec<f64>,
    /// Per AIRS, mean `‖h_{i,u,s}‖²`.
    pub airs_ue_norm_sq: Vec<f64>,
}

pub fn mean_link_powers(lr: &LinkRealizations) -> MeanLinkPowers {
    let n = (lr.n_real * lr.n_rb) as f64;
    let n_airs = lr.n_airs();
    let mut out = MeanLinkPowers {
        direct: 0.0,
        incident_per_elem: vec![0.0; n_airs],
        airs_ue_norm_sq: vec![0.0; n_airs],
    };
    if n == 0.0 {
        return out;
    }
    out.direct = lr.direct.iter().map(|h| h.norm_sqr()).sum::<f64>() / n;
    for (k, (&inc, &nsq)) in lr.incident_sq.iter().zip(&lr.airs_ue_norm_sq).enumerate() {
        out.incident_per_elem[k % n_airs] += inc;
        out.airs_ue_norm_sq[k % n_airs] += nsq;
    }
    for i in 0..n_airs {
        out.incident_per_elem[i] /= n;
        out.airs_ue_norm_sq[i] /= n;
    }
    out
}

/// Large-scale gains (dB, including shadowing) of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    pub direct_db: f64,
    pub bs_airs_db: Vec<f64>,
    pub airs_ue_db: Vec<f64>,
    /// Per AIRS, per tap scatterer positions on the AIRS→UE side.
    ue_scatterers: Vec<Vec<Vec3>>,
    /// Per AIRS, per tap scatterer positions on the BS→AIRS side.
    bs_scatterers: Vec<Vec<Vec3>>,
}

struct AirsGeometry {
    elems: Vec<Vec3>,
    /// `sqrt(ERP)` toward the BS, per element.
    amp_in: Vec<f64>,
    /// `sqrt(ERP)` toward the UE, per element.
    amp_out: Vec<f64>,
    /// Pure-LoS BS→element phasors `e^{-jk d_w}`.
    los_phase: Vec<C64>,
    center: Vec3,
    d_bs: f64,
    d_ue: f64,
    pl_bs_db: f64,
    pl_ue_db: f64,
}

/// Deterministic generator of link realizations for one UE.
pub struct LinkSampler<'a> {
    scene: &'a SceneConfig,
    spec: FadingSpec,
    ue: UePos,
    ue_key: u64,
    bs: Vec3,
    wavenumber: f64,
    tap_delays: Vec<f64>,
    tap_amps: Vec<f64>,
    /// `e^{-j2π f_s τ_n}`, `[s][n]`.
    rb_rot: Vec<C64>,
    pl_direct_db: f64,
    airs: Vec<AirsGeometry>,
}

const MIN_SEPARATION_M: f64 = 1e-6;

fn complex_gaussian<R: Rng>(rng: &mut R, power: f64) -> C64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

fn perturbed_point<R: Rng>(
    rng: &mut R,
    origin: &Vec3,
    target: &Vec3,
    range: f64,
    spread_rad: f64,
) -> Vec3 {
    let d = [target[0] - origin[0], target[1] - origin[1], target[2] - origin[2]];
    let az = d[1].atan2(d[0]);
    let el = d[2].atan2((d[0] * d[0] + d[1] * d[1]).sqrt());
    let daz: f64 = StandardNormal.sample(rng);
    let del: f64 = StandardNormal.sample(rng);
    let az = az + daz * spread_rad;
    let el = (el + del * spread_rad / 2.0).clamp(-1.5, 1.5);
    [
        origin[0] + range * el.cos() * az.cos(),
        origin[1] + range * el.cos() * az.sin(),
        origin[2] + range * el.sin(),
    ]
}

impl<'a> LinkSampler<'a> {
    pub fn new(scene: &'a SceneConfig, ue: &UePos, spec: &FadingSpec) -> Result<Self> {
        spec.validate()?;
        let bs = scene.bs_pos();
        if dist(&bs, &ue.pos) < MIN_SEPARATION_M {
            return Err(Error::CoincidentUe("the BS".into()));
        }
        let fc = scene.carrier_freq;
        let lambda = scene.wavelength();
        let k = 2.0 * std::f64::consts::PI / lambda;
        let (tap_delays, tap_powers) = tap_profile(spec.n_taps, spec.rms_delay_spread_s);
        let tap_amps = tap_powers.iter().map(|p| p.sqrt()).collect();
        let offsets = scene.rb_offsets();
        let mut rb_rot = Vec::with_capacity(offsets.len() * spec.n_taps);
        for f in &offsets {
            for tau in &tap_delays {
                rb_rot.push(C64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * tau));
            }
        }
        let mut airs = Vec::with_capacity(scene.airs.len());
        for (i, a) in scene.airs.iter().enumerate() {
            if dist(&a.pos, &ue.pos) < MIN_SEPARATION_M {
                return Err(Error::CoincidentUe(format!("AIRS {i}")));
            }
            let rot = a.rotation();
            let g = a.elem_gain_lin();
            let elems = a.element_positions(lambda);
            let mut amp_in = Vec::with_capacity(elems.len());
            let mut amp_out = Vec::with_capacity(elems.len());
            let mut los_phase = Vec::with_capacity(elems.len());
            for e in &elems {
                let gain = |p: &Vec3| -> f64 {
                    match local_angles(&rot, e, p) {
                        Ok((t, f)) => erp_gain(g, a.erp_exponent, t, f),
                        Err(_) => 0.0,
                    }
                };
                amp_in.push(gain(&bs).sqrt());
                amp_out.push(gain(&ue.pos).sqrt());
                los_phase.push(C64::from_polar(1.0, -k * dist(e, &bs)));
            }
            let d_bs = dist(&a.pos, &bs);
            let d_ue = dist(&a.pos, &ue.pos);
            airs.push(AirsGeometry {
                elems,
                amp_in,
                amp_out,
                los_phase,
                center: a.pos,
                d_bs,
                d_ue,
                pl_bs_db: pathloss_los_db(d_bs, fc),
                pl_ue_db: pathloss_nlos_db(d_ue, fc),
            });
        }
        Ok(Self {
            scene,
            spec: spec.clone(),
            ue: *ue,
            ue_key: rng::position_key(&ue.pos),
            bs,
            wavenumber: k,
            tap_delays,
            tap_amps,
            rb_rot,
            pl_direct_db: pathloss_nlos_db(dist(&bs, &ue.pos), fc),
            airs,
        })
    }

    pub fn spec(&self) -> &FadingSpec {
        &self.spec
    }

    pub fn ue_key(&self) -> u64 {
        self.ue_key
    }

    pub fn tap_delays(&self) -> &[f64] {
        &self.tap_delays
    }

    /// Large-scale parameters of realization block `l`. Independent of
    /// `n_small`.
    pub fn large_scale(&self, l: usize) -> LargeScale {
        let spec = &self.spec;
        let det = spec.deterministic;
        let spread = if det { 0.0 } else { spec.angle_spread_deg.to_radians() };
        let mut rng_ue = rng::stream(spec.seed, &[tag::LARGE_UE, self.ue_key, l as u64]);
        let shadow = |rng: &mut rng::StreamRng, sigma: f64| -> f64 {
            let z: f64 = StandardNormal.sample(rng);
            if det {
                0.0
            } else {
                z * sigma
            }
        };
        let direct_db = -self.pl_direct_db - shadow(&mut rng_ue, spec.shadow_sigma_nlos_db);
        let mut bs_airs_db = Vec::new();
        let mut airs_ue_db = Vec::new();
        let mut ue_scatterers = Vec::new();
        let mut bs_scatterers = Vec::new();
        for (i, g) in self.airs.iter().enumerate() {
            airs_ue_db.push(-g.pl_ue_db - shadow(&mut rng_ue, spec.shadow_sigma_nlos_db));
            ue_scatterers.push(
                (0..spec.n_taps)
                    .map(|_| perturbed_point(&mut rng_ue, &g.center, &self.ue.pos, g.d_ue, spread))
                    .collect(),
            );
            let mut rng_bs =
                rng::stream(spec.seed, &[tag::LARGE_BS_AIRS, i as u64, l as u64]);
            bs_airs_db.push(-g.pl_bs_db - shadow(&mut rng_bs, spec.shadow_sigma_los_db));
            bs_scatterers.push(
                (0..spec.n_taps)
                    .map(|_| perturbed_point(&mut rng_bs, &g.center, &self.bs, g.d_bs, spread))
                    .collect(),
            );
        }
        LargeScale {
            direct_db,
            bs_airs_db,
            airs_ue_db,
            ue_scatterers,
            bs_scatterers,
        }
    }

    fn draw_taps<R: Rng>(&self, rng: &mut R) -> Vec<C64> {
        if self.spec.deterministic {
            self.tap_amps.iter().map(|&a| C64::new(a, 0.0)).collect()
        } else {
            self.tap_amps
                .iter()
                .map(|&a| complex_gaussian(rng, a * a))
                .collect()
        }
    }

    /// Per-RB response `Σ_n c_n e^{-j2π f_s τ_n}`.
    fn rb_coeffs(&self, taps: &[C64]) -> Vec<C64> {
        let nt = taps.len();
        self.rb_rot
            .chunks_exact(nt)
            .map(|rot| rot.iter().zip(taps).map(|(r, c)| r * c).sum())
            .collect()
    }

    /// Element steering of each tap: `[n][w]`.
    fn steering(&self, scatterers: &[Vec3], geo: &AirsGeometry, amps: &[f64], scale: f64) -> Vec<Vec<C64>> {
        scatterers
            .iter()
            .map(|sc| {
                geo.elems
                    .iter()
                    .zip(amps)
                    .map(|(e, &a)| C64::from_polar(a * scale, -self.wavenumber * dist(e, sc)))
                    .collect()
            })
            .collect()
    }

    /// All `n_small` realizations of large-scale block `l`.
    pub fn sample_block(&self, l: usize) -> LinkRealizations {
        let spec = &self.spec;
        let n_rb = self.scene.n_rb;
        let n_airs = self.airs.len();
        let n_elem: Vec<usize> = self.airs.iter().map(|g| g.elems.len()).collect();
        let ls = self.large_scale(l);
        let mut out = LinkRealizations::empty(n_rb, n_elem.clone(), spec.seed);
        out.n_real = spec.n_small;
        out.direct.reserve(spec.n_small * n_rb);
        out.airs_ue_norm_sq.reserve(spec.n_small * n_rb * n_airs);
        out.incident_sq.reserve(spec.n_small * n_rb * n_airs);

        let direct_amp = db_to_lin(ls.direct_db).sqrt();
        let k_lin = db_to_lin(spec.rician_k_db);
        let (los_w, nlos_w) = if spec.rician_k_db.is_infinite() && spec.rician_k_db > 0.0 {
            (1.0, 0.0)
        } else {
            ((k_lin / (k_lin + 1.0)).sqrt(), (1.0 / (k_lin + 1.0)).sqrt())
        };

        let mut ue_steer = Vec::with_capacity(n_airs);
        let mut bs_steer = Vec::with_capacity(n_airs);
        let mut los = Vec::with_capacity(n_airs);
        for (i, g) in self.airs.iter().enumerate() {
            let amp_ue = db_to_lin(ls.airs_ue_db[i]).sqrt();
            let amp_bs = db_to_lin(ls.bs_airs_db[i]).sqrt();
            ue_steer.push(self.steering(&ls.ue_scatterers[i], g, &g.amp_out, amp_ue));
            bs_steer.push(self.steering(&ls.bs_scatterers[i], g, &g.amp_in, amp_bs * nlos_w));
            los.push(
                g.los_phase
                    .iter()
                    .zip(&g.amp_in)
                    .map(|(p, &a)| p * (a * amp_bs * los_w))
                    .collect::<Vec<C64>>(),
            );
        }

        let mut h_ue = Vec::new();
        let mut h_bs = Vec::new();
        for m in 0..spec.n_small {
            let mut rng_ue =
                rng::stream(spec.seed, &[tag::SMALL_UE, self.ue_key, l as u64, m as u64]);
            let direct_taps = self.draw_taps(&mut rng_ue);
            for c in self.rb_coeffs(&direct_taps) {
                out.direct.push(c * direct_amp);
            }
            let mut norm_block = vec![0.0; n_rb * n_airs];
            let mut inc_block = vec![0.0; n_rb * n_airs];
            for (i, g) in self.airs.iter().enumerate() {
                let w = g.elems.len();
                let ue_taps = self.draw_taps(&mut rng_ue);
                let mut rng_bs = rng::stream(
                    spec.seed,
                    &[tag::SMALL_BS_AIRS, i as u64, l as u64, m as u64],
                );
                let bs_taps = self.draw_taps(&mut rng_bs);
                let nt = spec.n_taps;
                for s in 0..n_rb {
                    let rot = &self.rb_rot[s * nt..(s + 1) * nt];
                    h_ue.clear();
                    h_ue.resize(w, C64::new(0.0, 0.0));
                    h_bs.clear();
                    h_bs.extend_from_slice(&los[i]);
                    for n in 0..nt {
                        let cu = ue_taps[n] * rot[n];
                        let cb = bs_taps[n] * rot[n];
                        for ((hu, hb), (su, sb)) in h_ue
                            .iter_mut()
                            .zip(h_bs.iter_mut())
                            .zip(ue_steer[i][n].iter().zip(&bs_steer[i][n]))
                        {
                            *hu += cu * su;
                            *hb += cb * sb;
                        }
                    }
                    let mut nsq = 0.0;
                    let mut isq = 0.0;
                    for (hu, hb) in h_ue.iter().zip(&h_bs) {
                        nsq += hu.norm_sqr();
                        isq += hb.norm_sqr();
                        out.cascade_elem[i].push(hu * hb);
                    }
                    norm_block[s * n_airs + i] = nsq;
                    inc_block[s * n_airs + i] = isq / w as f64;
                }
            }
            out.airs_ue_norm_sq.extend_from_slice(&norm_block);
            out.incident_sq.extend_from_slice(&inc_block);
        }
        out
    }
}

/// All `n_large · n_small` realizations for one UE, deterministic in
/// `(scene, ue, spec.seed)`.
pub fn sample_links(scene: &SceneConfig, ue: &UePos, spec: &FadingSpec) -> Result<LinkRealizations> {
    let sampler = LinkSampler::new(scene, ue, spec)?;
    let n_elem = scene.airs.iter().map(|a| a.n_elements()).collect();
    let mut all = LinkRealizations::empty(scene.n_rb, n_elem, spec.seed);
    for l in 0..spec.n_large {
        all.append(sampler.sample_block(l));
    }
    Ok(all)
}
