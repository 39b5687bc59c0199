//! JSONL training records for LPS-Net and SE-Net.
//!
//! LPS lines: `{"features": [15], "cdf_direct": [16], "cdf_link": [16],
//! "cdf_noise": [16], "mask": [48 bools]}`. Signal CDFs are channel power
//! gains in dB (the cascaded one includes the amplification factor); the
//! noise CDF is the dynamic-noise power reaching the UE in dBm.
//!
//! SE lines: `{"cdfs": [[16], ...], "cats": [...], "se": x}` with the direct
//! CDF first, then one signal CDF per AIRS (category 2 for the serving AIRS,
//! 3 otherwise), then one noise CDF per AIRS. Invalid quantiles hold the
//! −300 dB sentinel.

use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::quantile::{quantile_cdf, QuantileCdf, N_QUANTILES};
use super::{PhaseScheme, UeEval, UeSampler};
use crate::channel::FadingSpec;
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::scene::{RoleFlag, SceneConfig, UePos};
use crate::units::{lin_to_db, mw_to_dbm};

pub const N_FEATURES: usize = 15;
pub const CAT_DIRECT: u8 = 1;
pub const CAT_CASCADED: u8 = 2;
pub const CAT_SCATTERED: u8 = 3;
pub const CAT_NOISE: u8 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LpsWire", try_from = "LpsWire")]
pub struct LpsRecord {
    pub features: Vec<f64>,
    pub cdf_direct: QuantileCdf,
    pub cdf_link: QuantileCdf,
    pub cdf_noise: QuantileCdf,
}

impl LpsRecord {
    pub fn mask48(&self) -> [bool; 3 * N_QUANTILES] {
        let mut m = [false; 3 * N_QUANTILES];
        m[..16].copy_from_slice(&self.cdf_direct.mask);
        m[16..32].copy_from_slice(&self.cdf_link.mask);
        m[32..].copy_from_slice(&self.cdf_noise.mask);
        m
    }

    pub fn quantiles48(&self) -> [f64; 3 * N_QUANTILES] {
        let mut q = [0.0; 3 * N_QUANTILES];
        q[..16].copy_from_slice(&self.cdf_direct.q_db);
        q[16..32].copy_from_slice(&self.cdf_link.q_db);
        q[32..].copy_from_slice(&self.cdf_noise.q_db);
        q
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpsWire {
    features: Vec<f64>,
    cdf_direct: [f64; N_QUANTILES],
    cdf_link: [f64; N_QUANTILES],
    cdf_noise: [f64; N_QUANTILES],
    mask: Vec<bool>,
}

impl From<LpsRecord> for LpsWire {
    fn from(r: LpsRecord) -> Self {
        LpsWire {
            mask: r.mask48().to_vec(),
            features: r.features,
            cdf_direct: r.cdf_direct.q_db,
            cdf_link: r.cdf_link.q_db,
            cdf_noise: r.cdf_noise.q_db,
        }
    }
}

impl TryFrom<LpsWire> for LpsRecord {
    type Error = String;
    fn try_from(w: LpsWire) -> std::result::Result<Self, String> {
        if w.features.len() != N_FEATURES {
            return Err(format!("expected {N_FEATURES} features, got {}", w.features.len()));
        }
        if w.mask.len() != 3 * N_QUANTILES {
            return Err(format!("expected 48 mask bits, got {}", w.mask.len()));
        }
        let cdf = |q: [f64; N_QUANTILES], m: &[bool]| {
            let mut mask = [false; N_QUANTILES];
            mask.copy_from_slice(m);
            QuantileCdf { q_db: q, mask }
        };
        Ok(LpsRecord {
            features: w.features,
            cdf_direct: cdf(w.cdf_direct, &w.mask[..16]),
            cdf_link: cdf(w.cdf_link, &w.mask[16..32]),
            cdf_noise: cdf(w.cdf_noise, &w.mask[32..]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SeWire", try_from = "SeWire")]
pub struct SeRecord {
    pub cdfs: Vec<QuantileCdf>,
    pub cats: Vec<u8>,
    pub se: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeWire {
    cdfs: Vec<[f64; N_QUANTILES]>,
    cats: Vec<u8>,
    se: f64,
}

impl From<SeRecord> for SeWire {
    fn from(r: SeRecord) -> Self {
        SeWire {
            cdfs: r.cdfs.iter().map(|c| c.q_db).collect(),
            cats: r.cats,
            se: r.se,
        }
    }
}

impl TryFrom<SeWire> for SeRecord {
    type Error = String;
    fn try_from(w: SeWire) -> std::result::Result<Self, String> {
        if w.cdfs.len() != w.cats.len() {
            return Err(format!("{} CDFs but {} categories", w.cdfs.len(), w.cats.len()));
        }
        Ok(SeRecord {
            cdfs: w.cdfs.into_iter().map(QuantileCdf::from_values).collect(),
            cats: w.cats,
            se: w.se,
        })
    }
}

/// LPS-Net input features for UE `ue` and AIRS `i` in role `role`.
pub fn lps_features(scene: &SceneConfig, ue: &UePos, i: usize, role: RoleFlag) -> [f64; N_FEATURES] {
    let a = &scene.airs[i];
    [
        ue.pos[0],
        ue.pos[1],
        scene.bs_power_dbm,
        a.pos[0],
        a.pos[1],
        a.pos[2],
        a.elem_gain_dbi,
        a.rot[0],
        a.rot[1],
        a.rot[2],
        a.grid.0 as f64,
        a.grid.1 as f64,
        a.amp_power_dbm,
        mw_to_dbm(scene.sigma_v_sq_mw(i)),
        role.as_f64(),
    ]
}

fn gain_cdf(v: impl Iterator<Item = f64>) -> Result<QuantileCdf> {
    let db: Vec<f64> = v.map(lin_to_db).collect();
    quantile_cdf(&db)
}

fn ue_eval(scene: &SceneConfig, ue: &UePos, spec: &FadingSpec) -> Result<UeEval> {
    let ev = UeEval::new(scene, ue, PhaseScheme::Mccm, spec)?;
    let n = ev.n_real * ev.n_rb;
    if n < N_QUANTILES {
        return Err(Error::TooFewSamples(n));
    }
    Ok(ev)
}

/// The `2I` LPS records of one UE: for each AIRS, role 1 then role 0.
pub fn lps_records_for_ue(scene: &SceneConfig, ue: &UePos, spec: &FadingSpec) -> Result<Vec<LpsRecord>> {
    let ev = ue_eval(scene, ue, spec)?;
    lps_records_from_eval(scene, ue, &ev)
}

pub(crate) fn lps_records_from_eval(scene: &SceneConfig, ue: &UePos, ev: &UeEval) -> Result<Vec<LpsRecord>> {
    let direct = gain_cdf(ev.direct.iter().map(|h| h.norm_sqr()))?;
    let mut out = Vec::with_capacity(2 * ev.n_airs());
    for i in 0..ev.n_airs() {
        let noise = gain_cdf(ev.noise[i].iter().copied())?;
        for role in [RoleFlag::Cascaded, RoleFlag::Scattered] {
            let src = match role {
                RoleFlag::Cascaded => &ev.beam[i],
                RoleFlag::Scattered => &ev.scatter[i],
            };
            out.push(LpsRecord {
                features: lps_features(scene, ue, i, role).to_vec(),
                cdf_direct: direct,
                cdf_link: gain_cdf(src.iter().map(|c| c.norm_sqr()))?,
                cdf_noise: noise,
            });
        }
    }
    Ok(out)
}

/// SE record for `ue` with the given serving AIRS; the label is the
/// ergodic SE with MCCM phases on the same draws.
pub fn se_record_for_ue(
    scene: &SceneConfig,
    ue: &UePos,
    serving: Option<usize>,
    spec: &FadingSpec,
) -> Result<SeRecord> {
    let ev = ue_eval(scene, ue, spec)?;
    se_record_from_eval(&ev, serving)
}

pub(crate) fn se_record_from_eval(ev: &UeEval, serving: Option<usize>) -> Result<SeRecord> {
    let n_airs = ev.n_airs();
    let mut cdfs = Vec::with_capacity(2 * n_airs + 1);
    let mut cats = Vec::with_capacity(2 * n_airs + 1);
    cdfs.push(gain_cdf(ev.direct.iter().map(|h| h.norm_sqr()))?);
    cats.push(CAT_DIRECT);
    for i in 0..n_airs {
        let (src, cat) = if serving == Some(i) {
            (&ev.beam[i], CAT_CASCADED)
        } else {
            (&ev.scatter[i], CAT_SCATTERED)
        };
        cdfs.push(gain_cdf(src.iter().map(|c| c.norm_sqr()))?);
        cats.push(cat);
    }
    for i in 0..n_airs {
        cdfs.push(gain_cdf(ev.noise[i].iter().copied())?);
        cats.push(CAT_NOISE);
    }
    Ok(SeRecord {
        cdfs,
        cats,
        se: ev.se(serving).mean,
    })
}

/// Number of UEs processed per parallel batch while streaming to the sink.
const BATCH: usize = 64;

fn write_lines<W: Write>(sink: &mut W, lines: &[String]) -> Result<()> {
    for l in lines {
        sink.write_all(l.as_bytes())
            .and_then(|_| sink.write_all(b"\n"))
            .map_err(|e| Error::io("writing dataset", e))?;
    }
    Ok(())
}

/// Writes `n_records` LPS lines. Record `k` belongs to UE `k / 2I`, AIRS
/// `(k mod 2I) / 2`, with role 1 on even `k`.
pub fn gen_lps_dataset<W: Write>(
    scene: &SceneConfig,
    sampler: &UeSampler,
    n_records: usize,
    spec: &FadingSpec,
    sink: &mut W,
) -> Result<usize> {
    let per_ue = 2 * scene.n_airs();
    if per_ue == 0 {
        return Err(Error::invalid("LPS records need at least one AIRS"));
    }
    let n_ues = n_records.div_ceil(per_ue);
    let mut written = 0;
    for start in (0..n_ues).step_by(BATCH) {
        let end = (start + BATCH).min(n_ues);
        let groups: Vec<Vec<String>> = (start..end)
            .into_par_iter()
            .map(|g| {
                let ue = sampler.sample(scene, spec.seed, g as u64);
                let recs = lps_records_for_ue(scene, &ue, spec)?;
                let take = (n_records - g * per_ue).min(per_ue);
                recs.iter()
                    .take(take)
                    .map(|r| serde_json::to_string(r).map_err(Error::from))
                    .collect()
            })
            .collect::<Result<_>>()?;
        for g in &groups {
            write_lines(sink, g)?;
            written += g.len();
        }
    }
    sink.flush().map_err(|e| Error::io("writing dataset", e))?;
    Ok(written)
}

/// Serving choice of SE record `k`: uniform over {none, 0, …, I−1}.
pub fn se_record_serving(n_airs: usize, seed: u64, k: u64) -> Option<usize> {
    let mut r = rng::stream(seed, &[tag::SERVING, k]);
    match r.random_range(0..=n_airs) {
        0 => None,
        i => Some(i - 1),
    }
}

pub fn gen_se_dataset<W: Write>(
    scene: &SceneConfig,
    sampler: &UeSampler,
    n_records: usize,
    spec: &FadingSpec,
    sink: &mut W,
) -> Result<usize> {
    let mut written = 0;
    for start in (0..n_records).step_by(BATCH) {
        let end = (start + BATCH).min(n_records);
        let lines: Vec<String> = (start..end)
            .into_par_iter()
            .map(|k| {
                let ue = sampler.sample(scene, spec.seed, k as u64);
                let serving = se_record_serving(scene.n_airs(), spec.seed, k as u64);
                let rec = se_record_for_ue(scene, &ue, serving, spec)?;
                Ok(serde_json::to_string(&rec)?)
            })
            .collect::<Result<_>>()?;
        write_lines(sink, &lines)?;
        written += lines.len();
    }
    sink.flush().map_err(|e| Error::io("writing dataset", e))?;
    Ok(written)
}

/// Reads one JSON record per non-empty line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("reading JSONL", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::ConfigParse {
            path: format!("line {}", n + 1),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::AirsConfig;
    use std::f64::consts::PI;

    fn scene() -> SceneConfig {
        SceneConfig {
            n_rb: 8,
            airs: vec![
                AirsConfig {
                    pos: [80.0, 40.0, 10.0],
                    rot: [0.0, 0.0, PI],
                    grid: (4, 4),
                    ..Default::default()
                },
                AirsConfig {
                    pos: [-60.0, 80.0, 10.0],
                    rot: [0.0, 0.0, -PI / 4.0],
                    grid: (3, 3),
                    ..Default::default()
                },
            ],
            ..Default::default()
        }
    }

    fn spec(seed: u64) -> FadingSpec {
        FadingSpec {
            n_large: 2,
            n_small: 10,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn one_lps_record_structure() {
        let mut buf = Vec::new();
        let n = gen_lps_dataset(&scene(), &UeSampler::default(), 1, &spec(1), &mut buf).unwrap();
        assert_eq!(n, 1);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["features"].as_array().unwrap().len(), 15);
        for k in ["cdf_direct", "cdf_link", "cdf_noise"] {
            assert_eq!(v[k].as_array().unwrap().len(), 16);
        }
        assert_eq!(v["mask"].as_array().unwrap().len(), 48);
        let rec: LpsRecord = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(rec.features[14], 1.0);
        assert_eq!(serde_json::to_string(&rec).unwrap(), text.trim());
    }

    #[test]
    fn lps_dataset_is_byte_deterministic() {
        let run = || {
            let mut b = Vec::new();
            gen_lps_dataset(&scene(), &UeSampler::default(), 7, &spec(4), &mut b).unwrap();
            b
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(String::from_utf8(a).unwrap().lines().count(), 7);
    }

    #[test]
    fn cascaded_dominates_scattered() {
        // UE in front of AIRS 0, which faces the BS side.
        let ue = UePos::new(50.0, 20.0, 1.5);
        for seed in 0..3 {
            let recs = lps_records_for_ue(&scene(), &ue, &spec(seed)).unwrap();
            let (cas, sca) = (&recs[0].cdf_link, &recs[1].cdf_link);
            for k in 0..16 {
                if cas.mask[k] && sca.mask[k] {
                    assert!(cas.q_db[k] >= sca.q_db[k], "seed {seed} k {k}");
                }
            }
            assert_eq!(recs[0].cdf_noise, recs[1].cdf_noise);
        }
    }

    #[test]
    fn se_records_structure_and_bounds() {
        let sc = scene();
        let mut buf = Vec::new();
        assert_eq!(gen_se_dataset(&sc, &UeSampler::default(), 10, &spec(2), &mut buf).unwrap(), 10);
        let recs: Vec<SeRecord> = read_jsonl(&buf[..]).unwrap();
        assert_eq!(recs.len(), 10);
        for (k, r) in recs.iter().enumerate() {
            assert_eq!(r.cdfs.len(), 2 * sc.n_airs() + 1);
            assert_eq!(r.cats.iter().filter(|&&c| c == CAT_DIRECT).count(), 1);
            assert_eq!(r.cats.iter().filter(|&&c| c == CAT_NOISE).count(), sc.n_airs());
            let serving = se_record_serving(sc.n_airs(), 2, k as u64);
            let n_cas = r.cats.iter().filter(|&&c| c == CAT_CASCADED).count();
            assert_eq!(n_cas, usize::from(serving.is_some()));
            let ue = UeSampler::default().sample(&sc, 2, k as u64);
            let ev = UeEval::new(&sc, &ue, PhaseScheme::Mccm, &spec(2)).unwrap();
            assert!(r.se >= 0.0 && r.se <= (1.0 + ev.max_snr(serving)).log2() + 1e-12);
        }
    }
}
