//! Scenario files.
//!
//! ```json
//! {
//!   "radio": {"bs_height_m": 25, "carrier_freq_hz": 3.5e9, "bandwidth_hz": 2e7,
//!             "n_rb": 48, "n_slots": 4, "frame_time_s": 0.01,
//!             "bs_power_dbm": 10, "noise_psd_dbm_hz": -174},
//!   "airs": [{"pos_m": [80, 40, 10], "rot_deg": [0, 0, 180], "grid": [4, 4],
//!             "elem_gain_dbi": 6, "erp_exponent": 1, "amp_power_dbm": 10,
//!             "dyn_noise_psd_dbm_hz": -160, "role": 1}],
//!   "ues": [{"pos_m": [60, 60, 1.5]}],
//!   "fading": {"n_large": 4, "n_small": 50, "rician_k_db": "inf", ...},
//!   "ue_sampler": {"r_min_m": 20, "r_max_m": 300, "height_m": 1.5}
//! }
//! ```
//!
//! Every key except `radio` is optional and every field has a default.
//! Angles are degrees in files and radians in memory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::FadingSpec;
use crate::error::{Error, Result, Violation};
use crate::oracle::UeSampler;
use crate::scene::{AirsConfig, RoleFlag, SceneConfig, UePos, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RadioFile {
    bs_height_m: f64,
    carrier_freq_hz: f64,
    bandwidth_hz: f64,
    n_rb: usize,
    n_slots: usize,
    frame_time_s: f64,
    bs_power_dbm: f64,
    noise_psd_dbm_hz: f64,
}

impl Default for RadioFile {
    fn default() -> Self {
        let d = SceneConfig::default();
        Self {
            bs_height_m: d.bs_height,
            carrier_freq_hz: d.carrier_freq,
            bandwidth_hz: d.bandwidth,
            n_rb: d.n_rb,
            n_slots: d.n_slots,
            frame_time_s: d.frame_time,
            bs_power_dbm: d.bs_power_dbm,
            noise_psd_dbm_hz: d.noise_psd_dbm_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AirsFile {
    pos_m: Vec3,
    rot_deg: Vec3,
    grid: (usize, usize),
    elem_gain_dbi: f64,
    erp_exponent: f64,
    amp_power_dbm: f64,
    dyn_noise_psd_dbm_hz: f64,
    role: RoleFlag,
}

impl Default for AirsFile {
    fn default() -> Self {
        AirsFile::from(&AirsConfig::default())
    }
}

impl From<&AirsConfig> for AirsFile {
    fn from(a: &AirsConfig) -> Self {
        Self {
            pos_m: a.pos,
            rot_deg: a.rot.map(f64::to_degrees),
            grid: a.grid,
            elem_gain_dbi: a.elem_gain_dbi,
            erp_exponent: a.erp_exponent,
            amp_power_dbm: a.amp_power_dbm,
            dyn_noise_psd_dbm_hz: a.dyn_noise_psd_dbm_hz,
            role: a.role_flag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UeFile {
    pos_m: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    radio: RadioFile,
    #[serde(default)]
    airs: Vec<AirsFile>,
    #[serde(default)]
    ues: Vec<UeFile>,
    #[serde(default)]
    fading: FadingSpec,
    #[serde(default)]
    ue_sampler: UeSampler,
}

/// A parsed scenario: scene geometry plus the fading and UE-sampling setup.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub scene: SceneConfig,
    pub fading: FadingSpec,
    pub sampler: UeSampler,
}

impl Scenario {
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = self.scene.violations();
        if let Err(Error::InvalidConfig(f)) = self.fading.validate() {
            v.extend(f);
        }
        v.extend(self.sampler.violations());
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Parses a scenario document. Structural errors carry the JSON path;
    /// value-range checks are left to [`Scenario::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::ConfigParse {
                path,
                message: e.into_inner().to_string(),
            }
        })?;
        Ok(file.into())
    }

    /// Reads, parses and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let s = Self::parse(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }
}

impl From<ScenarioFile> for Scenario {
    fn from(f: ScenarioFile) -> Self {
        let r = f.radio;
        let scene = SceneConfig {
            bs_height: r.bs_height_m,
            carrier_freq: r.carrier_freq_hz,
            bandwidth: r.bandwidth_hz,
            n_rb: r.n_rb,
            n_slots: r.n_slots,
            frame_time: r.frame_time_s,
            bs_power_dbm: r.bs_power_dbm,
            noise_psd_dbm_hz: r.noise_psd_dbm_hz,
            airs: f
                .airs
                .into_iter()
                .map(|a| AirsConfig {
                    pos: a.pos_m,
                    rot: a.rot_deg.map(f64::to_radians),
                    grid: a.grid,
                    elem_gain_dbi: a.elem_gain_dbi,
                    erp_exponent: a.erp_exponent,
                    amp_power_dbm: a.amp_power_dbm,
                    dyn_noise_psd_dbm_hz: a.dyn_noise_psd_dbm_hz,
                    role_flag: a.role,
                })
                .collect(),
            ues: f.ues.into_iter().map(|u| UePos { pos: u.pos_m }).collect(),
        };
        Scenario {
            scene,
            fading: f.fading,
            sampler: f.ue_sampler,
        }
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let c = &s.scene;
        ScenarioFile {
            radio: RadioFile {
                bs_height_m: c.bs_height,
                carrier_freq_hz: c.carrier_freq,
                bandwidth_hz: c.bandwidth,
                n_rb: c.n_rb,
                n_slots: c.n_slots,
                frame_time_s: c.frame_time,
                bs_power_dbm: c.bs_power_dbm,
                noise_psd_dbm_hz: c.noise_psd_dbm_hz,
            },
            airs: c.airs.iter().map(AirsFile::from).collect(),
            ues: c.ues.iter().map(|u| UeFile { pos_m: u.pos }).collect(),
            fading: s.fading.clone(),
            ue_sampler: s.sampler.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "radio": {"n_rb": 12, "n_slots": 2},
        "airs": [{"pos_m": [80, 40, 10], "rot_deg": [0, 0, 90], "grid": [3, 2], "role": 0}],
        "ues": [{"pos_m": [60, 60, 1.5]}],
        "fading": {"n_large": 2, "rician_k_db": "inf"}
    }"#;

    #[test]
    fn parses_with_defaults_and_degrees() {
        let s = Scenario::parse(DOC).unwrap();
        s.validate().unwrap();
        assert_eq!(s.scene.n_rb, 12);
        assert_eq!(s.scene.carrier_freq, 3.5e9);
        assert!((s.scene.airs[0].rot[2] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(s.scene.airs[0].role_flag, RoleFlag::Scattered);
        assert_eq!(s.scene.airs[0].amp_power_dbm, 10.0);
        assert!(s.fading.rician_k_db.is_infinite());
        assert_eq!(s.fading.n_small, FadingSpec::default().n_small);
    }

    #[test]
    fn round_trips_through_json() {
        let s = Scenario::parse(DOC).unwrap();
        let back = Scenario::parse(&s.to_json()).unwrap();
        assert_eq!(back.scene.n_rb, s.scene.n_rb);
        assert_eq!(back.fading, s.fading);
        for (a, b) in back.scene.airs[0].rot.iter().zip(&s.scene.airs[0].rot) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn parse_errors_cite_the_path() {
        let bad = r#"{"radio": {}, "airs": [{"grid": [2, "x"]}]}"#;
        match Scenario::parse(bad) {
            Err(Error::ConfigParse { path, .. }) => assert!(path.starts_with("airs[0].grid"), "{path}"),
            other => panic!("{other:?}"),
        }
        let unknown = r#"{"radio": {"n_rbs": 3}}"#;
        match Scenario::parse(unknown) {
            Err(Error::ConfigParse { path, .. }) => assert!(path.starts_with("radio"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_grid_is_named() {
        let bad = r#"{"radio": {}, "airs": [{"grid": [0, 4]}]}"#;
        let s = Scenario::parse(bad).unwrap();
        let v = s.violations();
        assert!(v.iter().any(|x| x.path == "airs[0].grid"), "{v:?}");
    }
}
