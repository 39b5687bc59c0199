//! Scene geometry: BS/AIRS/UE placement, panel rotations and the element
//! radiation pattern.
//!
//! A panel's default orientation is the Y-O-Z plane with its broadside along
//! +X. Rotations are applied as `R = Rz(ω_z) · Ry(ω_y) · Rx(ω_x)`, so a local
//! panel vector `l` maps to the global frame as `R · l`. In the local frame
//! the elevation `θ` is measured from +Z and the azimuth `φ` from +X toward
//! +Y; broadside is therefore `(θ, φ) = (π/2, 0)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::units::{dbm_to_mw, SPEED_OF_LIGHT};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
pub fn dist(a: &Vec3, b: &Vec3) -> f64 {
    norm(&sub(a, b))
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

#[inline]
pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
pub fn mat_t_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

/// `Rz(z) · Ry(y) · Rx(x)` for counter-clockwise angles in radians.
pub fn rotation_matrix(rot: &Vec3) -> Mat3 {
    let (sx, cx) = rot[0].sin_cos();
    let (sy, cy) = rot[1].sin_cos();
    let (sz, cz) = rot[2].sin_cos();
    let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
    mat_mul(&rz, &mat_mul(&ry, &rx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum RoleFlag {
    Scattered = 0,
    Cascaded = 1,
}

impl From<RoleFlag> for u8 {
    fn from(r: RoleFlag) -> u8 {
        r as u8
    }
}

impl TryFrom<u8> for RoleFlag {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(RoleFlag::Scattered),
            1 => Ok(RoleFlag::Cascaded),
            other => Err(format!("role flag must be 0 or 1, got {other}")),
        }
    }
}

impl RoleFlag {
    pub fn as_f64(self) -> f64 {
        (self as u8) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirsConfig {
    /// Panel center (x, y, H) in meters.
    pub pos: Vec3,
    /// Rotation angles (ω_x, ω_y, ω_z) in radians.
    pub rot: Vec3,
    /// Element grid (W_Y, W_Z).
    pub grid: (usize, usize),
    pub elem_gain_dbi: f64,
    pub erp_exponent: f64,
    pub amp_power_dbm: f64,
    pub dyn_noise_psd_dbm_hz: f64,
    pub role_flag: RoleFlag,
}

impl Default for AirsConfig {
    fn default() -> Self {
        Self {
            pos: [0.0, 0.0, 10.0],
            rot: [0.0; 3],
            grid: (4, 4),
            elem_gain_dbi: 6.0,
            erp_exponent: 1.0,
            amp_power_dbm: 10.0,
            dyn_noise_psd_dbm_hz: -160.0,
            role_flag: RoleFlag::Cascaded,
        }
    }
}

impl AirsConfig {
    pub fn n_elements(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    pub fn rotation(&self) -> Mat3 {
        rotation_matrix(&self.rot)
    }

    pub fn elem_gain_lin(&self) -> f64 {
        crate::units::db_to_lin(self.elem_gain_dbi)
    }

    /// Global element positions with half-wavelength spacing, ordered
    /// `w = iz * W_Y + iy`.
    pub fn element_positions(&self, wavelength: f64) -> Vec<Vec3> {
        let (wy, wz) = self.grid;
        let spacing = wavelength / 2.0;
        let r = self.rotation();
        let mut out = Vec::with_capacity(wy * wz);
        for iz in 0..wz {
            for iy in 0..wy {
                let local = [
                    0.0,
                    (iy as f64 - (wy as f64 - 1.0) / 2.0) * spacing,
                    (iz as f64 - (wz as f64 - 1.0) / 2.0) * spacing,
                ];
                let g = mat_vec(&r, &local);
                out.push([self.pos[0] + g[0], self.pos[1] + g[1], self.pos[2] + g[2]]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UePos {
    pub pos: Vec3,
}

impl UePos {
    pub fn new(x: f64, y: f64, h: f64) -> Self {
        Self { pos: [x, y, h] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub bs_height: f64,
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub n_rb: usize,
    pub n_slots: usize,
    pub frame_time: f64,
    pub bs_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub airs: Vec<AirsConfig>,
    pub ues: Vec<UePos>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            bs_height: 25.0,
            carrier_freq: 3.5e9,
            bandwidth: 20e6,
            n_rb: 48,
            n_slots: 4,
            frame_time: 10e-3,
            bs_power_dbm: 10.0,
            noise_psd_dbm_hz: -174.0,
            airs: Vec::new(),
            ues: Vec::new(),
        }
    }
}

impl SceneConfig {
    pub fn bs_pos(&self) -> Vec3 {
        [0.0, 0.0, self.bs_height]
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn n_airs(&self) -> usize {
        self.airs.len()
    }

    pub fn rb_bandwidth(&self) -> f64 {
        self.bandwidth / self.n_rb as f64
    }

    /// Equal per-RB transmit power `P_BS / S` in mW.
    pub fn p_rb_mw(&self) -> f64 {
        dbm_to_mw(self.bs_power_dbm) / self.n_rb as f64
    }

    /// Thermal noise power per RB, `σ_0² = N_0 · B / S`, in mW.
    pub fn sigma0_sq_mw(&self) -> f64 {
        dbm_to_mw(self.noise_psd_dbm_hz) * self.rb_bandwidth()
    }

    /// Dynamic-noise power per element per RB, `σ_v² = N_v · B / S`, in mW.
    pub fn sigma_v_sq_mw(&self, airs: usize) -> f64 {
        dbm_to_mw(self.airs[airs].dyn_noise_psd_dbm_hz) * self.rb_bandwidth()
    }

    /// Center frequency offsets of every RB relative to the carrier.
    pub fn rb_offsets(&self) -> Vec<f64> {
        let df = self.rb_bandwidth();
        (0..self.n_rb)
            .map(|s| (s as f64 + 0.5) * df - self.bandwidth / 2.0)
            .collect()
    }

    /// Checks every invariant and reports all violations with JSON paths.
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let finite = |x: &[f64]| x.iter().all(|c| c.is_finite());
        if self.n_rb < 1 {
            v.push(Violation::new("radio.n_rb", "must be >= 1"));
        }
        if self.n_slots < 1 {
            v.push(Violation::new("radio.n_slots", "must be >= 1"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            v.push(Violation::new("radio.bandwidth_hz", "must be > 0"));
        }
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            v.push(Violation::new("radio.carrier_freq_hz", "must be > 0"));
        }
        if !finite(&[self.bs_height]) {
            v.push(Violation::new("radio.bs_height_m", "must be finite"));
        }
        if !finite(&[self.bs_power_dbm, self.noise_psd_dbm_hz, self.frame_time]) {
            v.push(Violation::new("radio", "powers and frame time must be finite"));
        }
        for (i, a) in self.airs.iter().enumerate() {
            if !finite(&a.pos) {
                v.push(Violation::new(format!("airs[{i}].pos_m"), "must be finite"));
            }
            if !finite(&a.rot) {
                v.push(Violation::new(format!("airs[{i}].rot_deg"), "must be finite"));
            }
            if a.grid.0 < 1 || a.grid.1 < 1 {
                v.push(Violation::new(
                    format!("airs[{i}].grid"),
                    "W_Y and W_Z must be >= 1",
                ));
            }
            if !(a.erp_exponent >= 0.0 && a.erp_exponent.is_finite()) {
                v.push(Violation::new(
                    format!("airs[{i}].erp_exponent"),
                    "must be finite and >= 0",
                ));
            }
            if !finite(&[a.elem_gain_dbi, a.amp_power_dbm, a.dyn_noise_psd_dbm_hz]) {
                v.push(Violation::new(
                    format!("airs[{i}]"),
                    "gains and powers must be finite",
                ));
            }
        }
        for (u, ue) in self.ues.iter().enumerate() {
            if !finite(&ue.pos) {
                v.push(Violation::new(format!("ues[{u}].pos_m"), "must be finite"));
            } else if ue.pos[2] < 0.0 {
                v.push(Violation::new(format!("ues[{u}].pos_m"), "height must be >= 0"));
            }
        }
        v
    }
}

/// Direction from `origin` to `point` expressed as local panel angles.
pub fn local_angles(rot: &Mat3, origin: &Vec3, point: &Vec3) -> Result<(f64, f64)> {
    let d = sub(point, origin);
    let n = norm(&d);
    if !(n > 1e-12) {
        return Err(Error::DegenerateDirection);
    }
    let l = mat_t_vec(rot, &d);
    let theta = (l[2] / n).clamp(-1.0, 1.0).acos();
    let phi = l[1].atan2(l[0]);
    Ok((theta, phi))
}

/// Local azimuth/elevation of `point` as seen from the panel center.
pub fn to_panel_frame(panel: &AirsConfig, point: &Vec3) -> Result<(f64, f64)> {
    local_angles(&panel.rotation(), &panel.pos, point)
}

/// Inverse of [`to_panel_frame`]: the global point at range `r` along the
/// local direction `(θ, φ)`.
pub fn from_panel_frame(panel: &AirsConfig, theta: f64, phi: f64, r: f64) -> Vec3 {
    let local = [
        r * theta.sin() * phi.cos(),
        r * theta.sin() * phi.sin(),
        r * theta.cos(),
    ];
    let g = mat_vec(&panel.rotation(), &local);
    [panel.pos[0] + g[0], panel.pos[1] + g[1], panel.pos[2] + g[2]]
}

/// Element radiation pattern `G · (sinθ cosφ)^q`, zero outside the front
/// half-space.
pub fn erp_gain(g_max: f64, q: f64, theta: f64, phi: f64) -> f64 {
    if !(0.0..=PI).contains(&theta) || !(-FRAC_PI_2..=FRAC_PI_2).contains(&phi) {
        return 0.0;
    }
    let base = (theta.sin() * phi.cos()).max(0.0);
    g_max * base.powf(q)
}
