use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Violation;
use crate::rng::{self, tag};
use crate::scene::{dist, SceneConfig, UePos};

/// Uniform-area UE placement on an annulus around the BS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UeSampler {
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub height_m: f64,
    /// Minimum 3D distance to the BS and to every AIRS center.
    pub clearance_m: f64,
}

impl Default for UeSampler {
    fn default() -> Self {
        Self {
            r_min_m: 20.0,
            r_max_m: 300.0,
            height_m: 1.5,
            clearance_m: 1.0,
        }
    }
}

impl UeSampler {
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.r_min_m >= 0.0 && self.r_max_m > self.r_min_m && self.r_max_m.is_finite()) {
            v.push(Violation::new("ue_sampler", "need 0 <= r_min_m < r_max_m"));
        }
        if !(self.height_m >= 0.0 && self.height_m.is_finite()) {
            v.push(Violation::new("ue_sampler.height_m", "must be finite and >= 0"));
        }
        if !(self.clearance_m >= 0.0) {
            v.push(Violation::new("ue_sampler.clearance_m", "must be >= 0"));
        }
        v
    }

    /// The `index`-th UE of stream `seed`; independent of other indices.
    pub fn sample(&self, scene: &SceneConfig, seed: u64, index: u64) -> UePos {
        let mut r = rng::stream(seed, &[tag::UE_SAMPLE, index]);
        let bs = scene.bs_pos();
        loop {
            let u: f64 = r.random();
            let rad = (self.r_min_m.powi(2) + u * (self.r_max_m.powi(2) - self.r_min_m.powi(2))).sqrt();
            let ang = r.random_range(0.0..std::f64::consts::TAU);
            let ue = UePos::new(rad * ang.cos(), rad * ang.sin(), self.height_m);
            let clear = dist(&ue.pos, &bs) >= self.clearance_m
                && scene.airs.iter().all(|a| dist(&ue.pos, &a.pos) >= self.clearance_m);
            if clear {
                return ue;
            }
        }
    }

    pub fn sample_n(&self, scene: &SceneConfig, seed: u64, n: usize) -> Vec<UePos> {
        (0..n as u64).map(|i| self.sample(scene, seed, i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_stay_in_annulus() {
        let s = UeSampler::default();
        let scene = SceneConfig::default();
        let ues = s.sample_n(&scene, 4, 500);
        for u in &ues {
            let r = u.pos[0].hypot(u.pos[1]);
            assert!(r >= s.r_min_m - 1e-9 && r <= s.r_max_m + 1e-9);
            assert_eq!(u.pos[2], 1.5);
        }
        assert_eq!(ues[17], s.sample(&scene, 4, 17));
        // Uniform area: about (150²-20²)/(300²-20²) ≈ 24.7% inside 150 m.
        let inner = ues.iter().filter(|u| u.pos[0].hypot(u.pos[1]) < 150.0).count();
        assert!((80..=170).contains(&inner), "{inner}");
    }
}
