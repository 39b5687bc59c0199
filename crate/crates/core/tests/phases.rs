use std::f64::consts::PI;

use airs_lab::airs::{combine, los_phases, mccm_phases, random_phases};
use airs_lab::channel::{sample_links, FadingSpec};
use airs_lab::oracle::UeSampler;
use airs_lab::rng;
use airs_lab::scene::{AirsConfig, SceneConfig};
use airs_lab::Error;
use rand::Rng;

/// Mean cascade power `E|φᵀa|²` per scheme on 20 lit scenes with 200 fading
/// draws each.
#[test]
fn cascade_power_ordering_over_scenes() {
    let spec = FadingSpec { n_large: 4, n_small: 50, ..FadingSpec::default() };
    let mut sums = [0.0f64; 3];
    let mut scenes = 0;
    let mut per_scene_mccm_wins = 0;
    let mut seed = 0u64;
    while scenes < 20 {
        seed += 1;
        let mut r = rng::stream(seed, &[0x9a5e]);
        let rad = r.random_range(40.0..140.0);
        let ang: f64 = r.random_range(0.0..2.0 * PI);
        let airs = vec![AirsConfig {
            pos: [rad * ang.cos(), rad * ang.sin(), 10.0],
            rot: [0.0, 0.0, ang + PI],
            grid: (8, 8),
            ..AirsConfig::default()
        }];
        let scene = SceneConfig { n_rb: 4, n_slots: 1, airs, ..SceneConfig::default() };
        let ue = UeSampler { r_max_m: 220.0, ..UeSampler::default() }.sample_n(&scene, seed, 1).remove(0);
        let lr = sample_links(&scene, &ue, &FadingSpec { seed, ..spec.clone() }).unwrap();
        let m = match mccm_phases(&lr, 0) {
            Ok(p) => p,
            Err(Error::DarkPanel) => continue,
            Err(e) => panic!("{e}"),
        };
        let phases = [m, los_phases(&scene, 0, &ue), random_phases(64, seed)];
        assert_eq!(lr.n_real, 200);
        let mut pow = [0.0; 3];
        for (k, p) in phases.iter().enumerate() {
            for rr in 0..lr.n_real {
                for s in 0..lr.n_rb {
                    pow[k] += combine(p, lr.cascade(0, rr, s)).norm_sqr();
                }
            }
            pow[k] /= (lr.n_real * lr.n_rb) as f64;
        }
        // Normalize per scene so near and far UEs weigh alike.
        for k in 0..3 {
            sums[k] += pow[k] / pow[2];
        }
        if pow[0] >= pow[1] {
            per_scene_mccm_wins += 1;
        }
        scenes += 1;
    }
    let [m, l, r] = sums.map(|s| s / 20.0);
    assert!(m >= l && l >= r, "MCCM {m:.3}, LoS {l:.3}, random {r:.3} (relative to random)");
    assert_eq!(per_scene_mccm_wins, 20, "MCCM below LoS on some scene");
}
