use rayon::prelude::*;
use serde::Serialize;

use crate::channel::FadingSpec;
use crate::error::{Error, Result};
use crate::oracle::{ergodic_se, PhaseScheme, UeSampler};
use crate::scene::SceneConfig;

/// Most-square `(W_Y, W_Z)` with `W_Y ≤ W_Z` and `W_Y·W_Z = count`.
pub fn grid_for_count(count: usize) -> Result<(usize, usize)> {
    if count == 0 {
        return Err(Error::invalid("element count must be >= 1"));
    }
    let mut wy = (count as f64).sqrt() as usize;
    while wy > 1 && count % wy != 0 {
        wy -= 1;
    }
    Ok((wy.max(1), count / wy.max(1)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub elements: usize,
    pub mccm: f64,
    pub los: f64,
    pub random: f64,
}

/// Mean ergodic SE over `n_ues` sampled UEs served by the first AIRS of
/// `scene` (other AIRSs removed), for each element count and phase scheme.
/// Schemes share channel draws, so the comparison is paired.
pub fn bench_phases(
    scene: &SceneConfig,
    sampler: &UeSampler,
    spec: &FadingSpec,
    counts: &[usize],
    n_ues: usize,
) -> Result<Vec<PhaseRow>> {
    if scene.airs.is_empty() {
        return Err(Error::invalid("bench-phases needs at least one AIRS"));
    }
    if n_ues == 0 {
        return Err(Error::invalid("bench-phases needs at least one UE"));
    }
    counts
        .iter()
        .map(|&count| {
            let mut sc = scene.clone();
            sc.airs.truncate(1);
            sc.airs[0].grid = grid_for_count(count)?;
            let ues = sampler.sample_n(&sc, spec.seed, n_ues);
            let per_ue: Vec<[f64; 3]> = ues
                .par_iter()
                .map(|ue| {
                    let se = |s| ergodic_se(&sc, ue, Some(0), s, spec);
                    Ok([se(PhaseScheme::Mccm)?, se(PhaseScheme::Los)?, se(PhaseScheme::Random)?])
                })
                .collect::<Result<_>>()?;
            let mean = |k: usize| per_ue.iter().map(|v| v[k]).sum::<f64>() / n_ues as f64;
            Ok(PhaseRow {
                elements: count,
                mccm: mean(0),
                los: mean(1),
                random: mean(2),
            })
        })
        .collect()
}
