//! SE predictors: Monte Carlo oracle, table CKM with CDF composition, and
//! the neural LPS-Net → SE-Net pipeline.

use serde::{Deserialize, Serialize};

use super::compose::compose_se_mc;
use super::store::{fingerprint, CkmStore};
use crate::channel::FadingSpec;
use crate::error::{Error, Result};
use crate::neural::{LpsNet, SeNet, WeightStore};
use crate::oracle::{
    lps_features, PhaseScheme, QuantileCdf, UeEval, CAT_CASCADED, CAT_DIRECT, CAT_NOISE, CAT_SCATTERED,
};
use crate::rng;
use crate::scene::{RoleFlag, SceneConfig, UePos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Oracle,
    Table,
    Neural,
}

impl std::fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredictorKind::Oracle => "oracle",
            PredictorKind::Table => "table",
            PredictorKind::Neural => "neural",
        })
    }
}

pub trait SePredictor: Sync {
    fn kind(&self) -> PredictorKind;

    /// Ergodic SE of `ue` when served by AIRS `serving` (BS only on `None`).
    fn predict(&self, scene: &SceneConfig, ue: &UePos, serving: Option<usize>) -> Result<f64>;

    /// `[η_0, η_1, …, η_I]`.
    fn predict_all(&self, scene: &SceneConfig, ue: &UePos) -> Result<Vec<f64>> {
        std::iter::once(None)
            .chain((0..scene.n_airs()).map(Some))
            .map(|s| self.predict(scene, ue, s))
            .collect()
    }
}

/// Monte Carlo ground truth with MCCM serving phases.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    pub spec: FadingSpec,
    pub scheme: PhaseScheme,
}

impl OraclePredictor {
    pub fn new(spec: FadingSpec) -> Self {
        Self {
            spec,
            scheme: PhaseScheme::Mccm,
        }
    }
}

impl SePredictor for OraclePredictor {
    fn kind(&self) -> PredictorKind {
        PredictorKind::Oracle
    }

    fn predict(&self, scene: &SceneConfig, ue: &UePos, serving: Option<usize>) -> Result<f64> {
        check_serving(scene, serving)?;
        Ok(UeEval::new(scene, ue, self.scheme, &self.spec)?.se(serving).mean)
    }

    /// All columns from one set of draws.
    fn predict_all(&self, scene: &SceneConfig, ue: &UePos) -> Result<Vec<f64>> {
        Ok(UeEval::new(scene, ue, self.scheme, &self.spec)?.se_vector())
    }
}

fn check_serving(scene: &SceneConfig, serving: Option<usize>) -> Result<()> {
    match serving {
        Some(i) if i >= scene.n_airs() => Err(Error::invalid(format!("serving AIRS {i} out of range"))),
        _ => Ok(()),
    }
}

/// Assembles SE-Net/composition inputs from per-AIRS (cascaded, scattered,
/// noise) CDFs and a direct CDF.
pub fn assemble_se_inputs(
    direct: QuantileCdf,
    per_airs: &[(QuantileCdf, QuantileCdf, QuantileCdf)],
    serving: Option<usize>,
) -> (Vec<QuantileCdf>, Vec<u8>) {
    let mut cdfs = vec![direct];
    let mut cats = vec![CAT_DIRECT];
    for (i, (cas, sca, _)) in per_airs.iter().enumerate() {
        if serving == Some(i) {
            cdfs.push(*cas);
            cats.push(CAT_CASCADED);
        } else {
            cdfs.push(*sca);
            cats.push(CAT_SCATTERED);
        }
    }
    for (_, _, n) in per_airs {
        cdfs.push(*n);
        cats.push(CAT_NOISE);
    }
    (cdfs, cats)
}

/// Nearest stored position, then CDF composition.
#[derive(Debug, Clone)]
pub struct TablePredictor {
    pub store: CkmStore,
    pub n_samples: usize,
    pub seed: u64,
}

impl TablePredictor {
    pub fn new(store: CkmStore, n_samples: usize, seed: u64) -> Self {
        Self {
            store,
            n_samples,
            seed,
        }
    }
}

impl SePredictor for TablePredictor {
    fn kind(&self) -> PredictorKind {
        PredictorKind::Table
    }

    fn predict(&self, scene: &SceneConfig, ue: &UePos, serving: Option<usize>) -> Result<f64> {
        check_serving(scene, serving)?;
        self.store.check_fingerprint(&fingerprint(scene))?;
        let (entry, _) = self.store.query([ue.pos[0], ue.pos[1]])?;
        let per_airs: Vec<_> = entry
            .records
            .chunks_exact(2)
            .map(|r| (r[0].cdf_link, r[1].cdf_link, r[0].cdf_noise))
            .collect();
        let direct = entry
            .records
            .first()
            .map(|r| r.cdf_direct)
            .ok_or(Error::MissingDirectCdf)?;
        let (cdfs, cats) = assemble_se_inputs(direct, &per_airs, serving);
        let seed = rng::mix(self.seed, &[rng::position_key(&ue.pos)]);
        compose_se_mc(&cdfs, &cats, self.n_samples, seed, scene.sigma0_sq_mw(), scene.p_rb_mw())
    }
}

/// LPS-Net per AIRS (role from the serving choice), then SE-Net.
#[derive(Debug, Clone)]
pub struct NeuralPredictor {
    pub lps: LpsNet,
    pub se: SeNet,
}

impl NeuralPredictor {
    pub fn new(lps: &WeightStore, se: &WeightStore) -> Result<Self> {
        Ok(Self {
            lps: LpsNet::from_store(lps)?,
            se: SeNet::from_store(se)?,
        })
    }

    pub fn se_inputs(&self, scene: &SceneConfig, ue: &UePos, serving: Option<usize>) -> Result<(Vec<QuantileCdf>, Vec<u8>)> {
        check_serving(scene, serving)?;
        if scene.n_airs() == 0 {
            return Err(Error::invalid("the neural predictor needs at least one AIRS"));
        }
        let mut per_airs = Vec::with_capacity(scene.n_airs());
        let mut direct = None;
        for i in 0..scene.n_airs() {
            let role = if serving == Some(i) { RoleFlag::Cascaded } else { RoleFlag::Scattered };
            let out = self.lps.forward(&lps_features(scene, ue, i, role))?;
            let [d, link, noise] = out.cdfs();
            if serving.unwrap_or(0) == i {
                direct = Some(d);
            }
            per_airs.push((link, link, noise));
        }
        let direct = direct.ok_or(Error::MissingDirectCdf)?;
        Ok(assemble_se_inputs(direct, &per_airs, serving))
    }
}

impl SePredictor for NeuralPredictor {
    fn kind(&self) -> PredictorKind {
        PredictorKind::Neural
    }

    fn predict(&self, scene: &SceneConfig, ue: &UePos, serving: Option<usize>) -> Result<f64> {
        let (cdfs, cats) = self.se_inputs(scene, ue, serving)?;
        self.se.forward(&cdfs, &cats)
    }
}
