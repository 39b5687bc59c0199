//! LPS-Net: UE position and AIRS parameters to 48 link-power quantiles plus
//! a validity mask.

use ndarray::{s, Array2};

use super::encoder::{to_array2, Encoder, Head};
use super::ple::ple_encode_into;
use super::weights::{ModelKind, WeightStore, LPS_HEADS, LPS_TARGETS};
use crate::error::{Error, Result};
use crate::oracle::{QuantileCdf, N_FEATURES, N_QUANTILES};
use crate::units::DB_SENTINEL;

#[derive(Debug, Clone, PartialEq)]
pub struct LpsOutput {
    /// Direct 0–15, cascaded/scattered link 16–31, dynamic noise 32–47.
    pub quantiles48: [f64; 48],
    pub mask_prob48: [f64; 48],
}

impl LpsOutput {
    /// The three CDFs, with quantiles whose mask probability is below 0.5
    /// marked invalid.
    pub fn cdfs(&self) -> [QuantileCdf; 3] {
        let mut out = [QuantileCdf::all_invalid(); 3];
        for (g, cdf) in out.iter_mut().enumerate() {
            for k in 0..N_QUANTILES {
                let j = g * N_QUANTILES + k;
                if self.mask_prob48[j] >= 0.5 {
                    cdf.q_db[k] = self.quantiles48[j];
                    cdf.mask[k] = true;
                } else {
                    cdf.q_db[k] = DB_SENTINEL;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LpsNet {
    edges: Vec<Vec<f64>>,
    targets: Array2<f64>,
    pos: Array2<f64>,
    encoder: Encoder,
    heads: Vec<Head>,
    d_model: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LpsNet {
    pub fn from_store(ws: &WeightStore) -> Result<Self> {
        if ws.kind != ModelKind::Lps {
            return Err(Error::Manifest("expected an LPS weights file".into()));
        }
        ws.validate()?;
        let d = ws.dims.d_model;
        Ok(Self {
            edges: ws.ple_edges.clone(),
            targets: to_array2(ws, "target_tokens", LPS_TARGETS, d)?,
            pos: to_array2(ws, "pos_embed", LPS_TARGETS + N_FEATURES, d)?,
            encoder: Encoder::from_store(ws)?,
            heads: LPS_HEADS
                .iter()
                .map(|h| Head::load(ws, h))
                .collect::<Result<_>>()?,
            d_model: d,
        })
    }

    /// `[targets; PLE(features)] + pos_embed`.
    pub fn tokens(&self, features: &[f64]) -> Result<Array2<f64>> {
        if features.len() != N_FEATURES {
            return Err(Error::FeatureCount {
                expected: N_FEATURES,
                found: features.len(),
            });
        }
        let mut x = Array2::zeros((LPS_TARGETS + N_FEATURES, self.d_model));
        x.slice_mut(s![..LPS_TARGETS, ..]).assign(&self.targets);
        for (j, &f) in features.iter().enumerate() {
            let mut row = x.row_mut(LPS_TARGETS + j);
            ple_encode_into(f, &self.edges[j], row.as_slice_mut().expect("contiguous row"));
        }
        x += &self.pos;
        Ok(x)
    }

    pub fn forward(&self, features: &[f64]) -> Result<LpsOutput> {
        let y = self.encoder.forward(&self.tokens(features)?)?;
        let t = y.slice(s![..LPS_TARGETS, ..]).to_owned();
        let mut out = LpsOutput {
            quantiles48: [0.0; 48],
            mask_prob48: [0.0; 48],
        };
        for g in 0..3 {
            let rows = t.slice(s![g * N_QUANTILES..(g + 1) * N_QUANTILES, ..]).to_owned();
            let q = self.heads[g].apply(&rows);
            out.quantiles48[g * N_QUANTILES..(g + 1) * N_QUANTILES]
                .copy_from_slice(q.as_slice().expect("contiguous"));
        }
        let m = self.heads[3].apply(&t);
        for (o, v) in out.mask_prob48.iter_mut().zip(m.iter()) {
            *o = sigmoid(*v);
        }
        Ok(out)
    }
}

pub fn lps_forward(features: &[f64], ws: &WeightStore) -> Result<LpsOutput> {
    LpsNet::from_store(ws)?.forward(features)
}

#[cfg(test)]
mod tests {
    use super::super::weights::{Dims, Init};
    use super::*;

    fn dims() -> Dims {
        Dims {
            d_model: 24,
            n_heads: 3,
            n_layers: 2,
            d_mlp: 48,
            d_head_mlp: 8,
        }
    }

    fn features() -> Vec<f64> {
        (0..15).map(|j| (j as f64 * 0.37).sin() * 40.0).collect()
    }

    fn random_store(seed: u64) -> WeightStore {
        let d = dims();
        let mut edges = WeightStore::uniform_edges(ModelKind::Lps, &d, -50.0, 50.0);
        // Give each feature its own edges so swaps are meaningful.
        for (j, e) in edges.iter_mut().enumerate() {
            e.iter_mut().for_each(|v| *v += j as f64);
        }
        WeightStore::init(ModelKind::Lps, d, edges, Init::Random { seed, scale: 0.3 }).unwrap()
    }

    #[test]
    fn zero_weights_give_half_mask() {
        let d = dims();
        let ws = WeightStore::init(
            ModelKind::Lps,
            d,
            WeightStore::uniform_edges(ModelKind::Lps, &d, 0.0, 1.0),
            Init::Zero,
        )
        .unwrap();
        let out = lps_forward(&features(), &ws).unwrap();
        assert!(out.mask_prob48.iter().all(|&p| p == 0.5));
        assert!(out.quantiles48.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn feature_swap_with_embeddings_is_invariant() {
        let ws = random_store(7);
        let base = lps_forward(&features(), &ws).unwrap();
        let (a, b) = (3usize, 11usize);
        let mut f = features();
        f.swap(a, b);
        let mut sw = ws.clone();
        sw.ple_edges.swap(a, b);
        let d = sw.dims.d_model;
        let pe = &mut sw.tensors.get_mut("pos_embed").unwrap().data;
        for c in 0..d {
            pe.swap((48 + a) * d + c, (48 + b) * d + c);
        }
        let out = lps_forward(&f, &sw).unwrap();
        for k in 0..48 {
            assert!((out.quantiles48[k] - base.quantiles48[k]).abs() < 1e-12);
            assert!((out.mask_prob48[k] - base.mask_prob48[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_feature_count() {
        let ws = random_store(1);
        assert!(matches!(
            lps_forward(&[0.0; 14], &ws),
            Err(Error::FeatureCount { expected: 15, found: 14 })
        ));
    }

    #[test]
    fn outputs_finite_for_extreme_inputs() {
        let ws = random_store(2);
        let f = vec![1e12, -1e12, 0.0, 3.0, 1e-300, -7.0, 1e6, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, -1e9, 1.0];
        let out = lps_forward(&f, &ws).unwrap();
        assert!(out.quantiles48.iter().chain(&out.mask_prob48).all(|v| v.is_finite()));
        assert!(out.mask_prob48.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }
}
