//! Pre-LN Transformer encoder over `f64` tensors.
//!
//! Parameter names and layouts follow PyTorch's `TransformerEncoderLayer`
//! (`norm_first=True`, GELU) with the encoder's final `LayerNorm`, so weights
//! exported from a PyTorch trainer load without reshaping.

use ndarray::{s, Array1, Array2, Axis};

use super::weights::WeightStore;
use crate::error::{Error, Result};

pub const LN_EPS: f64 = 1e-5;

pub(crate) fn to_array1(ws: &WeightStore, name: &str, len: usize) -> Result<Array1<f64>> {
    let t = ws.tensor(name)?;
    if t.shape != [len] {
        return Err(Error::ShapeMismatch {
            name: name.into(),
            expected: vec![len],
            found: t.shape.clone(),
        });
    }
    Ok(t.data.iter().map(|&v| v as f64).collect())
}

pub(crate) fn to_array2(ws: &WeightStore, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let t = ws.tensor(name)?;
    if t.shape != [rows, cols] {
        return Err(Error::ShapeMismatch {
            name: name.into(),
            expected: vec![rows, cols],
            found: t.shape.clone(),
        });
    }
    Ok(Array2::from_shape_vec((rows, cols), t.data.iter().map(|&v| v as f64).collect())
        .expect("shape checked"))
}

#[inline]
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone)]
pub struct Linear {
    /// `[out, in]`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    pub(crate) fn load(ws: &WeightStore, prefix: &str, out: usize, inp: usize) -> Result<Self> {
        Ok(Self {
            w: to_array2(ws, &format!("{prefix}weight"), out, inp)?,
            b: to_array1(ws, &format!("{prefix}bias"), out)?,
        })
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub g: Array1<f64>,
    pub b: Array1<f64>,
}

impl LayerNorm {
    fn load(ws: &WeightStore, prefix: &str, d: usize) -> Result<Self> {
        Ok(Self {
            g: to_array1(ws, &format!("{prefix}weight"), d)?,
            b: to_array1(ws, &format!("{prefix}bias"), d)?,
        })
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        let d = x.ncols() as f64;
        for mut row in out.rows_mut() {
            let mean = row.sum() / d;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            for ((v, g), b) in row.iter_mut().zip(&self.g).zip(&self.b) {
                *v = (*v - mean) * inv * g + b;
            }
        }
        out
    }
}

/// Two linear layers with GELU between them.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub fc1: Linear,
    pub fc2: Linear,
}

impl Mlp {
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let h = self.fc1.apply(x).mapv(gelu);
        self.fc2.apply(&h)
    }
}

#[derive(Debug, Clone)]
struct Block {
    norm1: LayerNorm,
    in_proj: Linear,
    out_proj: Linear,
    norm2: LayerNorm,
    mlp: Mlp,
}

#[derive(Debug, Clone)]
pub struct Encoder {
    blocks: Vec<Block>,
    norm: LayerNorm,
    n_heads: usize,
    d_model: usize,
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - mx).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
}

impl Encoder {
    pub fn from_store(ws: &WeightStore) -> Result<Self> {
        let d = ws.dims;
        let m = d.d_model;
        let mut blocks = Vec::with_capacity(d.n_layers);
        for l in 0..d.n_layers {
            let p = format!("encoder.layers.{l}.");
            blocks.push(Block {
                norm1: LayerNorm::load(ws, &format!("{p}norm1."), m)?,
                in_proj: Linear {
                    w: to_array2(ws, &format!("{p}self_attn.in_proj_weight"), 3 * m, m)?,
                    b: to_array1(ws, &format!("{p}self_attn.in_proj_bias"), 3 * m)?,
                },
                out_proj: Linear::load(ws, &format!("{p}self_attn.out_proj."), m, m)?,
                norm2: LayerNorm::load(ws, &format!("{p}norm2."), m)?,
                mlp: Mlp {
                    fc1: Linear::load(ws, &format!("{p}linear1."), d.d_mlp, m)?,
                    fc2: Linear::load(ws, &format!("{p}linear2."), m, d.d_mlp)?,
                },
            });
        }
        Ok(Self {
            blocks,
            norm: LayerNorm::load(ws, "encoder.norm.", m)?,
            n_heads: d.n_heads,
            d_model: m,
        })
    }

    fn attention(&self, b: &Block, x: &Array2<f64>) -> Array2<f64> {
        let m = self.d_model;
        let dh = m / self.n_heads;
        let qkv = b.in_proj.apply(x);
        let scale = 1.0 / (dh as f64).sqrt();
        let mut heads = Array2::zeros((x.nrows(), m));
        for h in 0..self.n_heads {
            let q = qkv.slice(s![.., h * dh..(h + 1) * dh]);
            let k = qkv.slice(s![.., m + h * dh..m + (h + 1) * dh]);
            let v = qkv.slice(s![.., 2 * m + h * dh..2 * m + (h + 1) * dh]);
            let mut scores = q.dot(&k.t()) * scale;
            softmax_rows(&mut scores);
            heads.slice_mut(s![.., h * dh..(h + 1) * dh]).assign(&scores.dot(&v));
        }
        b.out_proj.apply(&heads)
    }

    pub fn forward(&self, tokens: &Array2<f64>) -> Result<Array2<f64>> {
        if tokens.ncols() != self.d_model || tokens.nrows() == 0 {
            return Err(Error::invalid(format!(
                "encoder expects N×{} tokens with N ≥ 1, got {}×{}",
                self.d_model,
                tokens.nrows(),
                tokens.ncols()
            )));
        }
        let mut x = tokens.clone();
        for b in &self.blocks {
            let a = self.attention(b, &b.norm1.apply(&x));
            x += &a;
            let f = b.mlp.apply(&b.norm2.apply(&x));
            x += &f;
        }
        Ok(self.norm.apply(&x))
    }
}

/// One-shot encoder pass that loads the weights on every call.
pub fn encoder_forward(tokens: &Array2<f64>, ws: &WeightStore) -> Result<Array2<f64>> {
    Encoder::from_store(ws)?.forward(tokens)
}

/// Scalar head `Linear(d→h) · GELU · Linear(h→1)` applied row-wise.
#[derive(Debug, Clone)]
pub struct Head(Mlp);

impl Head {
    pub(crate) fn load(ws: &WeightStore, name: &str) -> Result<Self> {
        let d = ws.dims;
        Ok(Head(Mlp {
            fc1: Linear::load(ws, &format!("{name}.0."), d.d_head_mlp, d.d_model)?,
            fc2: Linear::load(ws, &format!("{name}.2."), 1, d.d_head_mlp)?,
        }))
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array1<f64> {
        self.0.apply(x).index_axis_move(Axis(1), 0)
    }
}
