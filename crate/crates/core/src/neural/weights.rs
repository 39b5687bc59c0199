//! Named-tensor container and the NCKM weights file.
//!
//! Layout: `"NCKM"` | version `u32` LE | manifest length `u64` LE | UTF-8
//! JSON manifest | float32 LE tensor data. The manifest carries the model
//! kind, dimensions, PLE bin edges and a tensor table of
//! `{name, shape, offset}` where `offset` is in bytes from the start of the
//! data section. Tensors are stored in name order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ple::check_edges;
use crate::error::{Error, Result};
use crate::rng;

pub const MAGIC: &[u8; 4] = b"NCKM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lps,
    Se,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_mlp: usize,
    /// Hidden width of the output heads.
    pub d_head_mlp: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Self {
            d_model: 256,
            n_heads: 4,
            n_layers: 4,
            d_mlp: 512,
            d_head_mlp: 64,
        }
    }
}

impl Dims {
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        let ok = self.d_model > 0
            && self.n_heads > 0
            && self.d_model % self.n_heads == 0
            && self.d_mlp > 0
            && self.d_head_mlp > 0
            && (kind == ModelKind::Lps || self.d_model % 16 == 0);
        if ok {
            Ok(())
        } else {
            Err(Error::Manifest(format!("inconsistent dims {self:?}")))
        }
    }

    /// PLE width per scalar: `d_model` for LPS features, `d_model/16` for
    /// SE quantiles.
    pub fn ple_width(&self, kind: ModelKind) -> usize {
        match kind {
            ModelKind::Lps => self.d_model,
            ModelKind::Se => self.d_model / 16,
        }
    }

    pub fn n_edge_sets(kind: ModelKind) -> usize {
        match kind {
            ModelKind::Lps => crate::oracle::N_FEATURES,
            ModelKind::Se => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    pub kind: ModelKind,
    pub dims: Dims,
    pub ple_edges: Vec<Vec<f64>>,
    pub tensors: BTreeMap<String, Tensor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    kind: ModelKind,
    dims: Dims,
    ple_edges: Vec<Vec<f64>>,
    tensors: Vec<TensorEntry>,
}

fn encoder_tensors(d: &Dims, out: &mut Vec<(String, Vec<usize>)>) {
    let m = d.d_model;
    for l in 0..d.n_layers {
        let p = format!("encoder.layers.{l}.");
        out.push((format!("{p}norm1.weight"), vec![m]));
        out.push((format!("{p}norm1.bias"), vec![m]));
        out.push((format!("{p}self_attn.in_proj_weight"), vec![3 * m, m]));
        out.push((format!("{p}self_attn.in_proj_bias"), vec![3 * m]));
        out.push((format!("{p}self_attn.out_proj.weight"), vec![m, m]));
        out.push((format!("{p}self_attn.out_proj.bias"), vec![m]));
        out.push((format!("{p}norm2.weight"), vec![m]));
        out.push((format!("{p}norm2.bias"), vec![m]));
        out.push((format!("{p}linear1.weight"), vec![d.d_mlp, m]));
        out.push((format!("{p}linear1.bias"), vec![d.d_mlp]));
        out.push((format!("{p}linear2.weight"), vec![m, d.d_mlp]));
        out.push((format!("{p}linear2.bias"), vec![m]));
    }
    out.push(("encoder.norm.weight".into(), vec![m]));
    out.push(("encoder.norm.bias".into(), vec![m]));
}

fn head_tensors(name: &str, d: &Dims, out: &mut Vec<(String, Vec<usize>)>) {
    out.push((format!("{name}.0.weight"), vec![d.d_head_mlp, d.d_model]));
    out.push((format!("{name}.0.bias"), vec![d.d_head_mlp]));
    out.push((format!("{name}.2.weight"), vec![1, d.d_head_mlp]));
    out.push((format!("{name}.2.bias"), vec![1]));
}

pub const LPS_TARGETS: usize = 48;
pub const LPS_HEADS: [&str; 4] = ["head_direct", "head_link", "head_noise", "head_mask"];

/// Every tensor a model of `kind` needs, with its exact shape.
pub fn required_tensors(kind: ModelKind, d: &Dims) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    encoder_tensors(d, &mut out);
    match kind {
        ModelKind::Lps => {
            out.push(("target_tokens".into(), vec![LPS_TARGETS, d.d_model]));
            out.push((
                "pos_embed".into(),
                vec![LPS_TARGETS + crate::oracle::N_FEATURES, d.d_model],
            ));
            for h in LPS_HEADS {
                head_tensors(h, d, &mut out);
            }
        }
        ModelKind::Se => {
            out.push(("cat_embed".into(), vec![4, d.d_model]));
            out.push(("target_token".into(), vec![d.d_model]));
            out.push(("target_pos".into(), vec![d.d_model]));
            head_tensors("head", d, &mut out);
        }
    }
    out
}

fn is_norm_weight(name: &str) -> bool {
    name.ends_with("norm1.weight") || name.ends_with("norm2.weight") || name == "encoder.norm.weight"
}

/// Initial values for a fresh store.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// All zeros except LayerNorm scales, which are one.
    Zero,
    /// Uniform in `[-scale, scale]`; LayerNorm scales `1 ± scale`.
    Random { seed: u64, scale: f32 },
}

impl WeightStore {
    pub fn init(kind: ModelKind, dims: Dims, ple_edges: Vec<Vec<f64>>, init: Init) -> Result<Self> {
        dims.validate(kind)?;
        let mut rng = rng::stream(
            match init {
                Init::Random { seed, .. } => seed,
                Init::Zero => 0,
            },
            &[crate::rng::tag::WEIGHTS],
        );
        let mut tensors = BTreeMap::new();
        for (name, shape) in required_tensors(kind, &dims) {
            let mut t = Tensor::zeros(&shape);
            match init {
                Init::Zero => {
                    if is_norm_weight(&name) {
                        t.data.fill(1.0);
                    }
                }
                Init::Random { scale, .. } => {
                    let base = if is_norm_weight(&name) { 1.0 } else { 0.0 };
                    for v in t.data.iter_mut() {
                        *v = base + rng.random_range(-scale..=scale);
                    }
                }
            }
            tensors.insert(name, t);
        }
        let ws = Self {
            kind,
            dims,
            ple_edges,
            tensors,
        };
        ws.validate()?;
        Ok(ws)
    }

    /// Evenly spaced PLE edges over `[lo, hi]` for every edge set.
    pub fn uniform_edges(kind: ModelKind, dims: &Dims, lo: f64, hi: f64) -> Vec<Vec<f64>> {
        let t = dims.ple_width(kind);
        let one: Vec<f64> = (0..=t).map(|k| lo + (hi - lo) * k as f64 / t as f64).collect();
        vec![one; Dims::n_edge_sets(kind)]
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::MissingTensor(name.into()))
    }

    pub fn tensor_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::MissingTensor(name.into()))
    }

    /// Checks dims, edges and that every required tensor has its exact shape.
    pub fn validate(&self) -> Result<()> {
        self.dims.validate(self.kind)?;
        let n_sets = Dims::n_edge_sets(self.kind);
        let width = self.dims.ple_width(self.kind);
        if self.ple_edges.len() != n_sets {
            return Err(Error::Manifest(format!(
                "expected {n_sets} PLE edge sets, found {}",
                self.ple_edges.len()
            )));
        }
        for e in &self.ple_edges {
            check_edges(e)?;
            if e.len() != width + 1 {
                return Err(Error::Manifest(format!(
                    "PLE edge set has {} edges, expected {}",
                    e.len(),
                    width + 1
                )));
            }
        }
        for (name, shape) in required_tensors(self.kind, &self.dims) {
            let t = self.tensor(&name)?;
            if t.shape != shape {
                return Err(Error::ShapeMismatch {
                    name,
                    expected: shape,
                    found: t.shape.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut offset = 0u64;
        let mut entries = Vec::with_capacity(self.tensors.len());
        for (name, t) in &self.tensors {
            entries.push(TensorEntry {
                name: name.clone(),
                shape: t.shape.clone(),
                offset,
            });
            offset += 4 * t.data.len() as u64;
        }
        let manifest = Manifest {
            kind: self.kind,
            dims: self.dims,
            ple_edges: self.ple_edges.clone(),
            tensors: entries,
        };
        let header = serde_json::to_vec(&manifest).expect("manifest serializes");
        let mut out = Vec::with_capacity(16 + header.len() + offset as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in self.tensors.values() {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses an NCKM blob. Structural problems are reported; model
    /// completeness is checked separately by [`WeightStore::validate`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < 16 {
            return Err(Error::TruncatedHeader);
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let data_start = 16usize
            .checked_add(usize::try_from(hlen).map_err(|_| Error::TruncatedHeader)?)
            .ok_or(Error::TruncatedHeader)?;
        if bytes.len() < data_start {
            return Err(Error::TruncatedHeader);
        }
        let manifest: Manifest = serde_json::from_slice(&bytes[16..data_start])
            .map_err(|e| Error::Manifest(e.to_string()))?;
        let data = &bytes[data_start..];
        let mut tensors = BTreeMap::new();
        for e in manifest.tensors {
            let n: usize = e.shape.iter().product();
            let start = usize::try_from(e.offset).map_err(|_| Error::TruncatedTensor(e.name.clone()))?;
            let end = start
                .checked_add(4 * n)
                .filter(|&end| end <= data.len())
                .ok_or_else(|| Error::TruncatedTensor(e.name.clone()))?;
            let vals = data[start..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            if tensors
                .insert(e.name.clone(), Tensor { shape: e.shape, data: vals })
                .is_some()
            {
                return Err(Error::Manifest(format!("duplicate tensor {}", e.name)));
            }
        }
        Ok(Self {
            kind: manifest.kind,
            dims: manifest.dims,
            ple_edges: manifest.ple_edges,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    /// Loads and validates a weights file.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let ws = Self::from_bytes(&bytes)?;
        ws.validate()?;
        Ok(ws)
    }
}
