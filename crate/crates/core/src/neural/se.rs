//! SE-Net: a set of categorized link-power CDFs to ergodic SE.
//!
//! Each CDF becomes one token: its 16 quantiles, each PLE-encoded to
//! `d_model/16` values and concatenated, plus the category embedding. The
//! target token (with its own position embedding) is appended last and its
//! encoder output feeds the regression head. CDF tokens carry no position
//! embedding, so the prediction is a function of the token multiset; tokens
//! are put in a canonical order before the pass so that permuting
//! same-category inputs gives bit-identical results.

use ndarray::{Array1, Array2};

use super::encoder::{to_array1, to_array2, Encoder, Head};
use super::ple::ple_encode_into;
use super::weights::{ModelKind, WeightStore};
use crate::error::{Error, Result};
use crate::oracle::{QuantileCdf, CAT_DIRECT, CAT_NOISE, N_QUANTILES};

#[derive(Debug, Clone)]
pub struct SeNet {
    edges: Vec<f64>,
    cat_embed: Array2<f64>,
    target: Array1<f64>,
    target_pos: Array1<f64>,
    encoder: Encoder,
    head: Head,
    d_model: usize,
}

fn check_inputs(cats: &[u8], n_cdfs: usize) -> Result<()> {
    if cats.len() != n_cdfs {
        return Err(Error::invalid(format!("{n_cdfs} CDFs but {} categories", cats.len())));
    }
    if let Some(&c) = cats.iter().find(|&&c| !(CAT_DIRECT..=CAT_NOISE).contains(&c)) {
        return Err(Error::InvalidCategory(c));
    }
    if !cats.contains(&CAT_DIRECT) {
        return Err(Error::MissingDirectCdf);
    }
    Ok(())
}

/// Canonical token order: by category, then lexicographically by quantiles.
pub fn canonical_order(cdfs: &[QuantileCdf], cats: &[u8]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..cdfs.len()).collect();
    idx.sort_by(|&a, &b| {
        cats[a].cmp(&cats[b]).then_with(|| {
            cdfs[a]
                .q_db
                .iter()
                .zip(&cdfs[b].q_db)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    idx
}

impl SeNet {
    pub fn from_store(ws: &WeightStore) -> Result<Self> {
        if ws.kind != ModelKind::Se {
            return Err(Error::Manifest("expected an SE weights file".into()));
        }
        ws.validate()?;
        let d = ws.dims.d_model;
        Ok(Self {
            edges: ws.ple_edges[0].clone(),
            cat_embed: to_array2(ws, "cat_embed", 4, d)?,
            target: to_array1(ws, "target_token", d)?,
            target_pos: to_array1(ws, "target_pos", d)?,
            encoder: Encoder::from_store(ws)?,
            head: Head::load(ws, "head")?,
            d_model: d,
        })
    }

    pub fn tokens(&self, cdfs: &[QuantileCdf], cats: &[u8]) -> Result<Array2<f64>> {
        check_inputs(cats, cdfs.len())?;
        let width = self.d_model / N_QUANTILES;
        let order = canonical_order(cdfs, cats);
        let mut x = Array2::zeros((cdfs.len() + 1, self.d_model));
        for (row_i, &c) in order.iter().enumerate() {
            let mut row = x.row_mut(row_i);
            let buf = row.as_slice_mut().expect("contiguous row");
            for (k, &q) in cdfs[c].q_db.iter().enumerate() {
                ple_encode_into(q, &self.edges, &mut buf[k * width..(k + 1) * width]);
            }
            row += &self.cat_embed.row(usize::from(cats[c] - 1));
        }
        let mut last = x.row_mut(cdfs.len());
        last.assign(&self.target);
        last += &self.target_pos;
        Ok(x)
    }

    pub fn forward(&self, cdfs: &[QuantileCdf], cats: &[u8]) -> Result<f64> {
        let y = self.encoder.forward(&self.tokens(cdfs, cats)?)?;
        let t = y.slice(ndarray::s![cdfs.len().., ..]).to_owned();
        Ok(self.head.apply(&t)[0])
    }
}

pub fn se_forward(cdfs: &[QuantileCdf], cats: &[u8], ws: &WeightStore) -> Result<f64> {
    SeNet::from_store(ws)?.forward(cdfs, cats)
}
