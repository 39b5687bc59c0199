use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ckm::SePredictor;
use crate::error::{Error, Result};
use crate::scene::SceneConfig;

/// Per-UE SE options: column 0 is BS-only, column `i + 1` is service by
/// AIRS `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeMatrix {
    rows: Vec<Vec<f64>>,
    n_cols: usize,
    /// Predictions that came back negative and were clamped to zero.
    #[serde(default)]
    pub clamped: usize,
}

impl SeMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_cols = rows.first().map_or(1, Vec::len);
        if n_cols == 0 {
            return Err(Error::invalid("SE rows need at least the BS-only column"));
        }
        for (u, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::invalid(format!("SE row {u} has {} columns, expected {n_cols}", r.len())));
            }
            if let Some(v) = r.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::invalid(format!("SE row {u} holds {v}; entries must be finite and >= 0")));
            }
        }
        Ok(Self { rows, n_cols, clamped: 0 })
    }

    /// Clamps negative entries to zero and counts them; non-finite entries
    /// are still rejected.
    pub fn from_predictions(rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut clamped = 0;
        let rows = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|v| {
                        if v < 0.0 {
                            clamped += 1;
                            0.0
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let mut m = Self::from_rows(rows)?;
        m.clamped = clamped;
        Ok(m)
    }

    pub fn n_ues(&self) -> usize {
        self.rows.len()
    }

    pub fn n_airs(&self) -> usize {
        self.n_cols - 1
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn bs(&self, u: usize) -> f64 {
        self.rows[u][0]
    }

    pub fn airs(&self, u: usize, i: usize) -> f64 {
        self.rows[u][i + 1]
    }

    /// SE of `u` under `serving` (BS only on `None`).
    pub fn get(&self, u: usize, serving: Option<usize>) -> f64 {
        self.rows[u][serving.map_or(0, |i| i + 1)]
    }

    /// Best column for `u` and its SE.
    pub fn best(&self, u: usize) -> (Option<usize>, f64) {
        let mut best = (None, self.bs(u));
        for i in 0..self.n_airs() {
            if self.airs(u, i) > best.1 {
                best = (Some(i), self.airs(u, i));
            }
        }
        best
    }
}

/// Predicts `[η_0, …, η_I]` for every UE in the scene, in parallel.
pub fn build_se_matrix(predictor: &dyn SePredictor, scene: &SceneConfig) -> Result<SeMatrix> {
    let rows: Vec<Vec<f64>> = scene
        .ues
        .par_iter()
        .map(|ue| predictor.predict_all(scene, ue))
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Ok(SeMatrix {
            rows,
            n_cols: scene.n_airs() + 1,
            clamped: 0,
        });
    }
    SeMatrix::from_predictions(rows)
}
