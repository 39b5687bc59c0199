//! Table CKM: LPS records keyed by UE position with nearest-neighbor lookup.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::FadingSpec;
use crate::error::{Error, Result};
use crate::oracle::{lps_records_for_ue, LpsRecord};
use crate::scene::{AirsConfig, SceneConfig, UePos};

pub const CELL_M: f64 = 50.0;
const STORE_VERSION: u32 = 1;

/// Hash of the radio and AIRS sections of a scene (UE list excluded).
pub fn fingerprint(scene: &SceneConfig) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        bs_height: f64,
        carrier_freq: f64,
        bandwidth: f64,
        n_rb: usize,
        bs_power_dbm: f64,
        noise_psd_dbm_hz: f64,
        airs: &'a [AirsConfig],
    }
    let key = Key {
        bs_height: scene.bs_height,
        carrier_freq: scene.carrier_freq,
        bandwidth: scene.bandwidth,
        n_rb: scene.n_rb,
        bs_power_dbm: scene.bs_power_dbm,
        noise_psd_dbm_hz: scene.noise_psd_dbm_hz,
        airs: &scene.airs,
    };
    let bytes = serde_json::to_vec(&key).expect("fingerprint key serializes");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkmEntry {
    pub pos: [f64; 2],
    /// `2I` records, AIRS-major: role 1 then role 0.
    pub records: Vec<LpsRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    fingerprint: String,
    version: u32,
    n_airs: usize,
}

#[derive(Debug, Clone)]
pub struct CkmStore {
    fingerprint: String,
    n_airs: usize,
    entries: Vec<CkmEntry>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    cell_min: (i64, i64),
    cell_max: (i64, i64),
}

fn cell_of(p: [f64; 2]) -> (i64, i64) {
    ((p[0] / CELL_M).floor() as i64, (p[1] / CELL_M).floor() as i64)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl CkmStore {
    pub fn new(scene: &SceneConfig) -> Self {
        Self::with_fingerprint(fingerprint(scene), scene.n_airs())
    }

    pub fn with_fingerprint(fingerprint: String, n_airs: usize) -> Self {
        Self {
            fingerprint,
            n_airs,
            entries: Vec::new(),
            buckets: HashMap::new(),
            cell_min: (i64::MAX, i64::MAX),
            cell_max: (i64::MIN, i64::MIN),
        }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn n_airs(&self) -> usize {
        self.n_airs
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CkmEntry] {
        &self.entries
    }

    pub fn check_fingerprint(&self, fp: &str) -> Result<()> {
        if fp != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                store: self.fingerprint.clone(),
                scene: fp.into(),
            });
        }
        Ok(())
    }

    pub fn put(&mut self, fingerprint: &str, pos: [f64; 2], records: Vec<LpsRecord>) -> Result<()> {
        self.check_fingerprint(fingerprint)?;
        if records.len() != 2 * self.n_airs {
            return Err(Error::invalid(format!(
                "entry needs {} LPS records, got {}",
                2 * self.n_airs,
                records.len()
            )));
        }
        if !(pos[0].is_finite() && pos[1].is_finite()) {
            return Err(Error::invalid("entry position must be finite"));
        }
        let c = cell_of(pos);
        self.cell_min = (self.cell_min.0.min(c.0), self.cell_min.1.min(c.1));
        self.cell_max = (self.cell_max.0.max(c.0), self.cell_max.1.max(c.1));
        self.buckets.entry(c).or_default().push(self.entries.len());
        self.entries.push(CkmEntry { pos, records });
        Ok(())
    }

    /// Euclidean-nearest entry and its distance; exact ties go to the
    /// earliest insertion.
    pub fn query(&self, pos: [f64; 2]) -> Result<(&CkmEntry, f64)> {
        if self.entries.is_empty() {
            return Err(Error::EmptyStore);
        }
        let c = cell_of(pos);
        let max_r = [
            c.0 - self.cell_min.0,
            self.cell_max.0 - c.0,
            c.1 - self.cell_min.1,
            self.cell_max.1 - c.1,
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
        .max(0);
        let mut best: Option<(f64, usize)> = None;
        let consider = |cell: (i64, i64), best: &mut Option<(f64, usize)>| {
            if let Some(ids) = self.buckets.get(&cell) {
                for &i in ids {
                    let d = dist2(pos, self.entries[i].pos);
                    let better = match *best {
                        None => true,
                        Some((bd, bi)) => d < bd || (d == bd && i < bi),
                    };
                    if better {
                        *best = Some((d, i));
                    }
                }
            }
        };
        for r in 0..=max_r {
            if r == 0 {
                consider(c, &mut best);
            } else {
                for dx in -r..=r {
                    consider((c.0 + dx, c.1 - r), &mut best);
                    consider((c.0 + dx, c.1 + r), &mut best);
                }
                for dy in -r + 1..r {
                    consider((c.0 - r, c.1 + dy), &mut best);
                    consider((c.0 + r, c.1 + dy), &mut best);
                }
            }
            // Everything in ring r+1 is at least r cells away.
            if let Some((d, _)) = best {
                if d < r as f64 * CELL_M {
                    break;
                }
            }
        }
        let (d, i) = best.expect("non-empty store has a nearest entry");
        Ok((&self.entries[i], d))
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("writing CKM store", e);
        let header = Header {
            fingerprint: self.fingerprint.clone(),
            version: STORE_VERSION,
            n_airs: self.n_airs,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(io)?;
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Manifest("empty CKM file".into()))?
            .map_err(|e| Error::io("reading CKM store", e))?;
        let h: Header = serde_json::from_str(&first)?;
        if h.version != STORE_VERSION {
            return Err(Error::UnsupportedVersion(h.version));
        }
        let mut store = Self::with_fingerprint(h.fingerprint.clone(), h.n_airs);
        for line in lines {
            let line = line.map_err(|e| Error::io("reading CKM store", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: CkmEntry = serde_json::from_str(&line)?;
            store.put(&h.fingerprint, e.pos, e.records)?;
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_jsonl(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }
}

/// Builds a table CKM from oracle LPS records at the given positions.
pub fn build_store(scene: &SceneConfig, positions: &[UePos], spec: &FadingSpec) -> Result<CkmStore> {
    let recs: Vec<Vec<LpsRecord>> = positions
        .par_iter()
        .map(|ue| lps_records_for_ue(scene, ue, spec))
        .collect::<Result<_>>()?;
    let mut store = CkmStore::new(scene);
    let fp = store.fingerprint.clone();
    for (ue, r) in positions.iter().zip(recs) {
        store.put(&fp, [ue.pos[0], ue.pos[1]], r)?;
    }
    Ok(store)
}
