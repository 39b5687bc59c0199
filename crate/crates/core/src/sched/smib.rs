//! SM-IB: stable-matching grouping, per-slot alternating matching and
//! balancing, then cross-slot UE swaps.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::balance::ib_balance;
use super::ckmeans::ckmeans;
use super::matching::gale_shapley;
use super::matrix::SeMatrix;
use super::schedule::{Schedule, StageRecord};
use crate::ckm::SePredictor;
use crate::error::{Error, Result};
use crate::scene::SceneConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmIbParams {
    /// Per-slot throughput gap that ends balancing.
    pub eps: f64,
    /// Cross-slot gap that ends swapping.
    pub xi: f64,
    pub n_max: usize,
    pub seed: u64,
    /// Record wall-clock time per stage; off keeps output byte-stable.
    pub timing: bool,
}

impl Default for SmIbParams {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            xi: 1e-2,
            n_max: 10,
            seed: 0,
            timing: false,
        }
    }
}

impl SmIbParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) || !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::invalid("eps and xi must be positive"));
        }
        Ok(())
    }
}

/// One slot: its UEs, the AIRS association and the RB ratios aligned with
/// `ues`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    pub ues: Vec<usize>,
    /// `assoc[i]`: UE served by AIRS `i`.
    pub assoc: Vec<Option<usize>>,
    pub rho: Vec<f64>,
    /// Min throughput in the slot; +inf when empty.
    pub common: f64,
    /// Zero-SE UEs (global ids).
    pub zero: Vec<usize>,
}

impl SlotState {
    pub fn serving(&self, u: usize) -> Option<usize> {
        self.assoc.iter().position(|&a| a == Some(u))
    }

    fn etas(&self, eta: &SeMatrix) -> Vec<f64> {
        self.ues.iter().map(|&u| eta.get(u, self.serving(u))).collect()
    }

    /// Equal ratios across positive-SE UEs.
    pub fn equal(ues: Vec<usize>, assoc: Vec<Option<usize>>, eta: &SeMatrix, s: usize) -> Self {
        let mut st = Self {
            ues,
            assoc,
            rho: Vec::new(),
            common: f64::INFINITY,
            zero: Vec::new(),
        };
        let etas = st.etas(eta);
        let active = etas.iter().filter(|&&e| e > 0.0).count();
        st.rho = etas.iter().map(|&e| if e > 0.0 { 1.0 / active as f64 } else { 0.0 }).collect();
        st.zero = st.ues.iter().zip(&etas).filter(|(_, &e)| !(e > 0.0)).map(|(&u, _)| u).collect();
        st.common = st.rho.iter().zip(&etas).map(|(r, e)| r * e * s as f64).fold(f64::INFINITY, f64::min);
        st
    }

    /// IB ratios for the current association.
    pub fn balanced(ues: Vec<usize>, assoc: Vec<Option<usize>>, eta: &SeMatrix, s: usize, eps: f64) -> Self {
        let mut st = Self {
            ues,
            assoc,
            rho: Vec::new(),
            common: f64::INFINITY,
            zero: Vec::new(),
        };
        let ib = ib_balance(&st.etas(eta), s, eps);
        st.zero = ib.zero.iter().map(|&k| st.ues[k]).collect();
        st.rho = ib.rho;
        st.common = ib.common;
        st
    }
}

/// Cluster-size floor `U_0 = min(⌊U/I⌋, Q)`.
pub fn min_cluster_size(n_ues: usize, n_airs: usize, n_slots: usize) -> usize {
    (n_ues / n_airs.max(1)).min(n_slots)
}

fn rank_desc(items: impl Iterator<Item = (usize, f64)>) -> Vec<usize> {
    let mut v: Vec<(usize, f64)> = items.collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(k, _)| k).collect()
}

/// Stage 1. Returns slot states with equal ratios.
pub fn stage1_grouping(eta: &SeMatrix, n_slots: usize, n_rb: usize, seed: u64) -> Result<Vec<SlotState>> {
    if n_slots == 0 {
        return Err(Error::invalid("need at least one slot"));
    }
    let (u_n, i_n) = (eta.n_ues(), eta.n_airs());
    let mut slots: Vec<Vec<usize>> = vec![Vec::new(); n_slots];
    let mut assoc = vec![vec![None; i_n]; n_slots];
    let mut leftovers: Vec<usize> = Vec::new();

    if i_n == 0 {
        leftovers = (0..u_n).collect();
    } else if u_n <= i_n {
        // One UE per slot in turn, each on its best free AIRS.
        for u in 0..u_n {
            let q = u % n_slots;
            slots[q].push(u);
            let free = rank_desc((0..i_n).map(|i| (i, eta.airs(u, i))))
                .into_iter()
                .find(|&i| eta.airs(u, i) > eta.bs(u) && assoc[q][i].is_none());
            if let Some(i) = free {
                assoc[q][i] = Some(u);
            }
        }
    } else {
        let vectors: Vec<Vec<f64>> = (0..u_n).map(|u| eta.rows()[u][1..].to_vec()).collect();
        let labels = ckmeans(&vectors, i_n, min_cluster_size(u_n, i_n, n_slots), seed)?;
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); i_n];
        for (u, &l) in labels.iter().enumerate() {
            clusters[l].push(u);
        }
        let mean = |c: &[usize], f: &dyn Fn(usize) -> f64| c.iter().map(|&u| f(u)).sum::<f64>() / c.len() as f64;
        let cluster_prefs: Vec<Vec<usize>> = clusters
            .iter()
            .map(|c| rank_desc((0..i_n).map(|i| (i, mean(c, &|u| eta.airs(u, i))))))
            .collect();
        let airs_prefs: Vec<Vec<usize>> = (0..i_n)
            .map(|i| rank_desc(clusters.iter().enumerate().map(|(k, c)| (k, mean(c, &|u| eta.airs(u, i) - eta.bs(u))))))
            .collect();
        let m = gale_shapley(&cluster_prefs, &airs_prefs);
        for (k, c) in clusters.iter_mut().enumerate() {
            let i = m[k].expect("complete preference lists of equal size match everyone");
            c.sort_by(|&a, &b| eta.bs(a).total_cmp(&eta.bs(b)).then(a.cmp(&b)));
            for (q, &u) in c.iter().take(n_slots).enumerate() {
                slots[q].push(u);
                assoc[q][i] = Some(u);
            }
            leftovers.extend(c.iter().skip(n_slots));
        }
    }
    leftovers.sort_by(|&a, &b| eta.bs(b).total_cmp(&eta.bs(a)).then(a.cmp(&b)));
    for u in leftovers {
        let q = (0..n_slots).min_by_key(|&q| (slots[q].len(), q)).expect("n_slots > 0");
        slots[q].push(u);
    }
    Ok(slots
        .into_iter()
        .zip(assoc)
        .map(|(ues, a)| SlotState::equal(ues, a, eta, n_rb))
        .collect())
}

#[derive(Clone, Copy)]
enum PrefKey {
    /// `η_{u,i} − η_{u,0}`.
    Gain,
    /// Drop in the slot's `Σ 1/η`, which sets the balanced throughput:
    /// `1/η_{u,0} − 1/η_{u,i}`.
    Reciprocal,
    /// Throughput gain at the current ratios, `ρ_u (η_{u,i} − η_{u,0})`.
    RatioGain,
}

fn recip_gain(bs: f64, airs: f64) -> f64 {
    if bs > 0.0 {
        1.0 / bs - 1.0 / airs
    } else {
        f64::INFINITY
    }
}

/// AIRSs propose to slot UEs; a UE lists an AIRS only if it beats the BS.
fn slot_matching(st: &SlotState, eta: &SeMatrix, key: PrefKey) -> Vec<Option<usize>> {
    let i_n = eta.n_airs();
    let gain = |k: usize, i: usize| eta.airs(st.ues[k], i) - eta.bs(st.ues[k]);
    let airs_prefs: Vec<Vec<usize>> = (0..i_n)
        .map(|i| {
            rank_desc((0..st.ues.len()).filter(|&k| gain(k, i) > 0.0).map(|k| {
                let g = gain(k, i);
                (k, match key {
                    PrefKey::Gain => g,
                    PrefKey::Reciprocal => recip_gain(eta.bs(st.ues[k]), eta.airs(st.ues[k], i)),
                    PrefKey::RatioGain => st.rho[k] * g,
                })
            }))
        })
        .collect();
    let ue_prefs: Vec<Vec<usize>> = (0..st.ues.len())
        .map(|k| rank_desc((0..i_n).filter(|&i| gain(k, i) > 0.0).map(|i| (i, eta.airs(st.ues[k], i)))))
        .collect();
    gale_shapley(&airs_prefs, &ue_prefs)
        .into_iter()
        .map(|m| m.map(|k| st.ues[k]))
        .collect()
}

/// Stage 2 on one slot: alternate stable matching and IB for up to `n_max`
/// rounds. A new matching is kept only if it raises the slot's min
/// throughput, so the result never falls below the balanced input.
pub fn per_slot_maxmin(st: &SlotState, eta: &SeMatrix, n_rb: usize, n_max: usize, eps: f64) -> SlotState {
    let mut cur = SlotState::balanced(st.ues.clone(), st.assoc.clone(), eta, n_rb, eps);
    if cur.ues.is_empty() {
        return cur;
    }
    for _ in 0..n_max {
        let mut best: Option<SlotState> = None;
        for key in [PrefKey::Reciprocal, PrefKey::RatioGain, PrefKey::Gain] {
            let assoc = slot_matching(&cur, eta, key);
            if assoc == cur.assoc || best.as_ref().is_some_and(|b| b.assoc == assoc) {
                continue;
            }
            let cand = SlotState::balanced(cur.ues.clone(), assoc, eta, n_rb, eps);
            if cand.common > cur.common && best.as_ref().map_or(true, |b| cand.common > b.common) {
                best = Some(cand);
            }
        }
        match best {
            Some(b) => cur = b,
            None => break,
        }
    }
    cur
}

/// Replaces `out` by `inc` in a slot: the AIRS serving `out` is released,
/// the newcomer starts BS-only with an equal share, and the others' ratios
/// are scaled to fit.
fn swap_in(st: &SlotState, out: usize, inc: usize, eta: &SeMatrix, n_rb: usize) -> SlotState {
    let n = st.ues.len() as f64;
    let pos = st.ues.iter().position(|&u| u == out).expect("swapped UE is in the slot");
    let mut next = st.clone();
    next.ues[pos] = inc;
    for a in &mut next.assoc {
        if *a == Some(out) {
            *a = None;
        }
    }
    let rest: f64 = st.rho.iter().enumerate().filter(|&(k, _)| k != pos).map(|(_, r)| r).sum();
    let share = 1.0 / n;
    for (k, r) in next.rho.iter_mut().enumerate() {
        *r = if k == pos {
            share
        } else if rest > 0.0 {
            *r * (1.0 - share) / rest
        } else {
            (1.0 - share) / (n - 1.0)
        };
    }
    let etas = next.etas(eta);
    next.common = next.rho.iter().zip(&etas).map(|(r, e)| r * e * n_rb as f64).fold(f64::INFINITY, f64::min);
    next
}

/// Equalized throughput of a slot with `out` replaced by `inc` if every UE
/// had its best column; no association can beat it.
fn slot_bound(ues: &[usize], out: usize, inc: usize, eta: &SeMatrix, n_rb: usize) -> f64 {
    let best = |u: usize| (0..eta.n_airs()).map(|i| eta.airs(u, i)).fold(eta.bs(u), f64::max);
    let inv: f64 = ues.iter().map(|&u| if u == out { inc } else { u }).map(|u| 1.0 / best(u)).sum();
    n_rb as f64 / inv
}

/// Stage 3: swap the bottleneck UE of the worst slot with a UE of the best
/// slot while that strictly raises the worse of the two.
pub fn cross_slot_swap(slots: &mut [SlotState], eta: &SeMatrix, n_rb: usize, params: &SmIbParams) -> usize {
    let cap = 100 + 10 * eta.n_ues();
    let mut swaps = 0;
    while swaps < cap {
        let live: Vec<usize> = (0..slots.len()).filter(|&q| !slots[q].ues.is_empty()).collect();
        if live.len() < 2 {
            break;
        }
        let q_min = *live
            .iter()
            .min_by(|&&a, &&b| slots[a].common.total_cmp(&slots[b].common).then(a.cmp(&b)))
            .unwrap();
        let q_max = *live
            .iter()
            .filter(|&&q| q != q_min)
            .max_by(|&&a, &&b| slots[a].common.total_cmp(&slots[b].common).then(b.cmp(&a)))
            .unwrap();
        let floor = slots[q_min].common;
        if slots[q_max].common - floor <= params.xi {
            break;
        }
        let lo = &slots[q_min];
        // A zero-SE UE is the bottleneck regardless of its (zero) ratio.
        let out = lo.zero.first().copied().unwrap_or_else(|| {
            let k = (0..lo.ues.len())
                .max_by(|&a, &b| lo.rho[a].total_cmp(&lo.rho[b]).then(b.cmp(&a)))
                .unwrap();
            lo.ues[k]
        });
        let hi = &slots[q_max];
        let mut order: Vec<usize> = (0..hi.ues.len()).collect();
        order.sort_by(|&a, &b| hi.rho[a].total_cmp(&hi.rho[b]).then(a.cmp(&b)));
        let mut adopted = None;
        for k in order {
            let inc = hi.ues[k];
            if slot_bound(&lo.ues, out, inc, eta, n_rb) <= floor || slot_bound(&hi.ues, inc, out, eta, n_rb) <= floor {
                continue;
            }
            let a = per_slot_maxmin(&swap_in(lo, out, inc, eta, n_rb), eta, n_rb, params.n_max, params.eps);
            if a.common <= floor {
                continue;
            }
            let b = per_slot_maxmin(&swap_in(hi, inc, out, eta, n_rb), eta, n_rb, params.n_max, params.eps);
            if b.common > floor {
                adopted = Some((a, b));
                break;
            }
        }
        match adopted {
            Some((a, b)) => {
                slots[q_min] = a;
                slots[q_max] = b;
                swaps += 1;
            }
            None => break,
        }
    }
    swaps
}

fn global_min(slots: &[SlotState]) -> f64 {
    let m = slots.iter().map(|s| s.common).fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        m
    } else {
        0.0
    }
}

/// Packs slot states into a `Schedule`.
pub fn slots_to_schedule(slots: &[SlotState], eta: &SeMatrix, n_rb: usize) -> Schedule {
    let (u_n, q_n) = (eta.n_ues(), slots.len());
    let mut slot_of = vec![0; u_n];
    let mut rho = vec![vec![0.0; q_n]; u_n];
    let mut zero = Vec::new();
    for (q, st) in slots.iter().enumerate() {
        for (k, &u) in st.ues.iter().enumerate() {
            slot_of[u] = q;
            rho[u][q] = st.rho[k];
        }
        zero.extend(&st.zero);
    }
    zero.sort_unstable();
    let assoc = slots.iter().map(|s| s.assoc.clone()).collect();
    Schedule::from_parts(eta, n_rb, Some(slot_of), assoc, rho, zero)
}

fn record(stage: &str, slots: &[SlotState], t0: Instant, timing: bool) -> StageRecord {
    StageRecord {
        stage: stage.into(),
        min_throughput: global_min(slots),
        wall_ms: if timing { t0.elapsed().as_secs_f64() * 1e3 } else { 0.0 },
    }
}

/// All three stages on a precomputed SE matrix.
pub fn sm_ib_eta(eta: &SeMatrix, n_slots: usize, n_rb: usize, params: &SmIbParams) -> Result<Schedule> {
    params.validate()?;
    let t0 = Instant::now();
    let mut slots = stage1_grouping(eta, n_slots, n_rb, params.seed)?;
    let mut trace = vec![record("stage1", &slots, t0, params.timing)];

    let t0 = Instant::now();
    for st in &mut slots {
        *st = per_slot_maxmin(st, eta, n_rb, params.n_max, params.eps);
    }
    trace.push(record("stage2", &slots, t0, params.timing));

    let t0 = Instant::now();
    cross_slot_swap(&mut slots, eta, n_rb, params);
    trace.push(record("stage3", &slots, t0, params.timing));

    let mut sched = slots_to_schedule(&slots, eta, n_rb);
    sched.trace = trace;
    Ok(sched)
}

pub fn sm_ib(predictor: &dyn SePredictor, scene: &SceneConfig, params: &SmIbParams) -> Result<Schedule> {
    params.validate()?;
    let eta = super::build_se_matrix(predictor, scene)?;
    sm_ib_eta(&eta, scene.n_slots, scene.n_rb, params)
}
