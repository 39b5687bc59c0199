//! Exhaustive upper bound: every per-slot partial AIRS→UE assignment, with
//! the max-min LP solved for each cross-slot combination.

use rayon::prelude::*;

use super::lp::exact_maxmin_lp;
use super::matrix::SeMatrix;
use super::schedule::{Schedule, StageRecord};
use crate::ckm::SePredictor;
use crate::error::{Error, Result};
use crate::scene::SceneConfig;

pub const DEFAULT_GUARD: f64 = 1e7;

/// Partial injective maps from `n_airs` AIRSs into `n_ues` UEs:
/// `Σ_k C(I,k)·U!/(U−k)!`.
pub fn n_slot_assignments(n_ues: usize, n_airs: usize) -> f64 {
    let mut total = 0.0;
    let mut choose = 1.0; // C(I, k)
    let mut perm = 1.0; // U!/(U-k)!
    for k in 0..=n_airs.min(n_ues) {
        if k > 0 {
            choose *= (n_airs - k + 1) as f64 / k as f64;
            perm *= (n_ues - k + 1) as f64;
        }
        total += choose * perm;
    }
    total
}

/// LP solves needed: slots are interchangeable, so combinations are
/// multisets of size Q over the per-slot assignments.
pub fn n_lp_calls(n_ues: usize, n_airs: usize, n_slots: usize) -> f64 {
    let a = n_slot_assignments(n_ues, n_airs);
    let mut c = 1.0;
    for k in 0..n_slots {
        c *= (a + k as f64) / (k + 1) as f64;
    }
    c
}

fn check_guard(n_ues: usize, n_airs: usize, n_slots: usize, guard: f64) -> Result<()> {
    let needed = n_lp_calls(n_ues, n_airs, n_slots);
    if needed > guard {
        return Err(Error::EnumerationGuard { needed, guard });
    }
    Ok(())
}

fn slot_assignments(n_ues: usize, n_airs: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n_airs {
        let mut next = Vec::new();
        for a in &out {
            let mut none = a.clone();
            none.push(None);
            next.push(none);
            for u in 0..n_ues {
                if !a.contains(&Some(u)) {
                    let mut b = a.clone();
                    b.push(Some(u));
                    next.push(b);
                }
            }
        }
        out = next;
    }
    out
}

/// Advances a non-decreasing index tuple; false when exhausted.
fn next_multiset(idx: &mut [usize], n: usize) -> bool {
    let mut k = idx.len();
    while k > 0 {
        k -= 1;
        if idx[k] + 1 < n {
            idx[k] += 1;
            let v = idx[k];
            idx[k + 1..].iter_mut().for_each(|x| *x = v);
            return true;
        }
    }
    false
}

struct Best {
    t: f64,
    combo: Vec<usize>,
    rho: Vec<Vec<f64>>,
}

fn better(a: Best, b: Best) -> Best {
    if b.t > a.t || (b.t == a.t && b.combo < a.combo) {
        b
    } else {
        a
    }
}

/// Max-min optimum over associations (with multi-slot ratios) on a
/// precomputed SE matrix.
pub fn exact_enum_eta(eta: &SeMatrix, n_slots: usize, n_rb: usize, guard: f64) -> Result<Schedule> {
    let (u_n, i_n) = (eta.n_ues(), eta.n_airs());
    if n_slots == 0 {
        return Err(Error::invalid("need at least one slot"));
    }
    check_guard(u_n, i_n, n_slots, guard)?;
    if u_n == 0 {
        let mut s = Schedule::from_parts(eta, n_rb, None, vec![vec![None; i_n]; n_slots], Vec::new(), Vec::new());
        s.trace.push(StageRecord { stage: "exact".into(), min_throughput: 0.0, wall_ms: 0.0 });
        return Ok(s);
    }
    let assigns = slot_assignments(u_n, i_n);
    let n = assigns.len();
    let solve = |combo: &[usize]| -> Result<Best> {
        let table: Vec<Vec<f64>> = (0..u_n)
            .map(|u| {
                combo
                    .iter()
                    .map(|&a| eta.get(u, assigns[a].iter().position(|&x| x == Some(u))))
                    .collect()
            })
            .collect();
        let lp = exact_maxmin_lp(&table, n_rb)?;
        Ok(Best {
            t: lp.t,
            combo: combo.to_vec(),
            rho: lp.rho,
        })
    };
    // Fan out over the first slot's assignment; each task walks the
    // multisets that start with it.
    let best = (0..n)
        .into_par_iter()
        .map(|first| -> Result<Best> {
            let mut idx = vec![first; n_slots];
            let mut best = solve(&idx)?;
            while next_multiset(&mut idx[1..], n) {
                best = better(best, solve(&idx)?);
            }
            Ok(best)
        })
        .try_reduce_with(|a, b| Ok(better(a, b)))
        .expect("at least one assignment")?;
    let assoc = best.combo.iter().map(|&a| assigns[a].clone()).collect();
    let mut s = Schedule::from_parts(eta, n_rb, None, assoc, best.rho, Vec::new());
    s.zero_se_ues = (0..u_n).filter(|&u| s.throughput[u] <= 0.0).collect();
    s.trace.push(StageRecord {
        stage: "exact".into(),
        min_throughput: s.min_throughput,
        wall_ms: 0.0,
    });
    Ok(s)
}

/// Refuses oversized instances before any prediction work.
pub fn exact_enum(predictor: &dyn SePredictor, scene: &SceneConfig, guard: f64) -> Result<Schedule> {
    if scene.n_slots == 0 {
        return Err(Error::invalid("need at least one slot"));
    }
    check_guard(scene.ues.len(), scene.n_airs(), scene.n_slots, guard)?;
    let eta = super::build_se_matrix(predictor, scene)?;
    exact_enum_eta(&eta, scene.n_slots, scene.n_rb, guard)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting() {
        assert_eq!(n_slot_assignments(2, 1), 3.0);
        assert_eq!(slot_assignments(2, 1).len(), 3);
        assert_eq!(n_lp_calls(2, 1, 1), 3.0);
        assert_eq!(n_slot_assignments(5, 0), 1.0);
        // Two AIRSs, three UEs: 1 + 2·3 + 3·2 = 13.
        assert_eq!(n_slot_assignments(3, 2), 13.0);
        assert_eq!(slot_assignments(3, 2).len(), 13);
        assert_eq!(n_lp_calls(3, 2, 2), 91.0);
        let mut idx = vec![0, 0];
        let mut c = 1;
        while next_multiset(&mut idx, 13) {
            c += 1;
        }
        assert_eq!(c, 91);
        assert!(n_lp_calls(30, 2, 4) > DEFAULT_GUARD);
    }

    #[test]
    fn no_airs_is_one_lp() {
        let eta = SeMatrix::from_rows(vec![vec![1.0], vec![3.0]]).unwrap();
        let s = exact_enum_eta(&eta, 1, 48, DEFAULT_GUARD).unwrap();
        assert!((s.min_throughput - 36.0).abs() < 1e-9);
        s.validate(&eta).unwrap();
    }

    #[test]
    fn picks_the_helpful_assignment() {
        let eta = SeMatrix::from_rows(vec![vec![1.0, 4.0], vec![2.0, 2.5]]).unwrap();
        let s = exact_enum_eta(&eta, 1, 10, DEFAULT_GUARD).unwrap();
        assert_eq!(s.assoc, vec![vec![Some(0)]]);
        assert!((s.min_throughput - 10.0 / (0.25 + 0.5)).abs() < 1e-9);
    }

    #[test]
    fn guard_refuses_before_work() {
        let eta = SeMatrix::from_rows(vec![vec![1.0, 1.0, 1.0]; 30]).unwrap();
        assert!(matches!(
            exact_enum_eta(&eta, 4, 10, DEFAULT_GUARD),
            Err(Error::EnumerationGuard { .. })
        ));
    }
}
