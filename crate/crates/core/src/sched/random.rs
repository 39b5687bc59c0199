use rand::seq::SliceRandom;
use rand::Rng;

use super::matrix::SeMatrix;
use super::schedule::{Schedule, StageRecord};
use crate::rng::{self, tag};

/// Baseline: a random even split of UEs over slots, a random partial
/// AIRS→UE map per slot and equal ratios within each slot.
pub fn random_schedule(eta: &SeMatrix, n_slots: usize, n_rb: usize, seed: u64) -> Schedule {
    let (u_n, i_n) = (eta.n_ues(), eta.n_airs());
    let q_n = n_slots.max(1);
    let mut r = rng::stream(seed, &[tag::SCHEDULE]);
    let mut order: Vec<usize> = (0..u_n).collect();
    order.shuffle(&mut r);
    let mut slots: Vec<Vec<usize>> = vec![Vec::new(); q_n];
    for (p, &u) in order.iter().enumerate() {
        slots[p % q_n].push(u);
    }
    let mut slot_of = vec![0; u_n];
    let mut rho = vec![vec![0.0; q_n]; u_n];
    let mut assoc = Vec::with_capacity(q_n);
    for (q, ues) in slots.iter().enumerate() {
        let mut free = ues.clone();
        let mut a = vec![None; i_n];
        for slot in a.iter_mut() {
            let pick = r.random_range(0..=free.len());
            if pick < free.len() {
                *slot = Some(free.swap_remove(pick));
            }
        }
        assoc.push(a);
        for &u in ues {
            slot_of[u] = q;
            rho[u][q] = 1.0 / ues.len() as f64;
        }
    }
    let mut s = Schedule::from_parts(eta, n_rb, Some(slot_of), assoc, rho, Vec::new());
    s.zero_se_ues = (0..u_n).filter(|&u| s.throughput[u] <= 0.0).collect();
    s.trace.push(StageRecord {
        stage: "random".into(),
        min_throughput: s.min_throughput,
        wall_ms: 0.0,
    });
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_ratios_and_reproducible() {
        let eta = SeMatrix::from_rows(vec![vec![1.0, 2.0], vec![0.5, 0.1], vec![3.0, 3.5]]).unwrap();
        let s = random_schedule(&eta, 1, 12, 4);
        assert!(s.rho.iter().all(|r| (r[0] - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(s, random_schedule(&eta, 1, 12, 4));
        s.validate(&eta).unwrap();
        // Manual throughput bookkeeping.
        for u in 0..3 {
            let serving = s.assoc[0].iter().position(|&a| a == Some(u));
            assert_eq!(s.throughput[u], s.rho[u][0] * 12.0 * eta.get(u, serving));
        }
    }

    #[test]
    fn slots_are_even() {
        let eta = SeMatrix::from_rows(vec![vec![1.0, 1.0, 1.0]; 11]).unwrap();
        let s = random_schedule(&eta, 4, 12, 2);
        let mut counts = [0; 4];
        s.slot_of_ue.as_ref().unwrap().iter().for_each(|&q| counts[q] += 1);
        assert_eq!(counts, [3, 3, 3, 2]);
        s.validate(&eta).unwrap();
    }
}
