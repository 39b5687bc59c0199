use serde::{Deserialize, Serialize};

use super::matrix::SeMatrix;
use crate::error::{Error, Result};

/// Tolerance for ratio sums and throughput bookkeeping in `validate`.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub min_throughput: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_slots: usize,
    pub n_airs: usize,
    pub n_rb: usize,
    /// Slot of each UE on the one-slot-per-UE path; `None` for general ρ.
    pub slot_of_ue: Option<Vec<usize>>,
    /// `assoc[q][i]`: UE served by AIRS `i` in slot `q`.
    pub assoc: Vec<Vec<Option<usize>>>,
    /// `rho[u][q]`.
    pub rho: Vec<Vec<f64>>,
    pub throughput: Vec<f64>,
    pub min_throughput: f64,
    /// UEs with zero SE under their association, held at ρ = 0.
    pub zero_se_ues: Vec<usize>,
    pub trace: Vec<StageRecord>,
}

/// Serving AIRS of `u` in slot `q` under `assoc`.
pub fn serving_of(assoc: &[Option<usize>], u: usize) -> Option<usize> {
    assoc.iter().position(|&a| a == Some(u))
}

/// `R_u = Σ_q ρ_{u,q} S η_{u,q}`.
pub fn throughputs(eta: &SeMatrix, assoc: &[Vec<Option<usize>>], rho: &[Vec<f64>], n_rb: usize) -> Vec<f64> {
    let s = n_rb as f64;
    (0..eta.n_ues())
        .map(|u| {
            assoc
                .iter()
                .enumerate()
                .map(|(q, a)| rho[u][q] * s * eta.get(u, serving_of(a, u)))
                .sum()
        })
        .collect()
}

pub fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

impl Schedule {
    /// Fills throughputs and the min from `assoc` and `rho`.
    pub fn from_parts(
        eta: &SeMatrix,
        n_rb: usize,
        slot_of_ue: Option<Vec<usize>>,
        assoc: Vec<Vec<Option<usize>>>,
        rho: Vec<Vec<f64>>,
        zero_se_ues: Vec<usize>,
    ) -> Self {
        let throughput = throughputs(eta, &assoc, &rho, n_rb);
        let min_throughput = if throughput.is_empty() { 0.0 } else { min_of(&throughput) };
        Self {
            n_slots: assoc.len(),
            n_airs: eta.n_airs(),
            n_rb,
            slot_of_ue,
            assoc,
            rho,
            throughput,
            min_throughput,
            zero_se_ues,
            trace: Vec::new(),
        }
    }

    /// Checks ratio bounds and per-slot sums, one UE per AIRS and one AIRS
    /// per UE in every slot, the one-slot restriction when declared, and
    /// throughput bookkeeping.
    pub fn validate(&self, eta: &SeMatrix) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(format!("schedule: {m}")));
        let u_n = eta.n_ues();
        if self.n_airs != eta.n_airs() || self.assoc.len() != self.n_slots || self.rho.len() != u_n {
            return bad("dimensions do not match the SE matrix".into());
        }
        if self.throughput.len() != u_n {
            return bad("throughput length".into());
        }
        for (q, a) in self.assoc.iter().enumerate() {
            if a.len() != self.n_airs {
                return bad(format!("slot {q} association has {} entries", a.len()));
            }
            let mut seen = vec![false; u_n];
            for &u in a.iter().flatten() {
                if u >= u_n {
                    return bad(format!("slot {q} serves unknown UE {u}"));
                }
                if seen[u] {
                    return bad(format!("UE {u} served by two AIRSs in slot {q}"));
                }
                seen[u] = true;
            }
        }
        for q in 0..self.n_slots {
            let mut sum = 0.0;
            for u in 0..u_n {
                let r = self.rho[u].get(q).copied().unwrap_or(f64::NAN);
                if !(0.0..=1.0).contains(&r) {
                    return bad(format!("rho[{u}][{q}] = {r} outside [0, 1]"));
                }
                sum += r;
            }
            if sum > 1.0 + FEAS_TOL {
                return bad(format!("slot {q} ratios sum to {sum}"));
            }
        }
        if let Some(slots) = &self.slot_of_ue {
            if slots.len() != u_n {
                return bad("slot_of_ue length".into());
            }
            for (u, &q) in slots.iter().enumerate() {
                if q >= self.n_slots {
                    return bad(format!("UE {u} in slot {q}"));
                }
                for q2 in 0..self.n_slots {
                    if q2 != q && (self.rho[u][q2] != 0.0 || serving_of(&self.assoc[q2], u).is_some()) {
                        return bad(format!("UE {u} holds resources outside its slot {q}"));
                    }
                }
            }
        }
        let expect = throughputs(eta, &self.assoc, &self.rho, self.n_rb);
        for (u, (a, b)) in self.throughput.iter().zip(&expect).enumerate() {
            if (a - b).abs() > FEAS_TOL * b.abs().max(1.0) {
                return bad(format!("throughput of UE {u} is {a}, recomputed {b}"));
            }
        }
        if u_n > 0 && (self.min_throughput - min_of(&expect)).abs() > FEAS_TOL * self.min_throughput.abs().max(1.0) {
            return bad("min_throughput does not match".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eta() -> SeMatrix {
        SeMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 0.5], vec![0.5, 4.0]]).unwrap()
    }

    fn sched() -> Schedule {
        Schedule::from_parts(
            &eta(),
            10,
            Some(vec![0, 0, 1]),
            vec![vec![Some(0)], vec![Some(2)]],
            vec![vec![0.6, 0.0], vec![0.4, 0.0], vec![0.0, 1.0]],
            vec![],
        )
    }

    #[test]
    fn bookkeeping() {
        let s = sched();
        assert_eq!(s.throughput, vec![0.6 * 10.0 * 2.0, 0.4 * 10.0 * 3.0, 10.0 * 4.0]);
        assert_eq!(s.min_throughput, 12.0);
        s.validate(&eta()).unwrap();
    }

    #[test]
    fn validate_rejects_violations() {
        let e = eta();
        let mut s = sched();
        s.rho[1][0] = 0.5;
        assert!(s.validate(&e).is_err(), "slot over-allocated");

        let mut s = sched();
        s.assoc[0] = vec![Some(5)];
        assert!(s.validate(&e).is_err());

        let mut s = sched();
        s.rho[2][0] = 0.0;
        s.rho[0][1] = 0.1;
        assert!(s.validate(&e).is_err(), "UE outside its slot");

        let mut s = sched();
        s.throughput[0] += 1e-3;
        assert!(s.validate(&e).is_err());

        let mut s = sched();
        s.rho[0][0] = -0.1;
        assert!(s.validate(&e).is_err());
    }
}
