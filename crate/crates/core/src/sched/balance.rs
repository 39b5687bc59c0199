//! Iterative balancing of RB ratios within one slot.

#[derive(Debug, Clone, PartialEq)]
pub struct IbResult {
    pub rho: Vec<f64>,
    /// Min throughput over the balanced (positive-SE) UEs; 0 if any UE was
    /// excluded for zero SE, +inf for an empty slot.
    pub common: f64,
    /// Indices (into the input) of zero-SE UEs, held at ρ = 0.
    pub zero: Vec<usize>,
    pub iterations: usize,
}

/// Safety cap; convergence is geometric, so this is never reached for sane
/// inputs.
const MAX_ITERS: usize = 1_000_000;

/// Starts from equal ratios and repeatedly moves
/// `Δ = (ρ_max η_max − ρ_min η_min)/(η_max + η_min)` from the best to the
/// worst UE, which equalizes the pair exactly, until the throughput gap is
/// at most `eps`.
pub fn ib_balance(etas: &[f64], s: usize, eps: f64) -> IbResult {
    let s = s as f64;
    let active: Vec<usize> = (0..etas.len()).filter(|&k| etas[k] > 0.0).collect();
    let zero: Vec<usize> = (0..etas.len()).filter(|&k| !(etas[k] > 0.0)).collect();
    let mut rho = vec![0.0; etas.len()];
    if active.is_empty() {
        let common = if etas.is_empty() { f64::INFINITY } else { 0.0 };
        return IbResult { rho, common, zero, iterations: 0 };
    }
    let share = 1.0 / active.len() as f64;
    for &k in &active {
        rho[k] = share;
    }
    let mut iterations = 0;
    let mut min_r;
    loop {
        let (mut lo, mut hi) = (active[0], active[0]);
        let (mut r_lo, mut r_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &k in &active {
            let r = rho[k] * etas[k];
            if r < r_lo {
                r_lo = r;
                lo = k;
            }
            if r > r_hi {
                r_hi = r;
                hi = k;
            }
        }
        min_r = r_lo * s;
        if (r_hi - r_lo) * s <= eps || iterations >= MAX_ITERS {
            break;
        }
        let delta = (r_hi - r_lo) / (etas[hi] + etas[lo]);
        rho[hi] -= delta;
        rho[lo] += delta;
        iterations += 1;
    }
    IbResult {
        rho,
        common: if zero.is_empty() { min_r } else { 0.0 },
        zero,
        iterations,
    }
}

/// `S / Σ 1/η_u`: the equalized throughput when all η are positive.
pub fn closed_form_common(etas: &[f64], s: usize) -> f64 {
    s as f64 / etas.iter().map(|e| 1.0 / e).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let r = ib_balance(&[2.0, 2.0], 10, 1e-3);
        assert_eq!(r.rho, vec![0.5, 0.5]);
        assert_eq!(r.iterations, 0);

        let r = ib_balance(&[1.0, 3.0], 48, 1e-3);
        assert!((r.rho[0] - 0.75).abs() < 1e-12 && (r.rho[1] - 0.25).abs() < 1e-12);
        assert!((r.common - 36.0).abs() < 1e-9);
        assert_eq!(r.iterations, 1);

        let r = ib_balance(&[0.7], 12, 1e-3);
        assert_eq!(r.rho, vec![1.0]);

        let r = ib_balance(&[], 12, 1e-3);
        assert!(r.rho.is_empty() && r.common.is_infinite());
    }

    #[test]
    fn zero_se_is_excluded_and_flagged() {
        let r = ib_balance(&[1.0, 0.0, 3.0], 48, 1e-3);
        assert_eq!(r.zero, vec![1]);
        assert_eq!(r.rho[1], 0.0);
        assert_eq!(r.common, 0.0);
        assert!((r.rho[0] - 0.75).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn matches_closed_form(etas in proptest::collection::vec(0.1f64..8.0, 2..11), s in 1usize..100) {
            let eps = 1e-3;
            let r = ib_balance(&etas, s, eps);
            prop_assert!((r.common - closed_form_common(&etas, s)).abs() <= eps);
            prop_assert!((r.rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(r.rho.iter().all(|&x| x > 0.0 && x <= 1.0));
            // O(log 1/ε)-per-UE shape, with generous slack.
            prop_assert!(r.iterations <= 200 * etas.len());
        }
    }
}
