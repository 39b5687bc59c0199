//! Dense tableau simplex for `max cᵀx s.t. Ax ≤ b, x ≥ 0` with `b ≥ 0`,
//! and the max-min RB-ratio LP built on it.

use crate::error::{Error, Result};

pub const LP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Dual prices of the `m` constraints.
    pub y: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Bland's rule throughout, so degenerate pivots cannot cycle in exact
/// arithmetic; a pivot cap guards against rounding-induced cycling. The
/// result is checked against primal feasibility, dual feasibility and a
/// zero duality gap before it is returned.
pub fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let (m, n) = (a.len(), c.len());
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("LP dimensions do not agree"));
    }
    if b.iter().any(|&v| !(v >= 0.0)) || a.iter().flatten().chain(c).any(|v| !v.is_finite()) {
        return Err(Error::invalid("LP needs finite data and b >= 0"));
    }
    let w = n + m + 1;
    // Rows 0..m: constraints with slack columns n..n+m; row m: −c.
    let mut t = vec![0.0; (m + 1) * w];
    for i in 0..m {
        t[i * w..i * w + n].copy_from_slice(&a[i]);
        t[i * w + n + i] = 1.0;
        t[i * w + w - 1] = b[i];
    }
    for j in 0..n {
        t[m * w + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let guard = 1000 + 50 * (n + m);
    let mut pivots = 0;
    loop {
        let Some(e) = (0..n + m).find(|&j| t[m * w + j] < -LP_TOL) else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aie = t[i * w + e];
            if aie > LP_TOL {
                let ratio = t[i * w + w - 1] / aie;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((l, r)) => {
                        if ratio < r - LP_TOL || (ratio <= r + LP_TOL && basis[i] < basis[l]) {
                            Some((i, ratio))
                        } else {
                            Some((l, r))
                        }
                    }
                };
            }
        }
        let Some((l, _)) = leave else {
            return Err(Error::invalid("LP is unbounded"));
        };
        pivots += 1;
        if pivots > guard {
            return Err(Error::CyclingGuard(guard));
        }
        let p = t[l * w + e];
        for j in 0..w {
            t[l * w + j] /= p;
        }
        for i in 0..=m {
            if i != l {
                let f = t[i * w + e];
                if f != 0.0 {
                    for j in 0..w {
                        t[i * w + j] -= f * t[l * w + j];
                    }
                }
            }
        }
        basis[l] = e;
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i * w + w - 1];
        }
    }
    let y: Vec<f64> = (0..m).map(|i| t[m * w + n + i]).collect();
    let objective = c.iter().zip(&x).map(|(c, x)| c * x).sum::<f64>();
    certify(c, a, b, &x, &y, objective)?;
    Ok(LpSolution { x, y, objective, pivots })
}

fn certify(c: &[f64], a: &[Vec<f64>], b: &[f64], x: &[f64], y: &[f64], obj: f64) -> Result<()> {
    let scale = 1.0 + a.iter().flatten().chain(b).chain(c).fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-7 * scale;
    if x.iter().any(|&v| v < -tol) || y.iter().any(|&v| v < -tol) {
        return Err(Error::Certificate("negative primal or dual value".into()));
    }
    for (i, row) in a.iter().enumerate() {
        let lhs: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
        if lhs > b[i] + tol {
            return Err(Error::Certificate(format!("row {i} violated by {}", lhs - b[i])));
        }
    }
    for j in 0..c.len() {
        let aty: f64 = a.iter().zip(y).map(|(r, y)| r[j] * y).sum();
        if aty < c[j] - tol {
            return Err(Error::Certificate(format!("dual row {j} violated by {}", c[j] - aty)));
        }
    }
    let dual_obj: f64 = b.iter().zip(y).map(|(b, y)| b * y).sum();
    if (dual_obj - obj).abs() > tol * (1.0 + obj.abs()) {
        return Err(Error::Certificate(format!("duality gap {}", dual_obj - obj)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinLp {
    pub t: f64,
    /// `rho[u][q]`.
    pub rho: Vec<Vec<f64>>,
    pub pivots: usize,
}

/// `max t s.t. Σ_q ρ_{u,q} S η_{u,q} ≥ t, Σ_u ρ_{u,q} ≤ 1, ρ ≥ 0` with
/// `eta[u][q]` the SE of UE `u` in slot `q`.
pub fn exact_maxmin_lp(eta: &[Vec<f64>], s: usize) -> Result<MaxMinLp> {
    let u_n = eta.len();
    let q_n = eta.first().map_or(0, Vec::len);
    if u_n == 0 || q_n == 0 {
        return Err(Error::invalid("LP needs at least one UE and one slot"));
    }
    if eta.iter().any(|r| r.len() != q_n || r.iter().any(|v| !(v.is_finite() && *v >= 0.0))) {
        return Err(Error::invalid("η must be a finite non-negative U×Q table"));
    }
    let s = s as f64;
    // Variables: ρ_{u,q} at u*Q + q, then t.
    let n = u_n * q_n + 1;
    let mut c = vec![0.0; n];
    c[n - 1] = 1.0;
    let mut a = Vec::with_capacity(u_n + q_n);
    let mut b = Vec::with_capacity(u_n + q_n);
    for (u, row) in eta.iter().enumerate() {
        let mut r = vec![0.0; n];
        for (q, &e) in row.iter().enumerate() {
            r[u * q_n + q] = -s * e;
        }
        r[n - 1] = 1.0;
        a.push(r);
        b.push(0.0);
    }
    for q in 0..q_n {
        let mut r = vec![0.0; n];
        for u in 0..u_n {
            r[u * q_n + q] = 1.0;
        }
        a.push(r);
        b.push(1.0);
    }
    let sol = simplex_max(&c, &a, &b)?;
    let rho = (0..u_n)
        .map(|u| (0..q_n).map(|q| sol.x[u * q_n + q].clamp(0.0, 1.0)).collect())
        .collect();
    Ok(MaxMinLp {
        t: sol.objective,
        rho,
        pivots: sol.pivots,
    })
}
