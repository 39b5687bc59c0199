use crate::error::{Error, Result};

pub fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonIncreasingEdges);
    }
    Ok(())
}

/// Piecewise-linear encoding of `x` against bin edges `b_0 < … < b_T`.
pub fn ple_encode(x: f64, edges: &[f64]) -> Result<Vec<f64>> {
    check_edges(edges)?;
    let mut out = vec![0.0; edges.len() - 1];
    ple_encode_into(x, edges, &mut out);
    Ok(out)
}

/// Unchecked variant writing `T` components into `out`.
pub fn ple_encode_into(x: f64, edges: &[f64], out: &mut [f64]) {
    for (t, o) in out.iter_mut().enumerate() {
        let (lo, hi) = (edges[t], edges[t + 1]);
        *o = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let e = [0.0, 1.0, 2.0];
        assert_eq!(ple_encode(1.5, &e).unwrap(), vec![1.0, 0.5]);
        assert_eq!(ple_encode(-1.0, &e).unwrap(), vec![0.0, 0.0]);
        assert_eq!(ple_encode(9.0, &e).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(ple_encode(0.0, &[0.0, 1.0, 1.0]), Err(Error::NonIncreasingEdges)));
        assert!(matches!(ple_encode(0.0, &[0.0]), Err(Error::NonIncreasingEdges)));
    }
}
