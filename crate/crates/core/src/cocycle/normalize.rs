use super::grid::{GridFunction, Normalization};
use crate::error::{Error, Result};
use crate::geometry::Window;

/// Default bound on the collar oscillation accepted by [`normalize_compact`].
pub const COLLAR_TOL: f64 = 1e-6;

/// Nodes treated as "outside the support": the two outermost rings of the
/// grid (only the `p` edges when the function is periodic in `q`), plus
/// every node outside `support` when one is given.
pub fn collar_nodes(k: &GridFunction, support: Option<&Window>) -> Vec<(usize, usize)> {
    let s = k.spec();
    let ring = 2;
    let periodic = k.period_q().is_some();
    let mut out = Vec::new();
    for i in 0..s.n_p {
        for j in 0..s.n_q {
            let edge_p = i < ring || i + ring >= s.n_p;
            let edge_q = !periodic && (j < ring || j + ring >= s.n_q);
            let outside = support.is_some_and(|w| {
                let x = s.node(i, j);
                if periodic {
                    x.p < w.p_min || x.p > w.p_max
                } else {
                    !w.contains(x)
                }
            });
            if edge_p || edge_q || outside {
                out.push((i, j));
            }
        }
    }
    out
}

/// Subtracts the value on the collar so that the function vanishes outside
/// the support.
///
/// Fails with [`Error::NotConstantOutsideSupport`] when the collar values
/// spread by more than `tol`, as happens for twists whose boundary values
/// differ.
pub fn normalize_compact(k: &GridFunction, support: Option<&Window>, tol: f64) -> Result<GridFunction> {
    let nodes = collar_nodes(k, support);
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &(i, j) in &nodes {
        let v = k.at(i, j);
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
    }
    let oscillation = hi - lo;
    if !(oscillation <= tol) {
        return Err(Error::NotConstantOutsideSupport { oscillation, tol });
    }
    let level = sum / nodes.len() as f64;
    Ok(k.shift(-level).with_normalization(Normalization::CompactSupport))
}
