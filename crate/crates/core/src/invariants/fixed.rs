use std::fmt::Write as _;

use rayon::prelude::*;

use super::FIXED_TOL;
use crate::cocycle::GridSpec;
use crate::dynamics::{jacobian, Diffeo};
use crate::error::Result;
use crate::geometry::{ManifoldModel, Point, Primitive};

/// Fixed points closer than this are merged.
const DEDUP_RADIUS: f64 = 1e-6;
const NEWTON_ITERS: usize = 40;
/// `Df − I` with smallest singular value below this is treated as singular:
/// the point then sits in a curve or region of fixed points.
const DEGENERACY: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub location: Point,
    pub residual: f64,
    /// The action of the orbit, when the map is a single Hamiltonian flow.
    pub action: Option<f64>,
    pub contractible: bool,
    /// Whether the point lies in a continuum of fixed points; such points
    /// are reported once per connected patch of scan nodes.
    pub degenerate: bool,
    /// Number of scan nodes merged into this entry.
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub points: Vec<FixedPoint>,
    pub scanned: usize,
    /// Every scan node is fixed, as for the identity.
    pub identity_like: bool,
}

impl FixedPointReport {
    /// True when the search found nothing, which is a legal outcome.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Columns `p,q,residual,action,contractible`; a missing action is left empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,q,residual,action,contractible\n");
        for x in &self.points {
            let action = x.action.map(|a| format!("{a:.16e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{},{}",
                x.location.p, x.location.q, x.residual, action, x.contractible
            );
        }
        s
    }
}

fn singular_values(m: [[f64; 2]; 2]) -> (f64, f64) {
    // of a 2×2 matrix, from the invariants of MᵀM
    let [[a, b], [c, d]] = m;
    let s = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let big = ((s + disc) / 2.0).sqrt();
    let small = if big > 0.0 { det / big } else { 0.0 };
    (big, small)
}

struct Refined {
    x: Point,
    residual: f64,
    degenerate: bool,
}

/// Damped Gauss–Newton on `g(x) = f(x) − x` with a finite-difference
/// Jacobian; singular directions are regularized away.
fn refine(f: &dyn Diffeo, model: &ManifoldModel, start: Point) -> Result<Refined> {
    let g = |x: Point| -> Result<Point> { Ok(model.displacement(x, f.apply(x)?)) };
    let mut x = start;
    let mut gx = g(x)?;
    for _ in 0..NEWTON_ITERS {
        if gx.norm() < 1e-13 {
            break;
        }
        let j = jacobian(f, x)?;
        let a = [[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]];
        // (AᵀA + μI) δ = −Aᵀ g
        let ata = [
            [a[0][0] * a[0][0] + a[1][0] * a[1][0], a[0][0] * a[0][1] + a[1][0] * a[1][1]],
            [a[0][0] * a[0][1] + a[1][0] * a[1][1], a[0][1] * a[0][1] + a[1][1] * a[1][1]],
        ];
        let rhs = [-(a[0][0] * gx.p + a[1][0] * gx.q), -(a[0][1] * gx.p + a[1][1] * gx.q)];
        let mu = 1e-12 * (ata[0][0] + ata[1][1]).max(1e-300);
        let m = [[ata[0][0] + mu, ata[0][1]], [ata[1][0], ata[1][1] + mu]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let step = Point::new((rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det, (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det);
        // backtrack until the residual decreases
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-4 {
            let y = x + step * lambda;
            let gy = g(y)?;
            if gy.norm() < gx.norm() {
                x = y;
                gx = gy;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let j = jacobian(f, x)?;
    let (_, smallest) = singular_values([[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]]);
    Ok(Refined { x, residual: gx.norm(), degenerate: smallest < DEGENERACY })
}

/// Scans the grid for local minima of `|f(x) − x|`, refines each by Newton
/// iteration and keeps those with residual below `1e-8`.
///
/// Isolated fixed points are deduplicated within `1e-6`. Fixed points in a
/// continuum (identity regions, circles of a twist) are grouped by
/// adjacency of their scan nodes and reported once per group, at the member
/// closest to the group's mean. When `alpha` is given and `f` is a single
/// Hamiltonian flow, each point carries the action of its orbit.
pub fn find_fixed_points(
    f: &dyn Diffeo,
    model: &ManifoldModel,
    scan: &GridSpec,
    alpha: Option<&Primitive>,
) -> Result<FixedPointReport> {
    let nodes: Vec<Point> = scan.nodes().collect();
    let residuals: Vec<f64> = nodes
        .par_iter()
        .map(|&x| Ok(model.displacement(x, f.apply(x)?).norm()))
        .collect::<Result<_>>()?;
    let (n_p, n_q) = (scan.n_p, scan.n_q);
    let is_local_min = |i: usize, j: usize| {
        let r = residuals[scan.index(i, j)];
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a < 0 || b < 0 || a >= n_p as i64 || b >= n_q as i64 {
                    continue;
                }
                if residuals[scan.index(a as usize, b as usize)] < r {
                    return false;
                }
            }
        }
        true
    };
    let candidates: Vec<(usize, usize)> = (0..n_p)
        .flat_map(|i| (0..n_q).map(move |j| (i, j)))
        .filter(|&(i, j)| is_local_min(i, j))
        .collect();
    let refined: Vec<Option<Refined>> = candidates
        .par_iter()
        .map(|&(i, j)| {
            let r = refine(f, model, scan.node(i, j))?;
            let inside = if model.is_cylinder() { model.in_window(r.x) } else { scan.window.contains(r.x) };
            Ok((r.residual < FIXED_TOL && inside).then_some(r))
        })
        .collect::<Result<_>>()?;

    let identity_like = residuals.iter().all(|&r| r < FIXED_TOL);
    let mut isolated: Vec<(Point, f64, usize)> = Vec::new();
    // scan-node label of each degenerate hit
    let mut patch_of = vec![None::<usize>; nodes.len()];
    let mut patches: Vec<Vec<(Point, f64)>> = Vec::new();
    let mut degenerate_hits: Vec<((usize, usize), Point, f64)> = Vec::new();
    for (&(i, j), r) in candidates.iter().zip(&refined) {
        let Some(r) = r else { continue };
        if r.degenerate {
            degenerate_hits.push(((i, j), r.x, r.residual));
        } else if let Some(e) = isolated.iter_mut().find(|e| model.displacement(e.0, r.x).norm() < DEDUP_RADIUS) {
            e.2 += 1;
        } else {
            isolated.push((r.x, r.residual, 1));
        }
    }
    // group degenerate hits into patches of 8-connected scan nodes
    let hit_at: std::collections::HashMap<usize, usize> =
        degenerate_hits.iter().enumerate().map(|(k, ((i, j), _, _))| (scan.index(*i, *j), k)).collect();
    for start in 0..degenerate_hits.len() {
        let (ij, _, _) = degenerate_hits[start];
        if patch_of[scan.index(ij.0, ij.1)].is_some() {
            continue;
        }
        let label = patches.len();
        let mut members = Vec::new();
        let mut stack = vec![ij];
        patch_of[scan.index(ij.0, ij.1)] = Some(label);
        while let Some((i, j)) = stack.pop() {
            let (_, x, res) = degenerate_hits[hit_at[&scan.index(i, j)]];
            members.push((x, res));
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a < 0 || b < 0 || a >= n_p as i64 || b >= n_q as i64 {
                        continue;
                    }
                    let idx = scan.index(a as usize, b as usize);
                    if patch_of[idx].is_none() && hit_at.contains_key(&idx) {
                        patch_of[idx] = Some(label);
                        stack.push((a as usize, b as usize));
                    }
                }
            }
        }
        patches.push(members);
    }

    let mut entries: Vec<(Point, f64, bool, usize)> = isolated.into_iter().map(|(x, r, m)| (x, r, false, m)).collect();
    for members in patches {
        let n = members.len() as f64;
        let mean = members.iter().fold(Point::ORIGIN, |s, (x, _)| s + *x) * (1.0 / n);
        let (x, r) = *members
            .iter()
            .min_by(|a, b| (a.0 - mean).norm().total_cmp(&(b.0 - mean).norm()))
            .expect("patches are never empty");
        entries.push((x, r, true, members.len()));
    }

    let flow = f.hamiltonian();
    let points = entries
        .into_par_iter()
        .map(|(x, residual, degenerate, members)| {
            let contractible = match model.circumference() {
                // the chart image of a continuous map is the lifted image
                Some(c) => ((f.apply(x)?.q - x.q) / c).round() == 0.0,
                None => true,
            };
            let action = match (flow, alpha) {
                (Some(flow), Some(a)) => Some(flow.action(x, a)?.action()),
                _ => None,
            };
            Ok(FixedPoint { location: x, residual, action, contractible, degenerate, members })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FixedPointReport { points, scanned: nodes.len(), identity_like })
}
