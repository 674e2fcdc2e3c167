//! Brute-force reference solvers for tests.
//!
//! Everything here works by dense grid search over barycentric lattices and
//! is only practical for a handful of assets (`m <= 4`). The lattice of each
//! searched simplex is aligned with all of its faces, so a minimiser lying on
//! a face is reachable exactly at every refinement level; each level keeps a
//! window of a few coarse steps around the incumbent and subdivides it.

use crate::error::{Error, Result};
use crate::numerics::check_finite;

/// Largest asset count the oracles accept.
pub const MAX_ASSETS: usize = 4;

const INITIAL_DIVISIONS: i64 = 64;
const REFINE_FACTOR: i64 = 4;
const WINDOW: i64 = 4;
const FINEST_STEP: f64 = 1e-10;
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    /// `b . d <= eps` (PAMR).
    AtMost,
    /// `b . d >= eps` (OLMAR).
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub weights: Vec<f64>,
    /// False when no simplex point meets the constraint; `weights` is then
    /// the point closest to `b_t` among those that come nearest to meeting it.
    pub feasible: bool,
}

/// Minimises `||b - v||^2` over the probability simplex by grid search.
pub fn grid_project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    check_size(v.len())?;
    check_finite(v)?;
    let vertices = unit_vertices(v.len(), &(0..v.len()).collect::<Vec<_>>());
    Ok(lattice_minimize(&vertices, |b| sq_dist(b, v)).0)
}

/// Minimises `0.5 ||b - b_t||^2` over the simplex subject to `b . d <= eps`
/// or `b . d >= eps`.
pub fn oracle_qp(
    b_t: &[f64],
    d: &[f64],
    sense: ConstraintSense,
    eps: f64,
) -> Result<OracleSolution> {
    let m = b_t.len();
    check_size(m)?;
    if d.len() != m {
        return Err(Error::LengthMismatch {
            left: m,
            right: d.len(),
        });
    }
    check_finite(b_t)?;
    check_finite(d)?;
    if !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be finite, got {eps}"
        )));
    }

    let satisfied = |value: f64| match sense {
        ConstraintSense::AtMost => value <= eps,
        ConstraintSense::AtLeast => value >= eps,
    };
    if satisfied(dot(b_t, d)) {
        return Ok(OracleSolution {
            weights: b_t.to_vec(),
            feasible: true,
        });
    }

    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let extreme = match sense {
        ConstraintSense::AtMost => lo,
        ConstraintSense::AtLeast => hi,
    };
    if !satisfied(extreme) {
        // Unattainable: restrict to the face spanned by the extremal assets.
        let face: Vec<usize> = (0..m)
            .filter(|&j| (d[j] - extreme).abs() <= TIE_TOLERANCE)
            .collect();
        let vertices = unit_vertices(m, &face);
        let (weights, _) = lattice_minimize(&vertices, |b| sq_dist(b, b_t));
        return Ok(OracleSolution {
            weights,
            feasible: false,
        });
    }

    // b_t violates the constraint, so the optimum lies on the slice b . d = eps.
    let corners = slice_vertices(d, eps);
    let k = (m - 2).min(corners.len() - 1);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for subset in combinations(corners.len(), k + 1) {
        let vertices: Vec<Vec<f64>> = subset.iter().map(|&i| corners[i].clone()).collect();
        let (b, value) = lattice_minimize(&vertices, |b| sq_dist(b, b_t));
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((b, value));
        }
    }
    Ok(OracleSolution {
        weights: best.expect("at least one corner").0,
        feasible: true,
    })
}

fn check_size(m: usize) -> Result<()> {
    if m == 0 || m > MAX_ASSETS {
        return Err(Error::InvalidParameter(format!(
            "oracle supports 1..={MAX_ASSETS} assets, got {m}"
        )));
    }
    Ok(())
}

fn unit_vertices(m: usize, support: &[usize]) -> Vec<Vec<f64>> {
    support
        .iter()
        .map(|&j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect()
}

/// Corners of `{b in simplex : b . d = eps}`: simplex vertices on the plane
/// and crossings of the plane with simplex edges.
fn slice_vertices(d: &[f64], eps: f64) -> Vec<Vec<f64>> {
    let m = d.len();
    let mut corners: Vec<Vec<f64>> = Vec::new();
    let mut push = |p: Vec<f64>| {
        if !corners.iter().any(|c| sq_dist(c, &p) < 1e-24) {
            corners.push(p);
        }
    };
    for i in 0..m {
        if d[i] == eps {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            push(e);
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            let (gi, gj) = (d[i] - eps, d[j] - eps);
            if gi * gj < 0.0 {
                let wi = gj / (gj - gi);
                let mut p = vec![0.0; m];
                p[i] = wi;
                p[j] = 1.0 - wi;
                push(p);
            }
        }
    }
    corners
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Minimises `f` over the convex hull of `vertices` (affinely independent)
/// using progressively finer barycentric lattices.
fn lattice_minimize(vertices: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let k = vertices.len() - 1;
    let dim = vertices[0].len();
    let point = |counts: &[i64], n: i64| -> Vec<f64> {
        let mut b = vec![0.0; dim];
        for (c, v) in counts.iter().zip(vertices) {
            let w = *c as f64 / n as f64;
            for (bi, vi) in b.iter_mut().zip(v) {
                *bi += w * vi;
            }
        }
        b
    };
    if k == 0 {
        let b = vertices[0].clone();
        let value = f(&b);
        return (b, value);
    }

    let mut n = INITIAL_DIVISIONS;
    let mut best_counts: Vec<i64> = Vec::new();
    let mut best_value = f64::INFINITY;
    // Full lattice at the coarsest level.
    for_each_offset(k, 0, n, |free| {
        let used: i64 = free.iter().sum();
        if used > n {
            return;
        }
        let mut counts = free.to_vec();
        counts.push(n - used);
        let value = f(&point(&counts, n));
        if value < best_value {
            best_value = value;
            best_counts = counts;
        }
    });

    while 1.0 / (n as f64) > FINEST_STEP {
        n *= REFINE_FACTOR;
        let center: Vec<i64> = best_counts.iter().map(|c| c * REFINE_FACTOR).collect();
        let radius = WINDOW * REFINE_FACTOR;
        let mut level_best = center.clone();
        let mut level_value = f(&point(&center, n));
        for_each_offset(k, -radius, radius, |offset| {
            let mut counts = Vec::with_capacity(k + 1);
            let mut used = 0;
            for (c, o) in center.iter().zip(offset) {
                let v = c + o;
                if v < 0 {
                    return;
                }
                used += v;
                counts.push(v);
            }
            if used > n {
                return;
            }
            counts.push(n - used);
            let value = f(&point(&counts, n));
            if value < level_value {
                level_value = value;
                level_best = counts;
            }
        });
        best_counts = level_best;
        best_value = level_value;
    }
    (point(&best_counts, n), best_value)
}

/// Calls `visit` for every integer vector in `[lo, hi]^k`.
fn for_each_offset(k: usize, lo: i64, hi: i64, mut visit: impl FnMut(&[i64])) {
    let mut cur = vec![lo; k];
    loop {
        visit(&cur);
        let mut i = 0;
        loop {
            if i == k {
                return;
            }
            if cur[i] < hi {
                cur[i] += 1;
                break;
            }
            cur[i] = lo;
            i += 1;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
