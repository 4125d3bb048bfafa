//! Away-step conditional gradient for `min Σ (shift_i + y_i)^p` over the base
//! polytope of a coverage function.
//!
//! Iterates are kept as explicit convex combinations of greedy vertices, so
//! feasibility holds up to float rounding of the weights. The Frank–Wolfe gap
//! bounds the distance to the optimum from above.

use alloc::vec;
use alloc::vec::Vec;

use super::OracleError;
use crate::instance::UtilityVector;
use crate::polymatroid::CoverageFn;
use crate::rational::{to_f64, Q};

pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousMin {
    /// Minimizer in ground order of `f`.
    pub y: Vec<f64>,
    pub value: f64,
    /// Frank–Wolfe gap at `y`; an upper bound on `value − optimum`.
    pub gap: f64,
    pub iterations: usize,
}

fn powi(x: f64, p: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..p {
        acc *= x;
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn objective(shift: &[f64], y: &[f64], p: u32) -> f64 {
    shift.iter().zip(y).map(|(s, v)| powi((s + v).max(0.0), p)).sum()
}

/// Exact minimizer of the convex objective on `y + γ d`, `γ ∈ [0, hi]`, by
/// bisection on the derivative.
fn line_search(shift: &[f64], y: &[f64], d: &[f64], p: u32, hi: f64) -> f64 {
    let slope = |g: f64| -> f64 {
        shift
            .iter()
            .zip(y)
            .zip(d)
            .map(|((s, v), dv)| f64::from(p) * powi((s + v + g * dv).max(0.0), p - 1) * dv)
            .sum()
    };
    if slope(hi) <= 0.0 {
        return hi;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..80 {
        let mid = 0.5 * (lo + up);
        if slope(mid) > 0.0 {
            up = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + up)
}

/// `shift` is indexed like the ground of `f`. `p ≥ 2`, `tol > 0`.
pub fn continuous_min(
    f: &CoverageFn,
    shift: &UtilityVector,
    p: u32,
    tol: &Q,
    max_iterations: usize,
) -> Result<ContinuousMin, OracleError> {
    if p < 2 {
        return Err(OracleError::BadArgument("power must be at least 2"));
    }
    let tol = to_f64(tol);
    if tol.is_nan() || tol <= 0.0 {
        return Err(OracleError::BadArgument("tolerance must be positive"));
    }
    let n = f.ground().len();
    if shift.len() != n {
        return Err(OracleError::BadArgument("shift length differs from the ground set size"));
    }
    let shift: Vec<f64> = shift.values().iter().map(to_f64).collect();
    let vertex = |grad: &[f64]| -> Vec<f64> { f.greedy_vertex(grad).into_iter().map(|v| v as f64).collect() };
    let gradient = |y: &[f64]| -> Vec<f64> {
        shift
            .iter()
            .zip(y)
            .map(|(s, v)| f64::from(p) * powi((s + v).max(0.0), p - 1))
            .collect()
    };

    let start = vertex(&gradient(&vec![0.0; n]));
    let mut y = start.clone();
    let mut active: Vec<(Vec<f64>, f64)> = vec![(start, 1.0)];
    let mut gap = f64::INFINITY;
    for it in 0..max_iterations {
        let g = gradient(&y);
        let s = vertex(&g);
        let gy = dot(&g, &y);
        gap = gy - dot(&g, &s);
        if gap <= tol {
            return Ok(ContinuousMin { value: objective(&shift, &y, p), y, gap, iterations: it });
        }
        let (away, _) = active
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, dot(&g, v)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let away_gap = dot(&g, &active[away].0) - gy;
        if gap >= away_gap || active.len() == 1 {
            let d: Vec<f64> = s.iter().zip(&y).map(|(a, b)| a - b).collect();
            let step = line_search(&shift, &y, &d, p, 1.0);
            for (_, w) in active.iter_mut() {
                *w *= 1.0 - step;
            }
            match active.iter_mut().find(|(v, _)| *v == s) {
                Some((_, w)) => *w += step,
                None => active.push((s, step)),
            }
            for (yi, di) in y.iter_mut().zip(&d) {
                *yi += step * di;
            }
        } else {
            let wa = active[away].1;
            let hi = wa / (1.0 - wa);
            let d: Vec<f64> = y.iter().zip(&active[away].0).map(|(a, b)| a - b).collect();
            let step = line_search(&shift, &y, &d, p, hi);
            for (_, w) in active.iter_mut() {
                *w *= 1.0 + step;
            }
            active[away].1 -= step;
            if step >= hi {
                active[away].1 = 0.0;
            }
            for (yi, di) in y.iter_mut().zip(&d) {
                *yi += step * di;
            }
        }
        active.retain(|(_, w)| *w > 1e-15);
        let total: f64 = active.iter().map(|(_, w)| w).sum();
        for (_, w) in active.iter_mut() {
            *w /= total;
        }
        // rebuild from the weights to stop rounding drift
        y = vec![0.0; n];
        for (v, w) in &active {
            for (yi, vi) in y.iter_mut().zip(v) {
                *yi += w * vi;
            }
        }
    }
    Err(OracleError::NoConvergence { gap, iterations: max_iterations })
}
