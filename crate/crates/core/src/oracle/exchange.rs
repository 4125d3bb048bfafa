//! Exhaustive check of the exchange axioms on the integral base vectors of a
//! coverage function.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::OracleError;
use crate::polymatroid::{CoverageError, CoverageFn};
use crate::partition::PartitionError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeReport {
    /// Integral base vectors, in ground order.
    pub points: Vec<Vec<i64>>,
    pub pairs_checked: usize,
    pub triples_checked: usize,
    /// `(x, y, i)`: no `j` completes the exchange of `i` from `x` towards `y`.
    pub exchange_violations: Vec<(Vec<i64>, Vec<i64>, usize)>,
    /// `(x, i, j, k)`: `x − χi + χj` and `x − χj + χk` are in the set but
    /// `x − χi + χk` is not.
    pub transitivity_violations: Vec<(Vec<i64>, usize, usize, usize)>,
}

impl ExchangeReport {
    pub fn holds(&self) -> bool {
        self.exchange_violations.is_empty() && self.transitivity_violations.is_empty()
    }
}

fn moved(x: &[i64], from: usize, to: usize) -> Vec<i64> {
    let mut y = x.to_vec();
    y[from] -= 1;
    y[to] += 1;
    y
}

/// Enumerates `{y ∈ Zⁿ : y(N) = f(N), y(X) ≥ f(X) ∀X}` (positions follow the
/// ground order) and checks the exchange property on every ordered pair and
/// the `i → j → k` shortcut on every point. `cap` bounds the number of
/// integer vectors scanned.
pub fn check_exchange_axiom(f: &CoverageFn, cap: u64) -> Result<ExchangeReport, OracleError> {
    let ground = f.ground();
    let n = ground.len();
    if n > 20 {
        return Err(OracleError::CapExceeded { what: "ground set size", found: n as u64, cap: 20 });
    }
    let eval = |mask: usize| -> Result<i64, OracleError> {
        let set: Vec<_> = (0..n).filter(|p| mask >> p & 1 == 1).map(|p| ground[p]).collect();
        Ok(f.eval(&set).map_err(|e: CoverageError| PartitionError::from(e))? as i64)
    };
    let values: Vec<i64> = (0..1usize << n).map(eval).collect::<Result<_, _>>()?;
    let full = (1usize << n) - 1;
    let total = values[full];
    let lo: Vec<i64> = (0..n).map(|p| values[1 << p]).collect();
    let hi: Vec<i64> = (0..n).map(|p| total - values[full & !(1 << p)]).collect();
    let size = lo
        .iter()
        .zip(&hi)
        .fold(1u64, |acc, (l, h)| acc.saturating_mul((h - l + 1).max(0) as u64));
    if size > cap {
        return Err(OracleError::CapExceeded { what: "base-vector search box", found: size, cap });
    }
    let member = |y: &[i64]| -> bool {
        y.iter().sum::<i64>() == total
            && y.iter().all(|&v| v >= 0)
            && (1..full).all(|mask| {
                let s: i64 = (0..n).filter(|p| mask >> p & 1 == 1).map(|p| y[p]).sum();
                s >= values[mask]
            })
    };

    let mut points = Vec::new();
    if n == 0 {
        points.push(Vec::new());
    } else {
        let mut y = lo.clone();
        'outer: loop {
            if member(&y) {
                points.push(y.clone());
            }
            let mut p = n;
            loop {
                if p == 0 {
                    break 'outer;
                }
                p -= 1;
                if y[p] < hi[p] {
                    y[p] += 1;
                    break;
                }
                y[p] = lo[p];
            }
        }
    }
    let set: BTreeSet<Vec<i64>> = points.iter().cloned().collect();

    let mut pairs_checked = 0;
    let mut exchange_violations = Vec::new();
    for x in &points {
        for y in &points {
            pairs_checked += 1;
            for i in (0..n).filter(|&i| x[i] > y[i]) {
                let ok = (0..n)
                    .filter(|&j| x[j] < y[j])
                    .any(|j| set.contains(&moved(x, i, j)) && set.contains(&moved(y, j, i)));
                if !ok {
                    exchange_violations.push((x.clone(), y.clone(), i));
                }
            }
        }
    }

    let mut triples_checked = 0;
    let mut transitivity_violations = Vec::new();
    for x in &points {
        for i in 0..n {
            for j in 0..n {
                if j == i || !set.contains(&moved(x, i, j)) {
                    continue;
                }
                for k in (0..n).filter(|&k| k != i && k != j) {
                    triples_checked += 1;
                    if set.contains(&moved(x, j, k)) && !set.contains(&moved(x, i, k)) {
                        transitivity_violations.push((x.clone(), i, j, k));
                    }
                }
            }
        }
    }
    Ok(ExchangeReport { points, pairs_checked, triples_checked, exchange_violations, transitivity_violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn trio_all_indivisible() {
        let f = CoverageFn::new(vec![0, 1, 2], [vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
        let r = check_exchange_axiom(&f, 1000).unwrap();
        let mut pts = r.points.clone();
        pts.sort();
        // any agent may take both goods
        let want = vec![vec![0, 0, 2], vec![0, 1, 1], vec![0, 2, 0], vec![1, 0, 1], vec![1, 1, 0], vec![2, 0, 0]];
        assert_eq!(pts, want);
        assert!(r.holds());
    }

    #[test]
    fn single_agent() {
        let f = CoverageFn::new(vec![4], [vec![4], vec![4]]).unwrap();
        let r = check_exchange_axiom(&f, 10).unwrap();
        assert_eq!(r.points, vec![vec![2]]);
        assert!(r.holds());
    }

    #[test]
    fn cap() {
        let f = CoverageFn::weighted(vec![0, 1, 2, 3], [(vec![0, 1, 2, 3], 50)]).unwrap();
        assert!(check_exchange_axiom(&f, 1000).is_err());
    }
}
