//! Fair-allocation instances built from 3-dimensional matching.
//!
//! Agent layout of [`gen_3dm_hardness`]: `x_1..x_n, y_1..y_n, z_1..z_n`, then
//! their primed copies in the same order, then for every triple `t` the five
//! agents `t, t(1), t(2), t(3), t(4)`. [`gen_realization_hardness`] uses
//! `x, y, z` followed by one agent per triple.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::OracleError;
use crate::instance::{Instance, UtilityVector};
use crate::rational::{q, qi};

/// `X, Y, Z` of size `n` each and triples `(x, y, z)` of 0-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreeDM {
    n: usize,
    triples: Vec<[usize; 3]>,
}

impl ThreeDM {
    pub fn new(n: usize, triples: Vec<[usize; 3]>) -> Result<Self, OracleError> {
        if triples.iter().any(|t| t.iter().any(|&v| v >= n)) {
            return Err(OracleError::BadArgument("triple index out of range"));
        }
        if triples.iter().collect::<BTreeSet<_>>().len() != triples.len() {
            return Err(OracleError::BadArgument("duplicate triple"));
        }
        Ok(ThreeDM { n, triples })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    /// Brute-force search for `n` disjoint triples.
    pub fn has_perfect_matching(&self) -> bool {
        fn go(dm: &ThreeDM, x: usize, used_y: &mut [bool], used_z: &mut [bool]) -> bool {
            if x == dm.n {
                return true;
            }
            for t in dm.triples.iter().filter(|t| t[0] == x) {
                if !used_y[t[1]] && !used_z[t[2]] {
                    used_y[t[1]] = true;
                    used_z[t[2]] = true;
                    let found = go(dm, x + 1, used_y, used_z);
                    used_y[t[1]] = false;
                    used_z[t[2]] = false;
                    if found {
                        return true;
                    }
                }
            }
            false
        }
        go(self, 0, &mut vec![false; self.n], &mut vec![false; self.n])
    }
}

fn element_name(s: usize, n: usize) -> String {
    let letter = ["x", "y", "z"][s / n];
    format!("{letter}{}", s % n + 1)
}

/// `6n + 5m` agents, `n` identical indivisible goods wanted by the triple
/// agents, one divisible good per element shared with its primed copy and
/// three per triple shared by the triple's five agents and its elements.
/// When `m < n` the instance is still built (a trivial no-instance); with no
/// triples at all and `n > 0` the indivisible goods have no taker and an
/// error is returned.
pub fn gen_3dm_hardness(dm: &ThreeDM) -> Result<Instance, OracleError> {
    let n = dm.n;
    let m = dm.triples.len();
    if m == 0 && n > 0 {
        return Err(OracleError::BadArgument("indivisible goods need at least one triple"));
    }
    let triple_agent = |i: usize| 6 * n + 5 * i;
    let t_agents: Vec<usize> = (0..m).map(triple_agent).collect();
    let indivisible = vec![t_agents; n];
    let mut divisible = Vec::with_capacity(3 * n + 3 * m);
    for s in 0..3 * n {
        divisible.push(vec![s, 3 * n + s]);
    }
    for (i, t) in dm.triples.iter().enumerate() {
        let base = triple_agent(i);
        let mut d: Vec<usize> = (base..base + 5).collect();
        d.extend([t[0], n + t[1], 2 * n + t[2]]);
        for _ in 0..3 {
            divisible.push(d.clone());
        }
    }
    let mut names = BTreeMap::new();
    for s in 0..3 * n {
        let e = element_name(s, n);
        names.insert(format!("a{s}"), e.clone());
        names.insert(format!("a{}", 3 * n + s), format!("{e}'"));
        names.insert(format!("c{s}"), format!("c_{e}"));
    }
    for i in 0..m {
        let base = triple_agent(i);
        names.insert(format!("a{base}"), format!("t{}", i + 1));
        for r in 1..5 {
            names.insert(format!("a{}", base + r), format!("t{}({r})", i + 1));
        }
        for r in 0..3 {
            names.insert(format!("c{}", 3 * n + 3 * i + r), format!("c_t{}({})", i + 1, r + 1));
        }
    }
    for g in 0..n {
        names.insert(format!("m{g}"), format!("g{}", g + 1));
    }
    let inst = Instance::new(6 * n + 5 * m, indivisible, divisible)
        .map_err(|_| OracleError::BadArgument("malformed 3DM instance"))?;
    Ok(inst.with_names(names))
}

/// Target profile of a matching in the instance of [`gen_3dm_hardness`]:
/// 1 on agents holding an indivisible good, 3/5 elsewhere. `None` when some
/// agent holds two goods.
pub fn matching_profile(counts: &[u64]) -> Option<UtilityVector> {
    counts
        .iter()
        .map(|&c| match c {
            0 => Some(q(3, 5)),
            1 => Some(qi(1)),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()
        .map(UtilityVector)
}

/// Agents `X ∪ Y ∪ Z ∪ T`, `n` indivisible goods wanted by `T` and one
/// divisible good per triple wanted by the triple agent and its three
/// elements. The target is 1 on `T` and 1/3 on the elements.
pub fn gen_realization_hardness(dm: &ThreeDM) -> Result<(Instance, UtilityVector), OracleError> {
    let n = dm.n;
    let m = dm.triples.len();
    if m == 0 && n > 0 {
        return Err(OracleError::BadArgument("indivisible goods need at least one triple"));
    }
    let t_agents: Vec<usize> = (0..m).map(|i| 3 * n + i).collect();
    let indivisible = vec![t_agents; n];
    let divisible = dm
        .triples
        .iter()
        .enumerate()
        .map(|(i, t)| vec![3 * n + i, t[0], n + t[1], 2 * n + t[2]])
        .collect();
    let mut names = BTreeMap::new();
    for s in 0..3 * n {
        names.insert(format!("a{s}"), element_name(s, n));
    }
    for i in 0..m {
        names.insert(format!("a{}", 3 * n + i), format!("t{}", i + 1));
        names.insert(format!("c{i}"), format!("c{}", i + 1));
    }
    for g in 0..n {
        names.insert(format!("m{g}"), format!("g{}", g + 1));
    }
    let inst = Instance::new(3 * n + m, indivisible, divisible)
        .map_err(|_| OracleError::BadArgument("malformed 3DM instance"))?
        .with_names(names);
    let target = UtilityVector((0..3 * n + m).map(|a| if a < 3 * n { q(1, 3) } else { qi(1) }).collect());
    Ok((inst, target))
}
