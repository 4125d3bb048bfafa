//! Canonical and principal partitions of a coverage function, the continuous
//! minimizer they induce, and an integral minimizer over the M-convex set.
//!
//! Both partitions are built block by block on successively contracted
//! functions. The principal partition takes the maximum density λ of what is
//! left and peels off the largest maximizer of `f(X) − λ|X|`; the canonical
//! partition rounds the density up to β and peels off the smallest maximizer
//! of `f(X) − (β−1)|X|`. Neither is derived from the other, so the
//! aggregation law between them is a real cross-check.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::flow::{feasible_flow, FlowNetwork};
use crate::instance::{AgentId, UtilityVector};
use crate::polymatroid::{CoverageError, CoverageFn};
use crate::rational::{qi, Q};

/// Agent blocks `N_1, …, N_q` with strictly decreasing integer essential values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalPartition {
    pub blocks: Vec<Vec<AgentId>>,
    pub essential_values: Vec<i64>,
}

impl CanonicalPartition {
    /// Index of the block holding `agent`.
    pub fn block_of(&self, agent: AgentId) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&agent))
    }
}

/// Agent blocks with strictly decreasing rational critical values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrincipalPartition {
    pub blocks: Vec<Vec<AgentId>>,
    pub critical_values: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionError {
    EmptyGround,
    Coverage(CoverageError),
    /// No integral vector realizes the block profile; should never happen.
    Infeasible,
}

impl From<CoverageError> for PartitionError {
    fn from(e: CoverageError) -> Self {
        PartitionError::Coverage(e)
    }
}

impl fmt::Display for PartitionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionError::EmptyGround => write!(f, "partition of an empty agent set"),
            PartitionError::Coverage(e) => write!(f, "{e}"),
            PartitionError::Infeasible => {
                write!(f, "no integral base vector matches the canonical block profile")
            }
        }
    }
}

impl core::error::Error for PartitionError {}

fn ceil(x: &Q) -> i64 {
    x.ceil().to_integer().to_i64().expect("essential value fits in i64")
}

pub fn canonical_partition(f: &CoverageFn) -> Result<CanonicalPartition, PartitionError> {
    if f.ground().is_empty() {
        return Err(PartitionError::EmptyGround);
    }
    let mut rest = f.clone();
    let mut blocks = Vec::new();
    let mut essential_values = Vec::new();
    while !rest.ground().is_empty() {
        let beta = ceil(&rest.max_density()?.value);
        let block = rest.smallest_maximizer_excess(&qi(beta - 1))?.argmax;
        debug_assert!(!block.is_empty());
        rest = rest.contract(&block)?;
        blocks.push(block);
        essential_values.push(beta);
    }
    Ok(CanonicalPartition { blocks, essential_values })
}

pub fn principal_partition(f: &CoverageFn) -> Result<PrincipalPartition, PartitionError> {
    if f.ground().is_empty() {
        return Err(PartitionError::EmptyGround);
    }
    let mut rest = f.clone();
    let mut blocks = Vec::new();
    let mut critical_values = Vec::new();
    while !rest.ground().is_empty() {
        let lambda = rest.max_density()?.value;
        let block = rest.largest_maximizer_excess(&lambda)?.argmax;
        debug_assert!(!block.is_empty());
        rest = rest.contract(&block)?;
        blocks.push(block);
        critical_values.push(lambda);
    }
    Ok(PrincipalPartition { blocks, critical_values })
}

/// The unique minimizer over the base polyhedron of every symmetric strictly
/// convex function: λ_k on block k. Indexed by agent id, so `n` must exceed
/// every agent in the partition.
pub fn relaxed_minimizer(pp: &PrincipalPartition, n: usize) -> UtilityVector {
    let mut z = UtilityVector::zeros(n);
    for (block, lambda) in pp.blocks.iter().zip(&pp.critical_values) {
        for &a in block {
            z.0[a] = lambda.clone();
        }
    }
    z
}

/// An integral minimizer over the M-convex set of `f`: every agent of block
/// `j` gets β_j or β_j − 1, with the β_j slots handed to the lowest-indexed
/// agents for which the profile stays realizable. Indexed by agent id.
pub fn discrete_minimizer(
    f: &CoverageFn,
    cp: &CanonicalPartition,
    n: usize,
) -> Result<UtilityVector, PartitionError> {
    let ground = f.ground();
    let pos = |a: AgentId| ground.binary_search(&a).expect("partition agent in ground");
    let mut lo = vec![0i64; ground.len()];
    let mut hi = vec![0i64; ground.len()];
    let mut quota = Vec::with_capacity(cp.blocks.len());
    let mut sums = Vec::with_capacity(cp.blocks.len());
    let mut prior: Vec<AgentId> = Vec::new();
    let mut prior_mass = 0i64;
    for (block, &beta) in cp.blocks.iter().zip(&cp.essential_values) {
        prior.extend_from_slice(block);
        let upto = f.eval(&prior)? as i64;
        let mass = upto - prior_mass;
        prior_mass = upto;
        // r_j agents sit at β_j, the rest at β_j − 1
        quota.push(mass - (beta - 1) * block.len() as i64);
        sums.push((block.iter().map(|&a| pos(a)).collect::<Vec<_>>(), mass));
        for &a in block {
            lo[pos(a)] = beta - 1;
            hi[pos(a)] = beta;
        }
    }
    for (j, block) in cp.blocks.iter().enumerate() {
        let mut remaining = quota[j];
        let mut sorted = block.clone();
        sorted.sort_unstable();
        for a in sorted {
            let p = pos(a);
            if remaining == 0 {
                hi[p] = lo[p];
                continue;
            }
            lo[p] = hi[p];
            if base_vector_exists(f, &sums, &lo, &hi) {
                remaining -= 1;
            } else {
                lo[p] = hi[p] - 1;
                hi[p] = lo[p];
            }
        }
        if remaining != 0 {
            return Err(PartitionError::Infeasible);
        }
    }
    if !base_vector_exists(f, &sums, &lo, &hi) {
        return Err(PartitionError::Infeasible);
    }
    let mut z = UtilityVector::zeros(n);
    for (p, &a) in ground.iter().enumerate() {
        z.0[a] = qi(lo[p]);
    }
    Ok(z)
}

/// Whether some integral base vector `y` of `f` has `lo ≤ y ≤ hi` (ground
/// order) and block sums equal to the given masses.
fn base_vector_exists(f: &CoverageFn, blocks: &[(Vec<usize>, i64)], lo: &[i64], hi: &[i64]) -> bool {
    if lo.iter().any(|&x| x < 0) {
        // negative lower bounds are slack: y ≥ 0 anyway
        let lo: Vec<i64> = lo.iter().map(|&x| x.max(0)).collect();
        return hi.iter().all(|&h| h >= 0) && base_vector_exists(f, blocks, &lo, hi);
    }
    let mut net = FlowNetwork::new();
    let s = net.add_node("s");
    let t = net.add_node("t");
    net.source = Some(s);
    net.sink = Some(t);
    let agents: Vec<_> = f.ground().iter().map(|_| net.add_node("a")).collect();
    for (d, w) in f.items() {
        let w = *w as i64;
        let e = net.add_node("e");
        net.add_arc(s, e, w, w);
        for a in d {
            let p = f.ground().binary_search(a).unwrap();
            net.add_arc(e, agents[p], 0, w);
        }
    }
    for (members, mass) in blocks {
        let b = net.add_node("b");
        net.add_arc(b, t, *mass, *mass);
        for &p in members {
            net.add_arc(agents[p], b, lo[p], hi[p]);
        }
    }
    feasible_flow(&net).is_ok()
}

/// Agents with `z_i` outside `[⌊z̄_i⌋, ⌈z̄_i⌉]`.
pub fn rounding_violations(zbar: &UtilityVector, z: &UtilityVector) -> Vec<AgentId> {
    zbar.values()
        .iter()
        .zip(z.values())
        .enumerate()
        .filter(|(_, (r, x))| *x < &r.floor() || *x > &r.ceil())
        .map(|(a, _)| a)
        .collect()
}

/// `L(λ)`: the smallest maximizer of `f(X) − λ|X|`.
pub fn lower_level_set(f: &CoverageFn, lambda: &Q) -> Result<Vec<AgentId>, PartitionError> {
    Ok(f.smallest_maximizer_excess(lambda)?.argmax)
}

/// Essential values recomputed as the distinct rounded-up critical values, and
/// the canonical blocks as unions of principal blocks sharing a rounded value.
pub fn aggregate(pp: &PrincipalPartition) -> CanonicalPartition {
    let mut blocks: Vec<Vec<AgentId>> = Vec::new();
    let mut essential_values: Vec<i64> = Vec::new();
    for (block, lambda) in pp.blocks.iter().zip(&pp.critical_values) {
        let beta = ceil(lambda);
        if essential_values.last() == Some(&beta) {
            let last = blocks.last_mut().unwrap();
            last.extend_from_slice(block);
            last.sort_unstable();
        } else {
            let mut b = block.clone();
            b.sort_unstable();
            blocks.push(b);
            essential_values.push(beta);
        }
    }
    CanonicalPartition { blocks, essential_values }
}

/// Least common multiple of the critical values' denominators.
pub fn critical_denominator(pp: &PrincipalPartition) -> BigInt {
    pp.critical_values.iter().fold(BigInt::from(1), |acc, x| acc.lcm(x.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn shared5_cakes3_fe() -> CoverageFn {
        CoverageFn::new(
            vec![0, 1, 2, 3, 4],
            core::iter::repeat_n(vec![0, 1, 2, 3, 4], 5).chain(core::iter::repeat_n(vec![0, 1, 2, 3], 3)),
        )
        .unwrap()
    }

    fn trio_fe() -> CoverageFn {
        CoverageFn::new(vec![0, 1, 2], [vec![0, 1, 2], vec![0, 1, 2]]).unwrap()
    }

    fn independent() -> CoverageFn {
        CoverageFn::weighted(vec![0, 1], [(vec![0], 3), (vec![1], 1)]).unwrap()
    }

    #[test]
    fn canonical_examples() {
        let cp = canonical_partition(&shared5_cakes3_fe()).unwrap();
        assert_eq!(cp, CanonicalPartition { blocks: vec![vec![0, 1, 2, 3, 4]], essential_values: vec![2] });
        let cp = canonical_partition(&trio_fe()).unwrap();
        assert_eq!(cp, CanonicalPartition { blocks: vec![vec![0, 1, 2]], essential_values: vec![1] });
        let cp = canonical_partition(&independent()).unwrap();
        assert_eq!(cp, CanonicalPartition { blocks: vec![vec![0], vec![1]], essential_values: vec![3, 1] });
    }

    #[test]
    fn principal_examples() {
        let pp = principal_partition(&shared5_cakes3_fe()).unwrap();
        assert_eq!(pp, PrincipalPartition { blocks: vec![vec![0, 1, 2, 3, 4]], critical_values: vec![q(8, 5)] });
        let pp = principal_partition(&trio_fe()).unwrap();
        assert_eq!(pp.critical_values, vec![q(2, 3)]);
        let pp = principal_partition(&independent()).unwrap();
        assert_eq!(pp, PrincipalPartition { blocks: vec![vec![0], vec![1]], critical_values: vec![qi(3), qi(1)] });
    }

    #[test]
    fn relaxed_minimizers() {
        let z = relaxed_minimizer(&principal_partition(&shared5_cakes3_fe()).unwrap(), 5);
        assert_eq!(z.0, vec![q(8, 5); 5]);
        let z = relaxed_minimizer(&principal_partition(&trio_fe()).unwrap(), 3);
        assert_eq!(z.0, vec![q(2, 3); 3]);
        let z = relaxed_minimizer(&principal_partition(&independent()).unwrap(), 2);
        assert_eq!(z.0, vec![qi(3), qi(1)]);
    }

    #[test]
    fn discrete_minimizers() {
        let f = shared5_cakes3_fe();
        let z = discrete_minimizer(&f, &canonical_partition(&f).unwrap(), 5).unwrap();
        assert_eq!(z, UtilityVector::from_integers([2, 2, 2, 1, 1]));
        let f = trio_fe();
        let z = discrete_minimizer(&f, &canonical_partition(&f).unwrap(), 3).unwrap();
        assert_eq!(z, UtilityVector::from_integers([1, 1, 0]));
        let f = independent();
        let z = discrete_minimizer(&f, &canonical_partition(&f).unwrap(), 2).unwrap();
        assert_eq!(z, UtilityVector::from_integers([3, 1]));
    }

    #[test]
    fn discrete_minimizer_respects_desire_sets() {
        // agent 2 can only take the good desired by everyone, so it must not
        // be handed a β slot that forces a second good.
        let f = CoverageFn::new(vec![0, 1, 2], [vec![0, 1], vec![0, 1], vec![0, 1], vec![0, 1, 2]]).unwrap();
        let cp = canonical_partition(&f).unwrap();
        let z = discrete_minimizer(&f, &cp, 3).unwrap();
        assert_eq!(z.total(), qi(4));
        assert!(z[2] <= qi(1));
    }

    #[test]
    fn aggregation_of_examples() {
        for f in [shared5_cakes3_fe(), trio_fe(), independent()] {
            let pp = principal_partition(&f).unwrap();
            assert_eq!(aggregate(&pp), canonical_partition(&f).unwrap());
        }
    }

    #[test]
    fn zero_density_agents_form_the_last_block() {
        let f = CoverageFn::weighted(vec![0, 1, 2], [(vec![0], 2)]).unwrap();
        let pp = principal_partition(&f).unwrap();
        assert_eq!(pp.critical_values, vec![qi(2), qi(0)]);
        assert_eq!(pp.blocks[1], vec![1, 2]);
        let cp = canonical_partition(&f).unwrap();
        assert_eq!(cp.essential_values, vec![2, 0]);
        let z = discrete_minimizer(&f, &cp, 3).unwrap();
        assert_eq!(z, UtilityVector::from_integers([2, 0, 0]));
    }

    #[test]
    fn empty_ground_is_rejected() {
        let f = CoverageFn::new(vec![], core::iter::empty()).unwrap();
        assert_eq!(canonical_partition(&f), Err(PartitionError::EmptyGround));
        assert_eq!(principal_partition(&f), Err(PartitionError::EmptyGround));
    }
}
