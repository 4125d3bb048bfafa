//! Desk-scale ground truth: exhaustive optimal allocations, property checkers
//! and the generators of the hardness instances.
//!
//! Nothing here reuses the solver. The exhaustive search enumerates every
//! assignment of the indivisible goods and solves the divisible remainder
//! exactly for each, so its output is an independent reference.

mod continuous;
mod exchange;
mod hardness;

pub use continuous::{continuous_min, ContinuousMin, DEFAULT_MAX_ITERATIONS};
pub use exchange::{check_exchange_axiom, ExchangeReport};
pub use hardness::{gen_3dm_hardness, gen_realization_hardness, matching_profile, ThreeDM};

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::flow::{realize_from_utilities, RealizeError};
use crate::instance::{
    goods_canonical_partition, AgentId, Allocation, GoodId, GoodKind, Instance, UtilityVector,
};
use crate::objective::{Objective, ObjectiveError};
use crate::partition::{
    canonical_partition, principal_partition, relaxed_minimizer, rounding_violations, PartitionError,
};
use crate::polymatroid::CoverageFn;
use crate::rational::{qi, qu, Q};

/// Size caps for exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_agents: usize,
    pub max_indivisible: usize,
    pub max_divisible: usize,
    /// Cap on the number of indivisible assignments `Π_g |D(g)|`.
    pub max_assignments: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_agents: 6, max_indivisible: 6, max_divisible: 4, max_assignments: 1_000_000 }
    }
}

impl Limits {
    /// Only the assignment count is capped.
    pub fn assignments_only(max_assignments: u64) -> Self {
        Limits {
            max_agents: usize::MAX,
            max_indivisible: usize::MAX,
            max_divisible: usize::MAX,
            max_assignments,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    CapExceeded { what: &'static str, found: u64, cap: u64 },
    NoConvergence { gap: f64, iterations: usize },
    BadArgument(&'static str),
    Partition(PartitionError),
    Realize(RealizeError),
    Objective(ObjectiveError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::CapExceeded { what, found, cap } => {
                write!(f, "{what} is {found}, above the cap of {cap}")
            }
            OracleError::NoConvergence { gap, iterations } => {
                write!(f, "no convergence after {iterations} iterations (gap {gap:e})")
            }
            OracleError::BadArgument(m) => write!(f, "{m}"),
            OracleError::Partition(e) => write!(f, "{e}"),
            OracleError::Realize(e) => write!(f, "{e}"),
            OracleError::Objective(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for OracleError {}

impl From<PartitionError> for OracleError {
    fn from(e: PartitionError) -> Self {
        OracleError::Partition(e)
    }
}

impl From<RealizeError> for OracleError {
    fn from(e: RealizeError) -> Self {
        OracleError::Realize(e)
    }
}

impl From<ObjectiveError> for OracleError {
    fn from(e: ObjectiveError) -> Self {
        OracleError::Objective(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub utilities: UtilityVector,
    pub allocation: Allocation,
    pub assignments_examined: u64,
}

/// Number of indivisible assignments, saturating.
pub fn assignment_count(inst: &Instance) -> u64 {
    inst.indivisible()
        .iter()
        .fold(1u64, |acc, d| acc.saturating_mul(d.len() as u64))
}

fn check_limits(inst: &Instance, limits: &Limits) -> Result<(), OracleError> {
    let caps = [
        ("agent count", inst.n_agents(), limits.max_agents),
        ("indivisible good count", inst.indivisible().len(), limits.max_indivisible),
        ("divisible good count", inst.divisible().len(), limits.max_divisible),
    ];
    for (what, found, cap) in caps {
        if found > cap {
            return Err(OracleError::CapExceeded { what, found: found as u64, cap: cap as u64 });
        }
    }
    let count = assignment_count(inst);
    if count > limits.max_assignments {
        return Err(OracleError::CapExceeded {
            what: "indivisible assignment count",
            found: count,
            cap: limits.max_assignments,
        });
    }
    Ok(())
}

/// Calls `visit` with the owner of every indivisible good, for every
/// assignment in odometer order (last good fastest). Stops early when `visit`
/// returns `false`.
fn for_each_assignment(inst: &Instance, mut visit: impl FnMut(&[AgentId]) -> bool) {
    let sets = inst.indivisible();
    let mut digits = vec![0usize; sets.len()];
    let mut owners: Vec<AgentId> = sets.iter().map(|d| d[0]).collect();
    loop {
        if !visit(&owners) {
            return;
        }
        let mut pos = sets.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < sets[pos].len() {
                owners[pos] = sets[pos][digits[pos]];
                break;
            }
            digits[pos] = 0;
            owners[pos] = sets[pos][0];
        }
    }
}

fn counts(n: usize, owners: &[AgentId]) -> Vec<u64> {
    let mut x = vec![0u64; n];
    for &a in owners {
        x[a] += 1;
    }
    x
}

/// The fair utility vector once indivisible counts `x` are fixed: the
/// relaxed minimizer of the divisible goods plus `x` as private mass. Closed
/// form when the divisible goods are identical.
pub fn divisible_optimum(inst: &Instance, x: &[u64]) -> Result<UtilityVector, OracleError> {
    let n = inst.n_agents();
    let base = UtilityVector(x.iter().map(|&c| Q::from_integer((c as i64).into())).collect());
    let div = inst.divisible();
    if div.is_empty() {
        return Ok(base);
    }
    if inst.goods_identical(GoodKind::Divisible) {
        return Ok(water_level(&base, &div[0], div.len()));
    }
    Ok(relaxed_minimizer(&principal_partition(&shifted_divisible(inst, x)?)?, n))
}

/// Pours `mass` units over `agents`, lowest levels first.
fn water_level(base: &UtilityVector, agents: &[AgentId], mass: usize) -> UtilityVector {
    let mut order = agents.to_vec();
    order.sort_by(|&a, &b| base[a].cmp(&base[b]).then(a.cmp(&b)));
    let mut level = Q::zero();
    let mut filled = qu(mass);
    for (t, &a) in order.iter().enumerate() {
        filled += &base[a];
        level = &filled / qu(t + 1);
        if order.get(t + 1).is_none_or(|&b| level <= base[b]) {
            break;
        }
    }
    let mut out = base.clone();
    for &a in &order {
        if out[a] < level {
            out.0[a] = level.clone();
        }
    }
    out
}

/// Exhaustive Φ-fair allocation. Ties on `obj` go to the lexicographically
/// smaller decreasing utility vector, then to the first assignment in
/// odometer order.
pub fn brute_force_optimal(inst: &Instance, obj: Objective, limits: &Limits) -> Result<OracleResult, OracleError> {
    check_limits(inst, limits)?;
    let n = inst.n_agents();
    let mut best: Option<(UtilityVector, Vec<AgentId>)> = None;
    let mut examined = 0u64;
    let mut err = None;
    for_each_assignment(inst, |owners| {
        examined += 1;
        let u = match divisible_optimum(inst, &counts(n, owners)) {
            Ok(u) => u,
            Err(e) => {
                err = Some(e);
                return false;
            }
        };
        let better = match &best {
            None => true,
            Some((bu, _)) => match obj.compare(&u, bu) {
                Ok(Ordering::Less) => true,
                Ok(Ordering::Equal) => u.sorted_desc() < bu.sorted_desc(),
                Ok(Ordering::Greater) => false,
                Err(e) => {
                    err = Some(e.into());
                    return false;
                }
            },
        };
        if better {
            best = Some((u, owners.to_vec()));
        }
        true
    });
    if let Some(e) = err {
        return Err(e);
    }
    let (utilities, owners) = best.expect("at least one assignment");
    let allocation = assemble(inst, &owners, &utilities)?;
    Ok(OracleResult { utilities, allocation, assignments_examined: examined })
}

/// Allocation with the given indivisible owners whose utilities are `u`.
fn assemble(inst: &Instance, owners: &[AgentId], u: &UtilityVector) -> Result<Allocation, OracleError> {
    let mut alloc = Allocation::new(false);
    let mut rest = u.clone();
    for (g, &a) in owners.iter().enumerate() {
        alloc.set(a, GoodId::indivisible(g), Q::one());
        rest.0[a] -= Q::one();
    }
    if !inst.divisible().is_empty() {
        alloc.merge(&realize_from_utilities(inst, GoodKind::Divisible, &rest)?);
    }
    Ok(alloc)
}

/// An allocation whose utility vector is `target(x)`, where `x` ranges over
/// the indivisible count vectors; `target` may skip a vector by returning
/// `None`. Exact: each candidate is checked with one flow.
pub fn find_allocation(
    inst: &Instance,
    limits: &Limits,
    mut target: impl FnMut(&[u64]) -> Option<UtilityVector>,
) -> Result<Option<Allocation>, OracleError> {
    check_limits(inst, limits)?;
    let n = inst.n_agents();
    let mut found = None;
    let mut err = None;
    for_each_assignment(inst, |owners| {
        let x = counts(n, owners);
        let Some(u) = target(&x) else { return true };
        let rest = UtilityVector(u.values().iter().zip(&x).map(|(v, &c)| v - qi(c as i64)).collect());
        if rest.values().iter().any(|r| r.is_negative()) {
            return true;
        }
        let res = if inst.divisible().is_empty() {
            if rest.values().iter().all(Zero::is_zero) {
                Ok(Allocation::new(false))
            } else {
                return true;
            }
        } else {
            realize_from_utilities(inst, GoodKind::Divisible, &rest)
        };
        match res {
            Ok(div) => {
                let mut alloc = div;
                for (g, &a) in owners.iter().enumerate() {
                    alloc.set(a, GoodId::indivisible(g), Q::one());
                }
                found = Some(alloc);
                false
            }
            Err(RealizeError::Infeasible(_)) | Err(RealizeError::SumMismatch { .. }) => true,
            Err(e) => {
                err = Some(e.into());
                false
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

/// Whether some allocation has utility vector exactly `target`.
pub fn utility_achievable(inst: &Instance, target: &UtilityVector, limits: &Limits) -> Result<bool, OracleError> {
    if target.len() != inst.n_agents() {
        return Err(OracleError::BadArgument("target length differs from the agent count"));
    }
    Ok(find_allocation(inst, limits, |_| Some(target.clone()))?.is_some())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProximityReport {
    pub relaxed: UtilityVector,
    pub optimal: UtilityVector,
    /// Agents with `optimal_i` outside `[⌊relaxed_i⌋, ⌈relaxed_i⌉]`.
    pub violations: Vec<AgentId>,
}

impl ProximityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares the exhaustive optimum with the rounding of the relaxed minimizer.
pub fn check_proximity(inst: &Instance, obj: Objective, limits: &Limits) -> Result<ProximityReport, OracleError> {
    let optimal = brute_force_optimal(inst, obj, limits)?.utilities;
    Ok(proximity_report(inst, optimal)?)
}

/// Proximity of a given utility vector, e.g. one read from a file.
pub fn proximity_report(inst: &Instance, z: UtilityVector) -> Result<ProximityReport, PartitionError> {
    let relaxed = if inst.n_agents() == 0 {
        UtilityVector::zeros(0)
    } else {
        relaxed_minimizer(&principal_partition(&inst.f_e())?, inst.n_agents())
    };
    let violations = rounding_violations(&relaxed, &z);
    Ok(ProximityReport { relaxed, optimal: z, violations })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureViolation {
    /// `agent` of block `agent_block` holds part of a good of block `good_block`.
    Leak { good: GoodId, agent: AgentId, good_block: usize, agent_block: usize },
    /// The agents of the good's block hold only `within` of it.
    Incomplete { good: GoodId, within: Q },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureReport {
    pub blocks: Vec<Vec<AgentId>>,
    pub violations: Vec<StructureViolation>,
}

impl StructureReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every good of canonical block `j` is held entirely by the
/// agents of block `j`.
pub fn check_structure(inst: &Instance, alloc: &Allocation) -> Result<StructureReport, PartitionError> {
    if inst.n_agents() == 0 {
        return Ok(StructureReport { blocks: Vec::new(), violations: Vec::new() });
    }
    let cp = canonical_partition(&inst.f_e())?;
    let gp = goods_canonical_partition(inst, &cp).map_err(|_| PartitionError::Infeasible)?;
    let agent_block: Vec<usize> =
        (0..inst.n_agents()).map(|a| cp.block_of(a).expect("partition covers agents")).collect();
    let mut violations = Vec::new();
    for kind in [GoodKind::Indivisible, GoodKind::Divisible] {
        for (g, j) in gp.block_of(kind) {
            let good = GoodId { kind, index: g };
            let mut within = Q::zero();
            for (a, s) in alloc.holders(good) {
                let b = agent_block.get(a).copied().unwrap_or(usize::MAX);
                if b == j {
                    within += s;
                } else {
                    violations.push(StructureViolation::Leak { good, agent: a, good_block: j, agent_block: b });
                }
            }
            if !within.is_one() {
                violations.push(StructureViolation::Incomplete { good, within });
            }
        }
    }
    Ok(StructureReport { blocks: cp.blocks, violations })
}

/// Coverage function of an instance's divisible goods on all agents, with the
/// given integral offsets as private mass.
pub fn shifted_divisible(inst: &Instance, shift: &[u64]) -> Result<CoverageFn, OracleError> {
    let mut f = inst.f_c();
    for (a, &c) in shift.iter().enumerate() {
        if c > 0 {
            f = f.with_private_mass(a, c).map_err(PartitionError::from)?;
        }
    }
    Ok(f)
}
