//! Exact Φ-fair allocations for pure instances and for mixed instances whose
//! divisible goods are all identical.
//!
//! The mixed case fixes every canonical block that holds no divisible good
//! with an integral minimizer, then enumerates the pairs (k, ℓ) of the block
//! holding the divisible goods: at most k of its divisible-desiring agents
//! receive β indivisible goods and those agents receive ℓ goods in total. Each
//! feasible pair yields one candidate, with the divisible goods water-filled
//! over the agents below β. The fairest candidate wins.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::flow::{feasible_block_assignment, realize_from_utilities, BlockAssignment, BlockSpec, RealizeError};
use crate::instance::{
    goods_canonical_partition, utility_vector, validate_allocation, AgentId, Allocation, GoodId, GoodKind,
    Instance, UtilityVector,
};
use crate::objective::{Objective, ObjectiveError};
use crate::oracle::check_structure;
use crate::partition::{
    canonical_partition, discrete_minimizer, principal_partition, relaxed_minimizer, rounding_violations,
    PartitionError,
};
use crate::rational::{qi, qu, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    /// Both kinds of goods are present and the divisible goods differ.
    NonIdenticalDivisible,
    /// No (k, ℓ) pair admits an assignment; indicates a bug.
    NoFeasibleCandidate,
    /// Water-filling with every divisible-desiring agent at β.
    NoWaterLevel,
    Partition(PartitionError),
    Realize(RealizeError),
    Objective(ObjectiveError),
    /// A post-solve check failed; indicates a bug.
    Postcondition(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NonIdenticalDivisible => write!(
                f,
                "divisible goods are not identical; exact solving of this mixed case is NP-hard (use the oracle at small scale)"
            ),
            SolveError::NoFeasibleCandidate => write!(f, "no feasible (k, l) candidate"),
            SolveError::NoWaterLevel => {
                write!(f, "every agent desiring the divisible goods already holds beta goods")
            }
            SolveError::Partition(e) => write!(f, "{e}"),
            SolveError::Realize(e) => write!(f, "{e}"),
            SolveError::Objective(e) => write!(f, "{e}"),
            SolveError::Postcondition(m) => write!(f, "post-solve check failed: {m}"),
        }
    }
}

impl core::error::Error for SolveError {}

impl From<PartitionError> for SolveError {
    fn from(e: PartitionError) -> Self {
        SolveError::Partition(e)
    }
}

impl From<RealizeError> for SolveError {
    fn from(e: RealizeError) -> Self {
        SolveError::Realize(e)
    }
}

impl From<ObjectiveError> for SolveError {
    fn from(e: ObjectiveError) -> Self {
        SolveError::Objective(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub allocation: Allocation,
    pub utilities: UtilityVector,
    /// Feasible (k, ℓ) candidates compared; 0 on the pure paths.
    pub candidates_examined: usize,
    /// The winning `(k, ℓ)`, if the mixed path ran.
    pub chosen: Option<(usize, usize)>,
}

/// One feasible (k, ℓ) pair of the divisible block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub k: usize,
    pub l: usize,
    pub assignment: BlockAssignment,
    /// Share of every divisible good per agent; agents without a share are absent.
    pub shares: Vec<(AgentId, Q)>,
    /// Block utilities, aligned with `assignment.agents`.
    pub utilities: UtilityVector,
}

impl Candidate {
    /// Utilities of all agents once combined with the fixed blocks.
    pub fn full_utilities(&self, fixed: &UtilityVector) -> UtilityVector {
        let mut u = fixed.clone();
        for (a, x) in self.assignment.agents.iter().zip(self.utilities.values()) {
            u.0[*a] += x;
        }
        u
    }
}

/// Everything the mixed path computes before choosing a candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    /// Index of the canonical block holding the divisible goods.
    pub block: usize,
    pub beta: i64,
    pub plus: Vec<AgentId>,
    pub minus: Vec<AgentId>,
    /// Indivisible goods of the divisible block, in input order.
    pub block_goods: Vec<usize>,
    /// Allocation of all other blocks.
    pub fixed_allocation: Allocation,
    pub fixed_utilities: UtilityVector,
    /// Feasible candidates, ordered by (ℓ, k).
    pub candidates: Vec<Candidate>,
}

/// Dispatches to the pure solver when one kind of goods is absent and to the
/// identical-divisible solver otherwise.
pub fn solve(inst: &Instance, obj: Objective) -> Result<Solution, SolveError> {
    if inst.indivisible().is_empty() || inst.divisible().is_empty() {
        return solve_pure(inst, obj);
    }
    if !inst.goods_identical(GoodKind::Divisible) {
        return Err(SolveError::NonIdenticalDivisible);
    }
    solve_identical(inst, obj)
}

/// For pure instances one allocation is fair for every objective, so `obj`
/// only matters when both kinds are present and the call is forwarded.
pub fn solve_pure(inst: &Instance, obj: Objective) -> Result<Solution, SolveError> {
    let n = inst.n_agents();
    let (allocation, utilities) = if inst.n_goods() == 0 {
        (Allocation::new(false), UtilityVector::zeros(n))
    } else if inst.indivisible().is_empty() {
        let z = relaxed_minimizer(&principal_partition(&inst.f_c())?, n);
        (realize_from_utilities(inst, GoodKind::Divisible, &z)?, z)
    } else if inst.divisible().is_empty() {
        let f = inst.f_m();
        let z = discrete_minimizer(&f, &canonical_partition(&f)?, n)?;
        (realize_from_utilities(inst, GoodKind::Indivisible, &z)?, z)
    } else {
        return solve(inst, obj);
    };
    let sol = Solution { allocation, utilities, candidates_examined: 0, chosen: None };
    check_solution(inst, &sol)?;
    Ok(sol)
}

pub fn solve_identical(inst: &Instance, obj: Objective) -> Result<Solution, SolveError> {
    if inst.divisible().is_empty() || inst.indivisible().is_empty() {
        return solve_pure(inst, obj);
    }
    let set = enumerate_candidates(inst)?;
    let mut best: Option<(&Candidate, UtilityVector)> = None;
    for c in &set.candidates {
        let u = c.full_utilities(&set.fixed_utilities);
        let better = match &best {
            None => true,
            Some((_, bu)) => match obj.compare(&u, bu)? {
                Ordering::Less => true,
                Ordering::Equal => u.sorted_desc() < bu.sorted_desc(),
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((c, u));
        }
    }
    let (cand, utilities) = best.ok_or(SolveError::NoFeasibleCandidate)?;
    let mut allocation = set.fixed_allocation.clone();
    for (g, &owner) in set.block_goods.iter().zip(&cand.assignment.owner) {
        allocation.set(owner, GoodId::indivisible(*g), qi(1));
    }
    for (a, share) in &cand.shares {
        for c in 0..inst.divisible().len() {
            allocation.set(*a, GoodId::divisible(c), share.clone());
        }
    }
    let sol = Solution {
        allocation,
        utilities,
        candidates_examined: set.candidates.len(),
        chosen: Some((cand.k, cand.l)),
    };
    check_solution(inst, &sol)?;
    Ok(sol)
}

/// Steps (1)–(4) of the identical-divisible solver: partitions, fixed blocks
/// and every feasible candidate of the divisible block.
pub fn enumerate_candidates(inst: &Instance) -> Result<CandidateSet, SolveError> {
    if !inst.goods_identical(GoodKind::Divisible) {
        return Err(SolveError::NonIdenticalDivisible);
    }
    let n = inst.n_agents();
    let n_div = inst.divisible().len();
    let f = inst.f_e();
    let cp = canonical_partition(&f)?;
    let gp = goods_canonical_partition(inst, &cp).map_err(|_| PartitionError::Infeasible)?;
    let block = gp
        .divisible_blocks
        .iter()
        .position(|b| b.len() == n_div)
        .ok_or(SolveError::NonIdenticalDivisible)?;
    let beta = cp.essential_values[block];
    let z = discrete_minimizer(&f, &cp, n)?;

    // every block but the divisible one gets its integral profile
    let mut in_block = alloc::vec![usize::MAX; n];
    for (j, b) in cp.blocks.iter().enumerate() {
        for &a in b {
            in_block[a] = j;
        }
    }
    let mut fixed_goods = Vec::new();
    let mut fixed_sets = Vec::new();
    for (j, goods) in gp.indivisible_blocks.iter().enumerate() {
        if j == block {
            continue;
        }
        for &g in goods {
            fixed_goods.push(g);
            fixed_sets.push(inst.indivisible()[g].iter().copied().filter(|&a| in_block[a] == j).collect());
        }
    }
    let mut fixed_utilities = UtilityVector::zeros(n);
    for a in 0..n {
        if in_block[a] != block {
            fixed_utilities.0[a] = z[a].clone();
        }
    }
    let mut fixed_allocation = Allocation::new(false);
    if !fixed_goods.is_empty() {
        let sub = Instance::new(n, fixed_sets, Vec::new()).map_err(|_| PartitionError::Infeasible)?;
        let part = realize_from_utilities(&sub, GoodKind::Indivisible, &fixed_utilities)?;
        for (a, g, s) in part.iter() {
            fixed_allocation.set(a, GoodId::indivisible(fixed_goods[g.index]), s.clone());
        }
    }

    let desirers = &inst.divisible()[0];
    let (plus, minus): (Vec<AgentId>, Vec<AgentId>) =
        cp.blocks[block].iter().partition(|a| desirers.binary_search(a).is_ok());
    let block_goods = gp.indivisible_blocks[block].clone();
    let spec = BlockSpec {
        plus: plus.clone(),
        minus: minus.clone(),
        goods: block_goods.iter().map(|&g| inst.indivisible()[g].clone()).collect(),
    };
    let beta_u = u32::try_from(beta).map_err(|_| PartitionError::Infeasible)?;
    let np = plus.len() as i64;
    let mut candidates = Vec::new();
    for l in 0..=block_goods.len() {
        for k in 0..=plus.len() {
            if k == plus.len() && n_div > 0 {
                continue;
            }
            let supply = (l + n_div) as i64;
            if supply < np * (beta - 1) + k as i64 || supply > np * beta {
                continue;
            }
            let Ok(assignment) = feasible_block_assignment(&spec, k, l, beta_u) else {
                continue;
            };
            let shares = water_fill(&assignment, n_div, beta)?;
            let mut utilities = UtilityVector(assignment.counts.iter().map(|&c| qu(c)).collect());
            for (a, s) in &shares {
                let p = assignment.agents.iter().position(|x| x == a).expect("plus agent");
                utilities.0[p] += s * qu(n_div);
            }
            candidates.push(Candidate { k, l, assignment, shares, utilities });
        }
    }
    Ok(CandidateSet {
        block,
        beta,
        plus,
        minus,
        block_goods,
        fixed_allocation,
        fixed_utilities,
        candidates,
    })
}

/// Splits `n_div` identical divisible goods over the `plus` agents of
/// `assignment` holding fewer than β goods, raising all of them to the common
/// level `u = β − (|N⁺|β − ℓ − |C|)/(|N⁺| − k′)`. Returns the share of each
/// good per receiving agent.
pub fn water_fill(assignment: &BlockAssignment, n_div: usize, beta: i64) -> Result<Vec<(AgentId, Q)>, SolveError> {
    if n_div == 0 {
        return Ok(Vec::new());
    }
    let plus = assignment.plus();
    let counts = &assignment.counts[..plus.len()];
    let k_actual = counts.iter().filter(|&&c| c as i64 >= beta).count();
    if k_actual == plus.len() {
        return Err(SolveError::NoWaterLevel);
    }
    let np = plus.len() as i64;
    let l = assignment.plus_total() as i64;
    let deficit = qi(np * beta - l - n_div as i64);
    let level = qi(beta) - deficit / qu(plus.len() - k_actual);
    let mut out = Vec::new();
    for (&a, &c) in plus.iter().zip(counts) {
        if (c as i64) < beta {
            let share = (&level - qu(c)) / qu(n_div);
            if share.is_negative() {
                return Err(SolveError::NoWaterLevel);
            }
            if !share.is_zero() {
                out.push((a, share));
            }
        }
    }
    Ok(out)
}

/// Validity, block structure, proximity to the relaxed minimizer and equal
/// utility among divisible holders.
pub fn check_solution(inst: &Instance, sol: &Solution) -> Result<(), SolveError> {
    let fail = |m: String| Err(SolveError::Postcondition(m));
    let violations = validate_allocation(inst, &sol.allocation);
    if !violations.is_empty() || sol.allocation.relaxed {
        return fail(format!("invalid allocation: {violations:?}"));
    }
    match utility_vector(inst, &sol.allocation) {
        Ok(u) if u == sol.utilities => {}
        _ => return fail(String::from("utilities do not match the allocation")),
    }
    if inst.n_agents() == 0 {
        return Ok(());
    }
    let structure = check_structure(inst, &sol.allocation)?;
    if !structure.holds() {
        return fail(format!("goods leave their block: {:?}", structure.violations));
    }
    let zbar = relaxed_minimizer(&principal_partition(&inst.f_e())?, inst.n_agents());
    if let Some(a) = rounding_violations(&zbar, &sol.utilities).first() {
        return fail(format!("agent {a} is outside the rounding of the relaxed minimizer"));
    }
    let mut level: Option<&Q> = None;
    for (a, g, _) in sol.allocation.iter() {
        if g.kind == GoodKind::Divisible {
            let u = &sol.utilities[a];
            match level {
                None => level = Some(u),
                Some(l) if l != u => return fail(String::from("divisible holders have unequal utilities")),
                _ => {}
            }
        }
    }
    Ok(())
}
