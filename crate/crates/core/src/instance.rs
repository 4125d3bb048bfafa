//! Instances, allocations and utility vectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::partition::CanonicalPartition;
use crate::polymatroid::CoverageFn;
use crate::rational::{qu, Q};

pub type AgentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GoodKind {
    Indivisible,
    Divisible,
}

impl GoodKind {
    fn prefix(self) -> char {
        match self {
            GoodKind::Indivisible => 'm',
            GoodKind::Divisible => 'c',
        }
    }
}

/// A good, written `m<i>` (indivisible) or `c<i>` (divisible).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GoodId {
    pub kind: GoodKind,
    pub index: usize,
}

impl GoodId {
    pub fn indivisible(index: usize) -> Self {
        GoodId { kind: GoodKind::Indivisible, index }
    }

    pub fn divisible(index: usize) -> Self {
        GoodId { kind: GoodKind::Divisible, index }
    }
}

impl fmt::Display for GoodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.prefix(), self.index)
    }
}

impl FromStr for GoodId {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InstanceError::BadGoodId(String::from(s));
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('m') => GoodKind::Indivisible,
            Some('c') => GoodKind::Divisible,
            _ => return Err(bad()),
        };
        let rest = chars.as_str();
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let index = rest.parse().map_err(|_| bad())?;
        Ok(GoodId { kind, index })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceError {
    EmptyDesireSet(GoodId),
    AgentOutOfRange { good: GoodId, agent: AgentId },
    DuplicateAgent { good: GoodId, agent: AgentId },
    NoAgents,
    BadGoodId(String),
    UnknownGood(GoodId),
    UnknownAgent(AgentId),
    LengthMismatch { expected: usize, found: usize },
    PartitionMismatch,
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::EmptyDesireSet(g) => write!(f, "good {g} is desired by no agent"),
            InstanceError::AgentOutOfRange { good, agent } => {
                write!(f, "good {good} references agent {agent}, which does not exist")
            }
            InstanceError::DuplicateAgent { good, agent } => {
                write!(f, "good {good} lists agent {agent} more than once")
            }
            InstanceError::NoAgents => write!(f, "an instance with goods needs at least one agent"),
            InstanceError::BadGoodId(s) => write!(f, "malformed good id {s:?}"),
            InstanceError::UnknownGood(g) => write!(f, "good {g} is not part of the instance"),
            InstanceError::UnknownAgent(a) => write!(f, "agent {a} is not part of the instance"),
            InstanceError::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            InstanceError::PartitionMismatch => {
                write!(f, "partition blocks do not cover the agent set exactly")
            }
        }
    }
}

impl core::error::Error for InstanceError {}

/// A fair-allocation instance with binary valuations.
///
/// Every good carries its desire set: the sorted list of agents that value it
/// at 1. Names are optional display metadata keyed by `a<i>`, `m<i>` or `c<i>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    n_agents: usize,
    indivisible: Vec<Vec<AgentId>>,
    divisible: Vec<Vec<AgentId>>,
    names: BTreeMap<String, String>,
}

impl Instance {
    /// Desire sets must be non-empty, in range and free of duplicates; they
    /// are stored sorted. Zero agents is accepted only for an instance without
    /// goods.
    pub fn new(
        n_agents: usize,
        indivisible: Vec<Vec<AgentId>>,
        divisible: Vec<Vec<AgentId>>,
    ) -> Result<Self, InstanceError> {
        if n_agents == 0 && !(indivisible.is_empty() && divisible.is_empty()) {
            return Err(InstanceError::NoAgents);
        }
        let check = |kind: GoodKind, sets: Vec<Vec<AgentId>>| {
            sets.into_iter()
                .enumerate()
                .map(|(index, mut d)| {
                    let good = GoodId { kind, index };
                    if d.is_empty() {
                        return Err(InstanceError::EmptyDesireSet(good));
                    }
                    d.sort_unstable();
                    for w in d.windows(2) {
                        if w[0] == w[1] {
                            return Err(InstanceError::DuplicateAgent { good, agent: w[0] });
                        }
                    }
                    if let Some(&agent) = d.last().filter(|&&a| a >= n_agents) {
                        return Err(InstanceError::AgentOutOfRange { good, agent });
                    }
                    Ok(d)
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(Instance {
            n_agents,
            indivisible: check(GoodKind::Indivisible, indivisible)?,
            divisible: check(GoodKind::Divisible, divisible)?,
            names: BTreeMap::new(),
        })
    }

    pub fn with_names(mut self, names: BTreeMap<String, String>) -> Self {
        self.names = names;
        self
    }

    pub fn names(&self) -> &BTreeMap<String, String> {
        &self.names
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn indivisible(&self) -> &[Vec<AgentId>] {
        &self.indivisible
    }

    pub fn divisible(&self) -> &[Vec<AgentId>] {
        &self.divisible
    }

    pub fn goods(&self, kind: GoodKind) -> &[Vec<AgentId>] {
        match kind {
            GoodKind::Indivisible => &self.indivisible,
            GoodKind::Divisible => &self.divisible,
        }
    }

    pub fn n_goods(&self) -> usize {
        self.indivisible.len() + self.divisible.len()
    }

    pub fn desire_set(&self, good: GoodId) -> Option<&[AgentId]> {
        self.goods(good.kind).get(good.index).map(Vec::as_slice)
    }

    pub fn desires(&self, agent: AgentId, good: GoodId) -> bool {
        self.desire_set(good)
            .is_some_and(|d| d.binary_search(&agent).is_ok())
    }

    /// All goods, indivisible first, in index order.
    pub fn good_ids(&self) -> impl Iterator<Item = GoodId> + '_ {
        (0..self.indivisible.len())
            .map(GoodId::indivisible)
            .chain((0..self.divisible.len()).map(GoodId::divisible))
    }

    pub fn all_agents(&self) -> Vec<AgentId> {
        (0..self.n_agents).collect()
    }

    /// Coverage function of the indivisible goods.
    pub fn f_m(&self) -> CoverageFn {
        CoverageFn::new(self.all_agents(), self.indivisible.iter().cloned())
            .expect("validated desire sets")
    }

    /// Coverage function of the divisible goods.
    pub fn f_c(&self) -> CoverageFn {
        CoverageFn::new(self.all_agents(), self.divisible.iter().cloned())
            .expect("validated desire sets")
    }

    /// Coverage function of all goods.
    pub fn f_e(&self) -> CoverageFn {
        CoverageFn::new(
            self.all_agents(),
            self.indivisible.iter().chain(self.divisible.iter()).cloned(),
        )
        .expect("validated desire sets")
    }

    /// True iff every good of `kind` has the same desire set.
    pub fn goods_identical(&self, kind: GoodKind) -> bool {
        self.goods(kind).windows(2).all(|w| w[0] == w[1])
    }

    /// The same instance with every divisible good turned indivisible.
    pub fn all_indivisible(&self) -> Instance {
        let mut inst = self.clone();
        let mut div = core::mem::take(&mut inst.divisible);
        inst.indivisible.append(&mut div);
        inst
    }
}

/// A (possibly relaxed) allocation: share of each good held by each agent.
///
/// Missing entries are zero; zero shares are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Allocation {
    pub relaxed: bool,
    shares: BTreeMap<(GoodId, AgentId), Q>,
}

impl Allocation {
    pub fn new(relaxed: bool) -> Self {
        Allocation { relaxed, shares: BTreeMap::new() }
    }

    pub fn set(&mut self, agent: AgentId, good: GoodId, share: Q) {
        if share.is_zero() {
            self.shares.remove(&(good, agent));
        } else {
            self.shares.insert((good, agent), share);
        }
    }

    pub fn add(&mut self, agent: AgentId, good: GoodId, share: &Q) {
        let cur = self.share(agent, good) + share;
        self.set(agent, good, cur);
    }

    pub fn share(&self, agent: AgentId, good: GoodId) -> Q {
        self.shares.get(&(good, agent)).cloned().unwrap_or_else(Q::zero)
    }

    /// Non-zero entries ordered by good, then agent.
    pub fn iter(&self) -> impl Iterator<Item = (AgentId, GoodId, &Q)> {
        self.shares.iter().map(|(&(g, a), s)| (a, g, s))
    }

    pub fn holders(&self, good: GoodId) -> impl Iterator<Item = (AgentId, &Q)> {
        self.shares
            .range((good, 0)..=(good, usize::MAX))
            .map(|(&(_, a), s)| (a, s))
    }

    /// Copies every entry of `other` into `self`, overwriting clashes.
    pub fn merge(&mut self, other: &Allocation) {
        for (a, g, s) in other.iter() {
            self.set(a, g, s.clone());
        }
    }

    /// The agent holding an indivisible good, when exactly one agent holds all of it.
    pub fn owner(&self, good: GoodId) -> Option<AgentId> {
        let mut it = self.holders(good);
        match (it.next(), it.next()) {
            (Some((a, s)), None) if s.is_one() => Some(a),
            _ => None,
        }
    }
}

/// Per-agent utilities in goods units.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct UtilityVector(pub Vec<Q>);

impl UtilityVector {
    pub fn zeros(n: usize) -> Self {
        UtilityVector(alloc::vec![Q::zero(); n])
    }

    pub fn from_integers(xs: impl IntoIterator<Item = i64>) -> Self {
        UtilityVector(xs.into_iter().map(crate::rational::qi).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Q] {
        &self.0
    }

    pub fn total(&self) -> Q {
        self.0.iter().fold(Q::zero(), |acc, x| acc + x)
    }

    pub fn sorted_desc(&self) -> Vec<Q> {
        let mut v = self.0.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    pub fn sorted_asc(&self) -> Vec<Q> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v
    }

    /// Same multiset of values.
    pub fn value_equivalent(&self, other: &UtilityVector) -> bool {
        self.sorted_asc() == other.sorted_asc()
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|x| x.is_integer())
    }
}

impl core::ops::Index<usize> for UtilityVector {
    type Output = Q;
    fn index(&self, i: usize) -> &Q {
        &self.0[i]
    }
}

/// Per-agent utilities of `alloc`.
pub fn utility_vector(inst: &Instance, alloc: &Allocation) -> Result<UtilityVector, InstanceError> {
    let mut u = UtilityVector::zeros(inst.n_agents());
    for (a, g, s) in alloc.iter() {
        if inst.desire_set(g).is_none() {
            return Err(InstanceError::UnknownGood(g));
        }
        if a >= inst.n_agents() {
            return Err(InstanceError::UnknownAgent(a));
        }
        u.0[a] += s;
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownGood(GoodId),
    UnknownAgent(AgentId),
    ShareOutOfRange { agent: AgentId, good: GoodId, share: Q },
    NotDesired { agent: AgentId, good: GoodId },
    ColumnSum { good: GoodId, sum: Q },
    Fractional { agent: AgentId, good: GoodId, share: Q },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownGood(g) => write!(f, "good {g} does not exist"),
            Violation::UnknownAgent(a) => write!(f, "agent {a} does not exist"),
            Violation::ShareOutOfRange { agent, good, share } => {
                write!(f, "agent {agent} holds {share} of {good}, outside [0,1]")
            }
            Violation::NotDesired { agent, good } => {
                write!(f, "agent {agent} holds part of {good} without desiring it")
            }
            Violation::ColumnSum { good, sum } => write!(f, "shares of {good} sum to {sum}, not 1"),
            Violation::Fractional { agent, good, share } => {
                write!(f, "indivisible good {good} is split ({share} to agent {agent})")
            }
        }
    }
}

/// Every violated allocation invariant; empty for a valid allocation.
pub fn validate_allocation(inst: &Instance, alloc: &Allocation) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut sums: BTreeMap<GoodId, Q> = inst.good_ids().map(|g| (g, Q::zero())).collect();
    for (a, g, s) in alloc.iter() {
        let Some(sum) = sums.get_mut(&g) else {
            out.push(Violation::UnknownGood(g));
            continue;
        };
        *sum += s;
        if a >= inst.n_agents() {
            out.push(Violation::UnknownAgent(a));
            continue;
        }
        if s.is_negative() || *s > Q::one() {
            out.push(Violation::ShareOutOfRange { agent: a, good: g, share: s.clone() });
        }
        if !inst.desires(a, g) {
            out.push(Violation::NotDesired { agent: a, good: g });
        }
        if g.kind == GoodKind::Indivisible && !alloc.relaxed && !s.is_one() {
            out.push(Violation::Fractional { agent: a, good: g, share: s.clone() });
        }
    }
    for (good, sum) in sums {
        if !sum.is_one() {
            out.push(Violation::ColumnSum { good, sum });
        }
    }
    out
}

/// Goods grouped by the block of the canonical partition they must go to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodsPartition {
    pub indivisible_blocks: Vec<Vec<usize>>,
    pub divisible_blocks: Vec<Vec<usize>>,
}

impl GoodsPartition {
    /// Block index of every good of `kind`.
    pub fn block_of(&self, kind: GoodKind) -> BTreeMap<usize, usize> {
        let blocks = match kind {
            GoodKind::Indivisible => &self.indivisible_blocks,
            GoodKind::Divisible => &self.divisible_blocks,
        };
        blocks
            .iter()
            .enumerate()
            .flat_map(|(j, b)| b.iter().map(move |&g| (g, j)))
            .collect()
    }
}

/// Assigns each good to the first block `j` such that its desire set lies in
/// `N_1 ∪ … ∪ N_j`.
pub fn goods_canonical_partition(
    inst: &Instance,
    cp: &CanonicalPartition,
) -> Result<GoodsPartition, InstanceError> {
    let mut block_of_agent = alloc::vec![usize::MAX; inst.n_agents()];
    for (j, block) in cp.blocks.iter().enumerate() {
        for &a in block {
            if a >= inst.n_agents() || block_of_agent[a] != usize::MAX {
                return Err(InstanceError::PartitionMismatch);
            }
            block_of_agent[a] = j;
        }
    }
    if block_of_agent.contains(&usize::MAX) {
        return Err(InstanceError::PartitionMismatch);
    }
    let q = cp.blocks.len();
    let split = |sets: &[Vec<AgentId>]| {
        let mut blocks = alloc::vec![Vec::new(); q];
        for (g, d) in sets.iter().enumerate() {
            let j = d.iter().map(|&a| block_of_agent[a]).max().unwrap_or(0);
            blocks[j].push(g);
        }
        blocks
    };
    Ok(GoodsPartition {
        indivisible_blocks: split(&inst.indivisible),
        divisible_blocks: split(&inst.divisible),
    })
}

/// Sum of an agent set's utilities.
pub fn mass(u: &UtilityVector, agents: &[AgentId]) -> Q {
    agents.iter().fold(Q::zero(), |acc, &a| acc + &u[a])
}

/// Number of goods as a rational.
pub fn total_goods(inst: &Instance) -> Q {
    qu(inst.n_goods())
}
