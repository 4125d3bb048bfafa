//! Integral flows: a Dinic max-flow kernel, feasibility under lower bounds,
//! realization of utility vectors as allocations, and the block-assignment
//! gadget used by the identical-divisible solver.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::instance::{AgentId, Allocation, GoodId, GoodKind, Instance, UtilityVector};
use crate::rational::{common_denominator, qu, scaled_i64, Q};

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: i64,
}

/// Dinic's algorithm on an adjacency-list residual graph.
#[derive(Debug, Clone)]
pub(crate) struct Dinic {
    graph: Vec<Vec<Edge>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

/// Handle of an arc added to a [`Dinic`] graph.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EdgeRef {
    from: usize,
    idx: usize,
    original: i64,
}

impl Dinic {
    pub(crate) fn new(n: usize) -> Self {
        Dinic { graph: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n] }
    }

    pub(crate) fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> EdgeRef {
        let idx = self.graph[from].len();
        let rev_idx = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge { to, rev: rev_idx, cap });
        self.graph[to].push(Edge { to: from, rev: idx, cap: 0 });
        EdgeRef { from, idx, original: cap }
    }

    pub(crate) fn flow_on(&self, e: EdgeRef) -> i64 {
        e.original - self.graph[e.from][e.idx].cap
    }

    fn bfs(&mut self, s: usize) {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap > 0 && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: i64) -> i64 {
        if v == t {
            return pushed;
        }
        while self.iter[v] < self.graph[v].len() {
            let i = self.iter[v];
            let Edge { to, cap, rev } = self.graph[v][i];
            if cap > 0 && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, pushed.min(cap));
                if d > 0 {
                    self.graph[v][i].cap -= d;
                    self.graph[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        if s == t {
            return 0;
        }
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.fill(0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph.
    pub(crate) fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for e in &self.graph[v] {
                if e.cap > 0 && !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }

    /// Nodes that can still reach `t` in the residual graph.
    pub(crate) fn reaching(&self, t: usize) -> Vec<bool> {
        let n = self.graph.len();
        let mut seen = vec![false; n];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            // u -> v has residual capacity iff the reverse entry stored at v says so.
            for e in &self.graph[v] {
                let back = &self.graph[e.to][e.rev];
                if back.cap > 0 && !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub lower: i64,
    pub upper: i64,
}

/// A directed network with integer lower/upper bounds and labelled nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowNetwork {
    labels: Vec<String>,
    arcs: Vec<Arc>,
    pub source: Option<usize>,
    pub sink: Option<usize>,
}

impl FlowNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>) -> usize {
        self.labels.push(label.into());
        self.labels.len() - 1
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, lower: i64, upper: i64) -> usize {
        assert!(tail < self.labels.len() && head < self.labels.len(), "arc endpoint out of range");
        assert!(0 <= lower && lower <= upper, "arc bounds must satisfy 0 <= lower <= upper");
        self.arcs.push(Arc { tail, head, lower, upper });
        self.arcs.len() - 1
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    fn finite_infinity(&self) -> i64 {
        self.arcs.iter().map(|a| a.upper).fold(1i64, |acc, u| acc.saturating_add(u))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowError {
    MissingTerminals,
    LowerBoundsPresent,
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::MissingTerminals => write!(f, "network has no source/sink"),
            FlowError::LowerBoundsPresent => {
                write!(f, "max_flow needs zero lower bounds; use feasible_flow")
            }
        }
    }
}

impl core::error::Error for FlowError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxFlow {
    pub value: i64,
    /// Flow on every arc, in arc order.
    pub flow: Vec<i64>,
    /// Nodes reachable from the source in the final residual graph (the
    /// source side of the inclusion-wise smallest minimum cut).
    pub source_side: Vec<bool>,
}

pub fn max_flow(net: &FlowNetwork) -> Result<MaxFlow, FlowError> {
    let (Some(s), Some(t)) = (net.source, net.sink) else {
        return Err(FlowError::MissingTerminals);
    };
    if net.arcs.iter().any(|a| a.lower != 0) {
        return Err(FlowError::LowerBoundsPresent);
    }
    let mut d = Dinic::new(net.node_count());
    let refs: Vec<_> = net.arcs.iter().map(|a| d.add_edge(a.tail, a.head, a.upper)).collect();
    let value = d.max_flow(s, t);
    Ok(MaxFlow {
        value,
        flow: refs.iter().map(|&e| d.flow_on(e)).collect(),
        source_side: d.reachable_from(s),
    })
}

/// Certificate that no flow meets the bounds: a node set whose forced inflow
/// exceeds what can leave it (or the reverse), by `deficit` units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Infeasible {
    pub cut: Vec<usize>,
    pub deficit: i64,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "infeasible: cut {:?} short by {}", self.cut, self.deficit)
    }
}

/// An integral flow meeting every `[lower, upper]` bound and conserving flow
/// at every node. When source and sink are set, any amount may circulate from
/// sink back to source.
pub fn feasible_flow(net: &FlowNetwork) -> Result<Vec<i64>, Infeasible> {
    let n = net.node_count();
    let inf = net.finite_infinity();
    let (ss, tt) = (n, n + 1);
    let mut d = Dinic::new(n + 2);
    let mut excess = vec![0i64; n];
    let refs: Vec<_> = net
        .arcs
        .iter()
        .map(|a| {
            excess[a.head] += a.lower;
            excess[a.tail] -= a.lower;
            d.add_edge(a.tail, a.head, a.upper - a.lower)
        })
        .collect();
    if let (Some(s), Some(t)) = (net.source, net.sink) {
        d.add_edge(t, s, inf);
    }
    let mut need = 0;
    for (v, &b) in excess.iter().enumerate() {
        if b > 0 {
            d.add_edge(ss, v, b);
            need += b;
        } else if b < 0 {
            d.add_edge(v, tt, -b);
        }
    }
    let got = d.max_flow(ss, tt);
    if got < need {
        let side = d.reachable_from(ss);
        let cut = (0..n).filter(|&v| side[v]).collect();
        return Err(Infeasible { cut, deficit: need - got });
    }
    Ok(net
        .arcs
        .iter()
        .zip(&refs)
        .map(|(a, &e)| a.lower + d.flow_on(e))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealizeError {
    LengthMismatch { expected: usize, found: usize },
    SumMismatch { expected: usize, found: Box<Q> },
    NegativeTarget(AgentId),
    NotIntegral(AgentId),
    CapacityOverflow,
    Infeasible(Infeasible),
}

impl fmt::Display for RealizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealizeError::LengthMismatch { expected, found } => {
                write!(f, "target has {found} entries, instance has {expected} agents")
            }
            RealizeError::SumMismatch { expected, found } => {
                write!(f, "target sums to {found}, but there are {expected} goods of this kind")
            }
            RealizeError::NegativeTarget(a) => write!(f, "target of agent {a} is negative"),
            RealizeError::NotIntegral(a) => {
                write!(f, "target of agent {a} must be an integer for indivisible goods")
            }
            RealizeError::CapacityOverflow => write!(f, "scaled capacities do not fit in 64 bits"),
            RealizeError::Infeasible(c) => write!(f, "target is not achievable ({c})"),
        }
    }
}

impl core::error::Error for RealizeError {}

/// The source → goods → agents → sink network whose saturating flows are the
/// allocations of the goods of one kind achieving a target utility vector.
#[derive(Debug, Clone)]
pub struct RealizationNetwork {
    pub network: FlowNetwork,
    /// Every capacity is the true value times this scale.
    pub scale: BigInt,
    /// `(good, agent, arc)` for every good → agent arc.
    pub assignment_arcs: Vec<(GoodId, AgentId, usize)>,
    goods: usize,
}

pub fn realization_network(
    inst: &Instance,
    kind: GoodKind,
    target: &UtilityVector,
) -> Result<RealizationNetwork, RealizeError> {
    let n = inst.n_agents();
    if target.len() != n {
        return Err(RealizeError::LengthMismatch { expected: n, found: target.len() });
    }
    if let Some(a) = target.values().iter().position(|x| x < &Q::zero()) {
        return Err(RealizeError::NegativeTarget(a));
    }
    let goods = inst.goods(kind);
    if kind == GoodKind::Indivisible {
        if let Some(a) = target.values().iter().position(|x| !x.is_integer()) {
            return Err(RealizeError::NotIntegral(a));
        }
    }
    let total = target.total();
    if total != qu(goods.len()) {
        return Err(RealizeError::SumMismatch { expected: goods.len(), found: Box::new(total) });
    }
    let scale = common_denominator(target.values());
    let unit = scale.to_i64().ok_or(RealizeError::CapacityOverflow)?;

    let mut net = FlowNetwork::new();
    let s = net.add_node("s");
    let t = net.add_node("t");
    net.source = Some(s);
    net.sink = Some(t);
    let agent_nodes: Vec<_> = (0..n).map(|i| net.add_node(format!("a{i}"))).collect();
    let mut assignment_arcs = Vec::new();
    for (g, d) in goods.iter().enumerate() {
        let id = GoodId { kind, index: g };
        let node = net.add_node(format!("{id}"));
        net.add_arc(s, node, 0, unit);
        for &a in d {
            let arc = net.add_arc(node, agent_nodes[a], 0, unit);
            assignment_arcs.push((id, a, arc));
        }
    }
    for (i, x) in target.values().iter().enumerate() {
        let cap = scaled_i64(x, &scale).ok_or(RealizeError::CapacityOverflow)?;
        net.add_arc(agent_nodes[i], t, 0, cap);
    }
    Ok(RealizationNetwork { network: net, scale, assignment_arcs, goods: goods.len() })
}

/// An allocation of the goods of `kind` whose utilities equal `target`
/// exactly. Goods of the other kind are left out of the returned allocation.
/// Integral targets on indivisible goods give 0/1 shares.
pub fn realize_from_utilities(
    inst: &Instance,
    kind: GoodKind,
    target: &UtilityVector,
) -> Result<Allocation, RealizeError> {
    let rn = realization_network(inst, kind, target)?;
    let mf = max_flow(&rn.network).expect("realization network has terminals and no lower bounds");
    let unit = rn.scale.to_i64().ok_or(RealizeError::CapacityOverflow)?;
    let need = unit
        .checked_mul(rn.goods as i64)
        .ok_or(RealizeError::CapacityOverflow)?;
    if mf.value < need {
        let cut = (0..rn.network.node_count()).filter(|&v| mf.source_side[v]).collect();
        return Err(RealizeError::Infeasible(Infeasible { cut, deficit: need - mf.value }));
    }
    let mut alloc = Allocation::new(false);
    let scale = Q::from_integer(rn.scale.clone());
    for &(g, a, arc) in &rn.assignment_arcs {
        let f = mf.flow[arc];
        if f != 0 {
            alloc.set(a, g, Q::from_integer(BigInt::from(f)) / &scale);
        }
    }
    Ok(alloc)
}

/// One block of the identical-divisible solver: agents that desire the
/// divisible goods (`plus`), those that do not (`minus`), and the desire sets
/// of the block's indivisible goods. Agents outside the block are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpec {
    pub plus: Vec<AgentId>,
    pub minus: Vec<AgentId>,
    pub goods: Vec<Vec<AgentId>>,
}

impl BlockSpec {
    /// `plus` followed by `minus`.
    pub fn agents(&self) -> Vec<AgentId> {
        self.plus.iter().chain(&self.minus).copied().collect()
    }
}

/// A 0/1 assignment of a block's goods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAssignment {
    /// Block agents, `plus` first.
    pub agents: Vec<AgentId>,
    /// Length of the `plus` prefix of `agents`.
    pub n_plus: usize,
    /// Number of goods received, aligned with `agents`.
    pub counts: Vec<usize>,
    /// Receiving agent of every good of the block.
    pub owner: Vec<AgentId>,
}

impl BlockAssignment {
    pub fn count_of(&self, agent: AgentId) -> usize {
        self.agents
            .iter()
            .position(|&a| a == agent)
            .map_or(0, |p| self.counts[p])
    }

    pub fn plus(&self) -> &[AgentId] {
        &self.agents[..self.n_plus]
    }

    /// Goods received by the `plus` agents.
    pub fn plus_total(&self) -> usize {
        self.counts[..self.n_plus].iter().sum()
    }

    /// Row `agent`, column `good` of the 0/1 matrix.
    pub fn assigned(&self, agent: AgentId, good: usize) -> bool {
        self.owner.get(good) == Some(&agent)
    }
}

/// Network for [`feasible_block_assignment`], with the goods → agent arcs.
#[derive(Debug, Clone)]
pub struct BlockNetwork {
    pub network: FlowNetwork,
    /// `(good, agent, arc)`.
    pub assignment_arcs: Vec<(usize, AgentId, usize)>,
}

/// Each `plus` agent's outflow splits into a base arc of capacity β−1 and a
/// unit overflow arc through a shared budget node of capacity `k`; `minus`
/// agents are bounded to [β−1, β]; the total reaching `plus` is pinned to ℓ.
pub fn block_network(block: &BlockSpec, k: usize, l: usize, beta: u32) -> BlockNetwork {
    assert!(beta >= 1, "essential value of the divisible block must be at least 1");
    let beta = i64::from(beta);
    let mut net = FlowNetwork::new();
    let s = net.add_node("s");
    let t = net.add_node("t");
    net.source = Some(s);
    net.sink = Some(t);
    let budget = net.add_node("budget");
    let plus_total = net.add_node("plus");
    net.add_arc(budget, plus_total, 0, k as i64);
    net.add_arc(plus_total, t, l as i64, l as i64);

    let agents = block.agents();
    let mut node_of = alloc::collections::BTreeMap::new();
    for &a in &agents {
        node_of.insert(a, net.add_node(format!("a{a}")));
    }
    for &a in &block.plus {
        net.add_arc(node_of[&a], plus_total, 0, beta - 1);
        net.add_arc(node_of[&a], budget, 0, 1);
    }
    for &a in &block.minus {
        net.add_arc(node_of[&a], t, beta - 1, beta);
    }
    let mut assignment_arcs = Vec::new();
    for (g, d) in block.goods.iter().enumerate() {
        let node = net.add_node(format!("g{g}"));
        net.add_arc(s, node, 1, 1);
        for a in d {
            if let Some(&v) = node_of.get(a) {
                let arc = net.add_arc(node, v, 0, 1);
                assignment_arcs.push((g, *a, arc));
            }
        }
    }
    BlockNetwork { network: net, assignment_arcs }
}

/// A 0/1 assignment of the block's goods with (a) at most `k` plus-agents at
/// exactly β goods, (b) every plus-agent at most β, (c) ℓ goods to plus-agents
/// in total and (d) every minus-agent at β or β−1.
pub fn feasible_block_assignment(
    block: &BlockSpec,
    k: usize,
    l: usize,
    beta: u32,
) -> Result<BlockAssignment, Infeasible> {
    let bn = block_network(block, k, l, beta);
    let flow = feasible_flow(&bn.network)?;
    let agents = block.agents();
    let mut owner = vec![usize::MAX; block.goods.len()];
    for &(g, a, arc) in &bn.assignment_arcs {
        if flow[arc] == 1 {
            owner[g] = a;
        }
    }
    debug_assert!(owner.iter().all(|&o| o != usize::MAX));
    let counts = agents
        .iter()
        .map(|a| owner.iter().filter(|&&o| o == *a).count())
        .collect();
    Ok(BlockAssignment { agents, n_plus: block.plus.len(), counts, owner })
}

/// Every stored share is exactly 1.
pub fn shares_are_zero_one(alloc: &Allocation) -> bool {
    alloc.iter().all(|(_, _, s)| num_traits::One::is_one(s))
}
