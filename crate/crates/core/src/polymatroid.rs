//! Coverage-type supermodular functions `f(X) = #{e : D(e) ⊆ X}` and their
//! optimization primitives.
//!
//! Maximizing `f(X) − β|X|` is a project-selection problem: every item is a
//! project with profit equal to its multiplicity, every agent a resource
//! costing β, and an item needs all agents of its desire set. It is solved as
//! a minimum s-t cut on the bipartite item/agent network, with rational β
//! handled by scaling all capacities by β's denominator.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::flow::{Dinic, FlowNetwork};
use crate::instance::AgentId;
use crate::rational::{qu, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverageError {
    EmptyItem,
    NotInGround(AgentId),
    CapacityOverflow,
}

impl fmt::Display for CoverageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageError::EmptyItem => write!(f, "an item must be desired by at least one agent"),
            CoverageError::NotInGround(a) => write!(f, "agent {a} is not in the ground set"),
            CoverageError::CapacityOverflow => write!(f, "scaled cut capacities overflow 64 bits"),
        }
    }
}

impl core::error::Error for CoverageError {}

/// `f(X)` = total weight of items whose desire set lies inside `X`.
///
/// Identical desire sets are merged into one weighted item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageFn {
    ground: Vec<AgentId>,
    items: Vec<(Vec<AgentId>, u64)>,
}

/// Value and the inclusion-wise smallest (or largest) maximizer of `f(X) − β|X|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcessResult {
    pub value: Q,
    pub argmax: Vec<AgentId>,
}

/// Maximum of `f(X)/|X|` over non-empty `X` and a set attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Density {
    pub value: Q,
    pub witness: Vec<AgentId>,
}

enum Side {
    Smallest,
    Largest,
}

impl CoverageFn {
    pub fn new(
        ground: Vec<AgentId>,
        items: impl IntoIterator<Item = Vec<AgentId>>,
    ) -> Result<Self, CoverageError> {
        Self::weighted(ground, items.into_iter().map(|d| (d, 1)))
    }

    /// Items with multiplicities; zero-weight items are dropped.
    pub fn weighted(
        mut ground: Vec<AgentId>,
        items: impl IntoIterator<Item = (Vec<AgentId>, u64)>,
    ) -> Result<Self, CoverageError> {
        ground.sort_unstable();
        ground.dedup();
        let mut merged: BTreeMap<Vec<AgentId>, u64> = BTreeMap::new();
        for (mut d, w) in items {
            if w == 0 {
                continue;
            }
            d.sort_unstable();
            d.dedup();
            if d.is_empty() {
                return Err(CoverageError::EmptyItem);
            }
            if let Some(&a) = d.iter().find(|a| ground.binary_search(a).is_err()) {
                return Err(CoverageError::NotInGround(a));
            }
            *merged.entry(d).or_insert(0) += w;
        }
        Ok(CoverageFn { ground, items: merged.into_iter().collect() })
    }

    pub fn ground(&self) -> &[AgentId] {
        &self.ground
    }

    /// Distinct desire sets with their multiplicities.
    pub fn items(&self) -> &[(Vec<AgentId>, u64)] {
        &self.items
    }

    /// `f(ground)`.
    pub fn total(&self) -> u64 {
        self.items.iter().map(|(_, w)| w).sum()
    }

    fn position(&self, a: AgentId) -> Result<usize, CoverageError> {
        self.ground.binary_search(&a).map_err(|_| CoverageError::NotInGround(a))
    }

    fn mask(&self, set: &[AgentId]) -> Result<Vec<bool>, CoverageError> {
        let mut m = vec![false; self.ground.len()];
        for &a in set {
            m[self.position(a)?] = true;
        }
        Ok(m)
    }

    fn eval_mask(&self, mask: &[bool]) -> u64 {
        self.items
            .iter()
            .filter(|(d, _)| d.iter().all(|&a| mask[self.ground.binary_search(&a).unwrap()]))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn eval(&self, set: &[AgentId]) -> Result<u64, CoverageError> {
        Ok(self.eval_mask(&self.mask(set)?))
    }

    /// `X ↦ f(X ∪ S) − f(S)` on `ground ∖ S`.
    pub fn contract(&self, s: &[AgentId]) -> Result<CoverageFn, CoverageError> {
        let m = self.mask(s)?;
        let ground = self
            .ground
            .iter()
            .zip(&m)
            .filter(|(_, &inside)| !inside)
            .map(|(&a, _)| a)
            .collect::<Vec<_>>();
        let items = self.items.iter().filter_map(|(d, w)| {
            let rest: Vec<_> = d.iter().copied().filter(|a| ground.binary_search(a).is_ok()).collect();
            (!rest.is_empty()).then_some((rest, *w))
        });
        CoverageFn::weighted(ground.clone(), items)
    }

    /// Restriction to `set ⊆ ground`: `X ↦ f(X)` for `X ⊆ set`.
    pub fn restrict(&self, set: &[AgentId]) -> Result<CoverageFn, CoverageError> {
        let m = self.mask(set)?;
        let items = self
            .items
            .iter()
            .filter(|(d, _)| d.iter().all(|&a| m[self.ground.binary_search(&a).unwrap()]))
            .cloned();
        CoverageFn::weighted(set.to_vec(), items)
    }

    /// Adds `amount` units desired by `agent` alone.
    pub fn with_private_mass(&self, agent: AgentId, amount: u64) -> Result<CoverageFn, CoverageError> {
        self.position(agent)?;
        CoverageFn::weighted(
            self.ground.clone(),
            self.items.iter().cloned().chain(core::iter::once((vec![agent], amount))),
        )
    }

    /// Project-selection network for `f(X) − β|X|` with `β ≥ 0`, capacities
    /// scaled by β's denominator. Node 0 is the source and 1 the sink.
    pub fn cut_network(&self, beta: &Q) -> Result<FlowNetwork, CoverageError> {
        let (profit, cost) = self.scaled(beta)?;
        let inf = self.infinity(profit)?;
        let mut net = FlowNetwork::new();
        let s = net.add_node("s");
        let t = net.add_node("t");
        net.source = Some(s);
        net.sink = Some(t);
        let agents: Vec<_> = self.ground.iter().map(|a| net.add_node(format!("a{a}"))).collect();
        for (i, (d, w)) in self.items.iter().enumerate() {
            let node = net.add_node(format!("e{i}"));
            net.add_arc(s, node, 0, profit * (*w as i64));
            for &a in d {
                net.add_arc(node, agents[self.position(a)?], 0, inf);
            }
        }
        for &v in &agents {
            net.add_arc(v, t, 0, cost);
        }
        Ok(net)
    }

    fn scaled(&self, beta: &Q) -> Result<(i64, i64), CoverageError> {
        let den = beta.denom().to_i64().ok_or(CoverageError::CapacityOverflow)?;
        let num = beta.numer().to_i64().ok_or(CoverageError::CapacityOverflow)?;
        Ok((den, num))
    }

    fn infinity(&self, profit: i64) -> Result<i64, CoverageError> {
        (self.total() as i64)
            .checked_mul(profit)
            .and_then(|x| x.checked_add(1))
            .ok_or(CoverageError::CapacityOverflow)
    }

    fn maximize_excess(&self, beta: &Q, side: Side) -> Result<ExcessResult, CoverageError> {
        let n = self.ground.len();
        if beta.is_negative() {
            // f is monotone and −β|X| strictly increasing: the ground set wins.
            return Ok(ExcessResult {
                value: qu(self.total() as usize) - beta * qu(n),
                argmax: self.ground.clone(),
            });
        }
        let (profit, cost) = self.scaled(beta)?;
        let inf = self.infinity(profit)?;
        let (s, t) = (0, 1);
        let agent_node = |p: usize| 2 + p;
        let mut d = Dinic::new(2 + n + self.items.len());
        let mut total_profit: i64 = 0;
        for (i, (ds, w)) in self.items.iter().enumerate() {
            let node = 2 + n + i;
            let p = profit.checked_mul(*w as i64).ok_or(CoverageError::CapacityOverflow)?;
            total_profit = total_profit.checked_add(p).ok_or(CoverageError::CapacityOverflow)?;
            d.add_edge(s, node, p);
            for &a in ds {
                d.add_edge(node, agent_node(self.position(a)?), inf);
            }
        }
        for p in 0..n {
            d.add_edge(agent_node(p), t, cost);
        }
        let cut = d.max_flow(s, t);
        let chosen = match side {
            Side::Smallest => d.reachable_from(s),
            Side::Largest => d.reaching(t).into_iter().map(|r| !r).collect(),
        };
        let argmax = (0..n).filter(|&p| chosen[agent_node(p)]).map(|p| self.ground[p]).collect();
        let value = Q::new(BigInt::from(total_profit - cut), BigInt::from(profit));
        Ok(ExcessResult { value, argmax })
    }

    /// `max_X f(X) − β|X|` and the intersection of all maximizers.
    pub fn smallest_maximizer_excess(&self, beta: &Q) -> Result<ExcessResult, CoverageError> {
        self.maximize_excess(beta, Side::Smallest)
    }

    /// `max_X f(X) − β|X|` and the union of all maximizers.
    pub fn largest_maximizer_excess(&self, beta: &Q) -> Result<ExcessResult, CoverageError> {
        self.maximize_excess(beta, Side::Largest)
    }

    /// Dinkelbach iteration for `max f(X)/|X|` over non-empty `X ⊆ ground`.
    ///
    /// Panics on an empty ground set.
    pub fn max_density(&self) -> Result<Density, CoverageError> {
        assert!(!self.ground.is_empty(), "max_density needs a non-empty ground set");
        let mut witness = self.ground.clone();
        let mut lambda = Q::new(BigInt::from(self.total()), BigInt::from(witness.len()));
        loop {
            let r = self.smallest_maximizer_excess(&lambda)?;
            if r.value.is_zero() {
                return Ok(Density { value: lambda, witness });
            }
            // value > 0 forces a non-empty maximizer with larger density
            let fx = self.eval(&r.argmax)?;
            lambda = Q::new(BigInt::from(fx), BigInt::from(r.argmax.len()));
            witness = r.argmax;
        }
    }

    /// Minimum of `Σ cost_i y_i` over the base polytope
    /// `{y : y(ground) = f(ground), y(X) ≥ f(X)}`, by the greedy rule on the
    /// dual submodular function `X ↦ f(ground) − f(ground ∖ X)`. Ties in cost
    /// are broken by ground order. Returned in ground order.
    pub fn greedy_vertex(&self, costs: &[f64]) -> Vec<i64> {
        let n = self.ground.len();
        assert_eq!(costs.len(), n);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        let total = self.total() as i64;
        let mut outside = vec![true; n];
        let mut y = vec![0i64; n];
        // dual(prefix) = f(N) - f(N \ prefix)
        let mut prev = 0i64;
        for &p in &order {
            outside[p] = false;
            let rest: Vec<bool> = outside.clone();
            let cur = total - self.eval_mask(&rest) as i64;
            y[p] = cur - prev;
            prev = cur;
        }
        y
    }
}
