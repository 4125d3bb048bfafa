//! Exhaustive reference computations on bitmasks. Nothing here calls the
//! flow, cut or partition code of the library.
#![allow(dead_code)]

use mixfair_core::rational::{qi, qu, Q};
use mixfair_core::{CoverageFn, Instance};

/// Desire sets as bitmasks over agents `0..n`.
#[derive(Debug, Clone)]
pub struct Masks {
    pub n: usize,
    pub items: Vec<u32>,
}

impl Masks {
    pub fn new(n: usize, items: Vec<u32>) -> Self {
        Masks { n, items }
    }

    pub fn from_sets(n: usize, sets: &[Vec<usize>]) -> Self {
        Masks { n, items: sets.iter().map(|d| d.iter().fold(0, |m, &a| m | 1 << a)).collect() }
    }

    pub fn sets(&self) -> Vec<Vec<usize>> {
        self.items.iter().map(|&m| members(m)).collect()
    }

    pub fn coverage(&self) -> CoverageFn {
        CoverageFn::new((0..self.n).collect(), self.sets()).unwrap()
    }

    pub fn full(&self) -> u32 {
        (1u32 << self.n) - 1
    }

    pub fn f(&self, x: u32) -> i64 {
        self.items.iter().filter(|&&d| d & !x == 0).count() as i64
    }

    /// `f(X ∪ S) − f(S)` for `X` disjoint from `S`.
    pub fn contracted(&self, x: u32, s: u32) -> i64 {
        self.f(x | s) - self.f(s)
    }
}

pub fn members(m: u32) -> Vec<usize> {
    (0..32).filter(|b| m >> b & 1 == 1).collect()
}

pub fn mask(set: &[usize]) -> u32 {
    set.iter().fold(0, |m, &a| m | 1 << a)
}

fn subsets(of: u32) -> impl Iterator<Item = u32> {
    // every submask, including 0
    let mut cur = Some(of);
    std::iter::from_fn(move || {
        let x = cur?;
        cur = if x == 0 { None } else { Some((x - 1) & of) };
        Some(x)
    })
}

/// Maximum of `g(X)/|X|` over non-empty `X ⊆ rest`, `g` contracted by `done`.
pub fn max_density(m: &Masks, rest: u32, done: u32) -> Q {
    subsets(rest)
        .filter(|&x| x != 0)
        .map(|x| Q::new(m.contracted(x, done).into(), (x.count_ones() as i64).into()))
        .max()
        .unwrap()
}

/// All maximizers of `g(X) − β|X|` over `X ⊆ rest`.
pub fn maximizers(m: &Masks, rest: u32, done: u32, beta: &Q) -> (Q, Vec<u32>) {
    let val = |x: u32| qi(m.contracted(x, done)) - beta * qu(x.count_ones() as usize);
    let best = subsets(rest).map(val).max().unwrap();
    let arg = subsets(rest).filter(|&x| val(x) == best).collect();
    (best, arg)
}

/// Canonical partition by definition: β = ⌈max density⌉ and the block is the
/// inclusion-minimal maximizer of `g(X) − (β−1)|X|`, checked to be the
/// intersection of all maximizers.
pub fn canonical(m: &Masks) -> (Vec<u32>, Vec<i64>) {
    let mut done = 0u32;
    let mut blocks = Vec::new();
    let mut betas = Vec::new();
    while done != m.full() {
        let rest = m.full() & !done;
        let beta = max_density(m, rest, done).ceil().to_integer();
        let beta = i64::try_from(beta).unwrap();
        let (_, arg) = maximizers(m, rest, done, &qi(beta - 1));
        let meet = arg.iter().fold(rest, |a, &b| a & b);
        assert!(arg.contains(&meet), "maximizers are closed under intersection");
        assert_ne!(meet, 0);
        blocks.push(meet);
        betas.push(beta);
        done |= meet;
    }
    (blocks, betas)
}

/// Principal partition by definition: λ = max density, block = union of all
/// maximizers of `g(X) − λ|X|`.
pub fn principal(m: &Masks) -> (Vec<u32>, Vec<Q>) {
    let mut done = 0u32;
    let mut blocks = Vec::new();
    let mut lambdas = Vec::new();
    while done != m.full() {
        let rest = m.full() & !done;
        let lambda = max_density(m, rest, done);
        let (_, arg) = maximizers(m, rest, done, &lambda);
        let join = arg.iter().fold(0, |a, &b| a | b);
        assert!(arg.contains(&join), "maximizers are closed under union");
        blocks.push(join);
        lambdas.push(lambda);
        done |= join;
    }
    (blocks, lambdas)
}

/// Every `(k, ℓ, β)` for which a 0/1 assignment of `goods` (desire masks)
/// meets: at most `k` plus agents at β, plus agents at most β, ℓ goods to
/// plus agents, minus agents at β−1 or β. Goods only go to block agents.
pub fn feasible_triples(plus: &[usize], minus: &[usize], goods: &[Vec<usize>], max_beta: usize) -> std::collections::BTreeSet<(usize, usize, usize)> {
    let block: Vec<usize> = plus.iter().chain(minus).copied().collect();
    let choices: Vec<Vec<usize>> =
        goods.iter().map(|d| d.iter().copied().filter(|a| block.contains(a)).collect()).collect();
    let mut out = std::collections::BTreeSet::new();
    if choices.iter().any(|c| c.is_empty()) {
        return out;
    }
    let mut idx = vec![0usize; goods.len()];
    loop {
        let mut count = std::collections::BTreeMap::new();
        for (g, &i) in idx.iter().enumerate() {
            *count.entry(choices[g][i]).or_insert(0usize) += 1;
        }
        let c = |a: &usize| count.get(a).copied().unwrap_or(0);
        let l: usize = plus.iter().map(c).sum();
        for beta in 1..=max_beta {
            if plus.iter().any(|a| c(a) > beta) {
                continue;
            }
            if minus.iter().any(|a| c(a) + 1 < beta || c(a) > beta) {
                continue;
            }
            let at_beta = plus.iter().filter(|a| c(a) == beta).count();
            for k in at_beta..=plus.len() {
                out.insert((k, l, beta));
            }
        }
        let mut p = goods.len();
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < choices[p].len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// Instance with all goods of both kinds given as masks.
pub fn instance(n: usize, indivisible: &[u32], divisible: &[u32]) -> Instance {
    Instance::new(n, indivisible.iter().map(|&m| members(m)).collect(), divisible.iter().map(|&m| members(m)).collect())
        .unwrap()
}
