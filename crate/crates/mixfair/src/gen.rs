//! Seeded random instances. Every desire set is drawn uniformly from the
//! non-empty subsets of the agents.

use mixfair_core::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shape of a random instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub agents: usize,
    pub indivisible: usize,
    pub divisible: usize,
    /// All divisible goods share one desire set.
    pub identical_divisible: bool,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Agents of a uniformly random non-empty subset of `0..n` (n ≤ 63), sorted.
pub fn random_desire_set<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    assert!((1..64).contains(&n), "desire sets are drawn for 1..=63 agents");
    let mask: u64 = rng.gen_range(1..1u64 << n);
    (0..n).filter(|a| mask >> a & 1 == 1).collect()
}

pub fn random_instance<R: Rng>(rng: &mut R, spec: &RandomSpec) -> Instance {
    let indivisible = (0..spec.indivisible).map(|_| random_desire_set(rng, spec.agents)).collect();
    let divisible = if spec.identical_divisible && spec.divisible > 0 {
        vec![random_desire_set(rng, spec.agents); spec.divisible]
    } else {
        (0..spec.divisible).map(|_| random_desire_set(rng, spec.agents)).collect()
    };
    Instance::new(spec.agents, indivisible, divisible).expect("generated desire sets are valid")
}

/// An instance whose sizes are drawn uniformly from `1..=max` per field.
pub fn random_small_instance<R: Rng>(
    rng: &mut R,
    max_agents: usize,
    max_indivisible: usize,
    max_divisible: usize,
    identical_divisible: bool,
) -> Instance {
    let spec = RandomSpec {
        agents: rng.gen_range(1..=max_agents),
        indivisible: rng.gen_range(1..=max_indivisible),
        divisible: rng.gen_range(1..=max_divisible),
        identical_divisible,
    };
    random_instance(rng, &spec)
}
