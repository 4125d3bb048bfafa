//! Fair allocation of mixed divisible and indivisible goods under binary
//! valuations.
//!
//! The crate is `no_std` (it needs `alloc`) and keeps every share, utility and
//! threshold as an exact rational. The main entry points are
//! [`solver::solve`] for instances whose divisible goods are identical (or
//! pure instances), [`partition`] for the canonical and principal partitions,
//! and [`oracle`] for exhaustive desk-scale ground truth and the hardness
//! instance generators.
//!
//! Agents and goods are 0-based indices in input order.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod flow;
pub mod instance;
pub mod objective;
pub mod oracle;
pub mod partition;
pub mod polymatroid;
pub mod rational;
pub mod solver;

pub use instance::{Allocation, GoodId, GoodKind, Instance, UtilityVector};
pub use objective::Objective;
pub use polymatroid::CoverageFn;
pub use rational::Q;
