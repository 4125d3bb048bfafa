//! Exact comparators for the fairness objectives.
//!
//! Every comparison is in minimization orientation: `Ordering::Less` means the
//! first vector is the fairer one.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::instance::UtilityVector;
use crate::rational::{pow, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Σ u_i^p for an integer p ≥ 2.
    PowerSum(u32),
    /// Lexicographically smallest decreasingly sorted vector.
    DecMin,
    /// Lexicographically largest increasingly sorted vector.
    IncMax,
    /// Fewest zero utilities, then largest product of the positive ones.
    Nash,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectiveError {
    LengthMismatch { left: usize, right: usize },
    BadPower(String),
    Unknown(String),
}

impl fmt::Display for ObjectiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveError::LengthMismatch { left, right } => {
                write!(f, "cannot compare utility vectors of lengths {left} and {right}")
            }
            ObjectiveError::BadPower(p) => write!(f, "power must be an integer >= 2, got {p:?}"),
            ObjectiveError::Unknown(s) => write!(
                f,
                "unknown objective {s:?} (expected square-sum, power:<p>, dec-min, inc-max or nash)"
            ),
        }
    }
}

impl core::error::Error for ObjectiveError {}

impl Objective {
    pub const SQUARE_SUM: Objective = Objective::PowerSum(2);

    pub fn power_sum(p: u32) -> Result<Self, ObjectiveError> {
        if p < 2 {
            return Err(ObjectiveError::BadPower(alloc::format!("{p}")));
        }
        Ok(Objective::PowerSum(p))
    }

    pub fn compare(&self, u: &UtilityVector, v: &UtilityVector) -> Result<Ordering, ObjectiveError> {
        if u.len() != v.len() {
            return Err(ObjectiveError::LengthMismatch { left: u.len(), right: v.len() });
        }
        Ok(match *self {
            Objective::PowerSum(p) => evaluate_power_sum(u, p).cmp(&evaluate_power_sum(v, p)),
            Objective::DecMin => u.sorted_desc().cmp(&v.sorted_desc()),
            Objective::IncMax => v.sorted_asc().cmp(&u.sorted_asc()),
            Objective::Nash => {
                let (zu, pu) = nash_key(u);
                let (zv, pv) = nash_key(v);
                zu.cmp(&zv).then_with(|| pv.cmp(&pu))
            }
        })
    }

    /// Objective value for the power sums; `None` for comparator-only objectives.
    pub fn value(&self, u: &UtilityVector) -> Option<Q> {
        match *self {
            Objective::PowerSum(p) => Some(evaluate_power_sum(u, p)),
            _ => None,
        }
    }
}

/// Number of zero entries and the product of the positive ones.
pub fn nash_key(u: &UtilityVector) -> (usize, Q) {
    let zeros = u.values().iter().filter(|x| !x.is_positive()).count();
    let product = u
        .values()
        .iter()
        .filter(|x| x.is_positive())
        .fold(Q::one(), |acc, x| acc * x);
    (zeros, product)
}

pub fn evaluate_power_sum(u: &UtilityVector, p: u32) -> Q {
    u.values().iter().fold(Q::zero(), |acc, x| acc + pow(x, p))
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::PowerSum(2) => write!(f, "square-sum"),
            Objective::PowerSum(p) => write!(f, "power:{p}"),
            Objective::DecMin => write!(f, "dec-min"),
            Objective::IncMax => write!(f, "inc-max"),
            Objective::Nash => write!(f, "nash"),
        }
    }
}

impl FromStr for Objective {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "square-sum" => Ok(Objective::SQUARE_SUM),
            "dec-min" => Ok(Objective::DecMin),
            "inc-max" => Ok(Objective::IncMax),
            "nash" => Ok(Objective::Nash),
            _ => match s.strip_prefix("power:") {
                Some(p) => {
                    let p: u32 = p.parse().map_err(|_| ObjectiveError::BadPower(String::from(p)))?;
                    Objective::power_sum(p)
                }
                None => Err(ObjectiveError::Unknown(String::from(s))),
            },
        }
    }
}
