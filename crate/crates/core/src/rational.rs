//! Exact rational helpers on top of [`num_rational::BigRational`].

use alloc::string::String;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational used for every share, utility and threshold.
pub type Q = BigRational;

pub fn q(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qu(n: usize) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`. The result is reduced; a zero denominator is rejected.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).ok()?;
            let d = BigInt::from_str(d.trim()).ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Q::new(n, d))
        }
        None => BigInt::from_str(s).ok().map(Q::from_integer),
    }
}

/// Lowest-terms `"p/q"`, or `"p"` for integers.
pub fn format_rational(x: &Q) -> String {
    use alloc::string::ToString;
    x.to_string()
}

/// Least common multiple of the denominators (1 for an empty slice).
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// `x * scale` as an `i64`, when that product is an integer that fits.
pub fn scaled_i64(x: &Q, scale: &BigInt) -> Option<i64> {
    let y = x * Q::from_integer(scale.clone());
    if !y.is_integer() {
        return None;
    }
    y.to_integer().to_i64()
}

pub fn is_nonnegative(x: &Q) -> bool {
    !x.is_negative()
}

pub fn pow(x: &Q, p: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..p {
        acc *= x;
    }
    acc
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
