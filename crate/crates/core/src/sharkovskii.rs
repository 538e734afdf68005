//! The Sharkovskii order on the positive integers.
//!
//! ```text
//! 3 ◁ 5 ◁ 7 ◁ … ◁ 2·3 ◁ 2·5 ◁ … ◁ 2²·3 ◁ … ◁ 2³ ◁ 2² ◁ 2 ◁ 1
//! ```
//!
//! Every integer `n = 2^ℓ·m` with `m` odd is placed by its [`SharkovskiiKey`].
//! Numbers with an odd part `m > 1` come first, row by row (ascending `ℓ`, then
//! ascending `m`); the pure powers of two close the order in descending
//! exponent, so that `1` is the greatest element.
//!
//! The lifted comparator [`star_compare`] works on eventually periodic
//! sequences of positive integers and reports whether the set of indices at
//! which the order holds is cofinite, finite, or neither.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyper::{ClassVerdict, HyperInteger, Verdict};

/// Position of an integer in the order: `n = 2^ell · odd`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharkovskiiKey {
    pub ell: u32,
    pub odd: u64,
}

impl SharkovskiiKey {
    pub fn reconstruct(&self) -> u64 {
        self.odd << self.ell
    }

    pub fn is_power_of_two(&self) -> bool {
        self.odd == 1
    }
}

impl PartialOrd for SharkovskiiKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `Less` means "comes first in ◁".
impl Ord for SharkovskiiKey {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_power_of_two(), other.is_power_of_two()) {
            (false, false) => self.ell.cmp(&other.ell).then(self.odd.cmp(&other.odd)),
            (false, true) => Ordering::Less,
            (true, false) => Ordering::Greater,
            (true, true) => other.ell.cmp(&self.ell),
        }
    }
}

/// Splits `n` into its power-of-two exponent and odd part.
pub fn decompose(n: u64) -> Result<SharkovskiiKey> {
    if n == 0 {
        return Err(Error::InvalidArgument("0 has no place in the Sharkovskii order".into()));
    }
    let ell = n.trailing_zeros();
    Ok(SharkovskiiKey { ell, odd: n >> ell })
}

/// Outcome of comparing two integers under ◁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderVerdict {
    Before,
    Equal,
    After,
}

impl OrderVerdict {
    pub fn reverse(self) -> Self {
        match self {
            OrderVerdict::Before => OrderVerdict::After,
            OrderVerdict::Equal => OrderVerdict::Equal,
            OrderVerdict::After => OrderVerdict::Before,
        }
    }
}

impl From<Ordering> for OrderVerdict {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => OrderVerdict::Before,
            Ordering::Equal => OrderVerdict::Equal,
            Ordering::Greater => OrderVerdict::After,
        }
    }
}

impl fmt::Display for OrderVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderVerdict::Before => "before",
            OrderVerdict::Equal => "equal",
            OrderVerdict::After => "after",
        })
    }
}

/// Compares `p` and `q`: `Before` iff `p ◁ q`.
pub fn compare(p: u64, q: u64) -> Result<OrderVerdict> {
    Ok(decompose(p)?.cmp(&decompose(q)?).into())
}

/// `p ◁ q`, strict.
pub fn precedes(p: u64, q: u64) -> Result<bool> {
    Ok(compare(p, q)? == OrderVerdict::Before)
}

/// How [`forced_periods_sorted`] orders its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcedOrder {
    #[default]
    Numeric,
    Sharkovskii,
}

/// Every `q ≤ bound` with `p ◁ q`, ascending numerically.
pub fn forced_periods(p: u64, bound: u64) -> Result<Vec<u64>> {
    forced_periods_sorted(p, bound, ForcedOrder::Numeric)
}

pub fn forced_periods_sorted(p: u64, bound: u64, order: ForcedOrder) -> Result<Vec<u64>> {
    if bound == 0 {
        return Err(Error::InvalidArgument("bound must be at least 1".into()));
    }
    let key = decompose(p)?;
    let mut out: Vec<u64> = (1..=bound)
        .filter(|&q| key < decompose(q).expect("q >= 1"))
        .collect();
    if order == ForcedOrder::Sharkovskii {
        sort_by_order(&mut out);
    }
    Ok(out)
}

/// Sorts positive integers along ◁. Panics on zero entries.
pub fn sort_by_order(values: &mut [u64]) {
    values.sort_by_key(|&v| decompose(v).expect("positive integer"));
}

/// The integers `1..=max` listed in ◁ order.
pub fn chain(max: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (1..=max).collect();
    sort_by_order(&mut v);
    v
}

/// Lifted order on hyperintegers: is `{n : Rₙ ◁ Sₙ}` big?
///
/// Cofinite index sets give `Holds`, finite ones `Fails`, and anything else
/// depends on the ultrafilter, which is never constructed.
pub fn star_compare(r: &HyperInteger, s: &HyperInteger) -> Result<Verdict> {
    if r.entries_iter().chain(s.entries_iter()).any(|&v| v == 0) {
        return Err(Error::InvalidArgument(
            "hyperintegers compared under ◁ must have positive entries".into(),
        ));
    }
    let set = r.index_set(s, |&a, &b| decompose(a).unwrap() < decompose(b).unwrap());
    Ok(match set {
        ClassVerdict::Big => Verdict::Holds,
        ClassVerdict::Small => Verdict::Fails,
        ClassVerdict::Undetermined => Verdict::UltrafilterDependent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose(12).unwrap(), SharkovskiiKey { ell: 2, odd: 3 });
        assert_eq!(decompose(1).unwrap(), SharkovskiiKey { ell: 0, odd: 1 });
        assert_eq!(decompose(96).unwrap(), SharkovskiiKey { ell: 5, odd: 3 });
        assert!(decompose(0).is_err());
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare(3, 5).unwrap(), OrderVerdict::Before);
        assert_eq!(compare(8, 4).unwrap(), OrderVerdict::Before);
        assert_eq!(compare(3, 6).unwrap(), OrderVerdict::Before);
        assert_eq!(compare(7, 7).unwrap(), OrderVerdict::Equal);
        assert_eq!(compare(2, 1).unwrap(), OrderVerdict::Before);
        assert_eq!(compare(1, 2).unwrap(), OrderVerdict::After);
        assert!(compare(0, 3).is_err());
    }

    #[test]
    fn forced_examples() {
        assert_eq!(forced_periods(3, 10).unwrap(), vec![1, 2, 4, 5, 6, 7, 8, 9, 10]);
        assert!(forced_periods(1, 10).unwrap().is_empty());
        assert_eq!(forced_periods(4, 10).unwrap(), vec![1, 2]);
        assert_eq!(
            forced_periods_sorted(6, 12, ForcedOrder::Sharkovskii).unwrap(),
            vec![10, 12, 8, 4, 2, 1]
        );
        assert!(forced_periods(3, 0).is_err());
    }

    #[test]
    fn chain_prefix() {
        assert_eq!(chain(12), vec![3, 5, 7, 9, 11, 6, 10, 12, 8, 4, 2, 1]);
    }

    #[test]
    fn star_compare_examples() {
        let c = HyperInteger::constant;
        assert_eq!(star_compare(&c(3), &c(5)).unwrap(), Verdict::Holds);
        assert_eq!(star_compare(&c(7), &c(7)).unwrap(), Verdict::Fails);
        let alt = HyperInteger::new(vec![], vec![3, 4]).unwrap();
        assert_eq!(star_compare(&alt, &c(5)).unwrap(), Verdict::UltrafilterDependent);
        // a finite exception in the prefix does not matter
        let r = HyperInteger::new(vec![5, 5], vec![3]).unwrap();
        assert_eq!(star_compare(&r, &c(5)).unwrap(), Verdict::Holds);
        let zero = HyperInteger::new(vec![0], vec![3]).unwrap();
        assert!(star_compare(&zero, &c(5)).is_err());
    }
}
