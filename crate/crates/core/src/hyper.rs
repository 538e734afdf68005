//! Sequence-quotient numbers on a decidable fragment.
//!
//! A hyperreal is the class of a real sequence modulo agreement on a big set of
//! indices. The free ultrafilter deciding which sets are big cannot be written
//! down, so this module restricts itself to sequences given by a finite prefix
//! followed by a repeating cycle. Any index set defined pointwise from such
//! sequences is itself eventually periodic, hence either finite (small in every
//! ultrafilter), cofinite (big in every ultrafilter), or neither. The last case
//! is reported as undetermined instead of picking a side, so every verdict the
//! module returns is true in every model.
//!
//! Indices are 1-based: `entry(1)` is the first term.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether an index set is big.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassVerdict {
    /// Cofinite.
    Big,
    /// Finite.
    Small,
    /// Infinite and co-infinite.
    Undetermined,
}

impl ClassVerdict {
    pub fn complement(self) -> Self {
        match self {
            ClassVerdict::Big => ClassVerdict::Small,
            ClassVerdict::Small => ClassVerdict::Big,
            ClassVerdict::Undetermined => ClassVerdict::Undetermined,
        }
    }
}

/// Three-valued truth of a statement about classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    UltrafilterDependent,
}

impl From<ClassVerdict> for Verdict {
    fn from(c: ClassVerdict) -> Self {
        match c {
            ClassVerdict::Big => Verdict::Holds,
            ClassVerdict::Small => Verdict::Fails,
            ClassVerdict::Undetermined => Verdict::UltrafilterDependent,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::UltrafilterDependent => "ultrafilter-dependent",
        })
    }
}

/// View of the repeating part of a [`Sequence`].
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule<T> {
    Constant(T),
    Cycle(Vec<T>),
}

/// An eventually periodic sequence, read as the class it represents.
///
/// The stored form is normalized: the cycle has minimal length and the prefix
/// does not end with a term the cycle could absorb. Two sequences represent the
/// same class exactly when they agree on a cofinite set, which
/// [`Sequence::class_eq`] decides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence<T> {
    prefix: Vec<T>,
    cycle: Vec<T>,
}

/// Real-valued classes.
pub type HyperNumber = Sequence<f64>;
/// Integer-valued classes, the carrier for return-time sequences.
pub type HyperInteger = Sequence<u64>;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

impl<T: Clone + PartialEq> Sequence<T> {
    pub fn new(prefix: Vec<T>, cycle: Vec<T>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidArgument("tail cycle must be nonempty".into()));
        }
        let mut s = Sequence { prefix, cycle };
        s.normalize();
        Ok(s)
    }

    pub fn constant(value: T) -> Self {
        Sequence { prefix: Vec::new(), cycle: vec![value] }
    }

    fn normalize(&mut self) {
        let len = self.cycle.len();
        if let Some(p) = (1..len).find(|&p| {
            len.is_multiple_of(p) && (p..len).all(|i| self.cycle[i] == self.cycle[i - p])
        }) {
            self.cycle.truncate(p);
        }
        while let Some(last) = self.prefix.last() {
            if *last != *self.cycle.last().unwrap() {
                break;
            }
            self.prefix.pop();
            self.cycle.rotate_right(1);
        }
    }

    pub fn prefix(&self) -> &[T] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[T] {
        &self.cycle
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    pub fn tail_rule(&self) -> TailRule<T> {
        if self.cycle.len() == 1 {
            TailRule::Constant(self.cycle[0].clone())
        } else {
            TailRule::Cycle(self.cycle.clone())
        }
    }

    /// The `n`-th term, 1-based. Panics when `n == 0`.
    pub fn entry(&self, n: usize) -> T {
        assert!(n >= 1, "sequence indices start at 1");
        let i = n - 1;
        if i < self.prefix.len() {
            self.prefix[i].clone()
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()].clone()
        }
    }

    /// All stored terms (prefix then one cycle).
    pub fn entries_iter(&self) -> impl Iterator<Item = &T> {
        self.prefix.iter().chain(self.cycle.iter())
    }

    /// Start index and length of a window on which both sequences are periodic
    /// with a common period.
    fn joint_window<U>(&self, other: &Sequence<U>) -> (usize, usize) {
        let start = self.prefix.len().max(other.prefix.len()) + 1;
        (start, lcm(self.cycle.len(), other.cycle.len()))
    }

    /// Decides whether `{n : pred(xₙ, yₙ)}` is big.
    pub fn index_set<U, F>(&self, other: &Sequence<U>, pred: F) -> ClassVerdict
    where
        U: Clone + PartialEq,
        F: Fn(&T, &U) -> bool,
    {
        let (start, len) = self.joint_window(other);
        let hits = (start..start + len)
            .filter(|&n| pred(&self.entry(n), &other.entry(n)))
            .count();
        match hits {
            0 => ClassVerdict::Small,
            h if h == len => ClassVerdict::Big,
            _ => ClassVerdict::Undetermined,
        }
    }

    /// Decides whether `{n : pred(xₙ)}` is big.
    pub fn index_set_unary<F: Fn(&T) -> bool>(&self, pred: F) -> ClassVerdict {
        let hits = self.cycle.iter().filter(|v| pred(v)).count();
        match hits {
            0 => ClassVerdict::Small,
            h if h == self.cycle.len() => ClassVerdict::Big,
            _ => ClassVerdict::Undetermined,
        }
    }

    /// Pointwise combination; the result's cycle length divides the lcm of the
    /// operand periods.
    pub fn zip_with<U, V, F>(&self, other: &Sequence<U>, op: F) -> Sequence<V>
    where
        U: Clone + PartialEq,
        V: Clone + PartialEq,
        F: Fn(&T, &U) -> V,
    {
        let (start, len) = self.joint_window(other);
        let prefix = (1..start).map(|n| op(&self.entry(n), &other.entry(n))).collect();
        let cycle = (start..start + len)
            .map(|n| op(&self.entry(n), &other.entry(n)))
            .collect();
        let mut s = Sequence { prefix, cycle };
        s.normalize();
        s
    }

    pub fn map<V: Clone + PartialEq, F: Fn(&T) -> V>(&self, op: F) -> Sequence<V> {
        let mut s = Sequence {
            prefix: self.prefix.iter().map(&op).collect(),
            cycle: self.cycle.iter().map(&op).collect(),
        };
        s.normalize();
        s
    }

    /// Equality of classes: agreement on a cofinite set.
    pub fn class_eq(&self, other: &Self) -> bool {
        self.index_set(other, |a, b| a == b) == ClassVerdict::Big
    }
}

impl HyperNumber {
    /// Like [`Sequence::new`] but rejects non-finite terms.
    pub fn real(prefix: Vec<f64>, cycle: Vec<f64>) -> Result<Self> {
        if prefix.iter().chain(cycle.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("hypernumber terms must be finite".into()));
        }
        Sequence::new(prefix, cycle)
    }

    /// Strict order `x ≺ y`.
    pub fn less(&self, other: &Self) -> Verdict {
        self.index_set(other, |a, b| a < b).into()
    }

    /// Weak order `x ⪯ y`.
    pub fn less_eq(&self, other: &Self) -> Verdict {
        self.index_set(other, |a, b| a <= b).into()
    }

    /// Multiplicative inverse, defined when every term is nonzero.
    pub fn reciprocal(&self) -> Result<Self> {
        if self.entries_iter().any(|&v| v == 0.0) {
            return Err(Error::InvalidArgument("reciprocal needs nowhere-zero terms".into()));
        }
        Ok(self.map(|v| 1.0 / v))
    }

    pub fn classify(&self) -> Magnitude {
        // Bounded tails never produce unlimited classes.
        match self.index_set_unary(|&v| v == 0.0) {
            ClassVerdict::Big => Magnitude::Infinitesimal,
            ClassVerdict::Small => Magnitude::LimitedNonInfinitesimal,
            ClassVerdict::Undetermined => Magnitude::NotClassifiable,
        }
    }

    /// The standard part of a limited class with constant tail.
    pub fn shadow(&self) -> Result<f64> {
        match self.tail_rule() {
            TailRule::Constant(v) => Ok(v),
            TailRule::Cycle(c) => Err(Error::NoShadow(format!(
                "tail cycle {c:?} has {} accumulation values",
                c.len()
            ))),
        }
    }

    /// `x ≈ y`: is `x − y` infinitesimal?
    pub fn infinitely_close(&self, other: &Self) -> Verdict {
        match (self - other).classify() {
            Magnitude::Infinitesimal => Verdict::Holds,
            Magnitude::LimitedNonInfinitesimal | Magnitude::Unlimited => Verdict::Fails,
            Magnitude::NotClassifiable => Verdict::UltrafilterDependent,
        }
    }
}

impl HyperInteger {
    /// Converts a real class whose terms are all positive integers.
    pub fn from_real(x: &HyperNumber) -> Result<Self> {
        let conv = |v: &f64| -> Result<u64> {
            if *v >= 1.0 && v.fract() == 0.0 && *v <= u64::MAX as f64 {
                Ok(*v as u64)
            } else {
                Err(Error::InvalidArgument(format!(
                    "{v} is not a positive integer"
                )))
            }
        };
        let prefix = x.prefix().iter().map(conv).collect::<Result<Vec<_>>>()?;
        let cycle = x.cycle().iter().map(conv).collect::<Result<Vec<_>>>()?;
        Sequence::new(prefix, cycle)
    }
}

/// Size class of a hyperreal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Magnitude {
    Infinitesimal,
    LimitedNonInfinitesimal,
    Unlimited,
    NotClassifiable,
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Magnitude::Infinitesimal => "infinitesimal",
            Magnitude::LimitedNonInfinitesimal => "limited-non-infinitesimal",
            Magnitude::Unlimited => "unlimited",
            Magnitude::NotClassifiable => "not-classifiable",
        })
    }
}

macro_rules! pointwise_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&HyperNumber> for &HyperNumber {
            type Output = HyperNumber;
            fn $method(self, rhs: &HyperNumber) -> HyperNumber {
                self.zip_with(rhs, |a, b| a $op b)
            }
        }

        impl $trait for HyperNumber {
            type Output = HyperNumber;
            fn $method(self, rhs: HyperNumber) -> HyperNumber {
                (&self).$method(&rhs)
            }
        }
    };
}

pointwise_op!(Add, add, +);
pointwise_op!(Sub, sub, -);
pointwise_op!(Mul, mul, *);

impl Neg for &HyperNumber {
    type Output = HyperNumber;
    fn neg(self) -> HyperNumber {
        self.map(|v| -v)
    }
}

impl<T: fmt::Display> fmt::Display for Sequence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[T]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "prefix=[{}];cycle=[{}]", join(&self.prefix), join(&self.cycle))
    }
}

fn parse_list<T: FromStr>(field: &str, name: &str) -> Result<Vec<T>> {
    let body = field
        .trim()
        .strip_prefix(name)
        .and_then(|r| r.trim_start().strip_prefix('='))
        .map(str::trim)
        .and_then(|r| r.strip_prefix('['))
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected `{name}=[...]`, got `{field}`")))?;
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| Error::Parse(format!("bad {name} term `{}`", t.trim())))
        })
        .collect()
}

fn parse_sequence<T: FromStr + Clone + PartialEq>(s: &str) -> Result<Sequence<T>> {
    let (p, c) = s
        .trim()
        .split_once(';')
        .ok_or_else(|| Error::Parse("expected `prefix=[...];cycle=[...]`".into()))?;
    Sequence::new(parse_list(p, "prefix")?, parse_list(c, "cycle")?)
}

impl FromStr for HyperNumber {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let seq: HyperNumber = parse_sequence(s)?;
        HyperNumber::real(seq.prefix, seq.cycle)
    }
}

impl FromStr for HyperInteger {
    type Err = Error;
    /// Accepts integral decimals such as `3` or `3.0`.
    fn from_str(s: &str) -> Result<Self> {
        HyperInteger::from_real(&s.parse::<HyperNumber>()?)
    }
}
