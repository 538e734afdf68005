//! Continuous piecewise-linear maps on a closed interval.
//!
//! Every map in the toolkit is carried by a [`PiecewiseLinearMap`]: breakpoint
//! abscissae and the ordinates there, interpolated linearly in between. The
//! class is closed under composition and under adding bump functions, and the
//! difference of two such maps is again piecewise linear, so sup-norms,
//! interval images, and extremes can all be read off breakpoints instead of
//! being sampled.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance for class-equality of maps and for rounding at domain edges.
pub const TAU_EQ: f64 = 1e-12;

/// Breakpoint budget for [`PiecewiseLinearMap::compose`] and friends.
pub const MAX_NODES: usize = 1 << 21;

/// Closed interval `[lo, hi]`; `lo == hi` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidArgument(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Closed hull of two points, in either order.
    pub fn hull(a: f64, b: f64) -> Self {
        Interval { lo: a.min(b), hi: a.max(b) }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// The open interval `(center − radius, center + radius)`, stored by its
    /// endpoints.
    pub fn ball(center: f64, radius: f64) -> Self {
        Interval { lo: center - radius, hi: center + radius }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Membership in the interior `(lo, hi)`.
    pub fn contains_open(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Does this closed interval meet the interior of `open`?
    pub fn meets_open(&self, open: &Interval) -> bool {
        self.hi > open.lo && self.lo < open.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A finite union of disjoint closed intervals, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    components: Vec<Interval>,
}

impl IntervalSet {
    /// Builds the union, merging overlapping or touching pieces.
    pub fn from_intervals(mut pieces: Vec<Interval>) -> Self {
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut components: Vec<Interval> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match components.last_mut() {
                Some(last) if p.lo <= last.hi => last.hi = last.hi.max(p.hi),
                _ => components.push(p),
            }
        }
        IntervalSet { components }
    }

    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|c| c.contains(x))
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Exact continuous piecewise-linear map on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearMap {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearMap {
    /// Checks that there are at least two nodes, strictly increasing, with
    /// matching finite ordinates.
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument("a map needs at least two nodes".into()));
        }
        if nodes.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("nodes and values must be finite".into()));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("nodes must be strictly increasing".into()));
        }
        Ok(PiecewiseLinearMap { nodes, values })
    }

    /// Like [`new`](Self::new), also checking the stated domain.
    pub fn with_domain(domain: Interval, nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let m = Self::new(nodes, values)?;
        if m.domain() != domain {
            return Err(Error::InvalidArgument(format!(
                "nodes span {} but the domain is {}",
                m.domain(),
                domain
            )));
        }
        Ok(m)
    }

    pub fn identity(domain: Interval) -> Result<Self> {
        Self::new(vec![domain.lo, domain.hi], vec![domain.lo, domain.hi])
    }

    pub fn constant(domain: Interval, value: f64) -> Result<Self> {
        Self::new(vec![domain.lo, domain.hi], vec![value, value])
    }

    /// The full tent `x ↦ 1 − |1 − 2x|` on `[0, 1]`.
    pub fn tent() -> Self {
        Self::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).expect("valid tent")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn domain(&self) -> Interval {
        Interval { lo: self.nodes[0], hi: *self.nodes.last().unwrap() }
    }

    /// Range over the whole domain.
    pub fn range(&self) -> Interval {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }

    /// Largest absolute slope over the segments.
    pub fn lipschitz(&self) -> f64 {
        (0..self.segments())
            .map(|i| self.slope(i).abs())
            .fold(0.0, f64::max)
    }

    fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.nodes[i + 1] - self.nodes[i])
    }

    fn locate(&self, x: f64) -> Result<f64> {
        let d = self.domain();
        if x >= d.lo && x <= d.hi {
            Ok(x)
        } else if x >= d.lo - TAU_EQ && x <= d.hi + TAU_EQ {
            Ok(x.clamp(d.lo, d.hi))
        } else {
            Err(Error::Domain { x, a: d.lo, b: d.hi })
        }
    }

    /// Evaluates by linear interpolation. Arguments within [`TAU_EQ`] of the
    /// domain are snapped onto it; anything further out is a domain error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let x = self.locate(x)?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        // first node strictly greater than x
        let j = self.nodes.partition_point(|&n| n <= x);
        if j == 0 {
            return self.values[0];
        }
        let i = j - 1;
        if self.nodes[i] == x || i + 1 == self.nodes.len() {
            return self.values[i];
        }
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
    }

    /// `f^k(x)` by pointwise iteration. The orbit must stay in the domain.
    pub fn iterate(&self, k: usize, x: f64) -> Result<f64> {
        let mut y = self.locate(x)?;
        for step in 1..=k {
            y = self.eval_unchecked(y);
            y = self.locate(y).map_err(|_| self.escape(y, step))?;
        }
        Ok(y)
    }

    /// The orbit `x, f(x), …, f^k(x)`.
    pub fn orbit(&self, k: usize, x: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(k + 1);
        let mut y = self.locate(x)?;
        out.push(y);
        for step in 1..=k {
            y = self.eval_unchecked(y);
            y = self.locate(y).map_err(|_| self.escape(y, step))?;
            out.push(y);
        }
        Ok(out)
    }

    fn escape(&self, point: f64, step: usize) -> Error {
        let d = self.domain();
        Error::Invariance { point, step, a: d.lo, b: d.hi }
    }

    fn check_self_map(&self, step: usize) -> Result<()> {
        let (r, d) = (self.range(), self.domain());
        if r.lo < d.lo - TAU_EQ {
            return Err(self.escape(r.lo, step));
        }
        if r.hi > d.hi + TAU_EQ {
            return Err(self.escape(r.hi, step));
        }
        Ok(())
    }

    /// `outer ∘ inner`. The range of `inner` must lie in the domain of `outer`.
    ///
    /// Breakpoints of the result are the breakpoints of `inner` together with
    /// the preimages under `inner` of the breakpoints of `outer`.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        let d = outer.domain();
        let r = inner.range();
        if r.lo < d.lo - TAU_EQ || r.hi > d.hi + TAU_EQ {
            let point = if r.lo < d.lo - TAU_EQ { r.lo } else { r.hi };
            return Err(Error::Invariance { point, step: 1, a: d.lo, b: d.hi });
        }
        let mut nodes = Vec::with_capacity(inner.nodes.len() * 2);
        let mut values = Vec::with_capacity(inner.nodes.len() * 2);
        let push = |x: f64, y: f64, nodes: &mut Vec<f64>, values: &mut Vec<f64>| {
            if nodes.last().is_none_or(|&l| x > l) {
                nodes.push(x);
                values.push(y);
            }
        };
        for i in 0..inner.segments() {
            let (x0, x1) = (inner.nodes[i], inner.nodes[i + 1]);
            let (v0, v1) = (inner.values[i], inner.values[i + 1]);
            push(x0, outer.eval_unchecked(v0.clamp(d.lo, d.hi)), &mut nodes, &mut values);
            if v0 == v1 {
                continue;
            }
            // outer breakpoints strictly between v0 and v1
            let (lo, hi) = (v0.min(v1), v0.max(v1));
            let start = outer.nodes.partition_point(|&u| u <= lo);
            let end = outer.nodes.partition_point(|&u| u < hi);
            let crossings = start..end;
            let emit = |j: usize, nodes: &mut Vec<f64>, values: &mut Vec<f64>| {
                let u = outer.nodes[j];
                let x = x0 + (u - v0) / (v1 - v0) * (x1 - x0);
                if x > x0 && x < x1 {
                    push(x, outer.values[j], nodes, values);
                }
            };
            if v1 > v0 {
                crossings.for_each(|j| emit(j, &mut nodes, &mut values));
            } else {
                crossings.rev().for_each(|j| emit(j, &mut nodes, &mut values));
            }
            if nodes.len() > MAX_NODES {
                return Err(Error::TooManyNodes { limit: MAX_NODES });
            }
        }
        let last = inner.nodes.len() - 1;
        push(
            inner.nodes[last],
            outer.eval_unchecked(inner.values[last].clamp(d.lo, d.hi)),
            &mut nodes,
            &mut values,
        );
        Self::new(nodes, values)
    }

    /// `f^k` as a map; `f^0` is the identity. Requires `f([a,b]) ⊆ [a,b]`.
    pub fn iterate_map(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Self::identity(self.domain());
        }
        self.check_self_map(1)?;
        let mut acc = self.clone();
        for _ in 1..k {
            acc = Self::compose(self, &acc)?;
        }
        Ok(acc)
    }

    /// Sorted union of both node sets. Domains must coincide.
    fn merged_nodes(&self, other: &Self) -> Result<Vec<f64>> {
        let (d, e) = (self.domain(), other.domain());
        if (d.lo - e.lo).abs() > TAU_EQ || (d.hi - e.hi).abs() > TAU_EQ {
            return Err(Error::DomainMismatch(d.lo, d.hi, e.lo, e.hi));
        }
        let mut merged: Vec<f64> = Vec::with_capacity(self.nodes.len() + other.nodes.len());
        let (mut i, mut j) = (0, 0);
        while i < self.nodes.len() || j < other.nodes.len() {
            let next = match (self.nodes.get(i), other.nodes.get(j)) {
                (Some(&a), Some(&b)) if a <= b => {
                    i += 1;
                    if a == b {
                        j += 1;
                    }
                    a
                }
                (Some(_), Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            if merged.last().is_none_or(|&l| next > l) {
                merged.push(next);
            }
        }
        Ok(merged)
    }

    /// Pointwise combination `op(f(x), g(x))` for an operation that is affine
    /// in each argument, so the result is again piecewise linear on the merged
    /// breakpoints.
    pub fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let nodes = self.merged_nodes(other)?;
        let values = nodes
            .iter()
            .map(|&x| op(self.eval_unchecked(x), other.eval_unchecked(x)))
            .collect();
        Self::new(nodes, values)
    }

    /// Uniform distance `max |f − g|` over the common domain, attained at a
    /// merged breakpoint.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sup_distance_at(other)?.0)
    }

    /// Uniform distance together with a point where it is attained.
    pub fn sup_distance_at(&self, other: &Self) -> Result<(f64, f64)> {
        let nodes = self.merged_nodes(other)?;
        Ok(nodes
            .iter()
            .map(|&x| ((self.eval_unchecked(x) - other.eval_unchecked(x)).abs(), x))
            .fold((0.0, nodes[0]), |best, cur| if cur.0 > best.0 { cur } else { best }))
    }

    /// Equality as functions, up to [`TAU_EQ`].
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.sup_distance(other).is_ok_and(|d| d <= TAU_EQ)
    }

    /// A gap `η` with `|x − y| < η ⇒ |f(x) − f(y)| < τ/2`: `τ / (2L)` for
    /// Lipschitz constant `L`, and `τ/2` for constant maps.
    pub fn modulus_of_continuity(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        let l = self.lipschitz();
        Ok(if l == 0.0 { tau / 2.0 } else { tau / (2.0 * l) })
    }

    /// Exact image of a closed interval inside the domain.
    pub fn image(&self, interval: Interval) -> Result<Interval> {
        let lo = self.locate(interval.lo)?;
        let hi = self.locate(interval.hi)?;
        let (mut min, mut max) = {
            let (a, b) = (self.eval_unchecked(lo), self.eval_unchecked(hi));
            (a.min(b), a.max(b))
        };
        let start = self.nodes.partition_point(|&n| n <= lo);
        let end = self.nodes.partition_point(|&n| n < hi);
        for &v in &self.values[start..end.max(start)] {
            min = min.min(v);
            max = max.max(v);
        }
        Ok(Interval { lo: min, hi: max })
    }

    /// `f^k(I)`; every intermediate image must stay in the domain.
    pub fn image_iter(&self, k: usize, interval: Interval) -> Result<Interval> {
        let mut cur = Interval { lo: self.locate(interval.lo)?, hi: self.locate(interval.hi)? };
        for step in 1..=k {
            cur = self.image(cur)?;
            cur = self.snap_into_domain(cur, step)?;
        }
        Ok(cur)
    }

    /// All images `f(I), f²(I), …, f^k(I)`.
    pub fn image_orbit(&self, k: usize, interval: Interval) -> Result<Vec<Interval>> {
        let mut cur = Interval { lo: self.locate(interval.lo)?, hi: self.locate(interval.hi)? };
        let mut out = Vec::with_capacity(k);
        for step in 1..=k {
            cur = self.image(cur)?;
            cur = self.snap_into_domain(cur, step)?;
            out.push(cur);
        }
        Ok(out)
    }

    fn snap_into_domain(&self, i: Interval, step: usize) -> Result<Interval> {
        let lo = self.locate(i.lo).map_err(|_| self.escape(i.lo, step))?;
        let hi = self.locate(i.hi).map_err(|_| self.escape(i.hi, step))?;
        Ok(Interval { lo, hi })
    }

    /// Preimage `f⁻¹(J)` of a closed interval as a union of closed intervals.
    pub fn preimage(&self, target: Interval) -> IntervalSet {
        let mut pieces = Vec::new();
        for i in 0..self.segments() {
            let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
            let (v0, v1) = (self.values[i], self.values[i + 1]);
            if v0 == v1 {
                if target.contains(v0) {
                    pieces.push(Interval { lo: x0, hi: x1 });
                }
                continue;
            }
            let at = |v: f64| x0 + (v - v0) / (v1 - v0) * (x1 - x0);
            let (vlo, vhi) = (v0.min(v1), v0.max(v1));
            let lo = target.lo.max(vlo);
            let hi = target.hi.min(vhi);
            if lo > hi {
                continue;
            }
            let (a, b) = (at(lo), at(hi));
            pieces.push(Interval { lo: a.min(b).max(x0), hi: a.max(b).min(x1) });
        }
        IntervalSet::from_intervals(pieces)
    }

    /// Restricts to a subinterval of the domain.
    pub fn restrict(&self, sub: Interval) -> Result<Self> {
        let lo = self.locate(sub.lo)?;
        let hi = self.locate(sub.hi)?;
        if lo >= hi {
            return Err(Error::InvalidArgument(format!("empty restriction {sub}")));
        }
        let mut nodes = vec![lo];
        nodes.extend(self.nodes.iter().copied().filter(|&n| n > lo && n < hi));
        nodes.push(hi);
        let values = nodes.iter().map(|&x| self.eval_unchecked(x)).collect();
        Self::new(nodes, values)
    }
}

fn write_row(f: &mut fmt::Formatter<'_>, label: &str, row: &[f64]) -> fmt::Result {
    f.write_str(label)?;
    for v in row {
        write!(f, " {v}")?;
    }
    writeln!(f)
}

/// Map file format:
///
/// ```text
/// domain a b
/// nodes x1 … xk
/// values y1 … yk
/// ```
///
/// Reals are written in shortest round-trip decimal form.
impl fmt::Display for PiecewiseLinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.domain();
        writeln!(f, "domain {} {}", d.lo, d.hi)?;
        write_row(f, "nodes", &self.nodes)?;
        write_row(f, "values", &self.values)
    }
}

impl FromStr for PiecewiseLinearMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut row = |label: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing `{label}` line")))?;
            let mut words = line.split_whitespace();
            if words.next() != Some(label) {
                return Err(Error::Parse(format!("expected `{label}` line, got `{line}`")));
            }
            words
                .map(|w| w.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{w}`"))))
                .collect()
        };
        let domain = row("domain")?;
        let nodes = row("nodes")?;
        let values = row("values")?;
        if domain.len() != 2 {
            return Err(Error::Parse("`domain` needs exactly two numbers".into()));
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after `values`".into()));
        }
        Self::with_domain(Interval::new(domain[0], domain[1])?, nodes, values)
    }
}

impl Serialize for PiecewiseLinearMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PiecewiseLinearMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn construction_errors() {
        assert!(PiecewiseLinearMap::new(vec![0.0], vec![0.0]).is_err());
        assert!(PiecewiseLinearMap::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(PiecewiseLinearMap::new(vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).is_err());
        assert!(PiecewiseLinearMap::new(vec![0.0, f64::NAN], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn eval_examples() {
        let t = PiecewiseLinearMap::tent();
        assert!((t.eval(2.0 / 7.0).unwrap() - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(t.eval(0.5).unwrap(), 1.0);
        let id = PiecewiseLinearMap::identity(unit()).unwrap();
        assert_eq!(id.eval(0.3141).unwrap(), 0.3141);
        assert!(matches!(t.eval(1.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn iterate_examples() {
        let t = PiecewiseLinearMap::tent();
        assert!((t.iterate(3, 2.0 / 7.0).unwrap() - 2.0 / 7.0).abs() < 1e-15);
        assert_eq!(t.iterate(0, 0.123).unwrap(), 0.123);
        let id = PiecewiseLinearMap::identity(unit()).unwrap();
        assert!(PiecewiseLinearMap::compose(&t, &id).unwrap().approx_eq(&t));
        assert!((t.iterate(3, 0.28).unwrap() - 0.24).abs() < 1e-15);
    }

    #[test]
    fn iterate_map_matches_pointwise() {
        let t = PiecewiseLinearMap::tent();
        let t5 = t.iterate_map(5).unwrap();
        assert_eq!(t5.segments(), 32);
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert!((t5.eval(x).unwrap() - t.iterate(5, x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn escape_is_reported() {
        let f = PiecewiseLinearMap::new(vec![0.0, 1.0], vec![0.5, 1.5]).unwrap();
        assert!(matches!(f.iterate(3, 0.9), Err(Error::Invariance { step: 1, .. })));
        assert!(matches!(f.iterate_map(2), Err(Error::Invariance { .. })));
        assert!(matches!(f.image_iter(2, unit()), Err(Error::Invariance { step: 1, .. })));
    }

    #[test]
    fn sup_distance_examples() {
        let t = PiecewiseLinearMap::tent();
        assert_eq!(t.sup_distance(&t).unwrap(), 0.0);
        let shifted = PiecewiseLinearMap::new(vec![0.0, 0.5, 1.0], vec![0.04, 1.04, 0.04]).unwrap();
        assert!((t.sup_distance(&shifted).unwrap() - 0.04).abs() < 1e-15);
        let other = PiecewiseLinearMap::identity(Interval::new(0.0, 2.0).unwrap()).unwrap();
        assert!(matches!(t.sup_distance(&other), Err(Error::DomainMismatch(..))));
    }

    #[test]
    fn sup_distance_sees_interior_nodes() {
        // f − g peaks at a node of g only
        let f = PiecewiseLinearMap::constant(unit(), 0.5).unwrap();
        let g = PiecewiseLinearMap::new(vec![0.0, 0.3, 1.0], vec![0.5, 0.9, 0.5]).unwrap();
        let (d, at) = f.sup_distance_at(&g).unwrap();
        assert!((d - 0.4).abs() < 1e-15);
        assert_eq!(at, 0.3);
    }

    #[test]
    fn modulus_examples() {
        let t = PiecewiseLinearMap::tent();
        assert_eq!(t.modulus_of_continuity(1.0).unwrap(), 0.25);
        let c = PiecewiseLinearMap::constant(unit(), 0.3).unwrap();
        assert_eq!(c.modulus_of_continuity(1.0).unwrap(), 0.5);
        let id = PiecewiseLinearMap::identity(unit()).unwrap();
        assert!((id.modulus_of_continuity(0.2).unwrap() - 0.1).abs() < 1e-16);
        assert!(t.modulus_of_continuity(0.0).is_err());
    }

    #[test]
    fn image_examples() {
        let t = PiecewiseLinearMap::tent();
        let i = t.image(Interval::new(0.2, 0.3).unwrap()).unwrap();
        assert!((i.lo - 0.4).abs() < 1e-15 && (i.hi - 0.6).abs() < 1e-15);
        let i = t.image(Interval::new(0.4, 0.6).unwrap()).unwrap();
        assert!((i.lo - 0.8).abs() < 1e-15 && i.hi == 1.0);
        let p = t.image(Interval::point(0.3)).unwrap();
        assert_eq!(p.lo, p.hi);
        assert_eq!(p.lo, t.eval(0.3).unwrap());
    }

    #[test]
    fn preimage_of_interval() {
        let t = PiecewiseLinearMap::tent();
        let pre = t.preimage(Interval::new(0.4, 0.6).unwrap());
        let c = pre.components();
        assert_eq!(c.len(), 2);
        assert!((c[0].lo - 0.2).abs() < 1e-15 && (c[0].hi - 0.3).abs() < 1e-15);
        assert!((c[1].lo - 0.7).abs() < 1e-15 && (c[1].hi - 0.8).abs() < 1e-15);
        // the peak merges two pieces into one
        let top = t.preimage(Interval::new(0.9, 1.0).unwrap());
        assert_eq!(top.components().len(), 1);
    }

    #[test]
    fn map_file_round_trip() {
        let text = "domain 0 1\nnodes 0 0.5 1\nvalues 0 1 0\n";
        let t: PiecewiseLinearMap = text.parse().unwrap();
        assert_eq!(t, PiecewiseLinearMap::tent());
        assert_eq!(t.to_string(), text);
        let odd = PiecewiseLinearMap::new(vec![0.0, 0.1, 1.0], vec![1.0 / 3.0, 0.7, 2e-20]).unwrap();
        assert_eq!(odd.to_string().parse::<PiecewiseLinearMap>().unwrap(), odd);
        assert!("domain 0 2\nnodes 0 1\nvalues 0 1\n".parse::<PiecewiseLinearMap>().is_err());
        assert!("domain 0 1\nvalues 0 1\n".parse::<PiecewiseLinearMap>().is_err());
    }

    #[test]
    fn restrict_keeps_values() {
        let t = PiecewiseLinearMap::tent();
        let r = t.restrict(Interval::new(0.25, 0.75).unwrap()).unwrap();
        assert_eq!(r.nodes(), &[0.25, 0.5, 0.75]);
        assert_eq!(r.values(), &[0.5, 1.0, 0.5]);
    }
}
