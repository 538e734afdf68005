//! Periodic points, first returns, and classical forcing checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::{find_witness, WitnessStatus};
use crate::pl::{Interval, PiecewiseLinearMap};
use crate::sharkovskii::forced_periods;

/// Largest period for which `f^p` is built as an explicit map.
pub const EXACT_PERIOD_LIMIT: usize = 12;
/// Closure residual `|f^p(x) − x|` a detected root must reach.
pub const ROOT_RESIDUAL: f64 = 1e-11;
/// Minimal-period certificates require `|f^d(x) − x|` above this for proper
/// divisors `d` of the period.
pub const MIN_SEPARATION: f64 = 1e-6;
/// Points closer than this are taken to lie on the same orbit.
pub const ORBIT_DEDUP: f64 = 1e-9;

/// How a scan evaluated `f^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// `f^p` built as a piecewise-linear map; every sign change is seen.
    Exact,
    /// `f^p` evaluated on a uniform grid; sign changes finer than the grid may
    /// be missed.
    Pointwise,
}

/// A certified periodic orbit, listed from its smallest point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub point: f64,
    pub period: usize,
    pub orbit: Vec<f64>,
    /// `|f^p(point) − point|`.
    pub residual: f64,
    /// Smallest `|f^d(point) − point|` over proper divisors `d` of the period;
    /// `None` for fixed points.
    pub separation: Option<f64>,
    pub mode: ScanMode,
}

impl PeriodicOrbit {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.orbit.iter().any(|&o| (o - x).abs() <= tol)
    }
}

fn proper_divisors(p: usize) -> impl Iterator<Item = usize> {
    (1..p).filter(move |d| p.is_multiple_of(*d))
}

/// Certifies `x` as a point of minimal period `p`, returning its orbit.
pub fn certify_periodic(
    f: &PiecewiseLinearMap,
    x: f64,
    p: usize,
    mode: ScanMode,
) -> Result<Option<PeriodicOrbit>> {
    if p == 0 {
        return Err(Error::InvalidArgument("period must be at least 1".into()));
    }
    let orbit = f.orbit(p, x)?;
    let residual = (orbit[p] - orbit[0]).abs();
    if residual > ROOT_RESIDUAL {
        return Ok(None);
    }
    let separation = proper_divisors(p)
        .map(|d| (orbit[d] - orbit[0]).abs())
        .reduce(f64::min);
    if separation.is_some_and(|s| s <= MIN_SEPARATION) {
        return Ok(None);
    }
    let mut points = orbit[..p].to_vec();
    let start = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    points.rotate_left(start);
    Ok(Some(PeriodicOrbit {
        point: points[0],
        period: p,
        orbit: points,
        residual,
        separation,
        mode,
    }))
}

/// Bisection on `h(x) = f^p(x) − x` inside a bracketing cell.
fn bisect(f: &PiecewiseLinearMap, p: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let h = |x: f64| f.iterate(p, x).map(|y| y - x);
    let mut hlo = h(lo)?;
    if hlo == 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid)?;
        if hm.abs() <= ROOT_RESIDUAL * 0.01 {
            return Ok(mid);
        }
        if (hm < 0.0) == (hlo < 0.0) {
            lo = mid;
            hlo = hm;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (h(lo)?.abs(), h(hi)?.abs());
    Ok(if a <= b { lo } else { hi })
}

/// Candidate roots of `f^p(x) − x` from a table of `(x, h(x))` samples.
fn bracket_roots(
    f: &PiecewiseLinearMap,
    p: usize,
    samples: &[(f64, f64)],
    linear: bool,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for w in samples.windows(2) {
        let ((x0, h0), (x1, h1)) = (w[0], w[1]);
        if h0 == 0.0 {
            out.push(x0);
        }
        if (h0 < 0.0 && h1 > 0.0) || (h0 > 0.0 && h1 < 0.0) {
            let guess = x0 - h0 * (x1 - x0) / (h1 - h0);
            let guess = guess.clamp(x0, x1);
            let r = (f.iterate(p, guess)? - guess).abs();
            if linear && r <= ROOT_RESIDUAL {
                out.push(guess);
            } else {
                out.push(bisect(f, p, x0, x1)?);
            }
        }
    }
    if let Some(&(x, h)) = samples.last() {
        if h == 0.0 {
            out.push(x);
        }
    }
    Ok(out)
}

/// Finds orbits of minimal period `p`.
///
/// For `p ≤ EXACT_PERIOD_LIMIT` the scan runs over the linear pieces of `f^p`
/// (every sign change of `f^p(x) − x` is seen); above that, or when `f^p` has
/// too many pieces, it samples `f^p(x) − x` on `grid` uniform cells. Roots are
/// refined by bisection, filtered for minimal period, and reported once per
/// orbit, sorted by smallest point.
pub fn find_periodic_points(
    f: &PiecewiseLinearMap,
    p: usize,
    grid: usize,
) -> Result<Vec<PeriodicOrbit>> {
    if p == 0 || grid == 0 {
        return Err(Error::InvalidArgument("period and grid must be at least 1".into()));
    }
    let exact = if p <= EXACT_PERIOD_LIMIT {
        match f.iterate_map(p) {
            Ok(m) => Some(m),
            Err(Error::TooManyNodes { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let (candidates, mode) = match exact {
        Some(fp) => {
            let samples: Vec<(f64, f64)> = fp
                .nodes()
                .iter()
                .zip(fp.values())
                .map(|(&x, &y)| (x, y - x))
                .collect();
            (bracket_roots(f, p, &samples, true)?, ScanMode::Exact)
        }
        None => {
            let d = f.domain();
            let samples = (0..=grid)
                .into_par_iter()
                .map(|i| {
                    let x = if i == grid { d.hi } else { d.lo + d.width() * i as f64 / grid as f64 };
                    f.iterate(p, x).map(|y| (x, y - x))
                })
                .collect::<Result<Vec<_>>>()?;
            (bracket_roots(f, p, &samples, false)?, ScanMode::Pointwise)
        }
    };
    let mut found: Vec<PeriodicOrbit> = Vec::new();
    for x in candidates {
        if found.iter().any(|o| o.contains(x, ORBIT_DEDUP)) {
            continue;
        }
        if let Some(o) = certify_periodic(f, x, p, mode)? {
            if !found.iter().any(|q| o.orbit.iter().any(|&y| q.contains(y, ORBIT_DEDUP))) {
                found.push(o);
            }
        }
    }
    found.sort_by(|a, b| a.point.total_cmp(&b.point));
    Ok(found)
}

/// Least `k ≤ max_time` with `f^k(cl V) ∩ V ≠ ∅` for the open interval `V`
/// (clipped to the domain), using exact interval images.
pub fn first_return(f: &PiecewiseLinearMap, v: Interval, max_time: usize) -> Result<Option<usize>> {
    let closure = clip(f, v)?;
    let mut cur = closure;
    for k in 1..=max_time {
        cur = f.image_iter(1, cur).map_err(|e| restep(e, k))?;
        if cur.meets_open(&v) {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Does `f^k(cl V)` meet `V`? Says nothing about earlier times.
pub fn returns_at(f: &PiecewiseLinearMap, v: Interval, k: usize) -> Result<bool> {
    Ok(f.image_iter(k, clip(f, v)?)?.meets_open(&v))
}

fn clip(f: &PiecewiseLinearMap, v: Interval) -> Result<Interval> {
    v.intersect(&f.domain())
        .ok_or_else(|| Error::InvalidArgument(format!("neighbourhood {v} misses the domain")))
}

fn restep(e: Error, step: usize) -> Error {
    match e {
        Error::Invariance { point, a, b, .. } => Error::Invariance { point, step, a, b },
        e => e,
    }
}

/// One neighbourhood of a return profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnEntry {
    pub n: usize,
    pub delta: f64,
    pub first_return: Option<usize>,
    pub witness: Option<f64>,
    pub witness_status: Option<WitnessStatus>,
}

/// First returns of `(x0 − δₙ, x0 + δₙ)` for a decreasing run of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnProfile {
    pub x0: f64,
    pub entries: Vec<ReturnEntry>,
}

pub fn return_profile(
    f: &PiecewiseLinearMap,
    x0: f64,
    deltas: &[f64],
    max_time: usize,
) -> Result<ReturnProfile> {
    if deltas.iter().any(|&d| d.is_nan() || d <= 0.0) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("radii must be non-increasing".into()));
    }
    let entries = deltas
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let v = Interval::ball(x0, delta);
            let first_return = first_return(f, v, max_time)?;
            let w = match first_return {
                Some(_) => Some(find_witness(f, x0, delta, max_time)?),
                None => None,
            };
            Ok(ReturnEntry {
                n: i + 1,
                delta,
                first_return,
                witness: w.as_ref().map(|w| w.y),
                witness_status: w.map(|w| w.status),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReturnProfile { x0, entries })
}

/// One forced period and what the scan found for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingEntry {
    pub period: u64,
    pub orbit: Option<PeriodicOrbit>,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingReport {
    pub period: u64,
    pub bound: u64,
    /// A certified orbit of the forcing period, if one was found.
    pub source: Option<PeriodicOrbit>,
    pub entries: Vec<ForcingEntry>,
    /// Every forced period has a certified orbit.
    pub complete: bool,
}

fn initial_grid(p: usize) -> usize {
    1024usize.max(64 * p)
}

/// Searches an orbit for every period forced by `p` up to `bound`. Periods
/// whose scan comes back empty after three grid refinements are listed with
/// `orbit: None`; that is a detection gap, not a counterexample.
pub fn verify_forcing(f: &PiecewiseLinearMap, p: u64, bound: u64) -> Result<ForcingReport> {
    let forced = forced_periods(p, bound)?;
    let source = find_periodic_points(f, p as usize, initial_grid(p as usize))?
        .into_iter()
        .next();
    let entries = forced
        .par_iter()
        .map(|&q| {
            let mut grid = initial_grid(q as usize);
            for attempt in 0..3 {
                let found = find_periodic_points(f, q as usize, grid)?;
                if let Some(o) = found.into_iter().next() {
                    return Ok(ForcingEntry { period: q, orbit: Some(o), grid });
                }
                if attempt < 2 {
                    grid *= 4;
                }
            }
            Ok(ForcingEntry { period: q, orbit: None, grid })
        })
        .collect::<Result<Vec<_>>>()?;
    let complete = entries.iter().all(|e| e.orbit.is_some());
    Ok(ForcingReport { period: p, bound, source, entries, complete })
}
