//! Closing a near-return into an exact periodic orbit.
//!
//! Given a neighbourhood `V = (x0 − δ, x0 + δ)` with first return time `R` and a
//! witness `y` such that `y` and `f^R(y)` both lie in `V`, the construction
//! below builds
//!
//! - `I`, the closed interval between `f^R(y)` and `y`,
//! - `J`, `I` widened by a margin `ζ` on each side, still inside `V`,
//! - `φ`, a trapezoid bump equal to 1 on `I` and 0 off `J`,
//! - `T(t) = t + (y − f^R(y))·φ(t)`, a translation supported on `J`,
//! - `g = T ∘ f`.
//!
//! Because `R` is the first return of `V`, the intermediate points
//! `f(y), …, f^(R−1)(y)` avoid `V ⊇ J`, where `T` is the identity; the last
//! step lands in `I`, where `T` shifts by exactly the gap. Hence
//! `g^R(y) = y`, while `‖f − g‖` is the size of the gap.
//!
//! [`certify`] re-derives every claim from the plan's bump alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::first_return;
use crate::pl::{Interval, PiecewiseLinearMap, TAU_EQ};

/// Displacements at or below this are treated as an already-closed orbit.
pub const DEGENERATE_DISPLACEMENT: f64 = 1e-14;
/// Smallest admissible margin `ζ`.
pub const MIN_MARGIN: f64 = 1e-9;
/// Grid used by check (d) in addition to the breakpoints.
const AGREEMENT_SAMPLES: usize = 1000;

/// How strongly a witness pins the displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessStatus {
    /// `|y − f^R(y)| < δ`.
    Strong,
    /// Only `y, f^R(y) ∈ V` is known, so the displacement is below `2δ`.
    Weak,
}

/// A point that comes back to its neighbourhood at the first return time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub y: f64,
    pub return_time: usize,
    /// `f^R(y)`.
    pub image: f64,
    pub status: WitnessStatus,
}

impl Witness {
    pub fn displacement(&self) -> f64 {
        self.y - self.image
    }
}

/// Finds the first return `R` of `V = (x0 − δ, x0 + δ)` and a witness for it.
///
/// Preference order: `x0` itself when its own gap is below `δ`; then a point
/// of the half-radius ball whose `R`-th image also lies in that ball (which
/// forces a gap below `δ`); then any point of `V` returning to `V`, flagged
/// weak unless its gap happens to be below `δ`. The searches bisect the
/// candidate window guided by exact interval images of `f^R`, keeping the half
/// nearer to `x0` first.
pub fn find_witness(
    f: &PiecewiseLinearMap,
    x0: f64,
    delta: f64,
    max_time: usize,
) -> Result<Witness> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {delta}")));
    }
    f.eval(x0)?;
    let v = Interval::ball(x0, delta);
    let r = first_return(f, v, max_time)?.ok_or(Error::NoReturn { max_time })?;

    let image = f.iterate(r, x0)?;
    if v.contains_open(image) && (x0 - image).abs() < delta {
        return Ok(Witness { y: x0, return_time: r, image, status: WitnessStatus::Strong });
    }

    let domain = f.domain();
    let half = Interval::ball(x0, delta / 2.0);
    for (ball, strong) in [(half, true), (v, false)] {
        let Some(window) = ball.intersect(&domain) else { continue };
        if let Some(y) = search(f, r, x0, window, &ball, 0)? {
            let image = f.iterate(r, y)?;
            let status = if strong || (y - image).abs() < delta {
                WitnessStatus::Strong
            } else {
                WitnessStatus::Weak
            };
            return Ok(Witness { y, return_time: r, image, status });
        }
    }
    Err(Error::NoData(format!(
        "return at time {r} detected but no witness located near {x0}"
    )))
}

fn search(
    f: &PiecewiseLinearMap,
    r: usize,
    x0: f64,
    window: Interval,
    target: &Interval,
    depth: usize,
) -> Result<Option<f64>> {
    if !f.image_iter(r, window)?.meets_open(target) {
        return Ok(None);
    }
    let mid = 0.5 * (window.lo + window.hi);
    if target.contains_open(mid) && target.contains_open(f.iterate(r, mid)?) {
        return Ok(Some(mid));
    }
    if depth >= 64 || window.width() <= f64::EPSILON * mid.abs().max(1.0) {
        for y in [window.lo, window.hi] {
            if target.contains_open(y) && target.contains_open(f.iterate(r, y)?) {
                return Ok(Some(y));
            }
        }
        return Ok(None);
    }
    let left = Interval { lo: window.lo, hi: mid };
    let right = Interval { lo: mid, hi: window.hi };
    let near_first = if (x0 - 0.5 * (left.lo + left.hi)).abs() <= (x0 - 0.5 * (right.lo + right.hi)).abs() {
        [left, right]
    } else {
        [right, left]
    };
    for half in near_first {
        if let Some(y) = search(f, r, x0, half, target, depth + 1)? {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

/// Inputs of one perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    pub index_n: usize,
    pub x0: f64,
    pub delta: f64,
    pub y: f64,
    pub return_time: usize,
    pub status: WitnessStatus,
}

impl PlanInputs {
    pub fn from_witness(index_n: usize, x0: f64, delta: f64, w: &Witness) -> Self {
        PlanInputs { index_n, x0, delta, y: w.y, return_time: w.return_time, status: w.status }
    }

    /// Bound on the displacement: `δ`, or `2δ` for weak witnesses.
    pub fn bound(&self) -> f64 {
        match self.status {
            WitnessStatus::Strong => self.delta,
            WitnessStatus::Weak => 2.0 * self.delta,
        }
    }
}

/// Every object of one perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPlan {
    pub inputs: PlanInputs,
    /// `V = (x0 − δ, x0 + δ)`, open.
    pub neighbourhood: Interval,
    /// `f^R(y)`.
    pub image: f64,
    /// `y − f^R(y)`.
    pub displacement: f64,
    pub degenerate: bool,
    pub inner: Interval,
    pub zeta: f64,
    pub outer: Interval,
    pub bump: PiecewiseLinearMap,
    pub translation: PiecewiseLinearMap,
    pub perturbed: PiecewiseLinearMap,
}

/// The trapezoid: 0 up to `outer.lo`, 1 on `inner`, 0 from `outer.hi` on.
pub fn trapezoid(domain: Interval, inner: Interval, outer: Interval, peak: f64) -> Result<PiecewiseLinearMap> {
    let raw = [
        (domain.lo, 0.0),
        (outer.lo, 0.0),
        (inner.lo, peak),
        (inner.hi, peak),
        (outer.hi, 0.0),
        (domain.hi, 0.0),
    ];
    let mut nodes: Vec<f64> = Vec::with_capacity(6);
    let mut values: Vec<f64> = Vec::with_capacity(6);
    for (x, v) in raw {
        match nodes.last() {
            Some(&l) if l == x => {
                let last = values.last_mut().unwrap();
                *last = last.max(v);
            }
            _ => {
                nodes.push(x);
                values.push(v);
            }
        }
    }
    PiecewiseLinearMap::new(nodes, values)
}

/// `t ↦ t + shift·bump(t)`.
pub fn translation(bump: &PiecewiseLinearMap, shift: f64) -> Result<PiecewiseLinearMap> {
    let id = PiecewiseLinearMap::identity(bump.domain())?;
    id.combine(bump, |t, b| t + shift * b)
}

/// Builds `g = T ∘ f` closing the witness orbit at time `R`.
pub fn build_perturbation(f: &PiecewiseLinearMap, inputs: PlanInputs) -> Result<PerturbationPlan> {
    let PlanInputs { x0, delta, y, return_time: r, .. } = inputs;
    if delta.is_nan() || delta <= 0.0 || r == 0 {
        return Err(Error::InvalidArgument("radius and return time must be positive".into()));
    }
    let domain = f.domain();
    let v = Interval::ball(x0, delta);
    let image = f.iterate(r, y)?;
    if !v.contains_open(y) || !v.contains_open(image) {
        return Err(Error::InvalidArgument(format!(
            "witness {y} and its image {image} must both lie in {v}"
        )));
    }
    if first_return(f, v, r)? != Some(r) {
        return Err(Error::InvalidArgument(format!("{r} is not the first return of {v}")));
    }
    let displacement = y - image;
    if displacement.abs() >= inputs.bound() {
        return Err(Error::DisplacementTooLarge {
            displacement: displacement.abs(),
            bound: inputs.bound(),
        });
    }

    let inner = Interval::hull(y, image);
    let room = v.intersect(&domain).expect("y lies in both");
    let mut zeta = delta / 4.0;
    // a side of I sitting on the domain edge needs no ramp
    if inner.lo > domain.lo {
        zeta = zeta.min((inner.lo - room.lo) / 2.0);
    }
    if inner.hi < domain.hi {
        zeta = zeta.min((room.hi - inner.hi) / 2.0);
    }
    if zeta < MIN_MARGIN {
        return Err(Error::MarginTooSmall(zeta));
    }
    let outer = Interval {
        lo: (inner.lo - zeta).max(domain.lo),
        hi: (inner.hi + zeta).min(domain.hi),
    };
    let bump = trapezoid(domain, inner, outer, 1.0)?;
    let degenerate = displacement.abs() <= DEGENERATE_DISPLACEMENT;
    let (translation, perturbed) = if degenerate {
        (PiecewiseLinearMap::identity(domain)?, f.clone())
    } else {
        let t = translation(&bump, displacement)?;
        let g = PiecewiseLinearMap::compose(&t, f)?;
        (t, g)
    };
    let range = perturbed.range();
    if range.lo < domain.lo - TAU_EQ || range.hi > domain.hi + TAU_EQ {
        let point = if range.lo < domain.lo - TAU_EQ { range.lo } else { range.hi };
        return Err(Error::Invariance { point, step: 1, a: domain.lo, b: domain.hi });
    }
    Ok(PerturbationPlan {
        inputs,
        neighbourhood: v,
        image,
        displacement,
        degenerate,
        inner,
        zeta,
        outer,
        bump,
        translation,
        perturbed,
    })
}

/// One verified claim about a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, residual: f64, detail: String) -> Self {
        Check { name: name.into(), passed, residual, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCertificate {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl PlanCertificate {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Tolerance for the pointwise identities checked by [`certify`].
pub const CERT_TOL: f64 = 1e-12;

/// Re-verifies a plan against `f`.
///
/// The perturbed map is rebuilt from the plan's bump and displacement, so a
/// tampered bump shows up in the closing residual. Checks:
///
/// - `a-closes-orbit`: `|g^R(y) − y| ≤ 1e-12`;
/// - `b-orbit-unchanged`: `g^ℓ(y) = f^ℓ(y) ≠ y` for `1 ≤ ℓ < R`;
/// - `c-sup-distance`: `‖f − g‖` equals the displacement and is below the bound;
/// - `d-agrees-outside-preimage`: `g = f` wherever `f(t) ∉ J`;
///
/// plus structural checks on the witness, the nesting `I ⊆ J ⊆ V`, the bump's
/// shape, the avoidance of `J` by the intermediate orbit, agreement with the
/// stored map, and domain safety.
pub fn certify(plan: &PerturbationPlan, f: &PiecewiseLinearMap) -> Result<PlanCertificate> {
    let PlanInputs { y, return_time: r, .. } = plan.inputs;
    let domain = f.domain();
    let v = plan.neighbourhood;
    let mut checks = Vec::new();

    let orbit = f.orbit(r, y)?;
    let image = orbit[r];
    checks.push(Check::new(
        "witness-in-neighbourhood",
        v.contains_open(y) && v.contains_open(image),
        0.0,
        format!("y = {y}, f^R(y) = {image}"),
    ));

    let room = v.intersect(&domain).unwrap_or(v);
    let nested = plan.outer.contains_interval(&plan.inner)
        && room.contains_interval(&plan.outer)
        && (plan.outer.lo > v.lo && plan.outer.hi < v.hi);
    checks.push(Check::new("nesting", nested, 0.0, format!("I = {}, J = {}", plan.inner, plan.outer)));

    let shape_err = bump_shape_error(&plan.bump, plan.inner, plan.outer);
    checks.push(Check::new("bump-shape", shape_err <= CERT_TOL, shape_err, String::new()));

    let avoid = orbit[1..r].iter().all(|&p| !plan.outer.contains(p));
    let lands = plan.inner.contains(image);
    checks.push(Check::new(
        "orbit-avoids-support",
        avoid && lands,
        0.0,
        if avoid && lands { String::new() } else { format!("orbit {orbit:?}") },
    ));

    let displacement = y - image;
    let t = translation(&plan.bump, displacement)?;
    let g = PiecewiseLinearMap::compose(&t, f)?;

    let closing = (g.iterate(r, y)? - y).abs();
    checks.push(Check::new("a-closes-orbit", closing <= CERT_TOL, closing, String::new()));

    let g_orbit = g.orbit(r, y)?;
    let mut drift: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for l in 1..r {
        drift = drift.max((g_orbit[l] - orbit[l]).abs());
        min_gap = min_gap.min((g_orbit[l] - y).abs());
    }
    checks.push(Check::new(
        "b-orbit-unchanged",
        drift <= CERT_TOL && (r == 1 || min_gap > CERT_TOL),
        drift,
        if r > 1 { format!("closest intermediate return {min_gap}") } else { String::new() },
    ));

    let dist = f.sup_distance(&g)?;
    let bound = plan.inputs.bound();
    let c_res = (dist - displacement.abs()).abs();
    checks.push(Check::new(
        "c-sup-distance",
        c_res <= CERT_TOL && dist < bound,
        c_res,
        format!("|f - g| = {dist}, bound {bound}"),
    ));

    let d = domain;
    let samples = f
        .nodes()
        .iter()
        .chain(g.nodes())
        .copied()
        .chain((0..=AGREEMENT_SAMPLES).map(|i| d.lo + d.width() * i as f64 / AGREEMENT_SAMPLES as f64));
    let mut d_res: f64 = 0.0;
    for t in samples {
        let ft = f.eval(t)?;
        if !plan.outer.contains(ft) {
            d_res = d_res.max((g.eval(t)? - ft).abs());
        }
    }
    checks.push(Check::new("d-agrees-outside-preimage", d_res <= CERT_TOL, d_res, String::new()));

    let stored = plan.perturbed.sup_distance(&g)?;
    checks.push(Check::new("matches-stored-map", stored <= CERT_TOL, stored, String::new()));

    let range = g.range();
    let safe = range.lo >= d.lo - TAU_EQ && range.hi <= d.hi + TAU_EQ;
    checks.push(Check::new("domain-safety", safe, 0.0, format!("range {range}")));

    Ok(PlanCertificate { passed: checks.iter().all(|c| c.passed), checks })
}

/// Largest deviation of `bump` from the trapezoid on `(inner, outer)`, checked
/// at its nodes and at the corners of the trapezoid.
fn bump_shape_error(bump: &PiecewiseLinearMap, inner: Interval, outer: Interval) -> f64 {
    let mut err: f64 = 0.0;
    let at = |x: f64| bump.eval(x).unwrap_or(f64::NAN);
    for x in bump.nodes().iter().copied().chain([inner.lo, inner.hi, outer.lo, outer.hi]) {
        let b = at(x);
        if b.is_nan() {
            return f64::INFINITY;
        }
        if inner.contains(x) {
            err = err.max((b - 1.0).abs());
        } else if !(outer.lo < x && x < outer.hi) {
            err = err.max(b.abs());
        }
        if b < 0.0 {
            err = err.max(-b);
        }
        if b > 1.0 {
            err = err.max(b - 1.0);
        }
    }
    err
}
