//! Perturbation budgets that keep finitely many iterates close.
//!
//! For a map `f` with modulus of continuity `η`, the budget for index `n` and
//! iteration horizon `S` is
//!
//! ```text
//! δ(ε, S, n) = min { 1/n, ε/2, η(ε)/2, η(η(ε))/2, …, η^(S−1)(ε)/2 }
//! ```
//!
//! a set of `S + 1` numbers. Any `g` with `‖f − g‖ < δ` then satisfies
//! `‖f^k − g^k‖ < ε` for every `k ≤ S`. The argument is an induction that
//! needs `δ` to sit below every member of the set, so the budget is the
//! minimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pl::PiecewiseLinearMap;

/// Iterates of the modulus of continuity below this value are rejected.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// `[ε, η(ε), η(η(ε)), …]`, `count` terms.
pub fn eta_iterates(f: &PiecewiseLinearMap, epsilon: f64, count: usize) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    let mut out = Vec::with_capacity(count);
    let mut cur = epsilon;
    for step in 0..count {
        if cur < UNDERFLOW_FLOOR {
            return Err(Error::ScheduleUnderflow { step, value: cur });
        }
        out.push(cur);
        cur = f.modulus_of_continuity(cur)?;
    }
    Ok(out)
}

/// Closed form of `η^j(ε)` for the modulus `τ ↦ τ/(2L)` (or `τ/2` when `L = 0`).
pub fn eta_closed_form(lipschitz: f64, epsilon: f64, j: usize) -> f64 {
    let ratio = if lipschitz == 0.0 { 2.0 } else { 2.0 * lipschitz };
    epsilon / ratio.powi(j as i32)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")))
    }
}

fn check_counts(s: u64, n: u64) -> Result<()> {
    if s == 0 || n == 0 {
        return Err(Error::InvalidArgument("S and n must be at least 1".into()));
    }
    Ok(())
}

/// `δ(ε, S, n)` for the map `f`; always in `(0, 1/n]`.
pub fn delta(f: &PiecewiseLinearMap, epsilon: f64, s: u64, n: u64) -> Result<f64> {
    check_counts(s, n)?;
    let etas = eta_iterates(f, epsilon, s as usize)?;
    Ok(etas
        .iter()
        .map(|e| e / 2.0)
        .fold(1.0 / n as f64, f64::min))
}

/// Per-index record of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub n: u64,
    pub s: u64,
    pub delta: f64,
}

/// The budgets `δ(ε, Sₙ, n)` for a run of indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSchedule {
    pub epsilon: f64,
    /// `η^j(ε)` for `j = 0 .. max S − 1`.
    pub eta_iterates: Vec<f64>,
    pub per_index: Vec<ScheduleEntry>,
    /// The budget is the minimum of its defining set; recorded in every
    /// serialized schedule.
    pub reduction: String,
}

impl DeltaSchedule {
    /// Budgets for indices `1..=s_seq.len()`, with `s_seq[n−1] = Sₙ`.
    pub fn build(f: &PiecewiseLinearMap, epsilon: f64, s_seq: &[u64]) -> Result<Self> {
        let max_s = s_seq.iter().copied().max().unwrap_or(1);
        let etas = eta_iterates(f, epsilon, max_s as usize)?;
        let per_index = s_seq
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let n = i as u64 + 1;
                check_counts(s, n)?;
                let delta = etas[..s as usize]
                    .iter()
                    .map(|e| e / 2.0)
                    .fold(1.0 / n as f64, f64::min);
                Ok(ScheduleEntry { n, s, delta })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DeltaSchedule {
            epsilon,
            eta_iterates: etas,
            per_index,
            reduction: "min".into(),
        })
    }
}

/// Outcome of checking `‖f^k − g^k‖ < ε` for `k = 1..=S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub holds: bool,
    pub worst_k: usize,
    pub worst_norm: f64,
    pub sup_distance: f64,
    pub delta: f64,
    pub norms: Vec<f64>,
}

/// Computes `‖f^k − g^k‖` exactly for `k = 1..=S` and certifies each is below
/// `ε`. A pair violating `‖f − g‖ < δ(ε, S, n)` is a precondition failure, not
/// a counterexample.
pub fn verify_lemma1(
    f: &PiecewiseLinearMap,
    g: &PiecewiseLinearMap,
    epsilon: f64,
    s: u64,
    n: u64,
) -> Result<StabilityCertificate> {
    let delta = delta(f, epsilon, s, n)?;
    let distance = f.sup_distance(g)?;
    if distance >= delta {
        return Err(Error::PreconditionFailed { distance, delta });
    }
    let norms = iterate_distances(f, g, s as usize)?;
    let (worst_k, worst_norm) = norms
        .iter()
        .enumerate()
        .fold((1, 0.0), |best, (i, &d)| if d > best.1 { (i + 1, d) } else { best });
    Ok(StabilityCertificate {
        holds: norms.iter().all(|&d| d < epsilon),
        worst_k,
        worst_norm,
        sup_distance: distance,
        delta,
        norms,
    })
}

/// `[‖f − g‖, ‖f² − g²‖, …, ‖f^k − g^k‖]`, each exact.
pub fn iterate_distances(
    f: &PiecewiseLinearMap,
    g: &PiecewiseLinearMap,
    k: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(k);
    let (mut fk, mut gk) = (f.clone(), g.clone());
    for i in 1..=k {
        if i > 1 {
            fk = PiecewiseLinearMap::compose(f, &fk)?;
            gk = PiecewiseLinearMap::compose(g, &gk)?;
        }
        out.push(fk.sup_distance(&gk)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pl::Interval;

    #[test]
    fn delta_examples() {
        let t = PiecewiseLinearMap::tent();
        assert_eq!(delta(&t, 1.0, 2, 1).unwrap(), 0.125);
        assert_eq!(delta(&t, 1.0, 1, 100).unwrap(), 0.01);
        let id = PiecewiseLinearMap::identity(Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(delta(&id, 2.0, 1, 1).unwrap(), 1.0);
        assert!(delta(&t, 0.0, 1, 1).is_err());
        assert!(delta(&t, 1.0, 0, 1).is_err());
        assert!(delta(&t, 1.0, 1, 0).is_err());
    }

    #[test]
    fn closed_form_agrees() {
        let t = PiecewiseLinearMap::tent();
        let etas = eta_iterates(&t, 0.7, 12).unwrap();
        for (j, e) in etas.iter().enumerate() {
            let c = eta_closed_form(t.lipschitz(), 0.7, j);
            assert!((e - c).abs() <= 1e-15 * c, "j={j}: {e} vs {c}");
        }
        let c = PiecewiseLinearMap::constant(Interval::new(0.0, 1.0).unwrap(), 0.5).unwrap();
        assert_eq!(eta_iterates(&c, 1.0, 3).unwrap(), vec![1.0, 0.5, 0.25]);
        assert_eq!(eta_closed_form(0.0, 1.0, 2), 0.25);
    }

    #[test]
    fn underflow_is_an_error() {
        let t = PiecewiseLinearMap::tent();
        // η^j(1) = 4^{-j} drops below 1e-300 near j = 499
        assert!(matches!(delta(&t, 1.0, 600, 1), Err(Error::ScheduleUnderflow { .. })));
        assert!(delta(&t, 1.0, 400, 1).is_ok());
    }

    #[test]
    fn schedule_entries() {
        let t = PiecewiseLinearMap::tent();
        let s = DeltaSchedule::build(&t, 0.5, &[5, 5, 1]).unwrap();
        assert_eq!(s.eta_iterates.len(), 5);
        assert_eq!(s.per_index[0].delta, 0.5 / 256.0 / 2.0);
        assert_eq!(s.per_index[2].delta, 0.25);
        for e in &s.per_index {
            assert!(e.delta > 0.0 && e.delta <= 1.0 / e.n as f64);
            assert_eq!(e.delta, delta(&t, 0.5, e.s, e.n).unwrap());
        }
        assert_eq!(s.reduction, "min");
    }

    #[test]
    fn lemma_trivial_and_precondition() {
        let t = PiecewiseLinearMap::tent();
        let cert = verify_lemma1(&t, &t, 0.5, 4, 3).unwrap();
        assert!(cert.holds);
        assert_eq!(cert.worst_norm, 0.0);
        let far = PiecewiseLinearMap::new(vec![0.0, 0.5, 1.0], vec![0.1, 0.9, 0.1]).unwrap();
        assert!(matches!(
            verify_lemma1(&t, &far, 0.5, 4, 3),
            Err(Error::PreconditionFailed { .. })
        ));
    }
}
