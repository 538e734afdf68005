//! The construction from a non-wandering point `x0` to a second non-wandering
//! point `x1`, carried out index by index up to a truncation depth `N`.
//!
//! For each index `n`:
//!
//! 1. the budget `δₙ = δ(ε, Sₙ, n)` fixes the neighbourhood `Vₙ` of `x0`;
//! 2. `Vₙ` must first-return at time `Rₙ`, with a witness `yₙ`;
//! 3. a bump perturbation `gₙ` of `f` makes `yₙ` exactly `Rₙ`-periodic;
//! 4. since `Rₙ ◁ Sₙ`, `gₙ` also has a point `zₙ` of period `Sₙ`.
//!
//! The `zₙ` cluster at some `x1`; along the indices `nₖ` where `zₙₖ` is within
//! `1/(2nₖ)` of `x1`, the neighbourhoods `Wₖ = (x1 − 1/nₖ, x1 + 1/nₖ)` return to
//! themselves under `f^Sₙₖ`.
//!
//! Statements about classes of sequences are checked on indices `1..=N`. A
//! statement is accepted when it holds on a terminal run of indices covering
//! at least half of them, the finite shadow of "for all but finitely many".

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuity::{delta, iterate_distances, DeltaSchedule};
use crate::error::{Error, Result};
use crate::hyper::{HyperInteger, HyperNumber, Verdict};
use crate::orbit::{find_periodic_points, returns_at, PeriodicOrbit};
use crate::perturbation::{build_perturbation, certify, find_witness, PerturbationPlan, PlanCertificate, PlanInputs, Witness};
use crate::pl::{Interval, PiecewiseLinearMap};
use crate::sharkovskii::{precedes, star_compare};

pub const REPORT_VERSION: u32 = 1;
/// Gap below which sorted `zₙ` values join one cluster.
pub const CLUSTER_GAP: f64 = 1e-6;
/// `x1` counts as coinciding with `x0` below this distance.
pub const COINCIDENCE_TOL: f64 = 1e-9;
/// Orbit closure tolerance used for `gₙ^Rₙ(yₙ) = yₙ`.
pub const PERIODICITY_TOL: f64 = 1e-12;

/// Inputs of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub map: PiecewiseLinearMap,
    pub map_path: Option<PathBuf>,
    pub x0: f64,
    pub epsilon: f64,
    pub r: HyperInteger,
    pub s: HyperInteger,
    pub depth: usize,
    pub max_time: usize,
    pub grid: usize,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    map: String,
    x0: f64,
    epsilon: f64,
    #[serde(rename = "R")]
    r: String,
    #[serde(rename = "S")]
    s: String,
    #[serde(rename = "N")]
    depth: usize,
    #[serde(default = "default_max_time")]
    max_time: usize,
    #[serde(default = "default_grid")]
    grid: usize,
    output: Option<String>,
}

fn default_max_time() -> usize {
    64
}

fn default_grid() -> usize {
    4096
}

impl PipelineConfig {
    /// Parses a TOML config. `map` and `output` paths are resolved against
    /// `base_dir`.
    ///
    /// ```toml
    /// map = "tent.map"
    /// x0 = 0.2857142857142857
    /// epsilon = 0.5
    /// R = "prefix=[];cycle=[3]"
    /// S = "prefix=[];cycle=[5]"
    /// N = 8
    /// max_time = 64
    /// grid = 4096
    /// output = "report.json"
    /// ```
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let map_path = base_dir.join(&raw.map);
        let map_text = std::fs::read_to_string(&map_path)
            .map_err(|e| Error::Io(format!("{}: {e}", map_path.display())))?;
        let map: PiecewiseLinearMap = map_text.parse()?;
        let config = PipelineConfig {
            map,
            map_path: Some(map_path),
            x0: raw.x0,
            epsilon: raw.epsilon,
            r: raw.r.parse()?,
            s: raw.s.parse()?,
            depth: raw.depth,
            max_time: raw.max_time,
            grid: raw.grid,
            output: raw.output.map(|o| base_dir.join(o)),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.depth == 0 || self.max_time == 0 || self.grid == 0 {
            return Err(Error::InvalidArgument("N, max_time and grid must be positive".into()));
        }
        self.map.eval(self.x0)?;
        Ok(())
    }

    /// `(R₁, …, R_N)`.
    pub fn r_seq(&self) -> Vec<u64> {
        (1..=self.depth).map(|n| self.r.entry(n)).collect()
    }

    /// `(S₁, …, S_N)`.
    pub fn s_seq(&self) -> Vec<u64> {
        (1..=self.depth).map(|n| self.s.entry(n)).collect()
    }
}

/// Index-wise presentation of the family `(gₙ)` acting on sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDynamics {
    pub depth: usize,
    pub members: Vec<FamilyMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub n: usize,
    pub map: PiecewiseLinearMap,
}

impl FamilyDynamics {
    pub fn member(&self, n: usize) -> Option<&PiecewiseLinearMap> {
        self.members.iter().find(|m| m.n == n).map(|m| &m.map)
    }

    /// `gₙ^k(x)`.
    pub fn iterate(&self, n: usize, k: usize, x: f64) -> Result<f64> {
        self.member(n)
            .ok_or_else(|| Error::InvalidArgument(format!("index {n} is not in the family")))?
            .iterate(k, x)
    }

    /// Evaluates the family on a time class and a point class, index by index:
    /// `(n, gₙ^{timesₙ}(pointsₙ))` for every member.
    pub fn evolve(&self, times: &HyperInteger, points: &HyperNumber) -> Result<Vec<(usize, f64)>> {
        self.members
            .iter()
            .map(|m| Ok((m.n, m.map.iterate(times.entry(m.n) as usize, points.entry(m.n))?)))
            .collect()
    }
}

/// Whether `passing` holds on a terminal run `[n*, N]` with `N − n* + 1 ≥ ⌈N/2⌉`.
pub fn eventually_holds(depth: usize, passing: &[usize]) -> bool {
    let mut run = 0;
    for n in (1..=depth).rev() {
        if passing.contains(&n) {
            run += 1;
        } else {
            break;
        }
    }
    run > 0 && run >= depth.div_ceil(2)
}

/// Everything recorded for one index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub n: usize,
    pub r_n: u64,
    pub s_n: u64,
    pub delta: f64,
    pub neighbourhood: Interval,
    pub first_return: Option<usize>,
    pub return_certified: bool,
    pub witness: Option<Witness>,
    pub plan: Option<PerturbationPlan>,
    pub plan_certificate: Option<PlanCertificate>,
    pub second_periodic: Option<SecondPeriodic>,
    pub flags: Vec<String>,
}

/// Builds `δₙ`, `Vₙ`, the witness, and the perturbation for `n = 1..=N`.
/// Indices whose first return differs from `Rₙ`, or whose plan fails to build
/// or certify, are flagged and left out of the family.
pub fn assemble_family(
    f: &PiecewiseLinearMap,
    x0: f64,
    epsilon: f64,
    r_seq: &[u64],
    s_seq: &[u64],
    depth: usize,
    max_time: usize,
) -> Result<(FamilyDynamics, Vec<IndexRecord>)> {
    if r_seq.len() < depth || s_seq.len() < depth {
        return Err(Error::InvalidArgument(format!(
            "need {depth} terms of R and S, got {} and {}",
            r_seq.len(),
            s_seq.len()
        )));
    }
    let records = (1..=depth)
        .into_par_iter()
        .map(|n| assemble_index(f, x0, epsilon, r_seq[n - 1], s_seq[n - 1], n, max_time))
        .collect::<Result<Vec<_>>>()?;
    let members = records
        .iter()
        .filter(|r| r.plan_certificate.as_ref().is_some_and(|c| c.passed))
        .map(|r| FamilyMember { n: r.n, map: r.plan.as_ref().unwrap().perturbed.clone() })
        .collect();
    Ok((FamilyDynamics { depth, members }, records))
}

fn assemble_index(
    f: &PiecewiseLinearMap,
    x0: f64,
    epsilon: f64,
    r_n: u64,
    s_n: u64,
    n: usize,
    max_time: usize,
) -> Result<IndexRecord> {
    let delta_n = delta(f, epsilon, s_n, n as u64)?;
    let v = Interval::ball(x0, delta_n);
    let mut record = IndexRecord {
        n,
        r_n,
        s_n,
        delta: delta_n,
        neighbourhood: v,
        first_return: None,
        return_certified: false,
        witness: None,
        plan: None,
        plan_certificate: None,
        second_periodic: None,
        flags: Vec::new(),
    };
    let witness = match find_witness(f, x0, delta_n, max_time) {
        Ok(w) => w,
        Err(Error::NoReturn { .. }) => {
            record.flags.push(format!("no-return within {max_time}"));
            return Ok(record);
        }
        Err(e) => return Err(e),
    };
    record.first_return = Some(witness.return_time);
    record.witness = Some(witness);
    if witness.return_time as u64 != r_n {
        record.flags.push(format!("return-mismatch: found {}, expected {r_n}", witness.return_time));
        return Ok(record);
    }
    record.return_certified = true;
    match build_perturbation(f, PlanInputs::from_witness(n, x0, delta_n, &witness)) {
        Ok(plan) => {
            let cert = certify(&plan, f)?;
            if !cert.passed {
                record.flags.push("plan-uncertified".into());
            }
            record.plan = Some(plan);
            record.plan_certificate = Some(cert);
        }
        Err(e) => record.flags.push(format!("plan-error: {e}")),
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityEntry {
    pub n: usize,
    pub passed: bool,
    /// `|gₙ^Rₙ(yₙ) − yₙ|`.
    pub residual: f64,
    /// Smallest `|gₙ^ℓ(yₙ) − yₙ|` for `ℓ < Rₙ`.
    pub separation: Option<f64>,
}

/// `y₀ = [yₙ]` is periodic with period `P = [Rₙ]` under the family, read on
/// indices `1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityCertificate {
    pub passed: bool,
    pub entries: Vec<PeriodicityEntry>,
    /// Indices without a family member.
    pub exclusions: Vec<usize>,
}

/// Checks `gₙ^Rₙ(yₙ) = yₙ` and `gₙ^ℓ(yₙ) ≠ yₙ` for `ℓ < Rₙ`, per index.
/// `witnesses` holds `(n, yₙ)`.
pub fn periodic_under_family(
    family: &FamilyDynamics,
    witnesses: &[(usize, f64)],
    r_seq: &[u64],
) -> Result<PeriodicityCertificate> {
    let mut entries = Vec::new();
    let mut exclusions = Vec::new();
    for n in 1..=family.depth {
        let (Some(g), Some(&(_, y))) = (family.member(n), witnesses.iter().find(|w| w.0 == n)) else {
            exclusions.push(n);
            continue;
        };
        let r = r_seq[n - 1] as usize;
        let orbit = g.orbit(r, y)?;
        let residual = (orbit[r] - y).abs();
        let separation = orbit[1..r].iter().map(|&p| (p - y).abs()).reduce(f64::min);
        let passed = residual <= PERIODICITY_TOL && separation.is_none_or(|s| s > PERIODICITY_TOL);
        entries.push(PeriodicityEntry { n, passed, residual, separation });
    }
    let passing: Vec<usize> = entries.iter().filter(|e| e.passed).map(|e| e.n).collect();
    Ok(PeriodicityCertificate {
        passed: eventually_holds(family.depth, &passing),
        entries,
        exclusions,
    })
}

/// A point of minimal period `Sₙ` for `gₙ`, or why there is none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondPeriodic {
    pub n: usize,
    pub z: Option<f64>,
    pub orbit: Option<PeriodicOrbit>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flag: Option<String>,
}

/// For each member with `Rₙ ◁ Sₙ`, scans `gₙ` for period-`Sₙ` orbits and picks
/// the orbit point nearest `x0` (ties to the smaller point). A missed scan is a
/// detection gap and is flagged as such.
pub fn find_second_periodic(
    family: &FamilyDynamics,
    x0: f64,
    r_seq: &[u64],
    s_seq: &[u64],
    grid: usize,
) -> Result<Vec<SecondPeriodic>> {
    family
        .members
        .par_iter()
        .map(|m| {
            let (r, s) = (r_seq[m.n - 1], s_seq[m.n - 1]);
            if !precedes(r, s)? {
                return Ok(SecondPeriodic {
                    n: m.n,
                    z: None,
                    orbit: None,
                    flag: Some(format!("order: {r} does not precede {s}")),
                });
            }
            let orbits = find_periodic_points(&m.map, s as usize, grid)?;
            let best = orbits
                .iter()
                .flat_map(|o| o.orbit.iter().map(move |&p| (p, o)))
                .min_by(|a, b| {
                    (a.0 - x0).abs().total_cmp(&(b.0 - x0).abs()).then(a.0.total_cmp(&b.0))
                });
            Ok(match best {
                Some((z, o)) => SecondPeriodic { n: m.n, z: Some(z), orbit: Some(o.clone()), flag: None },
                None => SecondPeriodic {
                    n: m.n,
                    z: None,
                    orbit: None,
                    flag: Some(format!("detection-gap: no period-{s} orbit found")),
                },
            })
        })
        .collect()
}

/// A cluster point of the `zₙ` and the indices that stay close to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accumulation {
    pub x1: f64,
    pub cluster_size: usize,
    pub subsequence: Vec<usize>,
}

/// Single-linkage clustering of the sorted values with gap [`CLUSTER_GAP`];
/// `x1` is the mean of the largest cluster (ties to the smaller mean). The
/// subsequence keeps the indices with `|zₙ − x1| < 1/(2n)`.
pub fn extract_accumulation(z_list: &[(usize, f64)]) -> Result<Accumulation> {
    if z_list.is_empty() {
        return Err(Error::NoData("no periodic points to accumulate".into()));
    }
    let mut sorted: Vec<f64> = z_list.iter().map(|z| z.1).collect();
    sorted.sort_by(f64::total_cmp);
    let mut clusters: Vec<Vec<f64>> = vec![vec![sorted[0]]];
    for w in sorted.windows(2) {
        if w[1] - w[0] <= CLUSTER_GAP {
            clusters.last_mut().unwrap().push(w[1]);
        } else {
            clusters.push(vec![w[1]]);
        }
    }
    // clusters are in increasing order, so the first maximum is the smallest
    let best = clusters
        .iter()
        .fold(&clusters[0], |best, c| if c.len() > best.len() { c } else { best });
    let x1 = best[0] + best.iter().map(|v| v - best[0]).sum::<f64>() / best.len() as f64;
    let mut subsequence: Vec<usize> = z_list
        .iter()
        .filter(|(n, z)| (z - x1).abs() < 1.0 / (2.0 * *n as f64))
        .map(|z| z.0)
        .collect();
    subsequence.sort_unstable();
    Ok(Accumulation { x1, cluster_size: best.len(), subsequence })
}

/// Return of `Wₖ = (x1 − 1/nₖ, x1 + 1/nₖ)` at time `S_nₖ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnCertificate {
    pub n: usize,
    pub period: u64,
    pub epsilon: f64,
    pub neighbourhood: Interval,
    /// `‖gₙ^S − f^S‖`, when it could be computed.
    pub iterate_distance: Option<f64>,
    /// `‖gₙ − f‖ < δ(1/(2n), S, n)`.
    pub lemma_precondition: bool,
    pub norm_ok: bool,
    pub returns: bool,
    pub image: Option<Interval>,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

/// For each `nₖ`: bounds `‖g^S − f^S‖` by `1/(2nₖ)` and checks directly that
/// `f^S(cl Wₖ)` meets `Wₖ`.
pub fn certify_returns(
    f: &PiecewiseLinearMap,
    x1: f64,
    subsequence: &[usize],
    s_seq: &[u64],
    family: &FamilyDynamics,
) -> Result<Vec<ReturnCertificate>> {
    if subsequence.is_empty() {
        return Err(Error::NoData("empty subsequence".into()));
    }
    subsequence
        .par_iter()
        .map(|&n| {
            let g = family
                .member(n)
                .ok_or_else(|| Error::InvalidArgument(format!("index {n} is not in the family")))?;
            let s = s_seq[n - 1];
            let epsilon = 1.0 / (2.0 * n as f64);
            let w = Interval::ball(x1, 1.0 / n as f64);
            let mut detail = String::new();
            let iterate_distance = match iterate_distances(f, g, s as usize) {
                Ok(d) => d.last().copied(),
                Err(e) => {
                    detail = format!("iterate distance unavailable: {e}");
                    None
                }
            };
            let lemma_precondition = match delta(f, epsilon, s, n as u64) {
                Ok(d) => f.sup_distance(g)? < d,
                Err(_) => false,
            };
            let norm_ok = iterate_distance.is_some_and(|d| d < epsilon);
            let clipped = w.intersect(&f.domain()).unwrap_or(w);
            let image = f.image_iter(s as usize, clipped).ok();
            let returns = returns_at(f, w, s as usize).unwrap_or(false);
            if !returns {
                detail = match image {
                    Some(i) => format!("f^{s}(W) = {i} misses W = {w}"),
                    None => format!("f^{s}(W) leaves the domain"),
                };
            }
            Ok(ReturnCertificate {
                n,
                period: s,
                epsilon,
                neighbourhood: w,
                iterate_distance,
                lemma_precondition,
                norm_ok,
                returns,
                image,
                passed: norm_ok && returns,
                detail,
            })
        })
        .collect()
}

/// Final state of a run: the first stage that rejected it, or `Pass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineStatus {
    Pass,
    RejectedAtOrderGate,
    OrderUndetermined,
    RejectedAtProfile,
    RejectedAtPerturbation,
    RejectedAtPeriodicity,
    RejectedAtSecondPeriodic,
    RejectedAtAccumulation,
    RejectedAtReturns,
}

impl PipelineStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PipelineStatus::Pass => "pass",
            PipelineStatus::RejectedAtOrderGate => "rejected-at-order-gate",
            PipelineStatus::OrderUndetermined => "order-undetermined",
            PipelineStatus::RejectedAtProfile => "rejected-at-profile",
            PipelineStatus::RejectedAtPerturbation => "rejected-at-perturbation",
            PipelineStatus::RejectedAtPeriodicity => "rejected-at-periodicity",
            PipelineStatus::RejectedAtSecondPeriodic => "rejected-at-second-periodic",
            PipelineStatus::RejectedAtAccumulation => "rejected-at-accumulation",
            PipelineStatus::RejectedAtReturns => "rejected-at-returns",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportInputs {
    pub map: PiecewiseLinearMap,
    pub x0: f64,
    pub epsilon: f64,
    #[serde(rename = "R")]
    pub r: String,
    #[serde(rename = "S")]
    pub s: String,
    #[serde(rename = "N")]
    pub depth: usize,
    pub max_time: usize,
    pub grid: usize,
}

/// Full trace of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub report_version: u32,
    pub inputs: ReportInputs,
    pub star_order_verdict: Verdict,
    pub schedule: Option<DeltaSchedule>,
    pub indices: Vec<IndexRecord>,
    pub periodicity: Option<PeriodicityCertificate>,
    pub accumulation: Option<Accumulation>,
    /// `|x1 − x0| < 1e-9`; recorded, never a failure.
    pub x1_coincides_with_x0: Option<bool>,
    pub returns: Vec<ReturnCertificate>,
    pub stages: Vec<StageOutcome>,
    pub status: PipelineStatus,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn x1(&self) -> Option<f64> {
        self.accumulation.as_ref().map(|a| a.x1)
    }

    /// Plain-text stage table.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.stages {
            out.push_str(&format!(
                "{:<20} {:<4} {}\n",
                s.stage,
                if s.passed { "ok" } else { "FAIL" },
                s.detail
            ));
        }
        if let Some(a) = &self.accumulation {
            out.push_str(&format!("x1 = {}  subsequence = {:?}\n", a.x1, a.subsequence));
        }
        out.push_str(&format!("status: {}\n", self.status.as_str()));
        out
    }
}

/// Runs every stage: order gate, family assembly, periodicity of `y₀`, second
/// periodic points, accumulation, returns. Stops at the first rejecting stage.
pub fn run(config: &PipelineConfig) -> Result<PipelineReport> {
    config.validate()?;
    let f = &config.map;
    let verdict = star_compare(&config.r, &config.s)?;
    let mut report = PipelineReport {
        report_version: REPORT_VERSION,
        inputs: ReportInputs {
            map: f.clone(),
            x0: config.x0,
            epsilon: config.epsilon,
            r: config.r.to_string(),
            s: config.s.to_string(),
            depth: config.depth,
            max_time: config.max_time,
            grid: config.grid,
        },
        star_order_verdict: verdict,
        schedule: None,
        indices: Vec::new(),
        periodicity: None,
        accumulation: None,
        x1_coincides_with_x0: None,
        returns: Vec::new(),
        stages: Vec::new(),
        status: PipelineStatus::Pass,
    };
    let stage = |report: &mut PipelineReport, name: &str, passed: bool, detail: String| {
        report.stages.push(StageOutcome { stage: name.into(), passed, detail });
        passed
    };

    if !stage(&mut report, "order-gate", verdict == Verdict::Holds, format!("R ◁* S {verdict}")) {
        report.status = match verdict {
            Verdict::Fails => PipelineStatus::RejectedAtOrderGate,
            _ => PipelineStatus::OrderUndetermined,
        };
        return Ok(report);
    }

    let (r_seq, s_seq) = (config.r_seq(), config.s_seq());
    report.schedule = Some(DeltaSchedule::build(f, config.epsilon, &s_seq)?);
    let (family, records) =
        assemble_family(f, config.x0, config.epsilon, &r_seq, &s_seq, config.depth, config.max_time)?;
    report.indices = records;

    let returned = report.indices.iter().filter(|r| r.return_certified).count();
    if !stage(
        &mut report,
        "profile",
        returned > 0,
        format!("{returned}/{} indices return at time Rn", config.depth),
    ) {
        report.status = PipelineStatus::RejectedAtProfile;
        return Ok(report);
    }

    let members: Vec<usize> = family.members.iter().map(|m| m.n).collect();
    if !stage(
        &mut report,
        "perturbation",
        eventually_holds(config.depth, &members),
        format!("{}/{} plans certified", members.len(), config.depth),
    ) {
        report.status = PipelineStatus::RejectedAtPerturbation;
        return Ok(report);
    }

    let witnesses: Vec<(usize, f64)> = report
        .indices
        .iter()
        .filter_map(|r| r.witness.map(|w| (r.n, w.y)))
        .collect();
    let periodicity = periodic_under_family(&family, &witnesses, &r_seq)?;
    let ok = periodicity.passed;
    let detail = format!(
        "{}/{} indices periodic, {} excluded",
        periodicity.entries.iter().filter(|e| e.passed).count(),
        config.depth,
        periodicity.exclusions.len()
    );
    report.periodicity = Some(periodicity);
    if !stage(&mut report, "periodicity", ok, detail) {
        report.status = PipelineStatus::RejectedAtPeriodicity;
        return Ok(report);
    }

    let seconds = find_second_periodic(&family, config.x0, &r_seq, &s_seq, config.grid)?;
    let found: Vec<(usize, f64)> = seconds.iter().filter_map(|s| s.z.map(|z| (s.n, z))).collect();
    for s in seconds {
        let rec = &mut report.indices[s.n - 1];
        if let Some(flag) = &s.flag {
            rec.flags.push(flag.clone());
        }
        rec.second_periodic = Some(s);
    }
    let found_idx: Vec<usize> = found.iter().map(|z| z.0).collect();
    if !stage(
        &mut report,
        "second-periodic",
        eventually_holds(config.depth, &found_idx),
        format!("{}/{} indices have a period-Sn point", found.len(), config.depth),
    ) {
        report.status = PipelineStatus::RejectedAtSecondPeriodic;
        return Ok(report);
    }

    let acc = extract_accumulation(&found)?;
    let coincides = (acc.x1 - config.x0).abs() < COINCIDENCE_TOL;
    let ok = !acc.subsequence.is_empty();
    let detail = format!("x1 = {}, {} indices", acc.x1, acc.subsequence.len());
    let subsequence = acc.subsequence.clone();
    let x1 = acc.x1;
    report.accumulation = Some(acc);
    report.x1_coincides_with_x0 = Some(coincides);
    if !stage(&mut report, "accumulation", ok, detail) {
        report.status = PipelineStatus::RejectedAtAccumulation;
        return Ok(report);
    }

    report.returns = certify_returns(f, x1, &subsequence, &s_seq, &family)?;
    let passed = report.returns.iter().filter(|c| c.passed).count();
    let total = report.returns.len();
    if !stage(
        &mut report,
        "returns",
        passed == total,
        format!("{passed}/{total} neighbourhoods return"),
    ) {
        report.status = PipelineStatus::RejectedAtReturns;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent_config(x0: f64, r: u64, s: u64, depth: usize) -> PipelineConfig {
        PipelineConfig {
            map: PiecewiseLinearMap::tent(),
            map_path: None,
            x0,
            epsilon: 0.5,
            r: HyperInteger::constant(r),
            s: HyperInteger::constant(s),
            depth,
            max_time: 64,
            grid: 4096,
            output: None,
        }
    }

    #[test]
    fn eventual_rule() {
        assert!(eventually_holds(8, &[2, 3, 4, 5, 6, 7, 8]));
        assert!(eventually_holds(8, &[5, 6, 7, 8]));
        assert!(!eventually_holds(8, &[6, 7, 8]));
        assert!(!eventually_holds(8, &[1, 2, 3, 4, 5, 6, 7]));
        assert!(eventually_holds(1, &[1]));
        assert!(!eventually_holds(3, &[]));
    }

    #[test]
    fn tent_family_is_degenerate() {
        let t = PiecewiseLinearMap::tent();
        let (family, records) = assemble_family(&t, 2.0 / 7.0, 0.5, &[3; 8], &[5; 8], 8, 64).unwrap();
        assert_eq!(family.members.len(), 8);
        for r in &records {
            let plan = r.plan.as_ref().unwrap();
            assert!(plan.degenerate);
            assert!(r.plan_certificate.as_ref().unwrap().passed);
            assert_eq!(plan.perturbed, t);
        }
    }

    #[test]
    fn identity_family() {
        let id = PiecewiseLinearMap::identity(Interval::new(0.0, 1.0).unwrap()).unwrap();
        let (family, _) = assemble_family(&id, 0.4, 0.5, &[1; 3], &[1; 3], 3, 8).unwrap();
        assert_eq!(family.members.len(), 3);
        assert!(family.members.iter().all(|m| m.map == id));
    }

    #[test]
    fn nondegenerate_family() {
        let t = PiecewiseLinearMap::tent();
        let x0 = 2.0 / 7.0 + 1e-4;
        let (family, records) = assemble_family(&t, x0, 0.5, &[3; 8], &[5; 8], 8, 64).unwrap();
        assert_eq!(family.members.len(), 8);
        for r in &records {
            let plan = r.plan.as_ref().unwrap();
            assert!(!plan.degenerate);
            assert!(plan.displacement.abs() > 1e-4);
            assert!(r.plan_certificate.as_ref().unwrap().passed, "{:?}", r.plan_certificate);
        }
    }

    #[test]
    fn periodicity_with_exclusions_and_tampering() {
        let t = PiecewiseLinearMap::tent();
        let (mut family, records) = assemble_family(&t, 2.0 / 7.0, 0.5, &[3; 8], &[5; 8], 8, 64).unwrap();
        let witnesses: Vec<(usize, f64)> = records.iter().map(|r| (r.n, r.witness.unwrap().y)).collect();
        assert!(periodic_under_family(&family, &witnesses, &[3; 8]).unwrap().passed);

        family.members.retain(|m| m.n != 1);
        let cert = periodic_under_family(&family, &witnesses, &[3; 8]).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.exclusions, vec![1]);

        let mut tampered = witnesses.clone();
        tampered[4].1 += 0.01;
        let cert = periodic_under_family(&family, &tampered, &[3; 8]).unwrap();
        let e = cert.entries.iter().find(|e| e.n == 5).unwrap();
        assert!(!e.passed && e.residual > 0.01);
        assert!(!cert.passed);
    }

    #[test]
    fn second_periodic_points() {
        let t = PiecewiseLinearMap::tent();
        let (family, _) = assemble_family(&t, 2.0 / 7.0, 0.5, &[3; 4], &[2; 4], 4, 64).unwrap();
        let found = find_second_periodic(&family, 2.0 / 7.0, &[3; 4], &[2; 4], 1024).unwrap();
        for s in &found {
            assert!((s.z.unwrap() - 0.4).abs() < 1e-12);
        }
        let same = find_second_periodic(&family, 2.0 / 7.0, &[3; 4], &[3; 4], 1024).unwrap();
        assert!(same.iter().all(|s| s.z.is_none() && s.flag.is_some()));
    }

    #[test]
    fn accumulation_examples() {
        let all: Vec<(usize, f64)> = (1..=5).map(|n| (n, 0.4)).collect();
        let a = extract_accumulation(&all).unwrap();
        assert_eq!(a.x1, 0.4);
        assert_eq!(a.subsequence, vec![1, 2, 3, 4, 5]);

        // alternating points: tie broken towards the smaller one
        let alt: Vec<(usize, f64)> = (1..=6).map(|n| (n, if n % 2 == 0 { 0.7 } else { 0.2 })).collect();
        let a = extract_accumulation(&alt).unwrap();
        assert_eq!(a.x1, 0.2);
        assert_eq!(a.subsequence, vec![1, 3, 5]);
        let more: Vec<(usize, f64)> = (1..=5).map(|n| (n, if n == 1 { 0.2 } else { 0.7 })).collect();
        assert_eq!(extract_accumulation(&more).unwrap().x1, 0.7);

        let one = extract_accumulation(&[(1, 0.7)]).unwrap();
        assert_eq!((one.x1, one.subsequence.clone()), (0.7, vec![1]));
        assert!(matches!(extract_accumulation(&[]), Err(Error::NoData(_))));
    }

    #[test]
    fn returns_fail_for_displaced_point() {
        let t = PiecewiseLinearMap::tent();
        let family = FamilyDynamics { depth: 1000, members: vec![FamilyMember { n: 1000, map: t.clone() }] };
        let s = vec![5u64; 1000];
        let good = certify_returns(&t, 2.0 / 33.0, &[1000], &s, &family).unwrap();
        assert!(good[0].passed);
        let bad = certify_returns(&t, 2.0 / 33.0 + 0.05, &[1000], &s, &family).unwrap();
        assert!(!bad[0].returns && !bad[0].passed);
        assert!(bad[0].detail.contains("misses"));
    }

    #[test]
    fn tent_pipeline_passes() {
        let report = run(&tent_config(2.0 / 7.0, 3, 5, 8)).unwrap();
        assert_eq!(report.status, PipelineStatus::Pass, "{}", report.summary());
        let x1 = report.x1().unwrap();
        let t = PiecewiseLinearMap::tent();
        let five = find_periodic_points(&t, 5, 4096).unwrap();
        assert!(five.iter().any(|o| o.contains(x1, 1e-8)));
        assert_eq!(report.indices.len(), 8);
        assert_eq!(report.x1_coincides_with_x0, Some(false));
    }

    #[test]
    fn pipeline_rejections() {
        let same = run(&tent_config(2.0 / 7.0, 3, 3, 8)).unwrap();
        assert_eq!(same.status, PipelineStatus::RejectedAtOrderGate);
        let mut short = tent_config(2.0 / 7.0, 3, 5, 8);
        short.max_time = 2;
        assert_eq!(run(&short).unwrap().status, PipelineStatus::RejectedAtProfile);
        let mut alt = tent_config(2.0 / 7.0, 3, 5, 8);
        alt.r = HyperInteger::new(vec![], vec![3, 4]).unwrap();
        assert_eq!(run(&alt).unwrap().status, PipelineStatus::OrderUndetermined);
    }

    #[test]
    fn semigroup_law() {
        let t = PiecewiseLinearMap::tent();
        let (family, _) = assemble_family(&t, 2.0 / 7.0 + 1e-4, 0.5, &[3; 4], &[5; 4], 4, 64).unwrap();
        for m in &family.members {
            for a in 0..=6 {
                for b in 0..=6 {
                    for &x in &[0.1, 2.0 / 7.0 + 1e-4, 0.77] {
                        let lhs = family.iterate(m.n, a + b, x).unwrap();
                        let rhs = family.iterate(m.n, b, family.iterate(m.n, a, x).unwrap()).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
        let times = HyperInteger::constant(3);
        let points = HyperNumber::constant(2.0 / 7.0 + 1e-4);
        for (_, v) in family.evolve(&times, &points).unwrap() {
            assert!((v - (2.0 / 7.0 + 1e-4)).abs() < 1e-12);
        }
    }
}
