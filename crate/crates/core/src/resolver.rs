//! Conflict measurement, attribution, and the non-monotonic resolution
//! loop: combine the arguments, and when conflict exceeds the threshold,
//! test discrediting factors (discounting the culprit argument) or fall
//! back to across-the-board discounting.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::bitset::BitsetElement;
use crate::evidence::{Argument, ArgumentRole};
use crate::frame::{feasible_distance_interval, Disc, Hypothesis, ThreatElement};
use crate::mass::{Element, MassError, MassFunction};

#[derive(Debug, Error)]
pub enum ResolverError {
    #[error(transparent)]
    Mass(#[from] MassError),
    #[error("scenario has no argument in role {0:?}")]
    MissingRole(ArgumentRole),
    #[error("no argument with id {0}")]
    UnknownArgument(String),
    #[error("factor {factor} has no test {test}")]
    UnknownTest { factor: String, test: String },
    #[error("test {test} of factor {factor} was already performed")]
    AlreadyPerformed { factor: String, test: String },
    #[error("null product fits no conflict type: {0}")]
    UnattributedConflict(String),
    #[error("invalid presence belief: {0}")]
    InvalidPresence(String),
}

/// Belief over the two-atom frame {present, absent} of a discrediting
/// factor. Uncommitted mass defaults to absence when deriving rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PresenceBelief {
    pub present: f64,
    pub absent: f64,
    pub uncommitted: f64,
}

type PresenceFrame = BitsetElement<2>;
const PRESENT_BIT: u32 = 0b01;
const ABSENT_BIT: u32 = 0b10;

impl PresenceBelief {
    pub fn new(present: f64, absent: f64) -> Result<Self, ResolverError> {
        if !(0.0..=1.0).contains(&present)
            || !(0.0..=1.0).contains(&absent)
            || present + absent > 1.0 + 1e-9
        {
            return Err(ResolverError::InvalidPresence(format!(
                "present {present} + absent {absent} exceeds 1"
            )));
        }
        Ok(Self {
            present,
            absent,
            uncommitted: (1.0 - present - absent).max(0.0),
        })
    }

    pub fn vacuous() -> Self {
        Self {
            present: 0.0,
            absent: 0.0,
            uncommitted: 1.0,
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.present == 0.0 && self.absent == 0.0
    }

    fn to_mass(self) -> MassFunction<PresenceFrame> {
        let mut entries = Vec::new();
        if self.present > 0.0 {
            entries.push((PresenceFrame::new(PRESENT_BIT), self.present));
        }
        if self.absent > 0.0 {
            entries.push((PresenceFrame::new(ABSENT_BIT), self.absent));
        }
        if self.uncommitted > 0.0 {
            entries.push((PresenceFrame::universal(), self.uncommitted));
        }
        MassFunction::new(entries).expect("validated presence belief")
    }

    /// Dempster combination on the presence frame.
    pub fn combine(&self, other: &PresenceBelief) -> Result<PresenceBelief, MassError> {
        let combined = self.to_mass().combine(&other.to_mass())?.normalize()?;
        let mass_of = |bits: u32| {
            combined
                .entries()
                .iter()
                .find(|(e, _)| e.canonical_key() == bits)
                .map(|(_, m)| *m)
                .unwrap_or(0.0)
        };
        Ok(PresenceBelief {
            present: mass_of(PRESENT_BIT),
            absent: mass_of(ABSENT_BIT),
            uncommitted: mass_of(PRESENT_BIT | ABSENT_BIT),
        })
    }
}

/// Discount rate induced by a presence belief: only belief directly
/// committed to factor presence discounts; uncommitted mass defaults to
/// absence.
pub fn discount_rate_from(belief: &PresenceBelief) -> f64 {
    belief.present
}

/// An information-search option for a discrediting factor. Outcomes are
/// scripted per scenario; the possible-outcome set drives benefit
/// computation, the scripted outcome drives execution.
#[derive(Debug, Clone)]
pub struct Test {
    pub id: String,
    pub cost: f64,
    pub possible_outcomes: Vec<PresenceBelief>,
    pub scripted_outcome: PresenceBelief,
}

/// A condition whose presence rebuts one argument.
#[derive(Debug, Clone)]
pub struct DiscreditingFactor {
    pub id: String,
    pub target_argument: String,
    pub belief: PresenceBelief,
    pub tests: Vec<Test>,
    pub performed_tests: BTreeSet<String>,
}

impl DiscreditingFactor {
    pub fn new(id: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            target_argument: target.into(),
            belief: PresenceBelief::vacuous(),
            tests: Vec::new(),
            performed_tests: BTreeSet::new(),
        }
    }
}

/// Coarse belief over {U, M, D} plus the conflict of the combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoarseReport {
    pub bel_unchanged: f64,
    pub pl_unchanged: f64,
    pub bel_moved: f64,
    pub pl_moved: f64,
    pub bel_different: f64,
    pub pl_different: f64,
    /// Mass assigned to the null set before normalization.
    pub conflict: f64,
    /// 1 − (Bel(U) + Bel(M) + Bel(D)): incompleteness of the evidence.
    pub uncommitted: f64,
}

impl CoarseReport {
    pub fn bel(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::Unchanged => self.bel_unchanged,
            Hypothesis::Moved => self.bel_moved,
            Hypothesis::Different => self.bel_different,
        }
    }

    pub fn pl(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::Unchanged => self.pl_unchanged,
            Hypothesis::Moved => self.pl_moved,
            Hypothesis::Different => self.pl_different,
        }
    }
}

fn discounted_all(arguments: &[Argument]) -> Vec<MassFunction<ThreatElement>> {
    arguments.iter().map(Argument::discounted).collect()
}

/// Total conflict of the current (discounted) arguments.
pub fn current_conflict(arguments: &[Argument]) -> Result<f64, MassError> {
    Ok(MassFunction::combine_all(&discounted_all(arguments))?.null_mass())
}

/// Combines all arguments, normalizes, and reads off coarse belief and
/// plausibility for the three hypotheses.
pub fn coarse_report(arguments: &[Argument]) -> Result<CoarseReport, MassError> {
    let combined = MassFunction::combine_all(&discounted_all(arguments))?;
    let conflict = combined.null_mass();
    let normalized = combined.normalize()?;
    let (bel_unchanged, pl_unchanged) = bel_pl(&normalized, Hypothesis::Unchanged);
    let (bel_moved, pl_moved) = bel_pl(&normalized, Hypothesis::Moved);
    let (bel_different, pl_different) = bel_pl(&normalized, Hypothesis::Different);
    Ok(CoarseReport {
        bel_unchanged,
        pl_unchanged,
        bel_moved,
        pl_moved,
        bel_different,
        pl_different,
        conflict,
        uncommitted: 1.0 - bel_unchanged - bel_moved - bel_different,
    })
}

fn bel_pl(m: &MassFunction<ThreatElement>, h: Hypothesis) -> (f64, f64) {
    (m.bel(|e| e.relation_to(h)), m.pl(|e| e.relation_to(h)))
}

/// The six conflict types of the threat scenario, identified by the
/// triple of reasons (against U, against M, against D):
///
/// 1. contour non-overlap, evidence against movement, distance precludes different
/// 2. contour non-overlap, evidence against movement, coverage good
/// 3. evidence for movement, distance precludes movement, distance precludes different
/// 4. contour non-overlap, distance precludes movement, distance precludes different
/// 5. evidence for movement, distance precludes movement, coverage good
/// 6. contour non-overlap, distance precludes movement, coverage good
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConflictAttribution {
    /// Mass per conflict type, index 0 holding type 1.
    pub mass_by_type: [f64; 6],
}

impl ConflictAttribution {
    pub fn total(&self) -> f64 {
        self.mass_by_type.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReasonAgainstU {
    ContourNonOverlap,
    EvidenceForMovement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReasonAgainstM {
    EvidenceAgainstMovement,
    DistancePrecludesMovement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReasonAgainstD {
    DistancePrecludesDifferent,
    CoverageGood,
}

fn conflict_type_index(
    u: ReasonAgainstU,
    m: ReasonAgainstM,
    d: ReasonAgainstD,
) -> Result<usize, ResolverError> {
    use ReasonAgainstD::*;
    use ReasonAgainstM::*;
    use ReasonAgainstU::*;
    match (u, m, d) {
        (ContourNonOverlap, EvidenceAgainstMovement, DistancePrecludesDifferent) => Ok(0),
        (ContourNonOverlap, EvidenceAgainstMovement, CoverageGood) => Ok(1),
        (EvidenceForMovement, DistancePrecludesMovement, DistancePrecludesDifferent) => Ok(2),
        (ContourNonOverlap, DistancePrecludesMovement, DistancePrecludesDifferent) => Ok(3),
        (EvidenceForMovement, DistancePrecludesMovement, CoverageGood) => Ok(4),
        (ContourNonOverlap, DistancePrecludesMovement, CoverageGood) => Ok(5),
        // The diagonal cannot co-occur with evidence for movement, so the
        // remaining two combinations of the reason grid are infeasible.
        other => Err(ResolverError::UnattributedConflict(format!("{other:?}"))),
    }
}

fn argument_in_role<'a>(
    arguments: &'a [Argument],
    role: ArgumentRole,
) -> Result<&'a Argument, ResolverError> {
    arguments
        .iter()
        .find(|a| a.role == role)
        .ok_or(ResolverError::MissingRole(role))
}

fn location_disc(e: &ThreatElement, role: ArgumentRole) -> Disc {
    let section = e.same_section().or(e.diff_section());
    match (section, role) {
        (Some(pc), ArgumentRole::FirstLocation) => pc.first,
        (Some(pc), ArgumentRole::SecondLocation) => pc.second,
        _ => Disc::Full,
    }
}

/// Classifies every null product of the five-argument scenario by its
/// reasons against U, M, and D, accumulating mass per conflict type.
/// The enumeration is the same product grid Dempster combination folds
/// over, so the per-type masses sum to the total conflict.
pub fn attribute_conflict(arguments: &[Argument]) -> Result<ConflictAttribution, ResolverError> {
    let roles = [
        ArgumentRole::FirstLocation,
        ArgumentRole::SecondLocation,
        ArgumentRole::Movement,
        ArgumentRole::Coverage,
        ArgumentRole::Separation,
    ];
    let mut masses: Vec<MassFunction<ThreatElement>> = Vec::new();
    for role in roles {
        masses.push(argument_in_role(arguments, role)?.discounted());
    }
    let mut by_type = [0.0; 6];
    for (loc1, m1) in masses[0].entries() {
        for (loc2, m2) in masses[1].entries() {
            let interval = feasible_distance_interval(
                &location_disc(loc1, ArgumentRole::FirstLocation),
                &location_disc(loc2, ArgumentRole::SecondLocation),
            );
            for (movement, m3) in masses[2].entries() {
                let move_band = movement
                    .same_section()
                    .expect("movement elements constrain the same-threat section")
                    .band;
                let is_diagonal = move_band.hi == 0.0;
                let same_empty =
                    interval.lo > move_band.hi || move_band.lo > interval.hi;
                for (coverage, m4) in masses[3].entries() {
                    let coverage_good = coverage.diff_section().is_none();
                    for (separation, m5) in masses[4].entries() {
                        let product = m1 * m2 * m3 * m4 * m5;
                        let separation_lo = separation
                            .diff_section()
                            .map(|pc| pc.band.lo)
                            .unwrap_or(0.0);
                        let distance_precludes_different = interval.hi < separation_lo;
                        let diff_empty = coverage_good || distance_precludes_different;
                        if !(same_empty && diff_empty) {
                            continue;
                        }
                        let against_u = if interval.lo > 0.0 {
                            ReasonAgainstU::ContourNonOverlap
                        } else if move_band.lo > 0.0 {
                            ReasonAgainstU::EvidenceForMovement
                        } else {
                            return Err(ResolverError::UnattributedConflict(
                                "null product with no reason against U".into(),
                            ));
                        };
                        let against_m = if is_diagonal {
                            ReasonAgainstM::EvidenceAgainstMovement
                        } else {
                            ReasonAgainstM::DistancePrecludesMovement
                        };
                        let against_d = if coverage_good {
                            ReasonAgainstD::CoverageGood
                        } else {
                            ReasonAgainstD::DistancePrecludesDifferent
                        };
                        by_type[conflict_type_index(against_u, against_m, against_d)?] += product;
                    }
                }
            }
        }
    }
    Ok(ConflictAttribution { mass_by_type: by_type })
}

/// Change in total conflict when the target argument is discounted all
/// the way to vacuous from its current state. Conflict is linear in the
/// discount rate, so this single difference determines the whole line.
pub fn conflict_slope(arguments: &[Argument], target: &str) -> Result<f64, ResolverError> {
    let current = current_conflict(arguments)?;
    let mut probe: Vec<MassFunction<ThreatElement>> = Vec::with_capacity(arguments.len());
    let mut found = false;
    for arg in arguments {
        if arg.id == target {
            probe.push(MassFunction::vacuous());
            found = true;
        } else {
            probe.push(arg.discounted());
        }
    }
    if !found {
        return Err(ResolverError::UnknownArgument(target.into()));
    }
    let vacuous_conflict = MassFunction::combine_all(&probe)?.null_mass();
    Ok(vacuous_conflict - current)
}

/// Maximum conflict reduction a test could deliver: the magnitude of the
/// target's conflict slope times the largest discount-rate gain over the
/// test's possible outcomes. Floored at zero.
pub fn test_benefit(
    factor: &DiscreditingFactor,
    test: &Test,
    arguments: &[Argument],
) -> Result<f64, ResolverError> {
    let slope = conflict_slope(arguments, &factor.target_argument)?;
    let target = arguments
        .iter()
        .find(|a| a.id == factor.target_argument)
        .ok_or_else(|| ResolverError::UnknownArgument(factor.target_argument.clone()))?;
    let mut max_rate = 0.0f64;
    for outcome in &test.possible_outcomes {
        let rate = discount_rate_from(&factor.belief.combine(outcome)?);
        max_rate = max_rate.max(rate);
    }
    Ok(((-slope) * (max_rate - target.discount_rate())).max(0.0))
}

/// A test chosen by the benefit/cost prioritization.
#[derive(Debug, Clone, Serialize)]
pub struct SelectedTest {
    pub factor_id: String,
    pub test_id: String,
    pub benefit: f64,
    pub cost: f64,
}

/// Picks the unperformed test with the highest benefit per unit cost.
/// Ties break toward lower cost, then lexicographic test id, then
/// lexicographic factor id. `None` when nothing clears the ratio floor.
pub fn select_test(
    factors: &[DiscreditingFactor],
    arguments: &[Argument],
    min_benefit_cost_ratio: f64,
) -> Result<Option<SelectedTest>, ResolverError> {
    let mut best: Option<(f64, SelectedTest)> = None;
    let mut order: Vec<&DiscreditingFactor> = factors.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    for factor in order {
        for test in &factor.tests {
            if factor.performed_tests.contains(&test.id) {
                continue;
            }
            let benefit = test_benefit(factor, test, arguments)?;
            let ratio = benefit / test.cost;
            let candidate = SelectedTest {
                factor_id: factor.id.clone(),
                test_id: test.id.clone(),
                benefit,
                cost: test.cost,
            };
            let better = match &best {
                None => true,
                Some((best_ratio, best_sel)) => {
                    ratio > *best_ratio
                        || (ratio == *best_ratio
                            && (candidate.cost < best_sel.cost
                                || (candidate.cost == best_sel.cost
                                    && (candidate.test_id < best_sel.test_id
                                        || (candidate.test_id == best_sel.test_id
                                            && candidate.factor_id < best_sel.factor_id)))))
                }
            };
            if better {
                best = Some((ratio, candidate));
            }
        }
    }
    Ok(match best {
        Some((ratio, sel)) if ratio >= min_benefit_cost_ratio => Some(sel),
        _ => None,
    })
}

/// Performs a test: folds the scripted outcome into the factor's
/// presence belief, derives the new discount rate, and re-discounts the
/// target argument from its original masses.
pub fn apply_outcome(
    factors: &mut [DiscreditingFactor],
    arguments: &mut [Argument],
    factor_id: &str,
    test_id: &str,
) -> Result<(PresenceBelief, f64), ResolverError> {
    let factor = factors
        .iter_mut()
        .find(|f| f.id == factor_id)
        .ok_or_else(|| ResolverError::UnknownArgument(factor_id.into()))?;
    let test = factor
        .tests
        .iter()
        .find(|t| t.id == test_id)
        .ok_or_else(|| ResolverError::UnknownTest {
            factor: factor_id.into(),
            test: test_id.into(),
        })?;
    if factor.performed_tests.contains(test_id) {
        return Err(ResolverError::AlreadyPerformed {
            factor: factor_id.into(),
            test: test_id.into(),
        });
    }
    let outcome = test.scripted_outcome;
    factor.belief = factor.belief.combine(&outcome)?;
    factor.performed_tests.insert(test_id.into());
    let rate = discount_rate_from(&factor.belief);
    let target = arguments
        .iter_mut()
        .find(|a| a.id == factor.target_argument)
        .ok_or_else(|| ResolverError::UnknownArgument(factor.target_argument.clone()))?;
    target.set_discount_rate(rate);
    Ok((outcome, rate))
}

/// Across-the-board discounting: rates proportional to each argument's
/// marginal conflict contribution (times its firmness weight), scaled by
/// the smallest factor that brings conflict at or below `tau`. Returns
/// one incremental rate per argument, in argument order.
pub fn global_discount(arguments: &[Argument], tau: f64) -> Result<Vec<f64>, ResolverError> {
    let n = arguments.len();
    let current = current_conflict(arguments)?;
    if current <= tau {
        return Ok(vec![0.0; n]);
    }
    let mut contributions = vec![0.0f64; n];
    for (i, arg) in arguments.iter().enumerate() {
        let slope = conflict_slope(arguments, &arg.id)?;
        contributions[i] = (-slope).max(0.0) * arg.firmness;
    }
    let c_max = contributions.iter().cloned().fold(0.0f64, f64::max);
    let rates_at = |lambda: f64| -> Vec<f64> {
        if c_max <= 0.0 {
            vec![0.0; n]
        } else {
            contributions.iter().map(|c| lambda * c / c_max).collect()
        }
    };
    let conflict_at = |lambda: f64| -> Result<f64, ResolverError> {
        let masses: Vec<MassFunction<ThreatElement>> = arguments
            .iter()
            .zip(rates_at(lambda))
            .map(|(arg, d)| arg.discounted().discount(d))
            .collect();
        Ok(MassFunction::combine_all(&masses)?.null_mass())
    };
    if conflict_at(1.0)? > tau {
        // Even full proportional discounting is not enough: make every
        // argument vacuous, which drives conflict to zero.
        return Ok(vec![1.0; n]);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if conflict_at(mid)? <= tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(rates_at(hi))
}

/// One recorded step of the resolution process.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum TraceStep {
    /// Pass I: forward-chaining combination of all arguments.
    Combined { report: CoarseReport },
    /// Pass II iteration: a test was chosen and its outcome applied.
    TestPerformed {
        attribution: ConflictAttribution,
        selection: SelectedTest,
        outcome: PresenceBelief,
        new_discount_rate: f64,
        report: CoarseReport,
    },
    /// Pass III: across-the-board discounting.
    GlobalDiscount {
        attribution: ConflictAttribution,
        /// Incremental rate applied per argument id.
        rates: Vec<(String, f64)>,
        report: CoarseReport,
    },
}

/// Auditable record of passes I/II/III.
#[derive(Debug, Clone, Serialize)]
pub struct ResolutionTrace {
    pub steps: Vec<TraceStep>,
    pub final_report: CoarseReport,
    /// Final absolute discount rate per argument id.
    pub final_rates: Vec<(String, f64)>,
}

/// Final state of a resolved scenario.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub trace: ResolutionTrace,
    pub arguments: Vec<Argument>,
    pub factors: Vec<DiscreditingFactor>,
}

#[derive(Debug, Clone, Copy)]
pub struct ResolveOptions {
    pub tau: f64,
    pub min_benefit_cost_ratio: f64,
    /// When false, pass II is skipped entirely and excessive conflict
    /// goes straight to across-the-board discounting.
    pub tests_enabled: bool,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        Self {
            tau: 0.25,
            min_benefit_cost_ratio: 0.0,
            tests_enabled: true,
        }
    }
}

/// Runs the three-pass resolution loop to completion.
pub fn resolve(
    mut arguments: Vec<Argument>,
    mut factors: Vec<DiscreditingFactor>,
    options: ResolveOptions,
) -> Result<Resolution, ResolverError> {
    // Non-vacuous initial factor beliefs discount their targets before
    // any combination happens.
    for factor in &factors {
        if !factor.belief.is_vacuous() {
            let rate = discount_rate_from(&factor.belief);
            if let Some(target) = arguments.iter_mut().find(|a| a.id == factor.target_argument) {
                if rate > target.discount_rate() {
                    target.set_discount_rate(rate);
                }
            }
        }
    }

    let mut steps = Vec::new();
    let mut report = coarse_report(&arguments)?;
    steps.push(TraceStep::Combined { report });

    if report.conflict > options.tau {
        loop {
            let attribution = attribute_conflict(&arguments)?;
            let selection = if options.tests_enabled {
                select_test(&factors, &arguments, options.min_benefit_cost_ratio)?
            } else {
                None
            };
            match selection {
                Some(selection) => {
                    let (outcome, new_rate) = apply_outcome(
                        &mut factors,
                        &mut arguments,
                        &selection.factor_id,
                        &selection.test_id,
                    )?;
                    report = coarse_report(&arguments)?;
                    steps.push(TraceStep::TestPerformed {
                        attribution,
                        selection,
                        outcome,
                        new_discount_rate: new_rate,
                        report,
                    });
                    if report.conflict <= options.tau {
                        break;
                    }
                }
                None => {
                    let increments = global_discount(&arguments, options.tau)?;
                    let mut rates = Vec::with_capacity(arguments.len());
                    for (arg, d) in arguments.iter_mut().zip(&increments) {
                        let combined = arg.discount_rate() + d * (1.0 - arg.discount_rate());
                        arg.set_discount_rate(combined.min(1.0));
                        rates.push((arg.id.clone(), *d));
                    }
                    report = coarse_report(&arguments)?;
                    steps.push(TraceStep::GlobalDiscount {
                        attribution,
                        rates,
                        report,
                    });
                    break;
                }
            }
        }
    }

    let final_rates = arguments
        .iter()
        .map(|a| (a.id.clone(), a.discount_rate()))
        .collect();
    Ok(Resolution {
        trace: ResolutionTrace {
            steps,
            final_report: report,
            final_rates,
        },
        arguments,
        factors,
    })
}
