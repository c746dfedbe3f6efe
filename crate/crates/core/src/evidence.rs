//! Construction of the five scenario belief functions from contour
//! tables, and the `Argument` wrapper carrying Toulmin metadata and
//! discounting state.

use thiserror::Error;

use crate::frame::{Disc, DistanceBand, PairConstraint, Point, ThreatElement};
use crate::mass::{Element, MassError, MassFunction, MASS_TOLERANCE};

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("bad table for {table}: {reason}")]
    BadTable { table: String, reason: String },
    #[error(transparent)]
    Mass(#[from] MassError),
}

fn bad(table: &str, reason: impl Into<String>) -> EvidenceError {
    EvidenceError::BadTable {
        table: table.into(),
        reason: reason.into(),
    }
}

/// One row of a nested location-contour table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourRow {
    pub radius: f64,
    pub mass: f64,
}

/// One row of a distance-band table (movement or separation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRow {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Which of the five evidential roles an argument plays in the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgumentRole {
    /// Prior localization of the first threat.
    FirstLocation,
    /// Localization of the second signal.
    SecondLocation,
    /// Movement-range evidence, including the "unchanged, if same" mass.
    Movement,
    /// Thoroughness of prior area intelligence.
    Coverage,
    /// Minimum separation of genuinely different threats.
    Separation,
}

/// Which location coordinate a contour table constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationCoordinate {
    First,
    Second,
}

/// Toulmin-style descriptive metadata. The resolution algorithms never
/// compute on these; they exist for report output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToulminInfo {
    pub grounds: String,
    pub warrant: String,
    pub backing: String,
}

/// A belief function plus its argumentation metadata and discount state.
/// The undiscounted mass function is retained so updated rates never
/// compound: discounting always restarts from the original masses.
#[derive(Debug, Clone)]
pub struct Argument {
    pub id: String,
    pub role: ArgumentRole,
    pub toulmin: ToulminInfo,
    /// Ids of discrediting factors that can rebut this argument.
    pub rebuttals: Vec<String>,
    /// Optional resistance weight used by across-the-board discounting.
    pub firmness: f64,
    original: MassFunction<ThreatElement>,
    discount_rate: f64,
}

impl Argument {
    pub fn new(id: impl Into<String>, role: ArgumentRole, mass: MassFunction<ThreatElement>) -> Self {
        Self {
            id: id.into(),
            role,
            toulmin: ToulminInfo::default(),
            rebuttals: Vec::new(),
            firmness: 1.0,
            original: mass,
            discount_rate: 0.0,
        }
    }

    /// The mass function as originally constructed, before discounting.
    pub fn original_mass(&self) -> &MassFunction<ThreatElement> {
        &self.original
    }

    pub fn discount_rate(&self) -> f64 {
        self.discount_rate
    }

    pub fn set_discount_rate(&mut self, rate: f64) {
        assert!((0.0..=1.0).contains(&rate));
        self.discount_rate = rate;
    }

    /// The mass function currently in force: the original discounted by
    /// the current rate.
    pub fn discounted(&self) -> MassFunction<ThreatElement> {
        self.original.discount(self.discount_rate)
    }
}

fn full_band_section(disc1: Disc, disc2: Disc) -> PairConstraint {
    PairConstraint::new(disc1, disc2, DistanceBand::full())
}

/// Location evidence: nested discs around a center, each constraining one
/// coordinate of the pair and saying nothing about T.
pub fn build_location_bel(
    id: impl Into<String>,
    coordinate: LocationCoordinate,
    center: Point,
    rows: &[ContourRow],
) -> Result<Argument, EvidenceError> {
    let id = id.into();
    if rows.is_empty() {
        return Err(bad(&id, "no contour rows"));
    }
    let mut previous = 0.0;
    for row in rows {
        if !row.radius.is_finite() || row.radius <= 0.0 {
            return Err(bad(&id, format!("radius {} must be finite and > 0", row.radius)));
        }
        if row.radius <= previous {
            return Err(bad(&id, "radii must be strictly increasing"));
        }
        previous = row.radius;
    }
    check_mass_total(&id, rows.iter().map(|r| r.mass).sum::<f64>())?;
    let entries = rows
        .iter()
        .map(|row| {
            let disc = Disc::ball(center, row.radius);
            let section = match coordinate {
                LocationCoordinate::First => full_band_section(disc, Disc::Full),
                LocationCoordinate::Second => full_band_section(Disc::Full, disc),
            };
            (
                ThreatElement::new(Some(section), Some(section)),
                row.mass,
            )
        })
        .collect();
    let role = match coordinate {
        LocationCoordinate::First => ArgumentRole::FirstLocation,
        LocationCoordinate::Second => ArgumentRole::SecondLocation,
    };
    Ok(Argument::new(id, role, MassFunction::new(entries)?))
}

/// Movement evidence: a diagonal "unchanged, if same" element plus nested
/// distance bands, all silent about the different-threat case.
pub fn build_movement_bel(
    id: impl Into<String>,
    diagonal_mass: f64,
    band_rows: &[BandRow],
) -> Result<Argument, EvidenceError> {
    let id = id.into();
    if !(0.0..=1.0).contains(&diagonal_mass) {
        return Err(bad(&id, format!("diagonal mass {diagonal_mass} outside [0, 1]")));
    }
    for row in band_rows {
        if row.lo < 0.0 || row.lo > row.hi {
            return Err(bad(&id, format!("band [{}, {}] is not a valid interval", row.lo, row.hi)));
        }
    }
    // Containment nesting: each band lies inside the next.
    for pair in band_rows.windows(2) {
        if !(pair[1].lo <= pair[0].lo && pair[0].hi <= pair[1].hi) {
            return Err(bad(&id, "band rows must be nested by containment"));
        }
    }
    check_mass_total(
        &id,
        diagonal_mass + band_rows.iter().map(|r| r.mass).sum::<f64>(),
    )?;
    let mut entries = Vec::new();
    if diagonal_mass > 0.0 {
        entries.push((
            ThreatElement::new(
                Some(PairConstraint::new(
                    Disc::Full,
                    Disc::Full,
                    DistanceBand::point(0.0),
                )),
                Some(PairConstraint::unconstrained()),
            ),
            diagonal_mass,
        ));
    }
    for row in band_rows {
        // A [0, ∞) row carries no information at all: the universal element.
        entries.push((
            ThreatElement::new(
                Some(PairConstraint::new(
                    Disc::Full,
                    Disc::Full,
                    DistanceBand::new(row.lo, row.hi),
                )),
                Some(PairConstraint::unconstrained()),
            ),
            row.mass,
        ));
    }
    Ok(Argument::new(
        id,
        ArgumentRole::Movement,
        MassFunction::new(entries)?,
    ))
}

/// Area-intelligence evidence: mass on "threats are the same" plus
/// uncommitted mass.
pub fn build_coverage_bel(id: impl Into<String>, same_mass: f64) -> Result<Argument, EvidenceError> {
    let id = id.into();
    if !(0.0..=1.0).contains(&same_mass) {
        return Err(bad(&id, format!("same-threat mass {same_mass} outside [0, 1]")));
    }
    let mut entries = Vec::new();
    if same_mass > 0.0 {
        entries.push((
            ThreatElement::new(Some(PairConstraint::unconstrained()), None),
            same_mass,
        ));
    }
    if same_mass < 1.0 {
        entries.push((ThreatElement::universal(), 1.0 - same_mass));
    }
    Ok(Argument::new(
        id,
        ArgumentRole::Coverage,
        MassFunction::new(entries)?,
    ))
}

/// Separation evidence: "if different, at least this far apart", silent
/// about the same-threat case. Lower bounds decrease down the table.
pub fn build_separation_bel(
    id: impl Into<String>,
    rows: &[BandRow],
) -> Result<Argument, EvidenceError> {
    let id = id.into();
    if rows.is_empty() {
        return Err(bad(&id, "no band rows"));
    }
    let mut previous = f64::INFINITY;
    for row in rows {
        if row.lo < 0.0 {
            return Err(bad(&id, format!("lower bound {} is negative", row.lo)));
        }
        if !row.hi.is_infinite() {
            return Err(bad(&id, "separation rows must be unbounded above"));
        }
        if row.lo >= previous {
            return Err(bad(&id, "lower bounds must be strictly decreasing"));
        }
        previous = row.lo;
    }
    check_mass_total(&id, rows.iter().map(|r| r.mass).sum::<f64>())?;
    let entries = rows
        .iter()
        .map(|row| {
            (
                ThreatElement::new(
                    Some(PairConstraint::unconstrained()),
                    Some(PairConstraint::new(
                        Disc::Full,
                        Disc::Full,
                        DistanceBand::new(row.lo, f64::INFINITY),
                    )),
                ),
                row.mass,
            )
        })
        .collect();
    Ok(Argument::new(
        id,
        ArgumentRole::Separation,
        MassFunction::new(entries)?,
    ))
}

fn check_mass_total(table: &str, total: f64) -> Result<(), EvidenceError> {
    if (total - 1.0).abs() > MASS_TOLERANCE {
        Err(bad(table, format!("masses sum to {total}, expected 1")))
    } else {
        Ok(())
    }
}
