//! Exact symbolic set algebra for the threat-correlation frame A×A×T,
//! where A is the 2-D plane and T = {same, different}.
//!
//! A focal element is stored as two sections, one per T value. Each
//! section constrains the pair of locations (a, b) by a disc for a, a
//! disc for b, and a closed band on the inter-point distance |a−b|.
//! Because the set of distances realizable between two filled discs is a
//! connected interval, emptiness and hypothesis classification are exact.

use crate::mass::{Element, MassError, SetRelation};

/// Tolerance for geometric comparisons; keys quantize reals at 1e-9, so
/// anything indistinguishable at that scale is treated as equal.
const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A closed disc in the plane, or the whole plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disc {
    Full,
    Ball { center: Point, radius: f64 },
}

impl Disc {
    pub fn ball(center: Point, radius: f64) -> Self {
        debug_assert!(radius.is_finite() && radius >= 0.0);
        Disc::Ball { center, radius }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Disc::Full => true,
            Disc::Ball { center, radius } => center.distance_to(p) <= radius + GEOM_EPS,
        }
    }

    pub fn intersects_ball(&self, center: &Point, radius: f64) -> bool {
        match self {
            Disc::Full => true,
            Disc::Ball {
                center: c,
                radius: r,
            } => c.distance_to(center) <= r + radius + GEOM_EPS,
        }
    }
}

/// A closed interval of distances; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBand {
    pub lo: f64,
    pub hi: f64,
}

impl DistanceBand {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo >= 0.0 && lo <= hi);
        Self { lo, hi }
    }

    pub fn full() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn point(d: f64) -> Self {
        Self { lo: d, hi: d }
    }

    /// Intersection; the result may be inverted (lo > hi), meaning empty.
    fn meet(&self, other: &DistanceBand) -> DistanceBand {
        DistanceBand {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    fn is_void(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, d: f64) -> bool {
        self.lo - GEOM_EPS <= d && d <= self.hi + GEOM_EPS
    }
}

/// `{ |a − b| : a ∈ d1, b ∈ d2 }`, which is always a connected closed
/// interval: `[max(0, c − r1 − r2), c + r1 + r2]` for centers `c` apart,
/// and `[0, ∞)` when either disc is the whole plane.
pub fn feasible_distance_interval(d1: &Disc, d2: &Disc) -> DistanceBand {
    match (d1, d2) {
        (Disc::Full, _) | (_, Disc::Full) => DistanceBand::full(),
        (
            Disc::Ball {
                center: c1,
                radius: r1,
            },
            Disc::Ball {
                center: c2,
                radius: r2,
            },
        ) => {
            let c = c1.distance_to(c2);
            DistanceBand {
                lo: (c - r1 - r2).max(0.0),
                hi: c + r1 + r2,
            }
        }
    }
}

/// Constraint on a location pair: disc for the first location, disc for
/// the second, band on their distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConstraint {
    pub first: Disc,
    pub second: Disc,
    pub band: DistanceBand,
}

impl PairConstraint {
    pub fn new(first: Disc, second: Disc, band: DistanceBand) -> Self {
        Self {
            first,
            second,
            band,
        }
    }

    pub fn unconstrained() -> Self {
        Self {
            first: Disc::Full,
            second: Disc::Full,
            band: DistanceBand::full(),
        }
    }

    /// Clips the band to the feasible inter-disc distance interval;
    /// `None` means the constraint admits no location pair.
    fn canonicalize(self) -> Option<PairConstraint> {
        let feasible = feasible_distance_interval(&self.first, &self.second);
        let band = self.band.meet(&feasible);
        if band.is_void() {
            None
        } else {
            Some(PairConstraint {
                first: self.first,
                second: self.second,
                band,
            })
        }
    }

    pub fn is_satisfied_by(&self, a: &Point, b: &Point) -> bool {
        self.first.contains(a) && self.second.contains(b) && self.band.contains(a.distance_to(b))
    }
}

/// True iff no location pair satisfies the constraint. Exact: the
/// feasible distance set of two filled discs is a connected interval.
pub fn section_is_empty(pc: &PairConstraint) -> bool {
    pc.canonicalize().is_none()
}

/// The three coarse hypotheses about the second threat signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Same threat, unchanged location: {(a, a, S)}.
    Unchanged,
    /// Same threat, moved: {(a, b, S) : a ≠ b}.
    Moved,
    /// A different threat: {(a, b, D)}.
    Different,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 3] = [
        Hypothesis::Unchanged,
        Hypothesis::Moved,
        Hypothesis::Different,
    ];

    pub fn letter(&self) -> char {
        match self {
            Hypothesis::Unchanged => 'U',
            Hypothesis::Moved => 'M',
            Hypothesis::Different => 'D',
        }
    }
}

/// A canonical focal element of the frame: one section per T value, with
/// infeasible sections stored as `None` and bands pre-clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreatElement {
    same: Option<PairConstraint>,
    diff: Option<PairConstraint>,
}

impl ThreatElement {
    pub fn new(same: Option<PairConstraint>, diff: Option<PairConstraint>) -> Self {
        Self {
            same: same.and_then(PairConstraint::canonicalize),
            diff: diff.and_then(PairConstraint::canonicalize),
        }
    }

    pub fn same_section(&self) -> Option<&PairConstraint> {
        self.same.as_ref()
    }

    pub fn diff_section(&self) -> Option<&PairConstraint> {
        self.diff.as_ref()
    }

    /// Membership test for a concrete point of the frame.
    pub fn contains(&self, a: &Point, b: &Point, same_threat: bool) -> bool {
        let section = if same_threat { &self.same } else { &self.diff };
        section
            .as_ref()
            .map(|pc| pc.is_satisfied_by(a, b))
            .unwrap_or(false)
    }

    /// Exact classification of this element against a coarse hypothesis.
    pub fn relation_to(&self, h: Hypothesis) -> SetRelation {
        match h {
            Hypothesis::Different => match (&self.same, &self.diff) {
                (None, _) => SetRelation::Subset,
                (_, None) => SetRelation::Disjoint,
                _ => SetRelation::Intersects,
            },
            Hypothesis::Unchanged => {
                // The stored band is already clipped to the feasible
                // interval, so it is the effective distance set.
                let Some(same) = &self.same else {
                    return SetRelation::Disjoint;
                };
                if same.band.lo > 0.0 {
                    return SetRelation::Disjoint;
                }
                if self.diff.is_none() && same.band.hi == 0.0 {
                    SetRelation::Subset
                } else {
                    SetRelation::Intersects
                }
            }
            Hypothesis::Moved => {
                let Some(same) = &self.same else {
                    return SetRelation::Disjoint;
                };
                if same.band.hi == 0.0 {
                    return SetRelation::Disjoint;
                }
                if self.diff.is_none() && same.band.lo > 0.0 {
                    SetRelation::Subset
                } else {
                    SetRelation::Intersects
                }
            }
        }
    }
}

/// Intersection of two discs under the containment rule. The engine only
/// ever meets discs from the same nested contour family, where one disc
/// contains the other; a proper lens is reported as non-representable.
fn intersect_discs(a: &Disc, b: &Disc) -> Result<Option<Disc>, MassError> {
    match (a, b) {
        (Disc::Full, other) | (other, Disc::Full) => Ok(Some(*other)),
        (
            Disc::Ball {
                center: c1,
                radius: r1,
            },
            Disc::Ball {
                center: c2,
                radius: r2,
            },
        ) => {
            let c = c1.distance_to(c2);
            let (rmin, rmax) = if r1 <= r2 { (*r1, *r2) } else { (*r2, *r1) };
            if c + rmin <= rmax + GEOM_EPS {
                // One disc contains the other.
                Ok(Some(if r1 <= r2 { *a } else { *b }))
            } else if c > r1 + r2 + GEOM_EPS {
                Ok(None)
            } else if (c - (r1 + r2)).abs() <= GEOM_EPS {
                // External tangency: a single point on the center line.
                let t = r1 / c;
                let p = Point::new(c1.x + t * (c2.x - c1.x), c1.y + t * (c2.y - c1.y));
                Ok(Some(Disc::ball(p, 0.0)))
            } else {
                Err(MassError::NonRepresentable(format!(
                    "disc intersection is a proper lens (centers {c} apart, radii {r1}, {r2})"
                )))
            }
        }
    }
}

fn intersect_sections(
    a: &Option<PairConstraint>,
    b: &Option<PairConstraint>,
) -> Result<Option<PairConstraint>, MassError> {
    let (Some(a), Some(b)) = (a, b) else {
        return Ok(None);
    };
    let Some(first) = intersect_discs(&a.first, &b.first)? else {
        return Ok(None);
    };
    let Some(second) = intersect_discs(&a.second, &b.second)? else {
        return Ok(None);
    };
    Ok(PairConstraint::new(first, second, a.band.meet(&b.band)).canonicalize())
}

/// Quantized key component for a real coordinate; infinity gets a
/// sentinel so clipped and unclipped unbounded bands compare equal.
fn quantize(x: f64) -> i64 {
    if x.is_infinite() {
        i64::MAX
    } else {
        (x * 1e9).round() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiscKey {
    Full,
    Ball(i64, i64, i64),
}

fn disc_key(d: &Disc) -> DiscKey {
    match d {
        Disc::Full => DiscKey::Full,
        Disc::Ball { center, radius } => {
            DiscKey::Ball(quantize(center.x), quantize(center.y), quantize(*radius))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SectionKey {
    first: DiscKey,
    second: DiscKey,
    lo: i64,
    hi: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThreatElementKey {
    same: Option<SectionKey>,
    diff: Option<SectionKey>,
}

fn section_key(s: &Option<PairConstraint>) -> Option<SectionKey> {
    s.as_ref().map(|pc| SectionKey {
        first: disc_key(&pc.first),
        second: disc_key(&pc.second),
        lo: quantize(pc.band.lo),
        hi: quantize(pc.band.hi),
    })
}

impl Element for ThreatElement {
    type Key = ThreatElementKey;

    fn universal() -> Self {
        ThreatElement {
            same: Some(PairConstraint::unconstrained()),
            diff: Some(PairConstraint::unconstrained()),
        }
    }

    fn intersect(&self, other: &Self) -> Result<Self, MassError> {
        Ok(ThreatElement {
            same: intersect_sections(&self.same, &other.same)?,
            diff: intersect_sections(&self.diff, &other.diff)?,
        })
    }

    fn is_empty(&self) -> bool {
        self.same.is_none() && self.diff.is_none()
    }

    fn canonical_key(&self) -> ThreatElementKey {
        ThreatElementKey {
            same: section_key(&self.same),
            diff: section_key(&self.diff),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(x: f64, y: f64, r: f64) -> Disc {
        Disc::ball(Point::new(x, y), r)
    }

    #[test]
    fn feasible_interval_point_discs() {
        let d = disc(5.0, 5.0, 0.0);
        let i = feasible_distance_interval(&d, &d);
        assert_eq!((i.lo, i.hi), (0.0, 0.0));
    }

    #[test]
    fn feasible_interval_scenario_discs() {
        let d1 = disc(20.0, 20.0, 4.5);
        let d2 = disc(80.0, 80.0, 9.0);
        let i = feasible_distance_interval(&d1, &d2);
        let c = 60.0 * std::f64::consts::SQRT_2;
        assert!((i.lo - (c - 13.5)).abs() < 1e-9);
        assert!((i.hi - (c + 13.5)).abs() < 1e-9);
    }

    #[test]
    fn feasible_interval_with_full_disc() {
        let i = feasible_distance_interval(&Disc::Full, &disc(0.0, 0.0, 3.0));
        assert_eq!(i.lo, 0.0);
        assert!(i.hi.is_infinite());
    }

    #[test]
    fn section_emptiness() {
        let d1 = disc(20.0, 20.0, 4.5);
        let d2 = disc(80.0, 80.0, 9.0);
        // Feasible interval ≈ [71.353, 98.353]; band [10, 13] misses it.
        assert!(section_is_empty(&PairConstraint::new(
            d1,
            d2,
            DistanceBand::new(10.0, 13.0)
        )));
        // Boundary touch is nonempty (closed bands).
        let lo = 60.0 * std::f64::consts::SQRT_2 - 13.5;
        assert!(!section_is_empty(&PairConstraint::new(
            d1,
            d2,
            DistanceBand::point(lo)
        )));
        assert!(!section_is_empty(&PairConstraint::unconstrained()));
    }

    #[test]
    fn intersect_with_universal_is_identity() {
        let e = ThreatElement::new(
            Some(PairConstraint::new(
                disc(20.0, 20.0, 4.5),
                Disc::Full,
                DistanceBand::full(),
            )),
            Some(PairConstraint::new(
                disc(20.0, 20.0, 4.5),
                Disc::Full,
                DistanceBand::full(),
            )),
        );
        let r = e.intersect(&ThreatElement::universal()).unwrap();
        assert_eq!(r.canonical_key(), e.canonical_key());
    }

    #[test]
    fn location_meets_diagonal() {
        // Disc element ∩ diagonal element: same section keeps the disc and
        // the [0,0] band; diff section keeps the disc with the full band.
        let loc = ThreatElement::new(
            Some(PairConstraint::new(
                disc(20.0, 20.0, 4.5),
                Disc::Full,
                DistanceBand::full(),
            )),
            Some(PairConstraint::new(
                disc(20.0, 20.0, 4.5),
                Disc::Full,
                DistanceBand::full(),
            )),
        );
        let diagonal = ThreatElement::new(
            Some(PairConstraint::new(
                Disc::Full,
                Disc::Full,
                DistanceBand::point(0.0),
            )),
            Some(PairConstraint::unconstrained()),
        );
        let r = loc.intersect(&diagonal).unwrap();
        let same = r.same_section().unwrap();
        assert_eq!(same.first, disc(20.0, 20.0, 4.5));
        assert_eq!(same.second, Disc::Full);
        assert_eq!((same.band.lo, same.band.hi), (0.0, 0.0));
        let diff = r.diff_section().unwrap();
        assert_eq!(diff.first, disc(20.0, 20.0, 4.5));
        assert_eq!(diff.band.lo, 0.0);
        assert!(diff.band.hi.is_infinite());
    }

    #[test]
    fn four_way_scenario_product_is_empty() {
        // Bel₁ innermost ∩ Bel₂ innermost ∩ movement band [10,13] ∩
        // coverage S-only: band disjoint from [71.353, 98.353] kills the
        // same section; the S-only element kills the diff section.
        let full_band = DistanceBand::full();
        let loc1 = ThreatElement::new(
            Some(PairConstraint::new(
                disc(20.0, 20.0, 4.5),
                Disc::Full,
                full_band,
            )),
            Some(PairConstraint::new(
                disc(20.0, 20.0, 4.5),
                Disc::Full,
                full_band,
            )),
        );
        let loc2 = ThreatElement::new(
            Some(PairConstraint::new(
                Disc::Full,
                disc(80.0, 80.0, 9.0),
                full_band,
            )),
            Some(PairConstraint::new(
                Disc::Full,
                disc(80.0, 80.0, 9.0),
                full_band,
            )),
        );
        let movement = ThreatElement::new(
            Some(PairConstraint::new(
                Disc::Full,
                Disc::Full,
                DistanceBand::new(10.0, 13.0),
            )),
            Some(PairConstraint::unconstrained()),
        );
        let same_only = ThreatElement::new(Some(PairConstraint::unconstrained()), None);
        let r = loc1
            .intersect(&loc2)
            .unwrap()
            .intersect(&movement)
            .unwrap()
            .intersect(&same_only)
            .unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn canonical_key_clips_bands() {
        let d1 = disc(20.0, 20.0, 4.5);
        let d2 = disc(80.0, 80.0, 9.0);
        let wide = ThreatElement::new(
            Some(PairConstraint::new(d1, d2, DistanceBand::new(0.0, 200.0))),
            None,
        );
        let unbounded = ThreatElement::new(
            Some(PairConstraint::new(d1, d2, DistanceBand::full())),
            None,
        );
        assert_eq!(wide.canonical_key(), unbounded.canonical_key());
    }

    #[test]
    fn empty_and_infeasible_sections_share_a_key() {
        let infeasible = ThreatElement::new(
            Some(PairConstraint::new(
                disc(20.0, 20.0, 4.5),
                disc(80.0, 80.0, 9.0),
                DistanceBand::new(10.0, 13.0),
            )),
            None,
        );
        let empty = ThreatElement::new(None, None);
        assert_eq!(infeasible.canonical_key(), empty.canonical_key());
        assert!(infeasible.is_empty());
    }

    #[test]
    fn hypothesis_classification() {
        // Diff-only element is a subset of D.
        let diff_only = ThreatElement::new(None, Some(PairConstraint::unconstrained()));
        assert_eq!(
            diff_only.relation_to(Hypothesis::Different),
            SetRelation::Subset
        );
        assert_eq!(
            diff_only.relation_to(Hypothesis::Unchanged),
            SetRelation::Disjoint
        );
        assert_eq!(
            diff_only.relation_to(Hypothesis::Moved),
            SetRelation::Disjoint
        );

        // Same-only element with min distance 10: subset of M.
        let moved = ThreatElement::new(
            Some(PairConstraint::new(
                Disc::Full,
                Disc::Full,
                DistanceBand::new(10.0, 13.0),
            )),
            None,
        );
        assert_eq!(moved.relation_to(Hypothesis::Moved), SetRelation::Subset);
        assert_eq!(
            moved.relation_to(Hypothesis::Unchanged),
            SetRelation::Disjoint
        );
        assert_eq!(
            moved.relation_to(Hypothesis::Different),
            SetRelation::Disjoint
        );

        // Same-only element pinned to distance zero: subset of U.
        let unchanged = ThreatElement::new(
            Some(PairConstraint::new(
                disc(0.0, 0.0, 5.0),
                disc(1.0, 0.0, 5.0),
                DistanceBand::point(0.0),
            )),
            None,
        );
        assert_eq!(
            unchanged.relation_to(Hypothesis::Unchanged),
            SetRelation::Subset
        );
        assert_eq!(
            unchanged.relation_to(Hypothesis::Moved),
            SetRelation::Disjoint
        );
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let e = ThreatElement::new(
            Some(PairConstraint::new(
                disc(20.0, 20.0, 4.5),
                disc(80.0, 80.0, 9.0),
                DistanceBand::new(0.0, 200.0),
            )),
            Some(PairConstraint::unconstrained()),
        );
        let again = ThreatElement::new(e.same_section().copied(), e.diff_section().copied());
        assert_eq!(e.canonical_key(), again.canonical_key());
        assert_eq!(e, again);
    }

    #[test]
    fn lens_intersection_is_rejected() {
        let a = disc(0.0, 0.0, 5.0);
        let b = disc(6.0, 0.0, 5.0);
        assert!(matches!(
            intersect_discs(&a, &b),
            Err(MassError::NonRepresentable(_))
        ));
    }

    #[test]
    fn tangent_discs_intersect_in_a_point() {
        let a = disc(0.0, 0.0, 2.0);
        let b = disc(5.0, 0.0, 3.0);
        let r = intersect_discs(&a, &b).unwrap().unwrap();
        match r {
            Disc::Ball { center, radius } => {
                assert!(radius.abs() < 1e-12);
                assert!((center.x - 2.0).abs() < 1e-9);
            }
            Disc::Full => panic!("expected a point disc"),
        }
    }

    #[test]
    fn disjoint_discs_intersect_to_nothing() {
        let a = disc(0.0, 0.0, 1.0);
        let b = disc(10.0, 0.0, 1.0);
        assert!(intersect_discs(&a, &b).unwrap().is_none());
    }
}
