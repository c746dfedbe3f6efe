//! Frame-generic Dempster-Shafer kernel.
//!
//! A [`MassFunction`] is a basic probability assignment over the focal
//! elements of some frame. The frame is pluggable: any type implementing
//! [`Element`] supplies intersection, emptiness, and a canonical key, and
//! the kernel handles combination, normalization, discounting, and
//! belief/plausibility queries on top of it.
//!
//! Combination of more than two inputs defers renormalization to the end,
//! so the null mass of [`MassFunction::combine_all`] is the total conflict
//! across all inputs, not a pairwise artifact.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

/// Validation tolerance for mass totals. Input tables carry 2-3
/// significant digits, so anything tighter than print precision works.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Entries below this mass are dropped when discounting produces them.
pub const NEGLIGIBLE_MASS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MassError {
    /// All product mass was routed to the empty set; Dempster
    /// normalization is undefined.
    #[error("total conflict: normalization undefined (null mass {null_mass})")]
    TotalConflict { null_mass: f64 },
    #[error("invalid mass function: {0}")]
    Invalid(String),
    /// The element algebra could not represent an intersection exactly.
    #[error("non-representable intersection: {0}")]
    NonRepresentable(String),
}

/// Relation of a focal element to a target hypothesis set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRelation {
    Subset,
    Intersects,
    Disjoint,
}

/// Focal-element contract required of any frame.
///
/// `canonical_key` must map equal canonical forms to equal keys for
/// elements produced by the engine's own intersections; the key order
/// fixes the (deterministic) entry order of every mass function.
pub trait Element: Clone + Debug {
    type Key: Ord + Eq + Hash + Clone + Debug;

    fn universal() -> Self;

    /// Set intersection. May fail when the representation is not closed
    /// under intersection (see the threat frame's containment rule).
    fn intersect(&self, other: &Self) -> Result<Self, MassError>;

    fn is_empty(&self) -> bool;

    fn canonical_key(&self) -> Self::Key;

    fn is_universal(&self) -> bool {
        self.canonical_key() == Self::universal().canonical_key()
    }
}

/// A basic probability assignment: positive masses on nonempty focal
/// elements, summing to one. Entries are kept sorted by canonical key.
#[derive(Debug, Clone)]
pub struct MassFunction<E: Element> {
    entries: Vec<(E, f64)>,
}

impl<E: Element> MassFunction<E> {
    /// Builds a validated mass function. Duplicate elements (by canonical
    /// key) are merged; empty elements and non-positive masses are
    /// rejected; the total must be 1 within [`MASS_TOLERANCE`].
    pub fn new(entries: Vec<(E, f64)>) -> Result<Self, MassError> {
        let mut merged: BTreeMap<E::Key, (E, f64)> = BTreeMap::new();
        for (element, mass) in entries {
            if mass <= 0.0 || !mass.is_finite() {
                return Err(MassError::Invalid(format!(
                    "mass {mass} is not strictly positive"
                )));
            }
            if element.is_empty() {
                return Err(MassError::Invalid(
                    "empty element carries positive mass".into(),
                ));
            }
            merged
                .entry(element.canonical_key())
                .and_modify(|(_, m)| *m += mass)
                .or_insert((element, mass));
        }
        let total: f64 = merged.values().map(|(_, m)| m).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(MassError::Invalid(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            entries: merged.into_values().collect(),
        })
    }

    /// All mass on the universal element: total ignorance.
    pub fn vacuous() -> Self {
        Self {
            entries: vec![(E::universal(), 1.0)],
        }
    }

    pub fn entries(&self) -> &[(E, f64)] {
        &self.entries
    }

    pub fn is_vacuous(&self) -> bool {
        self.entries.len() == 1 && self.entries[0].0.is_universal()
    }

    /// Dempster combination of two mass functions, unnormalized.
    pub fn combine(&self, other: &Self) -> Result<CombinationResult<E>, MassError> {
        Self::combine_all(&[self.clone(), other.clone()])
    }

    /// Left fold of Dempster combination with renormalization deferred to
    /// the end: the resulting null mass is the total conflict across all
    /// inputs and is independent of input order.
    pub fn combine_all(inputs: &[Self]) -> Result<CombinationResult<E>, MassError> {
        let Some((first, rest)) = inputs.split_first() else {
            return Err(MassError::Invalid("combine_all over no inputs".into()));
        };
        let mut acc: BTreeMap<E::Key, (E, f64)> = first
            .entries
            .iter()
            .map(|(e, m)| (e.canonical_key(), (e.clone(), *m)))
            .collect();
        let mut null_mass = 0.0;
        for input in rest {
            let mut next: BTreeMap<E::Key, (E, f64)> = BTreeMap::new();
            for (ea, ma) in acc.values() {
                for (eb, mb) in &input.entries {
                    let product = ma * mb;
                    let element = ea.intersect(eb)?;
                    if element.is_empty() {
                        null_mass += product;
                    } else {
                        next.entry(element.canonical_key())
                            .and_modify(|(_, m)| *m += product)
                            .or_insert((element, product));
                    }
                }
            }
            acc = next;
        }
        if null_mass >= 1.0 - 1e-12 {
            return Err(MassError::TotalConflict { null_mass });
        }
        Ok(CombinationResult {
            entries: acc.into_values().collect(),
            null_mass,
        })
    }

    /// Scales every non-universal focal mass by `1 - rate` and moves the
    /// freed mass to the universal element. `rate` must lie in [0, 1].
    pub fn discount(&self, rate: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&rate),
            "discount rate {rate} outside [0, 1]"
        );
        let universal = E::universal();
        let mut merged: BTreeMap<E::Key, (E, f64)> = BTreeMap::new();
        for (element, mass) in &self.entries {
            let scaled = if element.is_universal() {
                (1.0 - rate) * mass + rate
            } else {
                (1.0 - rate) * mass
            };
            merged
                .entry(element.canonical_key())
                .and_modify(|(_, m)| *m += scaled)
                .or_insert((element.clone(), scaled));
        }
        // The universal element may be absent from the input.
        if !merged.contains_key(&universal.canonical_key()) && rate > 0.0 {
            merged.insert(universal.canonical_key(), (universal, rate));
        }
        let entries = merged
            .into_values()
            .filter(|(_, m)| *m >= NEGLIGIBLE_MASS)
            .collect();
        Self { entries }
    }

    /// Belief in a target set: total mass of focal elements classified as
    /// subsets of the target.
    pub fn bel(&self, classify: impl Fn(&E) -> SetRelation) -> f64 {
        self.entries
            .iter()
            .filter(|(e, _)| classify(e) == SetRelation::Subset)
            .map(|(_, m)| m)
            .sum()
    }

    /// Plausibility of a target set: total mass of focal elements that
    /// meet the target at all.
    pub fn pl(&self, classify: impl Fn(&E) -> SetRelation) -> f64 {
        self.entries
            .iter()
            .filter(|(e, _)| classify(e) != SetRelation::Disjoint)
            .map(|(_, m)| m)
            .sum()
    }
}

/// Output of unnormalized Dempster combination: surviving entries plus
/// the mass routed to the empty set.
#[derive(Debug, Clone)]
pub struct CombinationResult<E: Element> {
    entries: Vec<(E, f64)>,
    null_mass: f64,
}

impl<E: Element> CombinationResult<E> {
    pub fn entries(&self) -> &[(E, f64)] {
        &self.entries
    }

    /// Mass assigned to the null set: the conflict among the inputs.
    pub fn null_mass(&self) -> f64 {
        self.null_mass
    }

    /// Dempster normalization: divides every mass by `1 - null_mass`.
    pub fn normalize(&self) -> Result<MassFunction<E>, MassError> {
        if self.null_mass >= 1.0 - 1e-12 {
            return Err(MassError::TotalConflict {
                null_mass: self.null_mass,
            });
        }
        let scale = 1.0 - self.null_mass;
        MassFunction::new(
            self.entries
                .iter()
                .map(|(e, m)| (e.clone(), m / scale))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitset::BitsetElement;

    type El = BitsetElement<2>;

    fn mf(entries: &[(u32, f64)]) -> MassFunction<El> {
        MassFunction::new(
            entries
                .iter()
                .map(|&(bits, m)| (El::new(bits), m))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn vacuous_is_all_mass_on_universal() {
        let v: MassFunction<El> = MassFunction::vacuous();
        assert_eq!(v.entries().len(), 1);
        assert!(v.entries()[0].0.is_universal());
        assert_eq!(v.entries()[0].1, 1.0);
        // Proper subset of the frame: no belief, full plausibility.
        let target = El::new(0b01);
        assert_eq!(v.bel(|e| e.relation_to(&target)), 0.0);
        assert_eq!(v.pl(|e| e.relation_to(&target)), 1.0);
    }

    #[test]
    fn toy_combine_routes_conflicting_products_to_null() {
        // m1 = {x: 0.6, Θ: 0.4}, m2 = {y: 0.5, Θ: 0.5}, x ∩ y = ∅.
        let m1 = mf(&[(0b01, 0.6), (0b11, 0.4)]);
        let m2 = mf(&[(0b10, 0.5), (0b11, 0.5)]);
        let r = m1.combine(&m2).unwrap();
        assert!((r.null_mass() - 0.30).abs() < 1e-12);
        let mass_of = |bits: u32| {
            r.entries()
                .iter()
                .find(|(e, _)| e.bits() == bits)
                .map(|(_, m)| *m)
                .unwrap_or(0.0)
        };
        assert!((mass_of(0b01) - 0.30).abs() < 1e-12);
        assert!((mass_of(0b10) - 0.20).abs() < 1e-12);
        assert!((mass_of(0b11) - 0.20).abs() < 1e-12);
    }

    #[test]
    fn normalize_divides_by_surviving_mass() {
        let m1 = mf(&[(0b01, 0.6), (0b11, 0.4)]);
        let m2 = mf(&[(0b10, 0.5), (0b11, 0.5)]);
        let n = m1.combine(&m2).unwrap().normalize().unwrap();
        let mass_of = |bits: u32| {
            n.entries()
                .iter()
                .find(|(e, _)| e.bits() == bits)
                .map(|(_, m)| *m)
                .unwrap()
        };
        assert!((mass_of(0b01) - 3.0 / 7.0).abs() < 1e-12);
        assert!((mass_of(0b10) - 2.0 / 7.0).abs() < 1e-12);
        assert!((mass_of(0b11) - 2.0 / 7.0).abs() < 1e-12);
        let x = El::new(0b01);
        assert!((n.bel(|e| e.relation_to(&x)) - 3.0 / 7.0).abs() < 1e-12);
        assert!((n.pl(|e| e.relation_to(&x)) - 5.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn combining_with_vacuous_is_identity() {
        let m = mf(&[(0b01, 0.6), (0b11, 0.4)]);
        let r = m.combine(&MassFunction::vacuous()).unwrap();
        assert_eq!(r.null_mass(), 0.0);
        assert_eq!(r.entries().len(), m.entries().len());
        for ((ea, ma), (eb, mb)) in r.entries().iter().zip(m.entries()) {
            assert_eq!(ea.canonical_key(), eb.canonical_key());
            assert!((ma - mb).abs() < 1e-15);
        }
    }

    #[test]
    fn combine_all_single_input_has_no_conflict() {
        let m = mf(&[(0b01, 0.6), (0b11, 0.4)]);
        let r = MassFunction::combine_all(std::slice::from_ref(&m)).unwrap();
        assert_eq!(r.null_mass(), 0.0);
        assert_eq!(r.entries().len(), 2);
    }

    #[test]
    fn total_conflict_is_an_error() {
        let m1 = mf(&[(0b01, 1.0)]);
        let m2 = mf(&[(0b10, 1.0)]);
        assert!(matches!(
            m1.combine(&m2),
            Err(MassError::TotalConflict { .. })
        ));
    }

    #[test]
    fn discount_endpoints() {
        let m = mf(&[(0b01, 0.6), (0b11, 0.4)]);
        let same = m.discount(0.0);
        for ((ea, ma), (eb, mb)) in same.entries().iter().zip(m.entries()) {
            assert_eq!(ea.canonical_key(), eb.canonical_key());
            assert_eq!(ma, mb);
        }
        assert!(m.discount(1.0).is_vacuous());
    }

    #[test]
    fn discount_moves_mass_to_universal() {
        let m = mf(&[(0b01, 0.18), (0b10, 0.10), (0b11, 0.72)]);
        let d = m.discount(0.4);
        let mass_of = |bits: u32| {
            d.entries()
                .iter()
                .find(|(e, _)| e.bits() == bits)
                .map(|(_, m)| *m)
                .unwrap()
        };
        assert!((mass_of(0b01) - 0.108).abs() < 1e-12);
        assert!((mass_of(0b10) - 0.06).abs() < 1e-12);
        assert!((mass_of(0b11) - (0.6 * 0.72 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(MassFunction::<El>::new(vec![(El::new(0b01), 0.5)]).is_err());
        assert!(MassFunction::<El>::new(vec![(El::new(0b01), -0.5), (El::new(0b11), 1.5)]).is_err());
        assert!(MassFunction::<El>::new(vec![(El::new(0b00), 1.0)]).is_err());
    }

    #[test]
    fn duplicate_entries_are_merged() {
        let m = MassFunction::new(vec![
            (El::new(0b01), 0.3),
            (El::new(0b01), 0.3),
            (El::new(0b11), 0.4),
        ])
        .unwrap();
        assert_eq!(m.entries().len(), 2);
    }
}
