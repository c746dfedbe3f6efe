//! Finite frames as bitsets, for small exact frames (the two-atom
//! factor-presence frame) and for brute-force oracle testing.

use crate::mass::{Element, MassError, SetRelation};

/// A subset of a frame of `N` atoms, `N` ≤ 32. Bit `i` set means atom `i`
/// is in the subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitsetElement<const N: u32> {
    bits: u32,
}

impl<const N: u32> BitsetElement<N> {
    pub fn new(bits: u32) -> Self {
        debug_assert!(bits <= Self::universal_bits());
        Self { bits }
    }

    pub fn atom(index: u32) -> Self {
        debug_assert!(index < N);
        Self { bits: 1 << index }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    const fn universal_bits() -> u32 {
        if N >= 32 {
            u32::MAX
        } else {
            (1 << N) - 1
        }
    }

    pub fn relation_to(&self, target: &Self) -> SetRelation {
        if self.bits & !target.bits == 0 {
            SetRelation::Subset
        } else if self.bits & target.bits != 0 {
            SetRelation::Intersects
        } else {
            SetRelation::Disjoint
        }
    }
}

impl<const N: u32> Element for BitsetElement<N> {
    type Key = u32;

    fn universal() -> Self {
        Self {
            bits: Self::universal_bits(),
        }
    }

    fn intersect(&self, other: &Self) -> Result<Self, MassError> {
        Ok(Self {
            bits: self.bits & other.bits,
        })
    }

    fn is_empty(&self) -> bool {
        self.bits == 0
    }

    fn canonical_key(&self) -> u32 {
        self.bits
    }
}
