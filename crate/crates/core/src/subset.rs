//! Helper subsets `S ⊆ {1..L}` as bitmasks; bit `i - 1` marks helper `i`.

use std::fmt;

/// Largest `L` for which full `2^L` subset tables are built.
pub const MAX_TABLE_HELPERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(big_l: usize) -> Self {
        debug_assert!(big_l < 32);
        Subset((1u32 << big_l) - 1)
    }

    pub fn singleton(i: usize) -> Self {
        Subset(1 << (i - 1))
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Self {
        Subset(members.into_iter().fold(0, |m, i| m | (1 << (i - 1))))
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        self.0 >> (i - 1) & 1 == 1
    }

    #[inline]
    pub fn complement(self, big_l: usize) -> Self {
        Subset(!self.0 & Self::full(big_l).0)
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        Subset(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        Subset(self.0 & other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in increasing order, 1-based.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (1..=32).filter(move |&i| bits >> (i - 1) & 1 == 1)
    }

    /// Every subset of `{1..L}`, in bitmask order.
    pub fn all(big_l: usize) -> impl Iterator<Item = Subset> {
        (0..1u32 << big_l).map(Subset)
    }

    /// Copy of `r` with the entries outside this subset set to zero.
    pub fn restrict(self, r: &[f64]) -> Vec<f64> {
        r.iter()
            .enumerate()
            .map(|(k, &v)| if self.contains(k + 1) { v } else { 0.0 })
            .collect()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.members().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let s = Subset::from_members([1, 3]);
        assert_eq!(s.0, 0b101);
        assert!(s.contains(3) && !s.contains(2));
        assert_eq!(s.complement(4), Subset::from_members([2, 4]));
        assert_eq!(s.members().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(s.to_string(), "{1,3}");
        assert_eq!(Subset::all(3).count(), 8);
        assert_eq!(s.restrict(&[1.0, 2.0, 3.0]), vec![1.0, 0.0, 3.0]);
        assert!(Subset::EMPTY.is_subset_of(s));
    }
}
