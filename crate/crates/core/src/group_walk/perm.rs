//! Lehmer-code ranking of permutations.
//!
//! A permutation is stored as its image tuple `(p(0), p(1), ..)`: entry `i`
//! is the vertex occupied at time `t` by the particle that started at `i`.
//! The identity has rank 0 and ranks follow lexicographic order of tuples.

use crate::error::{PermlabError, Result};

/// Largest size for which `n!` fits the `u64` rank space.
pub const MAX_RANKABLE: usize = 20;

pub fn factorial_u64(n: usize) -> u64 {
    (2..=n as u64).product()
}

/// Image tuple of a permutation of `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || seen[x] {
                return Err(PermlabError::precondition(format!(
                    "{images:?} is not a permutation of 0..{n}"
                )));
            }
            seen[x] = true;
        }
        Ok(Permutation(images))
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Permutation(inv)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        Permutation(other.0.iter().map(|&i| self.0[i]).collect())
    }

    /// Lehmer rank in `[0, n!)`.
    pub fn rank(&self) -> u64 {
        let n = self.0.len();
        let mut rank = 0u64;
        for i in 0..n {
            let smaller = self.0[i + 1..].iter().filter(|&&x| x < self.0[i]).count() as u64;
            rank = rank * (n - i) as u64 + smaller;
        }
        rank
    }

    pub fn unrank(n: usize, mut rank: u64) -> Result<Self> {
        if n > MAX_RANKABLE {
            return Err(PermlabError::precondition(format!(
                "cannot rank permutations of more than {MAX_RANKABLE} points"
            )));
        }
        if rank >= factorial_u64(n) {
            return Err(PermlabError::precondition(format!("rank {rank} out of range for n = {n}")));
        }
        let mut digits = vec![0usize; n];
        for i in (0..n).rev() {
            let base = (n - i) as u64;
            digits[i] = (rank % base) as usize;
            rank /= base;
        }
        let mut pool: Vec<usize> = (0..n).collect();
        Ok(Permutation(digits.into_iter().map(|d| pool.remove(d)).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_rank_zero() {
        assert_eq!(Permutation::identity(6).rank(), 0);
        assert_eq!(Permutation::unrank(6, 0).unwrap(), Permutation::identity(6));
    }

    #[test]
    fn ranks_are_lexicographic() {
        let all: Vec<_> = (0..6).map(|r| Permutation::unrank(3, r).unwrap().0).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert!(Permutation::unrank(3, 6).is_err());
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(Permutation::from_images(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_images(vec![0, 3, 1]).is_err());
    }

    proptest! {
        #[test]
        fn rank_round_trip(n in 1usize..10, seed in any::<u64>()) {
            let rank = seed % factorial_u64(n);
            let p = Permutation::unrank(n, rank).unwrap();
            prop_assert_eq!(p.rank(), rank);
            prop_assert_eq!(p.compose(&p.inverse()), Permutation::identity(n));
        }
    }
}
