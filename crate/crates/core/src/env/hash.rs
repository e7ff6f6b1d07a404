//! Counter-based hashing used to realize pair states deterministically.

use crate::lattice::LatticePoint;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into a 64-bit digest keyed by `seed`.
#[inline]
pub fn hash_words(seed: u64, words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ w);
    }
    h
}

/// Hash of the unordered pair `{x, y}`; symmetric by canonical ordering.
#[inline]
pub fn pair_hash(seed: u64, x: LatticePoint, y: LatticePoint) -> u64 {
    let (a, b) = LatticePoint::canonical_pair(x, y);
    ordered_pair_hash(seed, a, b)
}

/// [`pair_hash`] for a pair already in canonical order (`a < b`).
/// Coordinates are absorbed with a multiply-xorshift step and the result
/// goes through one full finalizer.
#[inline]
pub fn ordered_pair_hash(seed: u64, a: LatticePoint, b: LatticePoint) -> u64 {
    debug_assert!(a < b);
    let mut h = seed ^ GOLDEN;
    for i in 0..a.dim() {
        h = (h ^ a.coord(i) as u64).wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 32;
    }
    for i in 0..b.dim() {
        h = (h ^ b.coord(i) as u64).wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 32;
    }
    mix64(h)
}

/// Maps a digest to `[0, 1)` using its top 53 bits (i.e. `h / 2^64` rounded down
/// to double precision).
#[inline]
pub fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed for a per-vertex random stream, distinct for each `tag`.
pub fn vertex_stream_seed(seed: u64, x: LatticePoint, tag: u64) -> u64 {
    hash_words(
        seed ^ tag.wrapping_mul(GOLDEN),
        x.coords().iter().map(|&c| c as u64),
    )
}

/// Derives the `index`-th child seed of `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    hash_words(seed, [index, 0x5eed])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval() {
        assert_eq!(to_unit(0), 0.0);
        assert!(to_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn pair_hash_symmetric() {
        let a = LatticePoint::new(&[5, -3]).unwrap();
        let b = LatticePoint::new(&[-2, 11]).unwrap();
        assert_eq!(pair_hash(7, a, b), pair_hash(7, b, a));
        assert_ne!(pair_hash(7, a, b), pair_hash(8, a, b));
    }

    #[test]
    fn child_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|i| child_seed(1, i)).collect();
        let mut d = s.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), s.len());
    }
}
