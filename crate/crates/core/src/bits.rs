//! Fixed-width binary vectors used for subcarrier activation patterns.

use std::fmt;

/// A fixed-length bit vector backed by 64-bit words.
///
/// Used for codewords, SAPs and occupancy indicators over the coding
/// subcarriers, where the bitwise-OR and cover tests are the hot
/// operations.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    /// All-zero vector of `len` bits.
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_all_ones(&self) -> bool {
        self.count_ones() == self.len
    }

    /// In-place bitwise OR. Panics on length mismatch (callers validate).
    pub fn or_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "length mismatch in OR");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// `self` is covered by `other`: every set bit of `self` is set in `other`.
    pub fn covered_by(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in cover test");
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_count() {
        let mut v = BitVector::zeros(70);
        v.set(0, true);
        v.set(63, true);
        v.set(64, true);
        v.set(69, true);
        assert_eq!(v.count_ones(), 4);
        assert!(v.get(63) && v.get(64));
        v.set(63, false);
        assert_eq!(v.count_ones(), 3);
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![0, 64, 69]);
    }

    #[test]
    fn or_and_cover() {
        let a = BitVector::from_bools(&[true, false, true, false]);
        let b = BitVector::from_bools(&[false, false, true, true]);
        let mut c = a.clone();
        c.or_assign(&b);
        assert_eq!(c, BitVector::from_bools(&[true, false, true, true]));
        assert!(a.covered_by(&c));
        assert!(b.covered_by(&c));
        assert!(!c.covered_by(&a));
    }

    #[test]
    fn zero_and_all_ones() {
        let v = BitVector::zeros(5);
        assert!(v.is_zero());
        assert!(!v.is_all_ones());
        let w = BitVector::from_bools(&[true; 5]);
        assert!(w.is_all_ones());
    }
}
