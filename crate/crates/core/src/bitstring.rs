//! Packed fixed-length bit strings.
//!
//! Bits are stored little-endian inside 64-bit words; bit `i` lives in word
//! `i / 64` at position `i % 64`. Position 0 is the leftmost character of the
//! textual rendering. Padding bits of the last word are always zero.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

const WORD: usize = 64;

#[inline]
fn push_set_bits(word_index: usize, mut bits: u64, out: &mut Vec<usize>) {
    while bits != 0 {
        out.push(word_index * WORD + bits.trailing_zeros() as usize);
        bits &= bits - 1;
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bit character {found:?} at position {position}")]
pub struct ParseBitStringError {
    pub position: usize,
    pub found: char,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self {
            len,
            words: vec![u64::MAX; len.div_ceil(WORD)],
        };
        s.clear_padding();
        s
    }

    /// Every bit an independent fair coin.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = Self {
            len,
            words: (0..len.div_ceil(WORD)).map(|_| rng.random()).collect(),
        };
        s.clear_padding();
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut s = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    #[inline]
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Length of the all-ones prefix starting at position 0.
    pub fn leading_ones(&self) -> usize {
        let mut total = 0;
        for &w in &self.words {
            let run = w.trailing_ones() as usize;
            total += run;
            if run < WORD {
                break;
            }
        }
        total.min(self.len)
    }

    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "Hamming distance needs equal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Positions where `self` and `other` differ, in increasing order.
    pub fn diff_positions(&self, other: &Self) -> Vec<usize> {
        let mut out = Vec::new();
        self.diff_positions_into(other, &mut out);
        out
    }

    /// [`diff_positions`](Self::diff_positions) into a reused buffer.
    pub fn diff_positions_into(&self, other: &Self, out: &mut Vec<usize>) {
        assert_eq!(self.len, other.len, "diff needs equal lengths");
        out.clear();
        for (wi, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            push_set_bits(wi, a ^ b, out);
        }
    }

    pub fn complement(&self) -> Self {
        let mut s = Self {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        s.clear_padding();
        s
    }

    /// Overwrites `self` with the complement of `other` without reallocating.
    pub fn complement_from(&mut self, other: &Self) {
        assert_eq!(self.len, other.len);
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w = !o;
        }
        self.clear_padding();
    }

    /// Overwrites `self` with `other` without reallocating.
    #[inline]
    pub fn copy_from(&mut self, other: &Self) {
        assert_eq!(self.len, other.len);
        self.words.copy_from_slice(&other.words);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Positions of the one-bits, in increasing order.
    pub fn ones_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count_ones());
        for (wi, &w) in self.words.iter().enumerate() {
            push_set_bits(wi, w, &mut out);
        }
        out
    }

    fn clear_padding(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = ParseBitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for (position, c) in s.chars().enumerate() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                found => return Err(ParseBitStringError { position, found }),
            }
        }
        Ok(Self::from_bits(bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn rendering_puts_index_zero_first() {
        let mut x = BitString::zeros(4);
        x.set(0, true);
        assert_eq!(x.to_string(), "1000");
        assert_eq!(bs("0110").to_string(), "0110");
    }

    #[test]
    fn ones_clears_padding() {
        let x = BitString::ones(70);
        assert_eq!(x.count_ones(), 70);
        assert_eq!(x.leading_ones(), 70);
        assert_eq!(x.complement().count_ones(), 0);
    }

    #[test]
    fn leading_ones_across_words() {
        let mut x = BitString::ones(130);
        x.flip(100);
        assert_eq!(x.leading_ones(), 100);
        assert_eq!(bs("1101").leading_ones(), 2);
        assert_eq!(bs("0111").leading_ones(), 0);
    }

    #[test]
    fn diff_positions_and_hamming() {
        let a = bs("101100");
        let b = bs("001110");
        assert_eq!(a.diff_positions(&b), vec![0, 4]);
        assert_eq!(a.hamming(&b), 2);
    }

    #[test]
    fn rejects_bad_characters() {
        let err = "10x1".parse::<BitString>().unwrap_err();
        assert_eq!(err.position, 2);
        assert_eq!(err.found, 'x');
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let x = BitString::from_bits(bits.clone());
            prop_assert_eq!(x.to_string().parse::<BitString>().unwrap(), x.clone());
            prop_assert_eq!(x.iter().collect::<Vec<_>>(), bits);
        }

        #[test]
        fn hamming_matches_diff(a in proptest::collection::vec(any::<bool>(), 1..150), seed in any::<u64>()) {
            let x = BitString::from_bits(a.clone());
            let y = BitString::from_bits(a.iter().enumerate().map(|(i, &b)| b ^ ((seed >> (i % 64)) & 1 == 1)));
            prop_assert_eq!(x.hamming(&y), x.diff_positions(&y).len());
            prop_assert_eq!(x.hamming(&x.complement()), x.len());
        }

        #[test]
        fn in_place_helpers_match(a in proptest::collection::vec(any::<bool>(), 1..150)) {
            let x = BitString::from_bits(a.clone());
            let mut y = BitString::zeros(x.len());
            y.complement_from(&x);
            prop_assert_eq!(&y, &x.complement());
            let ones: Vec<usize> = a.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
            prop_assert_eq!(x.ones_positions(), ones);
        }
    }
}
