//! Mixed-radix flattening of fixed-length symbol tuples.
//!
//! Every tuple in this crate has one alphabet for all positions, and position 1
//! is the most significant digit. The ordering is part of the spec-file and
//! export contract, so every table in the crate goes through [`TupleSpace`].

use std::fmt::Write as _;

/// All tuples of length `len` over the alphabet `0..base`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TupleSpace {
    base: usize,
    len: usize,
    count: usize,
}

impl TupleSpace {
    /// Returns `None` when `base^len` does not fit in a `usize`.
    pub fn new(base: usize, len: usize) -> Option<Self> {
        let exp = u32::try_from(len).ok()?;
        let count = base.checked_pow(exp)?;
        Some(Self { base, len, count })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of tuples, `base^len`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Flattens a tuple. Panics in debug builds on a malformed tuple.
    pub fn encode(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.len);
        tuple.iter().fold(0, |acc, &d| {
            debug_assert!(d < self.base);
            acc * self.base + d
        })
    }

    /// Checked variant of [`encode`](Self::encode).
    pub fn try_encode(&self, tuple: &[usize]) -> Option<usize> {
        if tuple.len() != self.len || tuple.iter().any(|&d| d >= self.base) {
            return None;
        }
        Some(self.encode(tuple))
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        debug_assert!(index < self.count);
        for slot in out.iter_mut().rev() {
            *slot = index % self.base;
            index /= self.base;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.count).map(move |i| self.decode(i))
    }
}

/// Renders a tuple as `(a,b,c)` for diagnostics.
pub fn fmt_tuple(tuple: &[usize]) -> String {
    let mut s = String::from("(");
    for (i, d) in tuple.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{d}");
    }
    s.push(')');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_position_is_most_significant() {
        let sp = TupleSpace::new(3, 2).unwrap();
        assert_eq!(sp.count(), 9);
        assert_eq!(sp.encode(&[1, 0]), 3);
        assert_eq!(sp.encode(&[0, 2]), 2);
        assert_eq!(sp.decode(7), vec![2, 1]);
    }

    #[test]
    fn round_trip_all() {
        let sp = TupleSpace::new(2, 4).unwrap();
        for i in 0..sp.count() {
            assert_eq!(sp.encode(&sp.decode(i)), i);
        }
    }

    #[test]
    fn unary_alphabet_has_one_tuple() {
        let sp = TupleSpace::new(1, 5).unwrap();
        assert_eq!(sp.count(), 1);
        assert_eq!(sp.decode(0), vec![0; 5]);
    }

    #[test]
    fn try_encode_rejects_bad_tuples() {
        let sp = TupleSpace::new(2, 2).unwrap();
        assert_eq!(sp.try_encode(&[0, 2]), None);
        assert_eq!(sp.try_encode(&[0]), None);
        assert_eq!(sp.try_encode(&[1, 1]), Some(3));
    }

    #[test]
    fn overflow_is_none() {
        assert!(TupleSpace::new(2, 200).is_none());
    }
}
