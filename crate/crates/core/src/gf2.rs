//! Linear algebra over Z₂ⁿ.
//!
//! A [`GroupElement`] stores component g₁ at bit index 0. Up to 64 components
//! fit in a single inline word; wider elements spill to a word array. Bases
//! are kept in reduced row-echelon form keyed on the lowest set bit of each
//! vector, so two bases span the same subgroup iff they compare equal.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Largest basis [`Gf2Basis::enumerate_span`] will expand.
pub const SPAN_ENUMERATION_LIMIT: usize = 20;

type Words = SmallVec<[u64; 1]>;

fn word_count(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

/// An element of Z₂ⁿ.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    n: usize,
    words: Words,
}

impl GroupElement {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        Self {
            n,
            words: smallvec![0; word_count(n)],
        }
    }

    /// Builds an element from its little-endian integer encoding (g₁ is bit 0).
    pub fn from_u64(n: usize, value: u64) -> Self {
        let mut g = Self::zero(n);
        let masked = if n >= 64 { value } else { value & ((1u64 << n) - 1) };
        g.words[0] = masked;
        g
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut g = Self::zero(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            g.set(i, b);
        }
        g
    }

    /// Unit vector with a single 1 at `index`.
    pub fn unit(n: usize, index: usize) -> Self {
        let mut g = Self::zero(n);
        g.set(index, true);
        g
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.n, "bit {i} out of range for dimension {}", self.n);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.n, "bit {i} out of range for dimension {}", self.n);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Index of the lowest-index 1 component, the pivot used by [`Gf2Basis`].
    pub fn lowest_set_bit(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    /// Little-endian integer encoding; `None` when n > 64.
    pub fn to_u64(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words[0])
    }

    /// Little-endian encoding, panicking for n > 64.
    pub fn as_index(&self) -> u64 {
        self.to_u64()
            .unwrap_or_else(|| panic!("dimension {} does not fit a machine word", self.n))
    }

    pub fn iter_bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.n).map(|i| self.bit(i))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }

    pub fn try_xor(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        out ^= other;
        Ok(out)
    }
}

/// g · h = (Σ gᵢhᵢ) mod 2.
pub fn dot(g: &GroupElement, h: &GroupElement) -> Result<bool> {
    g.check_same(h)?;
    let ones: u32 = g
        .words
        .iter()
        .zip(&h.words)
        .map(|(a, b)| (a & b).count_ones())
        .sum();
    Ok(ones & 1 == 1)
}

impl BitXorAssign<&GroupElement> for GroupElement {
    fn bitxor_assign(&mut self, rhs: &GroupElement) {
        assert_eq!(self.n, rhs.n, "xor of elements with different dimensions");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl BitXor for &GroupElement {
    type Output = GroupElement;

    fn bitxor(self, rhs: &GroupElement) -> GroupElement {
        let mut out = self.clone();
        out ^= rhs;
        out
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter_bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({self})")
    }
}

impl FromStr for GroupElement {
    type Err = Error;

    /// Parses "g₁g₂…gₙ", e.g. "110".
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidBitstring(s.to_string()));
        }
        let mut g = Self::zero(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => g.set(i, true),
                _ => return Err(Error::InvalidBitstring(s.to_string())),
            }
        }
        Ok(g)
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A linearly independent set of elements in reduced row-echelon form.
///
/// Pivots (lowest set bit of each vector) strictly increase along the list and
/// every pivot column is zero in all other vectors.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Basis {
    n: usize,
    vectors: Vec<GroupElement>,
}

impl Gf2Basis {
    /// Basis of the trivial subgroup {0}.
    pub fn empty(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        Self { n, vectors: Vec::new() }
    }

    /// Basis of the whole group Z₂ⁿ.
    pub fn full(n: usize) -> Self {
        Self {
            n,
            vectors: (0..n).map(|i| GroupElement::unit(n, i)).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[GroupElement] {
        &self.vectors
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.vectors.iter().map(|v| v.lowest_set_bit().expect("basis vectors are nonzero"))
    }

    /// log₂ of the subgroup order.
    pub fn log2_order(&self) -> usize {
        self.rank()
    }

    /// Reduces `g` modulo the span; the result has zeros in every pivot column
    /// and is a canonical coset representative.
    pub fn reduce(&self, g: &GroupElement) -> Result<GroupElement> {
        if g.dimension() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: g.dimension(),
            });
        }
        let mut r = g.clone();
        for v in &self.vectors {
            let p = v.lowest_set_bit().expect("basis vectors are nonzero");
            if r.bit(p) {
                r ^= v;
            }
        }
        Ok(r)
    }

    /// Adds `g` to the basis; returns false when it was already in the span.
    pub fn insert(&mut self, g: &GroupElement) -> Result<bool> {
        let r = self.reduce(g)?;
        let Some(p) = r.lowest_set_bit() else {
            return Ok(false);
        };
        for v in &mut self.vectors {
            if v.bit(p) {
                *v ^= &r;
            }
        }
        let at = self
            .vectors
            .iter()
            .position(|v| v.lowest_set_bit().expect("nonzero") > p)
            .unwrap_or(self.vectors.len());
        self.vectors.insert(at, r);
        Ok(true)
    }

    /// True iff `g` lies in the span.
    pub fn contains(&self, g: &GroupElement) -> Result<bool> {
        Ok(self.reduce(g)?.is_zero())
    }

    /// Basis of {g | g·b = 0 for every b in the basis}.
    pub fn orthogonal_complement(&self) -> Gf2Basis {
        let n = self.n;
        let pivots: Vec<usize> = self.pivots().collect();
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut out = Gf2Basis::empty(n);
        for free in (0..n).filter(|&c| !is_pivot[c]) {
            let mut v = GroupElement::unit(n, free);
            for (row, &p) in self.vectors.iter().zip(&pivots) {
                if row.bit(free) {
                    v.set(p, true);
                }
            }
            out.insert(&v).expect("dimensions agree");
        }
        out
    }

    /// Every element of the span. Refuses bases of rank above
    /// [`SPAN_ENUMERATION_LIMIT`].
    pub fn enumerate_span(&self) -> Result<BTreeSet<GroupElement>> {
        if self.rank() > SPAN_ENUMERATION_LIMIT {
            return Err(Error::SpanTooLarge {
                rank: self.rank(),
                limit: SPAN_ENUMERATION_LIMIT,
            });
        }
        let mut out = BTreeSet::new();
        for mask in 0u64..(1u64 << self.rank()) {
            let mut g = GroupElement::zero(self.n);
            for (k, v) in self.vectors.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    g ^= v;
                }
            }
            out.insert(g);
        }
        Ok(out)
    }

    /// Bitstrings of the basis vectors, in order.
    pub fn to_bitstrings(&self) -> Vec<String> {
        self.vectors.iter().map(ToString::to_string).collect()
    }

    pub fn from_bitstrings<S: AsRef<str>>(n: usize, items: &[S]) -> Result<Self> {
        let elems = items
            .iter()
            .map(|s| s.as_ref().parse::<GroupElement>())
            .collect::<Result<Vec<_>>>()?;
        extract_basis(n, &elems)
    }
}

impl fmt::Debug for Gf2Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Basis(n={}, {:?})", self.n, self.to_bitstrings())
    }
}

/// Gaussian elimination: a linearly independent generating set for ⟨X⟩.
pub fn extract_basis(n: usize, elements: &[GroupElement]) -> Result<Gf2Basis> {
    let mut basis = Gf2Basis::empty(n);
    for g in elements {
        basis.insert(g)?;
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GroupElement {
        s.parse().unwrap()
    }

    fn closure(n: usize, xs: &[GroupElement]) -> BTreeSet<GroupElement> {
        let mut set: BTreeSet<GroupElement> = BTreeSet::from([GroupElement::zero(n)]);
        loop {
            let mut grew = false;
            let current: Vec<_> = set.iter().cloned().collect();
            for a in &current {
                for x in xs {
                    if set.insert(a ^ x) {
                        grew = true;
                    }
                }
            }
            if !grew {
                return set;
            }
        }
    }

    #[test]
    fn dot_examples() {
        assert!(!dot(&g("11"), &g("11")).unwrap());
        assert!(dot(&g("10"), &g("11")).unwrap());
        assert!(!dot(&g("10110111"), &GroupElement::zero(8)).unwrap());
        assert!(matches!(
            dot(&g("10"), &g("101")),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn bitstring_order_is_component_order() {
        let x = g("110");
        assert!(x.bit(0) && x.bit(1) && !x.bit(2));
        assert_eq!(x.as_index(), 0b011);
        assert_eq!(GroupElement::from_u64(3, 0b011), x);
        assert_eq!(x.to_string(), "110");
        assert!("1a0".parse::<GroupElement>().is_err());
        assert!("".parse::<GroupElement>().is_err());
    }

    #[test]
    fn wide_elements_spill_to_word_array() {
        let mut x = GroupElement::zero(130);
        x.set(129, true);
        x.set(64, true);
        assert_eq!(x.lowest_set_bit(), Some(64));
        assert_eq!(x.to_u64(), None);
        let y = GroupElement::unit(130, 129);
        assert!(dot(&x, &y).unwrap());
        let b = extract_basis(130, &[x.clone(), y.clone(), &x ^ &y]).unwrap();
        assert_eq!(b.rank(), 2);
        assert_eq!(b.orthogonal_complement().rank(), 128);
    }

    #[test]
    fn extract_basis_examples() {
        let b = extract_basis(2, &[g("11"), g("11")]).unwrap();
        assert_eq!(b.to_bitstrings(), vec!["11"]);
        assert!(extract_basis(3, &[]).unwrap().is_empty());

        let xs = [g("110"), g("011"), g("101")];
        let b = extract_basis(3, &xs).unwrap();
        assert_eq!(b.rank(), 2);
        assert_eq!(b.enumerate_span().unwrap(), closure(3, &xs));
        assert_eq!(b.enumerate_span().unwrap().len(), 4);
    }

    #[test]
    fn orthogonal_complement_examples() {
        let full = Gf2Basis::empty(3).orthogonal_complement();
        assert_eq!(full, Gf2Basis::full(3));

        let b = extract_basis(2, &[g("11")]).unwrap();
        let perp = b.orthogonal_complement();
        let expected: BTreeSet<_> = (0..4u64)
            .map(|v| GroupElement::from_u64(2, v))
            .filter(|x| !dot(x, &g("11")).unwrap())
            .collect();
        assert_eq!(perp.enumerate_span().unwrap(), expected);
        assert_eq!(perp.to_bitstrings(), vec!["11"]);
    }

    #[test]
    fn contains_examples() {
        let empty = Gf2Basis::empty(2);
        assert!(empty.contains(&GroupElement::zero(2)).unwrap());
        let b = extract_basis(2, &[g("11")]).unwrap();
        assert!(!b.contains(&g("10")).unwrap());
        for v in b.vectors() {
            assert!(b.contains(v).unwrap());
        }
    }

    #[test]
    fn enumerate_span_examples() {
        let e = Gf2Basis::empty(4).enumerate_span().unwrap();
        assert_eq!(e, BTreeSet::from([GroupElement::zero(4)]));
        let b = extract_basis(2, &[g("10"), g("01")]).unwrap();
        assert_eq!(b.enumerate_span().unwrap().len(), 4);
        assert!(matches!(
            Gf2Basis::full(21).enumerate_span(),
            Err(Error::SpanTooLarge { rank: 21, .. })
        ));
    }

    #[test]
    fn echelon_invariants_hold() {
        let b = extract_basis(6, &[g("011010"), g("001101"), g("110000"), g("011010")]).unwrap();
        let pivots: Vec<_> = b.pivots().collect();
        assert!(pivots.windows(2).all(|w| w[0] < w[1]));
        for (k, v) in b.vectors().iter().enumerate() {
            for (l, &p) in pivots.iter().enumerate() {
                assert_eq!(v.bit(p), k == l);
            }
        }
    }
}
