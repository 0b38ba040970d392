use std::fmt;
use std::str::FromStr;

use super::{CodeError, MAX_GROUPS};

/// Indicator of which clients are malicious (`true` = defective).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DefectiveVector {
    bits: Vec<bool>,
}

impl DefectiveVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    /// Vector of length `n` with ones at the given client indices.
    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut bits = vec![false; n];
        for &i in indices {
            bits[i] = true;
        }
        Self { bits }
    }

    /// Lowest `n` bits of `mask`, client `j` at bit `j`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self {
            bits: (0..n).map(|j| mask >> j & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of defective clients.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Indices of the defective clients, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

impl fmt::Display for DefectiveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for DefectiveVector {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_bits(s).map(Self::new)
    }
}

/// Per-group test outcome or syndrome.
///
/// Group `i` (0-based) is stored at bit `i` of `mask`, so the mask equals
/// the decimal trellis-state label `sum_i s_i 2^i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SyndromeVector {
    len: usize,
    mask: u64,
}

impl SyndromeVector {
    pub fn from_mask(len: usize, mask: u64) -> Result<Self, CodeError> {
        if len > MAX_GROUPS {
            return Err(CodeError::TooManyGroups(len));
        }
        let mask = if len == 64 { mask } else { mask & ((1u64 << len) - 1) };
        Ok(Self { len, mask })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self, CodeError> {
        let mask = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| if b { acc | 1 << i } else { acc });
        Self::from_mask(bits.len(), mask)
    }

    pub fn zeros(len: usize) -> Result<Self, CodeError> {
        Self::from_mask(len, 0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        self.mask >> i & 1 == 1
    }

    pub fn weight(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn distance(&self, other: &Self) -> Result<usize, CodeError> {
        if self.len != other.len {
            return Err(CodeError::DimensionMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok((self.mask ^ other.mask).count_ones() as usize)
    }
}

impl fmt::Display for SyndromeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for SyndromeVector {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_bits(&parse_bits(s)?)
    }
}

fn parse_bits(s: &str) -> Result<Vec<bool>, CodeError> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CodeError::Parse(format!("unexpected character `{other}` in bit string"))),
        })
        .collect()
}
