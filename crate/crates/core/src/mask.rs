use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A fixed-length selection vector: bit `i` set means feature `i` is in the subset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn empty(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn full(len: usize) -> Self {
        Self {
            bits: vec![true; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut m = Self::empty(len);
        for &i in indices {
            m.bits[i] = true;
        }
        m
    }

    /// Bit `i` of `value` selects feature `i`.
    pub fn from_u64(len: usize, value: u64) -> Self {
        debug_assert!(len <= 64);
        Self {
            bits: (0..len).map(|i| (value >> i) & 1 == 1).collect(),
        }
    }

    /// Parses a string of '0'/'1' characters, feature 0 first.
    pub fn parse_bitstring(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidMask(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    /// Parses the hex form produced by [`FeatureMask::to_hex`] (optional `0x` prefix).
    pub fn parse_hex(s: &str, len: usize) -> Result<Self> {
        let digits = s.trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() {
            return Err(Error::InvalidMask("empty hex string".into()));
        }
        let mut bits = vec![false; len];
        for (pos, c) in digits.chars().rev().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::InvalidMask(format!("bad hex digit {c:?}")))?;
            for b in 0..4 {
                if (nibble >> b) & 1 == 1 {
                    let idx = pos * 4 + b;
                    if idx >= len {
                        return Err(Error::InvalidMask(format!(
                            "bit {idx} set but only {len} features"
                        )));
                    }
                    bits[idx] = true;
                }
            }
        }
        Ok(Self { bits })
    }

    /// Hex of the integer `sum(s_i * 2^i)`, most significant nibble first,
    /// zero-padded to `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        let width = self.bits.len().div_ceil(4).max(1);
        let mut out = String::with_capacity(width);
        for d in (0..width).rev() {
            let mut nibble = 0u32;
            for b in 0..4 {
                if self.bits.get(d * 4 + b).copied().unwrap_or(false) {
                    nibble |= 1 << b;
                }
            }
            out.push(char::from_digit(nibble, 16).unwrap());
        }
        out
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn none_selected(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn selected(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn unselected(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (!b).then_some(i))
            .collect()
    }

    /// Integer value with bit `i` = feature `i`; `None` when longer than 64 features.
    pub fn as_u64(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i)),
        )
    }
}

impl fmt::Debug for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureMask({})", self.to_bitstring())
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse_bitstring(&s).map_err(serde::de::Error::custom)
    }
}
