use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A finite binary string read as a subset of `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SeparatorSnapshot {
    bits: Vec<bool>,
}

impl SeparatorSnapshot {
    pub fn new(bits: Vec<bool>) -> Self {
        SeparatorSnapshot { bits }
    }

    pub fn zeros(len: usize) -> Self {
        SeparatorSnapshot {
            bits: vec![false; len],
        }
    }

    /// Characteristic string of `set` on `[0, len)`.
    pub fn from_set(set: &BTreeSet<usize>, len: usize) -> Self {
        let mut bits = vec![false; len];
        for &x in set.range(..len) {
            bits[x] = true;
        }
        SeparatorSnapshot { bits }
    }

    /// Characteristic string of the complement of `set` on `[0, len)`.
    pub fn complement_of(set: &BTreeSet<usize>, len: usize) -> Self {
        let mut s = Self::from_set(set, len);
        s.bits.iter_mut().for_each(|b| *b = !*b);
        s
    }

    /// Parses strings such as `"0101"`.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(SeparatorSnapshot::new)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn set(&mut self, i: usize, b: bool) {
        self.bits[i] = b;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn members(&self) -> BTreeSet<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }
}

impl fmt::Display for SeparatorSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `A ⊆ X` and `X ∩ B = ∅`, with `A`, `B` required to lie inside `X`'s domain.
pub fn is_separator(x: &SeparatorSnapshot, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Result<bool> {
    if let Some(&e) = a.iter().chain(b.iter()).find(|&&e| e >= x.len()) {
        return Err(Error::DomainMismatch {
            element: e,
            length: x.len(),
        });
    }
    Ok(a.iter().all(|&e| x.bits[e]) && b.iter().all(|&e| !x.bits[e]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separator_examples() {
        let a = BTreeSet::from([1, 4]);
        let b = BTreeSet::from([0, 3]);
        assert!(is_separator(&SeparatorSnapshot::from_set(&a, 6), &a, &b).unwrap());
        assert!(is_separator(&SeparatorSnapshot::complement_of(&b, 6), &a, &b).unwrap());
        let x = SeparatorSnapshot::parse("010").unwrap();
        assert!(!is_separator(&x, &BTreeSet::from([0]), &BTreeSet::new()).unwrap());
    }

    #[test]
    fn domain_mismatch() {
        let x = SeparatorSnapshot::parse("010").unwrap();
        assert_eq!(
            is_separator(&x, &BTreeSet::from([3]), &BTreeSet::new()),
            Err(Error::DomainMismatch {
                element: 3,
                length: 3
            })
        );
    }

    #[test]
    fn display_round_trip() {
        let x = SeparatorSnapshot::parse("10110").unwrap();
        assert_eq!(x.to_string(), "10110");
        assert_eq!(x.members(), BTreeSet::from([0, 2, 3]));
    }
}
