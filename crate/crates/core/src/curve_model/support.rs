use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A frequency index `(k1, k2)` in Z².
pub type Freq = (i64, i64);

/// A centered rectangular frequency support of size `k1 × k2`.
///
/// Indices along dimension `d` run over `-⌊k_d/2⌋ ..= ⌊(k_d-1)/2⌋`. The
/// enumeration order is row-major over `(first index, second index)` and is
/// the coefficient layout used everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencySupport {
    k1: usize,
    k2: usize,
}

impl FrequencySupport {
    pub fn new(k1: usize, k2: usize) -> Result<Self> {
        if k1 == 0 || k2 == 0 {
            return Err(Error::contract(format!(
                "support sizes must be positive, got {k1}x{k2}"
            )));
        }
        Ok(FrequencySupport { k1, k2 })
    }

    /// Square `k × k` support.
    pub fn square(k: usize) -> Result<Self> {
        Self::new(k, k)
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn k2(&self) -> usize {
        self.k2
    }

    /// `|Λ| = k1·k2`.
    pub fn len(&self) -> usize {
        self.k1 * self.k2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total degree of the associated complex polynomial, `k1 + k2`.
    pub fn degree(&self) -> usize {
        self.k1 + self.k2
    }

    pub fn is_odd(&self) -> bool {
        self.k1 % 2 == 1 && self.k2 % 2 == 1
    }

    /// Smallest index along each dimension.
    pub fn lower(&self) -> Freq {
        (-((self.k1 / 2) as i64), -((self.k2 / 2) as i64))
    }

    /// Largest index along each dimension.
    pub fn upper(&self) -> Freq {
        (((self.k1 - 1) / 2) as i64, ((self.k2 - 1) / 2) as i64)
    }

    pub fn contains(&self, k: Freq) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        k.0 >= lo.0 && k.0 <= hi.0 && k.1 >= lo.1 && k.1 <= hi.1
    }

    /// Frequency at enumeration position `i`.
    pub fn freq(&self, i: usize) -> Freq {
        let lo = self.lower();
        (lo.0 + (i / self.k2) as i64, lo.1 + (i % self.k2) as i64)
    }

    /// Enumeration position of frequency `k`, if it lies in the support.
    pub fn position(&self, k: Freq) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let lo = self.lower();
        Some((k.0 - lo.0) as usize * self.k2 + (k.1 - lo.1) as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = Freq> + '_ {
        (0..self.len()).map(move |i| self.freq(i))
    }

    /// Whether `other` fits inside `self` componentwise.
    pub fn fits_in(&self, outer: &FrequencySupport) -> bool {
        self.k1 <= outer.k1 && self.k2 <= outer.k2
    }
}

impl std::fmt::Display for FrequencySupport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.k1, self.k2)
    }
}

/// Parses `"K1xK2"` or a single `"K"` for a square support.
impl std::str::FromStr for FrequencySupport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::contract(format!("support must look like 5x5 or 5, got {s:?}"));
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match s.trim().split_once(['x', 'X']) {
            Some((a, b)) => Self::new(parse(a)?, parse(b)?),
            None => Self::square(parse(s)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_ranges() {
        let s = FrequencySupport::new(3, 4).unwrap();
        assert_eq!(s.lower(), (-1, -2));
        assert_eq!(s.upper(), (1, 1));
        assert_eq!(s.len(), 12);
        assert_eq!(s.degree(), 7);
    }

    #[test]
    fn enumeration_is_row_major() {
        let s = FrequencySupport::square(3).unwrap();
        let all: Vec<_> = s.iter().collect();
        assert_eq!(all[0], (-1, -1));
        assert_eq!(all[1], (-1, 0));
        assert_eq!(all[3], (0, -1));
        assert_eq!(all[8], (1, 1));
        for (i, k) in all.iter().enumerate() {
            assert_eq!(s.position(*k), Some(i));
        }
        assert_eq!(s.position((2, 0)), None);
    }

    #[test]
    fn parses_text_form() {
        assert_eq!("3x4".parse::<FrequencySupport>().unwrap(), FrequencySupport::new(3, 4).unwrap());
        assert_eq!("5".parse::<FrequencySupport>().unwrap(), FrequencySupport::square(5).unwrap());
        let s = FrequencySupport::new(7, 2).unwrap();
        assert_eq!(s.to_string().parse::<FrequencySupport>().unwrap(), s);
        assert!("3x".parse::<FrequencySupport>().is_err());
        assert!("0x3".parse::<FrequencySupport>().is_err());
    }

    #[test]
    fn zero_size_rejected() {
        assert!(matches!(
            FrequencySupport::new(0, 3),
            Err(Error::Contract(_))
        ));
    }
}
