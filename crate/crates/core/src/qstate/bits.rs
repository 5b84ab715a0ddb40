use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::QStateError;

/// A fixed-width bit string, written big-endian (`"01"` has value 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitString {
    value: u64,
    width: u32,
}

impl BitString {
    pub const MAX_WIDTH: u32 = 64;

    pub fn new(value: u64, width: u32) -> Result<Self, QStateError> {
        if width == 0 || width > Self::MAX_WIDTH {
            return Err(QStateError::InvalidBitString(format!(
                "width {width} outside 1..={}",
                Self::MAX_WIDTH
            )));
        }
        if width < 64 && value >> width != 0 {
            return Err(QStateError::InvalidBitString(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        Ok(Self { value, width })
    }

    /// Parses a big-endian string of `0`/`1` characters.
    pub fn parse(text: &str) -> Result<Self, QStateError> {
        let width = u32::try_from(text.len()).unwrap_or(u32::MAX);
        if width == 0 || width > Self::MAX_WIDTH {
            return Err(QStateError::InvalidBitString(format!(
                "{text:?} must have 1..={} characters",
                Self::MAX_WIDTH
            )));
        }
        let mut value = 0u64;
        for c in text.chars() {
            value <<= 1;
            match c {
                '0' => {}
                '1' => value |= 1,
                _ => {
                    return Err(QStateError::InvalidBitString(format!(
                        "{text:?} contains {c:?}"
                    )))
                }
            }
        }
        Ok(Self { value, width })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    /// Bit at position `index` counted from the left (`0` is the most significant).
    pub fn bit(&self, index: u32) -> bool {
        assert!(index < self.width, "bit index {index} out of range");
        (self.value >> (self.width - 1 - index)) & 1 == 1
    }

    /// Every bit flipped.
    pub fn complement(&self) -> Self {
        Self {
            value: !self.value & self.mask(),
            width: self.width,
        }
    }

    /// GF(2) inner product of the raw bits.
    pub fn dot(&self, mask: u64) -> bool {
        (self.value & mask).count_ones() % 2 == 1
    }

    /// Splits into `chunks` equal big-endian pieces of `chunk_width` bits each.
    pub fn chunks(&self, chunk_width: u32) -> Vec<u64> {
        assert!(chunk_width > 0 && self.width.is_multiple_of(chunk_width));
        let count = self.width / chunk_width;
        let mask = (1u64 << chunk_width) - 1;
        (0..count)
            .map(|i| (self.value >> (self.width - (i + 1) * chunk_width)) & mask)
            .collect()
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .cmp(&other.value)
            .then(self.width.cmp(&other.width))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.value, width = self.width as usize)
    }
}

impl FromStr for BitString {
    type Err = QStateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Shorthand for literals in tests and built-ins; panics on malformed input.
pub fn bits(text: &str) -> BitString {
    BitString::parse(text).unwrap_or_else(|e| panic!("bad bit literal: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_is_big_endian() {
        let b = bits("0011");
        assert_eq!(b.value(), 3);
        assert_eq!(b.width(), 4);
        assert!(!b.bit(0));
        assert!(b.bit(3));
        assert_eq!(b.to_string(), "0011");
    }

    #[test]
    fn complement_stays_in_width() {
        assert_eq!(bits("10").complement(), bits("01"));
        assert_eq!(bits("0000").complement(), bits("1111"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BitString::parse("").is_err());
        assert!(BitString::parse("012").is_err());
        assert!(BitString::new(4, 2).is_err());
        assert!(BitString::new(0, 0).is_err());
    }

    #[test]
    fn chunks_split_tables() {
        assert_eq!(bits("0011").chunks(1), vec![0, 0, 1, 1]);
        assert_eq!(bits("00011011").chunks(2), vec![0, 1, 2, 3]);
    }

    proptest! {
        #[test]
        fn text_round_trip(width in 1u32..=64, raw in any::<u64>()) {
            let value = if width == 64 { raw } else { raw & ((1u64 << width) - 1) };
            let b = BitString::new(value, width).unwrap();
            prop_assert_eq!(BitString::parse(&b.to_string()).unwrap(), b);
            prop_assert_eq!(b.complement().complement(), b);
        }
    }
}
