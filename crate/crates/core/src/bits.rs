//! Bitstring helpers for elements of Z₂ⁿ.
//!
//! Group elements are stored as `u32` with bit 0 the least significant
//! position. Text renderings put the most significant bit first, so the
//! string `"0101"` is the value 5.

use std::fmt;

use thiserror::Error;

/// Inner product over GF(2): parity of the bitwise AND.
#[inline]
pub fn dot(a: u32, b: u32) -> u32 {
    (a & b).count_ones() & 1
}

/// Renders `value` as exactly `width` characters, most significant bit first.
pub fn format_bits(value: u32, width: usize) -> String {
    (0..width)
        .rev()
        .map(|i| if (value >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("invalid character {0:?} in bitstring")]
    InvalidChar(char),
    #[error("bitstring {text:?} has width {got}, expected {expected}")]
    Width {
        text: String,
        got: usize,
        expected: usize,
    },
    #[error("bitstring of width {0} does not fit in 32 bits")]
    TooWide(usize),
}

/// Parses a most-significant-first bitstring of any width up to 32.
pub fn parse_bits(text: &str) -> Result<(u32, usize), BitsError> {
    let width = text.chars().count();
    if width > 32 {
        return Err(BitsError::TooWide(width));
    }
    let mut value = 0u32;
    for c in text.chars() {
        let bit = match c {
            '0' => 0,
            '1' => 1,
            other => return Err(BitsError::InvalidChar(other)),
        };
        value = (value << 1) | bit;
    }
    Ok((value, width))
}

/// Parses a bitstring and checks its width.
pub fn parse_bits_exact(text: &str, width: usize) -> Result<u32, BitsError> {
    let (value, got) = parse_bits(text)?;
    if got != width {
        return Err(BitsError::Width {
            text: text.to_string(),
            got,
            expected: width,
        });
    }
    Ok(value)
}

/// A value together with the register width used to print it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    pub value: u32,
    pub width: usize,
}

impl Bits {
    pub fn new(value: u32, width: usize) -> Self {
        Self { value, width }
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_bits(self.value, self.width))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dot_is_parity_of_and() {
        assert_eq!(dot(0b0101, 0b0010), 0);
        assert_eq!(dot(0b0101, 0b0001), 1);
        assert_eq!(dot(0b0101, 0b1111), 0);
        assert_eq!(dot(0b1011, 0b0010), 1);
    }

    #[test]
    fn format_msb_first() {
        assert_eq!(format_bits(5, 4), "0101");
        assert_eq!(format_bits(0, 0), "");
        assert_eq!(format_bits(1, 3), "001");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert_eq!(parse_bits("01x"), Err(BitsError::InvalidChar('x')));
        assert!(matches!(
            parse_bits_exact("010", 4),
            Err(BitsError::Width { got: 3, .. })
        ));
        assert_eq!(parse_bits(""), Ok((0, 0)));
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(width in 0usize..=32, raw in any::<u32>()) {
            let value = if width == 32 { raw } else { raw & ((1u32 << width) - 1) };
            let text = format_bits(value, width);
            prop_assert_eq!(parse_bits_exact(&text, width), Ok(value));
        }
    }
}
