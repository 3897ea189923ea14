//! One-hot words for quantizer levels.
//!
//! An `N`-channel quantizer reports `N + 1` levels. Level 0 is the all-zero
//! word and level `k >= 1` sets bit `k - 1`, so bit 0 belongs to the
//! lowest-voltage channel.

use std::fmt;

use crate::error::{Error, Result};

/// Widest word supported.
pub const MAX_WIDTH: usize = 64;

/// A fixed-width word with at most one bit set.
///
/// Words built through [`one_hot_encode`] are always valid. [`OneHotWord::from_bits`]
/// accepts any bit pattern so that an overlap (two bits set) can be represented
/// and then rejected by [`one_hot_decode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OneHotWord {
    bits: u64,
    width: usize,
}

impl OneHotWord {
    pub fn from_bits(bits: u64, width: usize) -> Result<Self> {
        check_width(width)?;
        if width < MAX_WIDTH && bits >> width != 0 {
            return Err(Error::MalformedWord {
                word: format!("{bits:b}"),
                set_bits: bits.count_ones(),
            });
        }
        Ok(OneHotWord { bits, width })
    }

    /// Parse an ASCII bit string, most significant bit first.
    pub fn parse(s: &str) -> Result<Self> {
        let width = s.len();
        check_width(width)?;
        let bits = u64::from_str_radix(s, 2).map_err(|_| Error::MalformedWord {
            word: s.to_string(),
            set_bits: 0,
        })?;
        if s.starts_with('+') {
            return Err(Error::MalformedWord {
                word: s.to_string(),
                set_bits: 0,
            });
        }
        OneHotWord::from_bits(bits, width)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }
}

impl fmt::Display for OneHotWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.width)
    }
}

fn check_width(width: usize) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        return Err(Error::config(format!(
            "one-hot width must be in 1..={MAX_WIDTH}, got {width}"
        )));
    }
    Ok(())
}

pub fn one_hot_encode(level: usize, width: usize) -> Result<OneHotWord> {
    check_width(width)?;
    if level > width {
        return Err(Error::LevelOutOfRange { level, width });
    }
    let bits = if level == 0 { 0 } else { 1u64 << (level - 1) };
    Ok(OneHotWord { bits, width })
}

pub fn one_hot_decode(word: &OneHotWord) -> Result<usize> {
    match word.count_ones() {
        0 => Ok(0),
        1 => Ok(word.bits.trailing_zeros() as usize + 1),
        n => Err(Error::MalformedWord {
            word: word.to_string(),
            set_bits: n,
        }),
    }
}

/// Binary form of a level as it appears alongside its one-hot word: padded to
/// the bit count of the largest full-width value `width - 1`, with the top
/// level allowed to spill over (8 channels print `000` through `111`, then `1000`).
pub fn binary_label(level: usize, width: usize) -> String {
    let pad = usize::BITS as usize - width.saturating_sub(1).leading_zeros() as usize;
    format!("{:0pad$b}", level, pad = pad.max(1))
}

/// All `width + 1` rows of the level to one-hot table, one `binary -> one-hot` pair per line.
pub fn conversion_table(width: usize) -> Result<Vec<String>> {
    (0..=width)
        .map(|level| {
            let word = one_hot_encode(level, width)?;
            Ok(format!("{} -> {}", binary_label(level, width), word))
        })
        .collect()
}
