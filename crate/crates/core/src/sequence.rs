//! Binary sequence sets and their text file format.
//!
//! A set of `K` codes of length `L` is stored as an `L x K` matrix over
//! `{-1, +1}`; column `i` is code `i` and rows are chip positions. All
//! indices are zero-based.
//!
//! The on-disk format (version 1) is plain text:
//!
//! ```text
//! L K
//! <L characters from {0,1}>   # column 0
//! ...                          # K lines in total
//! ```
//!
//! Character `0` encodes `+1` and `1` encodes `-1`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

/// Smallest supported sequence length.
pub const MIN_LENGTH: usize = 2;

/// Position of one entry of a sequence set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Proposed new value for one entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flip {
    pub at: Coord,
    pub value: i8,
}

impl Flip {
    pub const fn new(at: Coord, value: i8) -> Self {
        Self { at, value }
    }
}

/// Maps a bit to a chip: `0 -> +1`, `1 -> -1`.
#[inline]
pub fn bit_to_chip(bit: u8) -> i8 {
    if bit == 0 {
        1
    } else {
        -1
    }
}

#[inline]
pub fn chip_to_bit(chip: i8) -> u8 {
    u8::from(chip < 0)
}

/// An `L x K` matrix over `{-1, +1}` whose columns are codes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SequenceSet {
    length: usize,
    count: usize,
    // column-major: entry (row, col) lives at col * length + row
    chips: Vec<i8>,
}

impl SequenceSet {
    /// Builds a set from column-major chips.
    pub fn new(length: usize, count: usize, chips: Vec<i8>) -> Result<Self> {
        check_shape(length, count)?;
        if chips.len() != length * count {
            return Err(usage(format!(
                "expected {} chips for a {length}x{count} set, got {}",
                length * count,
                chips.len()
            )));
        }
        if let Some(pos) = chips.iter().position(|&c| c != 1 && c != -1) {
            return Err(usage(format!(
                "chip {} at row {}, column {} is not +1 or -1",
                chips[pos],
                pos % length,
                pos / length
            )));
        }
        Ok(Self {
            length,
            count,
            chips,
        })
    }

    pub fn from_columns<C: AsRef<[i8]>>(columns: &[C]) -> Result<Self> {
        let count = columns.len();
        let length = columns.first().map_or(0, |c| c.as_ref().len());
        if columns.iter().any(|c| c.as_ref().len() != length) {
            return Err(usage("columns have different lengths"));
        }
        let chips = columns.iter().flat_map(|c| c.as_ref().iter().copied()).collect();
        Self::new(length, count, chips)
    }

    /// A set with every chip equal to `value`.
    pub fn filled(length: usize, count: usize, value: i8) -> Result<Self> {
        Self::new(length, count, vec![value; length * count])
    }

    /// Sequence length `L`.
    #[inline]
    pub fn length(&self) -> usize {
        self.length
    }

    /// Number of codes `K`.
    #[inline]
    pub fn num_codes(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.chips[col * self.length + row]
    }

    #[inline]
    pub fn at(&self, c: Coord) -> i8 {
        self.get(c.row, c.col)
    }

    /// Sets one chip. Panics if `value` is not `+1` or `-1`.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: i8) {
        assert!(value == 1 || value == -1, "chip must be +1 or -1");
        self.chips[col * self.length + row] = value;
    }

    #[inline]
    pub fn column(&self, col: usize) -> &[i8] {
        &self.chips[col * self.length..(col + 1) * self.length]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[i8]> {
        self.chips.chunks_exact(self.length)
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.row < self.length && c.col < self.count
    }

    /// Returns a set whose column `n` is column `perm[n]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.count];
        if perm.len() != self.count || perm.iter().any(|&p| p >= self.count || std::mem::replace(&mut seen[p], true)) {
            return Err(usage("not a permutation of the columns"));
        }
        let cols: Vec<&[i8]> = perm.iter().map(|&p| self.column(p)).collect();
        Self::from_columns(&cols)
    }

    /// Circularly shifts column `col` so that new row `m` holds old row `m + shift`.
    pub fn rotate_column(&mut self, col: usize, shift: usize) {
        let len = self.length;
        self.chips[col * len..(col + 1) * len].rotate_left(shift % len);
    }

    pub fn negate_column(&mut self, col: usize) {
        let len = self.length;
        for c in &mut self.chips[col * len..(col + 1) * len] {
            *c = -*c;
        }
    }

    /// Serializes to the version 1 text format.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.length + 1) * (self.count + 1) + 16);
        out.push_str(&format!("{} {}\n", self.length, self.count));
        for col in self.columns() {
            out.extend(col.iter().map(|&c| if chip_to_bit(c) == 0 { '0' } else { '1' }));
            out.push('\n');
        }
        out
    }

    /// Parses the version 1 text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim_end_matches('\r')));
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let mut fields = header.split_whitespace();
        let mut dim = |name: &str| -> Result<usize> {
            fields
                .next()
                .ok_or_else(|| parse_err(1, format!("header is missing {name}")))?
                .parse()
                .map_err(|e| parse_err(1, format!("bad {name}: {e}")))
        };
        let length = dim("L")?;
        let count = dim("K")?;
        if fields.next().is_some() {
            return Err(parse_err(1, "header must be exactly `L K`"));
        }
        check_shape(length, count).map_err(|e| parse_err(1, e.to_string()))?;

        let mut chips = Vec::with_capacity(length * count);
        for col in 0..count {
            let (line, body) = lines
                .next()
                .ok_or_else(|| parse_err(col + 2, format!("expected {count} code lines, found {col}")))?;
            if body.len() != length {
                return Err(parse_err(
                    line,
                    format!("expected {length} characters, found {}", body.len()),
                ));
            }
            for ch in body.chars() {
                chips.push(match ch {
                    '0' => 1,
                    '1' => -1,
                    other => return Err(parse_err(line, format!("invalid character {other:?}"))),
                });
            }
        }
        if let Some((line, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(parse_err(line, format!("unexpected content after {count} code lines")));
        }
        Self::new(length, count, chips)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| with_path(e, path))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| with_path(e, path))?;
        Ok(())
    }
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn check_shape(length: usize, count: usize) -> Result<()> {
    if length < MIN_LENGTH {
        return Err(usage(format!("sequence length must be at least {MIN_LENGTH}, got {length}")));
    }
    if count == 0 {
        return Err(usage("a sequence set needs at least one code"));
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// A set of distinct, in-range entry positions (the free variables of a
/// descent step).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSubset(Vec<Coord>);

impl IndexSubset {
    pub fn new(coords: Vec<Coord>, set: &SequenceSet) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !set.contains(**c)) {
            return Err(usage(format!("index {c} is outside the {}x{} set", set.length(), set.num_codes())));
        }
        let mut sorted = coords.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(usage(format!("duplicate index {}", w[0])));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[Coord] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[Coord]> for IndexSubset {
    fn as_ref(&self) -> &[Coord] {
        &self.0
    }
}
