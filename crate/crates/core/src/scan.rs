//! Nested-block scans of a length-`n` sequence.
//!
//! A scan picks one contiguous block of every size `1..=n` such that each block
//! sits inside the next one. Reading a scan from the full block downwards, every
//! step removes either the leftmost or the rightmost observation, so a scan is
//! encoded by its `n - 1` shrink directions. Every shrink sequence is feasible,
//! which makes the encoding a bijection onto the `2^(n-1)` scans.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on `n` for [`enumerate_scans`].
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// One deconstruction step: which end of the current block is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shrink {
    /// Drop the leftmost observation (read upwards: prepend on the left).
    Left,
    /// Drop the rightmost observation (read upwards: append on the right).
    Right,
}

impl Shrink {
    fn as_char(self) -> char {
        match self {
            Shrink::Left => 'L',
            Shrink::Right => 'R',
        }
    }
}

/// The contiguous block `(X_start, ..., X_{start+size-1})`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockWindow {
    pub start: usize,
    pub size: usize,
}

impl BlockWindow {
    /// Validated constructor for a series of length `n`.
    pub fn new(start: usize, size: usize, n: usize) -> Result<Self> {
        if start == 0 || size == 0 || start + size - 1 > n {
            return Err(Error::Domain(format!(
                "block (start {start}, size {size}) does not fit a series of length {n}"
            )));
        }
        Ok(Self { start, size })
    }

    /// Last index covered by the window (1-based, inclusive).
    pub fn end(&self) -> usize {
        self.start + self.size - 1
    }

    pub fn contains(&self, other: &BlockWindow) -> bool {
        self.start <= other.start && other.end() <= self.end()
    }

    /// Zero-based slice of `series` covered by this window.
    pub fn slice<'a>(&self, series: &'a [f64]) -> &'a [f64] {
        &series[self.start - 1..self.end()]
    }
}

/// A scan of a length-`n` sequence, stored as its shrink sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScanPath {
    n: usize,
    shrinks: Vec<Shrink>,
}

impl ScanPath {
    pub fn from_shrinks(n: usize, shrinks: Vec<Shrink>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLength(0));
        }
        if shrinks.len() != n - 1 {
            return Err(Error::Shape {
                expected: n - 1,
                got: shrinks.len(),
            });
        }
        Ok(Self { n, shrinks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Shrink directions from the full block down to size one.
    pub fn shrinks(&self) -> &[Shrink] {
        &self.shrinks
    }

    /// 1-based start index of the size-one block.
    pub fn start(&self) -> usize {
        1 + self.shrinks.iter().filter(|&&s| s == Shrink::Left).count()
    }

    /// Expansion directions from size one up to the full block.
    pub fn expansions(&self) -> impl DoubleEndedIterator<Item = Shrink> + ExactSizeIterator + '_ {
        self.shrinks.iter().rev().copied()
    }

    /// Blocks of sizes `1..=n` in increasing order.
    pub fn windows(&self) -> Windows<'_> {
        Windows {
            expansions: self.shrinks.iter().rev(),
            current: None,
            start: self.start(),
        }
    }

    /// Block of size `k`.
    pub fn block_of_size(&self, k: usize) -> Result<BlockWindow> {
        if k == 0 || k > self.n {
            return Err(Error::Domain(format!(
                "block size {k} outside 1..={}",
                self.n
            )));
        }
        let lefts = self.shrinks[..self.n - k]
            .iter()
            .filter(|&&s| s == Shrink::Left)
            .count();
        Ok(BlockWindow {
            start: 1 + lefts,
            size: k,
        })
    }
}

/// Iterator over a scan's blocks, smallest first.
pub struct Windows<'a> {
    expansions: std::iter::Rev<std::slice::Iter<'a, Shrink>>,
    current: Option<BlockWindow>,
    start: usize,
}

impl Iterator for Windows<'_> {
    type Item = BlockWindow;

    fn next(&mut self) -> Option<BlockWindow> {
        let next = match self.current {
            None => BlockWindow {
                start: self.start,
                size: 1,
            },
            Some(w) => match self.expansions.next()? {
                Shrink::Left => BlockWindow {
                    start: w.start - 1,
                    size: w.size + 1,
                },
                Shrink::Right => BlockWindow {
                    start: w.start,
                    size: w.size + 1,
                },
            },
        };
        self.current = Some(next);
        Some(next)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.expansions.len() + usize::from(self.current.is_none());
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for Windows<'_> {}

/// Compact `j:LRRL...` form: start index, then expansion directions.
impl fmt::Display for ScanPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.start())?;
        for e in self.expansions() {
            write!(f, "{}", e.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for ScanPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (start, dirs) = s
            .split_once(':')
            .ok_or_else(|| Error::Domain(format!("scan `{s}` lacks a `:` separator")))?;
        let start: usize = start
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad scan start index `{start}`")))?;
        let mut expansions = Vec::with_capacity(dirs.len());
        for c in dirs.chars() {
            expansions.push(match c {
                'L' => Shrink::Left,
                'R' => Shrink::Right,
                other => {
                    return Err(Error::Domain(format!("bad scan direction `{other}`")));
                }
            });
        }
        let lefts = expansions.iter().filter(|&&e| e == Shrink::Left).count();
        if start != 1 + lefts {
            return Err(Error::Domain(format!(
                "scan start {start} inconsistent with {lefts} left expansions"
            )));
        }
        let n = expansions.len() + 1;
        expansions.reverse();
        ScanPath::from_shrinks(n, expansions)
    }
}

/// Scan whose size-`k` block is `(X_1, ..., X_k)`.
pub fn direct_scan(n: usize) -> Result<ScanPath> {
    ScanPath::from_shrinks(n, vec![Shrink::Right; n.saturating_sub(1)])
}

/// Scan whose size-`k` block is `(X_{n-k+1}, ..., X_n)`.
pub fn reverse_scan(n: usize) -> Result<ScanPath> {
    ScanPath::from_shrinks(n, vec![Shrink::Left; n.saturating_sub(1)])
}

/// Draws a scan uniformly from all `2^(n-1)` scans.
///
/// Consumes exactly `ceil((n - 1) / 64)` words from `rng`; bit `b` of word `w`
/// (least significant first) decides shrink `64 w + b`, with a set bit meaning
/// [`Shrink::Left`].
pub fn uniform_random_scan<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<ScanPath> {
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    let steps = n - 1;
    let mut shrinks = Vec::with_capacity(steps);
    while shrinks.len() < steps {
        let word = rng.next_u64();
        let take = (steps - shrinks.len()).min(64);
        shrinks.extend((0..take).map(|b| {
            if (word >> b) & 1 == 1 {
                Shrink::Left
            } else {
                Shrink::Right
            }
        }));
    }
    ScanPath::from_shrinks(n, shrinks)
}

/// All `2^(n-1)` scans, with the default cap on `n`.
pub fn enumerate_scans(n: usize) -> Result<Vec<ScanPath>> {
    enumerate_scans_capped(n, DEFAULT_ENUMERATION_CAP)
}

/// All `2^(n-1)` scans; scan number `I` has shrink `j` equal to Left iff bit `j`
/// of `I` is set.
pub fn enumerate_scans_capped(n: usize, cap: usize) -> Result<Vec<ScanPath>> {
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    if n > cap || n > 63 {
        return Err(Error::Capacity { n, cap });
    }
    let steps = n - 1;
    let count = 1u64 << steps;
    Ok((0..count)
        .map(|index| {
            let shrinks = (0..steps)
                .map(|j| {
                    if (index >> j) & 1 == 1 {
                        Shrink::Left
                    } else {
                        Shrink::Right
                    }
                })
                .collect();
            ScanPath { n, shrinks }
        })
        .collect())
}

/// Number of scans whose size-`k` block is `B_i^k`: `C(n-k, i-1) * 2^(k-1)`.
pub fn count_scans_containing(n: usize, window: BlockWindow) -> Result<u128> {
    let window = BlockWindow::new(window.start, window.size, n)?;
    let choose = binomial(
        (n - window.size) as u128,
        (window.start - 1) as u128,
    )?;
    let power = 1u128
        .checked_shl((window.size - 1) as u32)
        .filter(|_| window.size <= 128)
        .ok_or_else(|| Error::Domain(format!("2^{} overflows", window.size - 1)))?;
    choose
        .checked_mul(power)
        .ok_or_else(|| Error::Domain("scan count overflows u128".into()))
}

fn binomial(n: u128, k: u128) -> Result<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc
            .checked_mul(n - i)
            .ok_or_else(|| Error::Domain("binomial coefficient overflows u128".into()))?
            / (i + 1);
    }
    Ok(acc)
}
