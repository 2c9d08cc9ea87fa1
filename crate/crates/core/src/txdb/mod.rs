//! Disk-resident transaction databases.
//!
//! Two on-disk encodings are supported:
//!
//! * **text**: one transaction per line, decimal item ids separated by single
//!   spaces, `\n` terminated. An empty line is an empty transaction.
//! * **binary**: per transaction a little-endian `u32` length followed by that
//!   many little-endian `u32` item ids.
//!
//! Every byte moved through a [`Scanner`] or [`DbWriter`] is charged to an
//! [`IoMeter`] in whole blocks, one contiguous region at a time.

mod io;
mod scan;
mod write;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::io::{blocks_spanned, IoContext, IoMeter, IoStats};
pub use self::scan::{count_items, open_scan, read_all, ItemCounts, ScanPosition, Scanner};
pub use self::write::{write_db, DbWriter};

/// Dense item identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for ItemId {
    fn from(v: u32) -> Self {
        ItemId(v)
    }
}

/// A set of items, kept sorted ascending without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transaction {
    items: Vec<ItemId>,
}

impl Transaction {
    /// Builds a transaction from arbitrary ids. Returns `None` on duplicates.
    pub fn new(mut items: Vec<ItemId>) -> Option<Self> {
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(Transaction { items })
    }

    pub fn from_ids(ids: &[u32]) -> Option<Self> {
        Self::new(ids.iter().copied().map(ItemId).collect())
    }

    /// Caller guarantees `items` is strictly ascending.
    pub(crate) fn from_sorted_unchecked(items: Vec<ItemId>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Transaction { items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }

    pub fn into_items(self) -> Vec<ItemId> {
        self.items
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DbFormat {
    Text,
    #[default]
    Binary,
}

impl DbFormat {
    /// Guesses the format from a file extension: `.dat`/`.txt` are text.
    pub fn from_path(path: &Path) -> DbFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("dat") | Some("txt") => DbFormat::Text,
            _ => DbFormat::Binary,
        }
    }
}

impl FromStr for DbFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(DbFormat::Text),
            "binary" => Ok(DbFormat::Binary),
            other => Err(Error::Config(format!("unknown db format `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbLocator {
    pub path: PathBuf,
    pub format: DbFormat,
}

impl DbLocator {
    pub fn new(path: impl Into<PathBuf>, format: DbFormat) -> Self {
        DbLocator {
            path: path.into(),
            format,
        }
    }

    pub fn text(path: impl Into<PathBuf>) -> Self {
        Self::new(path, DbFormat::Text)
    }

    pub fn binary(path: impl Into<PathBuf>) -> Self {
        Self::new(path, DbFormat::Binary)
    }

    pub fn file_size(&self) -> Result<u64> {
        std::fs::metadata(&self.path)
            .map(|m| m.len())
            .map_err(|e| Error::io(&self.path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub block_size: u64,
}

impl BlockConfig {
    pub const DEFAULT_BLOCK_SIZE: u64 = 4096;

    pub fn new(block_size: u64) -> Result<Self> {
        if block_size == 0 || !block_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "block size must be a positive power of two, got {block_size}"
            )));
        }
        Ok(BlockConfig { block_size })
    }
}

impl Default for BlockConfig {
    fn default() -> Self {
        BlockConfig {
            block_size: Self::DEFAULT_BLOCK_SIZE,
        }
    }
}

/// Minimum support as given by the user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinSupport {
    /// Fraction of the transactions, in `[0, 1]`.
    Fraction(f64),
    /// Absolute transaction count.
    Count(u64),
}

impl MinSupport {
    pub fn resolve(self, n_transactions: u64) -> Result<SupportThreshold> {
        SupportThreshold::resolve(self, n_transactions)
    }
}

impl FromStr for MinSupport {
    type Err = Error;

    /// `"0.02"`, `"2%"` and `"1e-3"` are fractions; a bare integer is a count.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse minimum support `{s}`"));
        if let Some(pct) = s.strip_suffix('%') {
            let v: f64 = pct.trim().parse().map_err(|_| bad())?;
            return MinSupport::Fraction(v / 100.0).validated();
        }
        if s.chars().all(|c| c.is_ascii_digit()) {
            return Ok(MinSupport::Count(s.parse().map_err(|_| bad())?));
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        MinSupport::Fraction(v).validated()
    }
}

impl MinSupport {
    fn validated(self) -> Result<Self> {
        match self {
            MinSupport::Fraction(f) if !(0.0..=1.0).contains(&f) || f.is_nan() => Err(
                Error::Config(format!("support fraction {f} outside [0, 1]")),
            ),
            other => Ok(other),
        }
    }
}

impl fmt::Display for MinSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinSupport::Fraction(x) => write!(f, "{x}"),
            MinSupport::Count(c) => write!(f, "{c}"),
        }
    }
}

/// A minimum support resolved to an absolute count against a known database size.
///
/// An itemset is frequent iff its count is `>= count()`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportThreshold {
    requested: MinSupport,
    count: u64,
    n_transactions: u64,
}

impl SupportThreshold {
    pub fn resolve(requested: MinSupport, n_transactions: u64) -> Result<Self> {
        let requested = requested.validated()?;
        let count = match requested {
            // Tolerance keeps e.g. 0.6 * 5 from rounding up to 4.
            MinSupport::Fraction(f) => (f * n_transactions as f64 - 1e-9).ceil().max(0.0) as u64,
            MinSupport::Count(c) => c,
        };
        Ok(SupportThreshold {
            requested,
            count: count.max(1),
            n_transactions,
        })
    }

    /// Threshold given directly as an absolute count.
    pub fn absolute(count: u64) -> Self {
        SupportThreshold {
            requested: MinSupport::Count(count),
            count: count.max(1),
            n_transactions: 0,
        }
    }

    #[inline]
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn requested(&self) -> MinSupport {
        self.requested
    }

    pub fn n_transactions(&self) -> u64 {
        self.n_transactions
    }

    #[inline]
    pub fn is_frequent(&self, support: u64) -> bool {
        support >= self.count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transaction_rejects_duplicates() {
        assert!(Transaction::from_ids(&[3, 1, 3]).is_none());
        let t = Transaction::from_ids(&[3, 1, 2]).unwrap();
        assert_eq!(t.items(), &[ItemId(1), ItemId(2), ItemId(3)]);
    }

    #[test]
    fn block_size_must_be_power_of_two() {
        assert!(BlockConfig::new(0).is_err());
        assert!(BlockConfig::new(1000).is_err());
        assert_eq!(BlockConfig::new(512).unwrap().block_size, 512);
    }

    #[test]
    fn fraction_resolution_uses_ceiling() {
        let t = MinSupport::Fraction(0.5).resolve(4).unwrap();
        assert_eq!(t.count(), 2);
        let t = MinSupport::Fraction(0.6).resolve(3).unwrap();
        assert_eq!(t.count(), 2);
        let t = MinSupport::Fraction(0.6).resolve(5).unwrap();
        assert_eq!(t.count(), 3);
        let t = MinSupport::Fraction(0.0).resolve(10).unwrap();
        assert_eq!(t.count(), 1);
        assert!(MinSupport::Fraction(1.5).resolve(10).is_err());
    }

    #[test]
    fn min_support_parsing() {
        assert_eq!("0.5".parse::<MinSupport>().unwrap(), MinSupport::Fraction(0.5));
        assert_eq!("12".parse::<MinSupport>().unwrap(), MinSupport::Count(12));
        assert_eq!("2%".parse::<MinSupport>().unwrap(), MinSupport::Fraction(0.02));
        assert!("abc".parse::<MinSupport>().is_err());
        assert!("-0.1".parse::<MinSupport>().is_err());
    }
}
