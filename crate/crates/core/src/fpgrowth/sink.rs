use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::txdb::ItemId;

/// A frequent itemset and its absolute support.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Itemset {
    pub items: Vec<ItemId>,
    pub support: u64,
}

impl Itemset {
    /// Canonical comparison order: size, then item ids lexicographically.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.items
            .len()
            .cmp(&other.items.len())
            .then_with(|| self.items.cmp(&other.items))
    }
}

/// Receives mined itemsets. `items` is always sorted ascending.
pub trait ItemsetSink {
    fn emit(&mut self, items: &[ItemId], support: u64) -> Result<()>;
}

impl<S: ItemsetSink + ?Sized> ItemsetSink for &mut S {
    fn emit(&mut self, items: &[ItemId], support: u64) -> Result<()> {
        (**self).emit(items, support)
    }
}

/// Collects itemsets in memory.
#[derive(Debug, Default)]
pub struct CollectSink {
    pub itemsets: Vec<Itemset>,
}

impl CollectSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Itemsets sorted by size, then lexicographically.
    pub fn into_sorted(mut self) -> Vec<Itemset> {
        self.itemsets.sort_by(Itemset::canonical_cmp);
        self.itemsets
    }

    pub fn into_map(self) -> BTreeMap<Vec<ItemId>, u64> {
        self.itemsets.into_iter().map(|s| (s.items, s.support)).collect()
    }
}

impl ItemsetSink for CollectSink {
    fn emit(&mut self, items: &[ItemId], support: u64) -> Result<()> {
        self.itemsets.push(Itemset {
            items: items.to_vec(),
            support,
        });
        Ok(())
    }
}

/// Counts emissions and forwards them.
pub struct CountingSink<S> {
    pub inner: S,
    pub count: u64,
}

impl<S: ItemsetSink> CountingSink<S> {
    pub fn new(inner: S) -> Self {
        CountingSink { inner, count: 0 }
    }
}

impl<S: ItemsetSink> ItemsetSink for CountingSink<S> {
    fn emit(&mut self, items: &[ItemId], support: u64) -> Result<()> {
        self.count += 1;
        self.inner.emit(items, support)
    }
}

/// Forwards emissions while rejecting any itemset seen before.
///
/// Used to check that decomposed parts of a result are disjoint; costs memory
/// proportional to the output, so it is off in normal runs.
pub struct DisjointnessCheck<S> {
    inner: S,
    seen: HashSet<Vec<ItemId>>,
}

impl<S: ItemsetSink> DisjointnessCheck<S> {
    pub fn new(inner: S) -> Self {
        DisjointnessCheck {
            inner,
            seen: HashSet::new(),
        }
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: ItemsetSink> ItemsetSink for DisjointnessCheck<S> {
    fn emit(&mut self, items: &[ItemId], support: u64) -> Result<()> {
        if !self.seen.insert(items.to_vec()) {
            return Err(Error::DuplicateItemset(items.to_vec()));
        }
        self.inner.emit(items, support)
    }
}

/// Streams itemsets as FIMI result lines: `1 5 9 (42)`.
pub struct FimiWriter<W: Write> {
    out: W,
    line: String,
}

impl<W: Write> FimiWriter<W> {
    pub fn new(out: W) -> Self {
        FimiWriter {
            out,
            line: String::new(),
        }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> ItemsetSink for FimiWriter<W> {
    fn emit(&mut self, items: &[ItemId], support: u64) -> Result<()> {
        self.line.clear();
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                self.line.push(' ');
            }
            let _ = write!(self.line, "{item}");
        }
        let _ = writeln!(self.line, " ({support})");
        self.out
            .write_all(self.line.as_bytes())
            .map_err(|e| Error::io("<result output>", e))
    }
}

/// Renders itemsets in canonical order as FIMI text.
pub fn format_fimi(itemsets: &[Itemset]) -> String {
    let mut w = FimiWriter::new(Vec::new());
    let mut sorted: Vec<&Itemset> = itemsets.iter().collect();
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    for s in sorted {
        w.emit(&s.items, s.support).expect("writing to memory");
    }
    String::from_utf8(w.finish().expect("writing to memory")).expect("ascii output")
}

/// Parses a FIMI result file into an itemset → support map.
pub fn parse_fimi(reader: impl BufRead, name: &str) -> Result<BTreeMap<Vec<ItemId>, u64>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Format {
            path: name.into(),
            location: format!("line {}", lineno + 1),
            message: msg.to_string(),
        };
        let open = line.rfind('(').ok_or_else(|| bad("missing \"(support)\""))?;
        let support = line[open + 1..]
            .strip_suffix(')')
            .and_then(|s| s.trim().parse::<u64>().ok())
            .ok_or_else(|| bad("bad support"))?;
        let mut items = line[..open]
            .split_whitespace()
            .map(|w| w.parse::<u32>().map(ItemId))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("bad item id"))?;
        items.sort_unstable();
        if items.is_empty() {
            return Err(bad("empty itemset"));
        }
        if map.insert(items, support).is_some() {
            return Err(bad("itemset listed twice"));
        }
    }
    Ok(map)
}
