use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom};

use serde::{Deserialize, Serialize};

use super::io::RegionCharge;
use super::{DbFormat, DbLocator, IoContext, IoMeter, ItemId, Transaction};
use crate::error::{Error, Result};

/// Resume point of a scan: always a record boundary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanPosition {
    pub byte_offset: u64,
    pub transactions_consumed: u64,
}

/// Sequential reader over a transaction file.
///
/// Reads are charged to the meter as one contiguous region starting at the
/// scan's first byte.
pub struct Scanner {
    locator: DbLocator,
    reader: BufReader<File>,
    offset: u64,
    consumed: u64,
    charge: RegionCharge,
    meter: IoMeter,
    exclude: Option<ItemId>,
    line_buf: Vec<u8>,
    word_buf: Vec<u8>,
}

pub fn open_scan(locator: &DbLocator, io: &IoContext, from: Option<ScanPosition>) -> Result<Scanner> {
    let path = &locator.path;
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let from = match from {
        None => {
            io.meter.count_scan();
            ScanPosition::default()
        }
        Some(pos) => {
            check_boundary(locator, &mut file, len, pos.byte_offset)?;
            pos
        }
    };
    file.seek(SeekFrom::Start(from.byte_offset))
        .map_err(|e| Error::io(path, e))?;
    let capacity = io.block.block_size.max(8192) as usize;
    Ok(Scanner {
        locator: locator.clone(),
        reader: BufReader::with_capacity(capacity, file),
        offset: from.byte_offset,
        consumed: from.transactions_consumed,
        charge: RegionCharge::new(from.byte_offset, io.block.block_size),
        meter: io.meter.clone(),
        exclude: None,
        line_buf: Vec::new(),
        word_buf: Vec::new(),
    })
}

fn check_boundary(locator: &DbLocator, file: &mut File, len: u64, offset: u64) -> Result<()> {
    let stale = || Error::StalePosition {
        path: locator.path.clone(),
        offset,
    };
    if offset > len {
        return Err(stale());
    }
    if offset == 0 || offset == len {
        return Ok(());
    }
    let io_err = |e| Error::io(&locator.path, e);
    match locator.format {
        DbFormat::Text => {
            let mut prev = [0u8; 1];
            file.seek(SeekFrom::Start(offset - 1)).map_err(io_err)?;
            file.read_exact(&mut prev).map_err(io_err)?;
            if prev[0] != b'\n' {
                return Err(stale());
            }
        }
        DbFormat::Binary => {
            let mut head = [0u8; 4];
            if len - offset < 4 {
                return Err(stale());
            }
            file.seek(SeekFrom::Start(offset)).map_err(io_err)?;
            file.read_exact(&mut head).map_err(io_err)?;
            let n = u32::from_le_bytes(head) as u64;
            if 4 + 4 * n > len - offset {
                return Err(stale());
            }
        }
    }
    Ok(())
}

impl Scanner {
    /// Drops `item` from every transaction this scanner yields.
    pub fn excluding(mut self, item: Option<ItemId>) -> Self {
        self.exclude = item;
        self
    }

    pub fn locator(&self) -> &DbLocator {
        &self.locator
    }

    pub fn position(&self) -> ScanPosition {
        ScanPosition {
            byte_offset: self.offset,
            transactions_consumed: self.consumed,
        }
    }

    /// Reads the next transaction into `buf` (sorted ascending).
    /// Returns `false` at end of file.
    pub fn next_into(&mut self, buf: &mut Vec<ItemId>) -> Result<bool> {
        buf.clear();
        let got = match self.locator.format {
            DbFormat::Text => self.next_text(buf)?,
            DbFormat::Binary => self.next_binary(buf)?,
        };
        if !got {
            return Ok(false);
        }
        self.consumed += 1;
        let (bytes, blocks) = self.charge.extend_to(self.offset);
        self.meter.charge_read(bytes, blocks);
        if let Some(x) = self.exclude {
            if let Ok(i) = buf.binary_search(&x) {
                buf.remove(i);
            }
        }
        Ok(true)
    }

    fn format_error(&self, location: String, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.locator.path.clone(),
            location,
            message: message.into(),
        }
    }

    fn next_text(&mut self, buf: &mut Vec<ItemId>) -> Result<bool> {
        self.line_buf.clear();
        let n = self
            .reader
            .read_until(b'\n', &mut self.line_buf)
            .map_err(|e| Error::io(&self.locator.path, e))?;
        if n == 0 {
            return Ok(false);
        }
        self.offset += n as u64;
        let line_no = self.consumed + 1;
        let mut value: Option<u64> = None;
        for &b in self.line_buf.iter() {
            match b {
                b'0'..=b'9' => {
                    let v = value.unwrap_or(0) * 10 + (b - b'0') as u64;
                    if v > u32::MAX as u64 {
                        return Err(self.format_error(format!("line {line_no}"), "item id overflows u32"));
                    }
                    value = Some(v);
                }
                b' ' | b'\t' | b'\r' | b'\n' => {
                    if let Some(v) = value.take() {
                        buf.push(ItemId(v as u32));
                    }
                }
                other => {
                    return Err(self.format_error(
                        format!("line {line_no}"),
                        format!("unexpected byte 0x{other:02x}"),
                    ))
                }
            }
        }
        if let Some(v) = value {
            buf.push(ItemId(v as u32));
        }
        self.normalize(buf, format!("line {line_no}"))?;
        Ok(true)
    }

    fn next_binary(&mut self, buf: &mut Vec<ItemId>) -> Result<bool> {
        let start = self.offset;
        let mut head = [0u8; 4];
        let got = read_full(&mut self.reader, &mut head).map_err(|e| Error::io(&self.locator.path, e))?;
        if got == 0 {
            return Ok(false);
        }
        if got < 4 {
            return Err(self.format_error(format!("byte {start}"), "truncated length prefix"));
        }
        let n = u32::from_le_bytes(head) as usize;
        self.word_buf.resize(4 * n, 0);
        let got = read_full(&mut self.reader, &mut self.word_buf)
            .map_err(|e| Error::io(&self.locator.path, e))?;
        if got < 4 * n {
            return Err(self.format_error(format!("byte {start}"), "truncated transaction body"));
        }
        buf.extend(
            self.word_buf
                .chunks_exact(4)
                .map(|w| ItemId(u32::from_le_bytes([w[0], w[1], w[2], w[3]]))),
        );
        self.offset += 4 + 4 * n as u64;
        self.normalize(buf, format!("byte {start}"))?;
        Ok(true)
    }

    fn normalize(&self, buf: &mut [ItemId], location: String) -> Result<()> {
        if buf.windows(2).all(|w| w[0] < w[1]) {
            return Ok(());
        }
        buf.sort_unstable();
        if let Some(w) = buf.windows(2).find(|w| w[0] == w[1]) {
            return Err(self.format_error(location, format!("duplicate item {}", w[0])));
        }
        Ok(())
    }
}

fn read_full(reader: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

impl Iterator for Scanner {
    type Item = Result<Transaction>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = Vec::new();
        match self.next_into(&mut buf) {
            Ok(true) => Some(Ok(Transaction::from_sorted_unchecked(buf))),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

/// Per-item occurrence counts from one full scan.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ItemCounts {
    counts: Vec<u64>,
    pub n_transactions: u64,
    pub total_bytes: u64,
}

impl ItemCounts {
    pub fn from_scanner(mut scanner: Scanner) -> Result<Self> {
        let start = scanner.position().byte_offset;
        let mut counts = Vec::new();
        let mut buf = Vec::new();
        let mut n = 0;
        while scanner.next_into(&mut buf)? {
            n += 1;
            for &item in &buf {
                if item.index() >= counts.len() {
                    counts.resize(item.index() + 1, 0);
                }
                counts[item.index()] += 1;
            }
        }
        Ok(ItemCounts {
            counts,
            n_transactions: n,
            total_bytes: scanner.position().byte_offset - start,
        })
    }

    /// Builds counts from explicit `(item, count)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ItemId, u64)>, n_transactions: u64) -> Self {
        let mut counts = Vec::new();
        for (item, c) in pairs {
            if item.index() >= counts.len() {
                counts.resize(item.index() + 1, 0);
            }
            counts[item.index()] += c;
        }
        ItemCounts {
            counts,
            n_transactions,
            total_bytes: 0,
        }
    }

    pub fn get(&self, item: ItemId) -> u64 {
        self.counts.get(item.index()).copied().unwrap_or(0)
    }

    /// Items with a nonzero count, ascending by id.
    pub fn iter(&self) -> impl Iterator<Item = (ItemId, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (ItemId(i as u32), c))
    }

    pub fn distinct_items(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.distinct_items() == 0
    }
}

/// First-pass frequency count over a whole database (one db scan).
pub fn count_items(locator: &DbLocator, io: &IoContext) -> Result<ItemCounts> {
    ItemCounts::from_scanner(open_scan(locator, io, None)?)
}

/// Loads a whole database into memory (charged like any other scan).
pub fn read_all(locator: &DbLocator, io: &IoContext) -> Result<Vec<Transaction>> {
    open_scan(locator, io, None)?.collect()
}
