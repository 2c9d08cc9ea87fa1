use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::BlockConfig;

/// Counters for one mining run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoStats {
    pub blocks_read: u64,
    pub blocks_written: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    /// Scans that started at the beginning of a database file.
    pub db_scans: u64,
}

impl IoStats {
    pub fn total_blocks(&self) -> u64 {
        self.blocks_read + self.blocks_written
    }

    /// Field-wise difference `self - earlier`.
    pub fn since(&self, earlier: &IoStats) -> IoStats {
        IoStats {
            blocks_read: self.blocks_read - earlier.blocks_read,
            blocks_written: self.blocks_written - earlier.blocks_written,
            bytes_read: self.bytes_read - earlier.bytes_read,
            bytes_written: self.bytes_written - earlier.bytes_written,
            db_scans: self.db_scans - earlier.db_scans,
        }
    }
}

#[derive(Debug, Default)]
struct Counters {
    blocks_read: AtomicU64,
    blocks_written: AtomicU64,
    bytes_read: AtomicU64,
    bytes_written: AtomicU64,
    db_scans: AtomicU64,
}

/// Shared handle to the run's I/O counters. Clones charge the same counters.
#[derive(Clone, Debug, Default)]
pub struct IoMeter(Arc<Counters>);

impl IoMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> IoStats {
        let c = &self.0;
        IoStats {
            blocks_read: c.blocks_read.load(Ordering::Relaxed),
            blocks_written: c.blocks_written.load(Ordering::Relaxed),
            bytes_read: c.bytes_read.load(Ordering::Relaxed),
            bytes_written: c.bytes_written.load(Ordering::Relaxed),
            db_scans: c.db_scans.load(Ordering::Relaxed),
        }
    }

    pub(crate) fn charge_read(&self, bytes: u64, blocks: u64) {
        self.0.bytes_read.fetch_add(bytes, Ordering::Relaxed);
        self.0.blocks_read.fetch_add(blocks, Ordering::Relaxed);
    }

    pub(crate) fn charge_write(&self, bytes: u64, blocks: u64) {
        self.0.bytes_written.fetch_add(bytes, Ordering::Relaxed);
        self.0.blocks_written.fetch_add(blocks, Ordering::Relaxed);
    }

    pub(crate) fn count_scan(&self) {
        self.0.db_scans.fetch_add(1, Ordering::Relaxed);
    }
}

/// Block configuration plus the meter every reader and writer charges.
#[derive(Clone, Debug, Default)]
pub struct IoContext {
    pub block: BlockConfig,
    pub meter: IoMeter,
}

impl IoContext {
    pub fn new(block: BlockConfig) -> Self {
        IoContext {
            block,
            meter: IoMeter::new(),
        }
    }

    pub fn stats(&self) -> IoStats {
        self.meter.snapshot()
    }
}

/// Number of `block_size` blocks touched by the byte region `[start, end)`.
pub fn blocks_spanned(start: u64, end: u64, block_size: u64) -> u64 {
    if end <= start {
        return 0;
    }
    (end - 1) / block_size - start / block_size + 1
}

/// Charges a contiguous region incrementally as it grows.
#[derive(Debug)]
pub(crate) struct RegionCharge {
    start: u64,
    charged_end: u64,
    charged_blocks: u64,
    block_size: u64,
}

impl RegionCharge {
    pub(crate) fn new(start: u64, block_size: u64) -> Self {
        RegionCharge {
            start,
            charged_end: start,
            charged_blocks: 0,
            block_size,
        }
    }

    /// Extends the region to `end`, returning `(new_bytes, new_blocks)`.
    pub(crate) fn extend_to(&mut self, end: u64) -> (u64, u64) {
        if end <= self.charged_end {
            return (0, 0);
        }
        let bytes = end - self.charged_end;
        let blocks = blocks_spanned(self.start, end, self.block_size);
        let new_blocks = blocks - self.charged_blocks;
        self.charged_end = end;
        self.charged_blocks = blocks;
        (bytes, new_blocks)
    }
}
