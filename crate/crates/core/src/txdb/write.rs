use std::fs::File;
use std::io::{BufWriter, Write};

use super::io::RegionCharge;
use super::{DbFormat, DbLocator, IoContext, IoMeter, ItemId, Transaction};
use crate::error::{Error, Result};

/// Streaming writer for a new database file.
pub struct DbWriter {
    locator: DbLocator,
    out: BufWriter<File>,
    written: u64,
    transactions: u64,
    charge: RegionCharge,
    meter: IoMeter,
    scratch: Vec<u8>,
}

impl DbWriter {
    pub fn create(locator: &DbLocator, io: &IoContext) -> Result<Self> {
        let file = File::create(&locator.path).map_err(|e| Error::io(&locator.path, e))?;
        Ok(DbWriter {
            locator: locator.clone(),
            out: BufWriter::with_capacity(io.block.block_size.max(8192) as usize, file),
            written: 0,
            transactions: 0,
            charge: RegionCharge::new(0, io.block.block_size),
            meter: io.meter.clone(),
            scratch: Vec::new(),
        })
    }

    /// Appends one transaction; `items` must be sorted ascending.
    pub fn write(&mut self, items: &[ItemId]) -> Result<()> {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        self.scratch.clear();
        match self.locator.format {
            DbFormat::Binary => {
                self.scratch
                    .extend_from_slice(&(items.len() as u32).to_le_bytes());
                for item in items {
                    self.scratch.extend_from_slice(&item.0.to_le_bytes());
                }
            }
            DbFormat::Text => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        self.scratch.push(b' ');
                    }
                    // itoa without allocation
                    let mut digits = [0u8; 10];
                    let mut v = item.0;
                    let mut n = 0;
                    loop {
                        digits[n] = b'0' + (v % 10) as u8;
                        n += 1;
                        v /= 10;
                        if v == 0 {
                            break;
                        }
                    }
                    self.scratch.extend(digits[..n].iter().rev());
                }
                self.scratch.push(b'\n');
            }
        }
        self.out
            .write_all(&self.scratch)
            .map_err(|e| Error::io(&self.locator.path, e))?;
        self.written += self.scratch.len() as u64;
        self.transactions += 1;
        let (bytes, blocks) = self.charge.extend_to(self.written);
        self.meter.charge_write(bytes, blocks);
        Ok(())
    }

    pub fn bytes_written(&self) -> u64 {
        self.written
    }

    pub fn transactions(&self) -> u64 {
        self.transactions
    }

    pub fn finish(mut self) -> Result<DbLocator> {
        self.out
            .flush()
            .map_err(|e| Error::io(&self.locator.path, e))?;
        Ok(self.locator)
    }
}

/// Writes `transactions` to a new file at `locator`.
pub fn write_db(
    locator: &DbLocator,
    io: &IoContext,
    transactions: impl IntoIterator<Item = Transaction>,
) -> Result<DbLocator> {
    let mut w = DbWriter::create(locator, io)?;
    for t in transactions {
        w.write(t.items())?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txdb::{read_all, BlockConfig};
    use proptest::prelude::*;

    fn tx(ids: &[u32]) -> Transaction {
        Transaction::from_ids(ids).unwrap()
    }

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let data = vec![tx(&[0, 1]), tx(&[1])];
        for (name, fmt) in [("a.dat", DbFormat::Text), ("a.db", DbFormat::Binary)] {
            let loc = write_db(&DbLocator::new(dir.path().join(name), fmt), &io, data.clone()).unwrap();
            assert_eq!(read_all(&loc, &io).unwrap(), data);
        }
    }

    #[test]
    fn empty_stream_gives_empty_db() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let loc = write_db(&DbLocator::binary(dir.path().join("e.db")), &io, vec![]).unwrap();
        assert_eq!(loc.file_size().unwrap(), 0);
        assert!(read_all(&loc, &io).unwrap().is_empty());
        assert_eq!(io.stats().blocks_written, 0);
    }

    #[test]
    fn binary_layout_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::new(16).unwrap());
        let loc = write_db(&DbLocator::binary(dir.path().join("b.db")), &io, vec![tx(&[7, 258]), tx(&[])]).unwrap();
        let bytes = std::fs::read(&loc.path).unwrap();
        assert_eq!(
            bytes,
            vec![2, 0, 0, 0, 7, 0, 0, 0, 2, 1, 0, 0, 0, 0, 0, 0]
        );
        let s = io.stats();
        assert_eq!(s.bytes_written, 16);
        assert_eq!(s.blocks_written, 1);
    }

    #[test]
    fn text_layout_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let loc = write_db(&DbLocator::text(dir.path().join("t.dat")), &io, vec![tx(&[10, 2]), tx(&[]), tx(&[0])]).unwrap();
        assert_eq!(std::fs::read_to_string(&loc.path).unwrap(), "2 10\n\n0\n");
    }

    fn arb_db() -> impl Strategy<Value = Vec<Transaction>> {
        prop::collection::vec(
            prop::collection::btree_set(0u32..5000, 0..30)
                .prop_map(|s| Transaction::from_ids(&s.into_iter().collect::<Vec<_>>()).unwrap()),
            0..1000,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scan_of_write_is_identity(data in arb_db(), binary in any::<bool>()) {
            let dir = tempfile::tempdir().unwrap();
            let io = IoContext::new(BlockConfig::new(256).unwrap());
            let fmt = if binary { DbFormat::Binary } else { DbFormat::Text };
            let loc = write_db(&DbLocator::new(dir.path().join("p"), fmt), &io, data.clone()).unwrap();
            let size = loc.file_size().unwrap();
            let back = read_all(&loc, &io).unwrap();
            prop_assert_eq!(back, data);
            let s = io.stats();
            prop_assert_eq!(s.bytes_written, size);
            prop_assert_eq!(s.bytes_read, size);
            prop_assert_eq!(s.blocks_read, size.div_ceil(256));
            prop_assert_eq!(s.blocks_written, size.div_ceil(256));
        }

        #[test]
        fn split_scan_equals_full_scan(data in arb_db(), cut in 0usize..1000) {
            let dir = tempfile::tempdir().unwrap();
            let io = IoContext::new(BlockConfig::default());
            let loc = write_db(&DbLocator::binary(dir.path().join("p")), &io, data.clone()).unwrap();
            let cut = cut.min(data.len());
            let mut s = crate::txdb::open_scan(&loc, &io, None).unwrap();
            let mut head = Vec::new();
            for _ in 0..cut {
                head.push(s.next().unwrap().unwrap());
            }
            let pos = s.position();
            let tail: Vec<_> = crate::txdb::open_scan(&loc, &io, Some(pos)).unwrap().map(|t| t.unwrap()).collect();
            head.extend(tail);
            prop_assert_eq!(head, data);
        }
    }
}
