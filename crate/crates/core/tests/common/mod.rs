//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use diskmine_core::fpgrowth::{CollectSink, Itemset};
use diskmine_core::txdb::{write_db, IoContext};
use diskmine_core::{brute_force_oracle, BlockConfig, DbLocator, ItemId, SupportThreshold, Transaction};
use proptest::prelude::*;

pub type ResultMap = BTreeMap<Vec<ItemId>, u64>;

pub fn io() -> IoContext {
    IoContext::new(BlockConfig::default())
}

pub fn txs(rows: &[Vec<u32>]) -> Vec<Transaction> {
    rows.iter().map(|r| Transaction::from_ids(r).expect("distinct ids")).collect()
}

pub fn write(dir: &Path, name: &str, rows: &[Vec<u32>]) -> DbLocator {
    write_db(&DbLocator::binary(dir.join(name)), &io(), txs(rows)).unwrap()
}

pub fn oracle(rows: &[Vec<u32>], threshold: u64) -> ResultMap {
    to_map(brute_force_oracle(&txs(rows), &SupportThreshold::absolute(threshold)).unwrap())
}

pub fn to_map(itemsets: Vec<Itemset>) -> ResultMap {
    itemsets.into_iter().map(|s| (s.items, s.support)).collect()
}

pub fn collected(sink: CollectSink) -> ResultMap {
    let n = sink.itemsets.len();
    let m = sink.into_map();
    assert_eq!(m.len(), n, "an itemset was emitted twice");
    m
}

/// Up to 200 transactions over at most 15 items, each non-empty.
pub fn small_db() -> impl Strategy<Value = Vec<Vec<u32>>> {
    (1u32..=15).prop_flat_map(|n| {
        proptest::collection::vec(
            proptest::collection::btree_set(0..n, 1..=n as usize).prop_map(|s| s.into_iter().collect()),
            1..200,
        )
    })
}

/// A small database plus an absolute threshold between 1 and its size.
pub fn small_db_with_threshold() -> impl Strategy<Value = (Vec<Vec<u32>>, u64)> {
    small_db().prop_flat_map(|rows| {
        let n = rows.len() as u64;
        (Just(rows), 1..=n.max(1))
    })
}
