use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fpgrowth::Itemset;
use crate::txdb::{read_all, DbLocator, IoContext, ItemId, SupportThreshold, Transaction};

/// Largest number of distinct items the oracle accepts.
pub const ORACLE_MAX_ITEMS: usize = 24;

/// Every itemset with support at least `threshold`, by direct counting.
///
/// Each transaction is reduced to its frequent single items (no superset of
/// an infrequent item can be frequent) and all of its subsets are counted.
/// Output is in canonical order.
pub fn brute_force_oracle(txs: &[Transaction], threshold: &SupportThreshold) -> Result<Vec<Itemset>> {
    let mut item_counts: HashMap<ItemId, u64> = HashMap::new();
    for t in txs {
        for &i in t.items() {
            *item_counts.entry(i).or_default() += 1;
        }
    }
    if item_counts.len() > ORACLE_MAX_ITEMS {
        return Err(Error::TooLarge {
            limit: ORACLE_MAX_ITEMS,
            found: item_counts.len(),
        });
    }
    let mut frequent: Vec<ItemId> = item_counts
        .iter()
        .filter(|&(_, &c)| threshold.is_frequent(c))
        .map(|(&i, _)| i)
        .collect();
    frequent.sort_unstable();
    let bit: HashMap<ItemId, u32> = frequent.iter().enumerate().map(|(b, &i)| (i, b as u32)).collect();

    let mut masks: HashMap<u32, u64> = HashMap::new();
    for t in txs {
        let m = t.items().iter().filter_map(|i| bit.get(i)).fold(0u32, |m, &b| m | (1 << b));
        *masks.entry(m).or_default() += 1;
    }
    let mut support: HashMap<u32, u64> = HashMap::new();
    for (&m, &w) in &masks {
        let mut sub = m;
        while sub != 0 {
            *support.entry(sub).or_default() += w;
            sub = (sub - 1) & m;
        }
    }

    let mut out: Vec<Itemset> = support
        .into_iter()
        .filter(|&(_, c)| threshold.is_frequent(c))
        .map(|(m, c)| Itemset {
            items: (0..frequent.len()).filter(|b| m & (1 << b) != 0).map(|b| frequent[b]).collect(),
            support: c,
        })
        .collect();
    out.sort_by(Itemset::canonical_cmp);
    Ok(out)
}

/// [`brute_force_oracle`] over a database file.
pub fn brute_force_oracle_db(db: &DbLocator, io: &IoContext, threshold: &SupportThreshold) -> Result<Vec<Itemset>> {
    brute_force_oracle(&read_all(db, io)?, threshold)
}
