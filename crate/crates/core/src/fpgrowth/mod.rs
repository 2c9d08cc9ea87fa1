//! In-memory FP-growth over an [`FpTree`], using the pair array to build
//! each conditional tree in a single walk of the item's node list.

mod sink;

use crate::error::Result;
use crate::fptree::{conditional_tree, FpTree, MemoryTracker, PairArray};
use crate::txdb::{ItemId, SupportThreshold};

pub use self::sink::{
    format_fimi, parse_fimi, CollectSink, CountingSink, DisjointnessCheck, FimiWriter, Itemset, ItemsetSink,
};

#[derive(Clone, Debug)]
pub struct MineOptions {
    /// Enumerate single-path trees directly instead of recursing.
    pub single_path: bool,
    /// Charged for every conditional tree built while mining.
    pub tracker: Option<MemoryTracker>,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions {
            single_path: true,
            tracker: None,
        }
    }
}

/// Emits every frequent itemset of the tree's database, each joined with
/// `suffix`.
///
/// With `masters`, only itemsets containing at least one of those items are
/// emitted.
pub fn fpgrowth_star(
    tree: &FpTree,
    array: &PairArray,
    suffix: &[ItemId],
    threshold: &SupportThreshold,
    sink: &mut dyn ItemsetSink,
    masters: Option<&[ItemId]>,
    opts: &MineOptions,
) -> Result<()> {
    let flags = masters.map(|m| tree.order().iter().map(|i| m.contains(i)).collect::<Vec<bool>>());
    let mut miner = Miner {
        threshold,
        sink,
        opts,
        suffix: suffix.to_vec(),
        scratch: Vec::new(),
    };
    miner.mine(tree, array, flags.as_deref())
}

/// The chain of a single-path tree as `(item, count)` pairs from the root.
pub fn single_path_shortcut(tree: &FpTree) -> Option<Vec<(ItemId, u64)>> {
    tree.single_path()
        .map(|p| p.into_iter().map(|(r, c)| (tree.order()[r as usize], c)).collect())
}

struct Miner<'a> {
    threshold: &'a SupportThreshold,
    sink: &'a mut dyn ItemsetSink,
    opts: &'a MineOptions,
    suffix: Vec<ItemId>,
    scratch: Vec<ItemId>,
}

impl Miner<'_> {
    fn emit(&mut self, support: u64) -> Result<()> {
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.suffix);
        self.scratch.sort_unstable();
        self.sink.emit(&self.scratch, support)
    }

    fn mine(&mut self, tree: &FpTree, array: &PairArray, masters: Option<&[bool]>) -> Result<()> {
        if tree.is_empty() {
            return Ok(());
        }
        if self.opts.single_path {
            if let Some(path) = tree.single_path() {
                return self.enumerate_path(tree, &path, 0, masters, false);
            }
        }
        for rank in (0..tree.n_items()).rev() {
            let count = tree.header_count(rank);
            if !self.threshold.is_frequent(count) {
                continue;
            }
            let is_master = masters.is_none_or(|m| m[rank]);
            if !is_master {
                let m = masters.expect("filter present");
                let reaches_master = (0..rank).any(|k| m[k] && self.threshold.is_frequent(array.get(rank, k)));
                if !reaches_master {
                    continue;
                }
            }
            let item = tree.order()[rank];
            self.suffix.push(item);
            if is_master {
                self.emit(count)?;
            }
            let (cond, carray) = conditional_tree(tree, array, rank, self.threshold, self.opts.tracker.clone());
            let cond_masters = if is_master {
                None
            } else {
                let m = masters.expect("filter present");
                let index: std::collections::HashMap<ItemId, usize> =
                    tree.order().iter().enumerate().map(|(r, &i)| (i, r)).collect();
                Some(cond.order().iter().map(|i| m[index[i]]).collect::<Vec<bool>>())
            };
            self.mine(&cond, &carray, cond_masters.as_deref())?;
            drop(cond);
            self.suffix.pop();
        }
        Ok(())
    }

    /// Emits every non-empty subset of `path[from..]` (joined with the current
    /// suffix); support is the count of the deepest chosen node.
    fn enumerate_path(
        &mut self,
        tree: &FpTree,
        path: &[(u32, u64)],
        from: usize,
        masters: Option<&[bool]>,
        has_master: bool,
    ) -> Result<()> {
        for i in from..path.len() {
            let (rank, count) = path[i];
            if !self.threshold.is_frequent(count) {
                break;
            }
            let with_master = has_master || masters.is_none_or(|m| m[rank as usize]);
            self.suffix.push(tree.order()[rank as usize]);
            if with_master {
                self.emit(count)?;
            }
            self.enumerate_path(tree, path, i + 1, masters, with_master)?;
            self.suffix.pop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fptree::FreqString;

    fn build(txs: &[&[u32]], threshold: u64) -> (FpTree, PairArray) {
        let th = SupportThreshold::absolute(threshold);
        let mut counts = std::collections::BTreeMap::new();
        for t in txs {
            for &i in *t {
                *counts.entry(ItemId(i)).or_insert(0u64) += 1;
            }
        }
        let fs = FreqString::from_pairs(counts, &th);
        let rm = fs.rank_map();
        let mut tree = FpTree::new(fs.items.clone(), None);
        let mut arr = PairArray::new(fs.len());
        let mut r = Vec::new();
        for t in txs {
            let ids: Vec<ItemId> = t.iter().copied().map(ItemId).collect();
            rm.project(&ids, &mut r);
            tree.insert(&r, 1);
            arr.add_transaction(&r, 1);
        }
        (tree, arr)
    }

    fn mine(txs: &[&[u32]], threshold: u64, masters: Option<&[u32]>, single_path: bool) -> String {
        let (tree, arr) = build(txs, threshold);
        let mut sink = CollectSink::new();
        let m: Option<Vec<ItemId>> = masters.map(|m| m.iter().copied().map(ItemId).collect());
        let opts = MineOptions {
            single_path,
            tracker: None,
        };
        fpgrowth_star(&tree, &arr, &[], &SupportThreshold::absolute(threshold), &mut sink, m.as_deref(), &opts).unwrap();
        format_fimi(&sink.into_sorted())
    }

    // a b c d = 0 1 2 3
    const D1: [&[u32]; 4] = [&[0, 1, 3], &[1, 2, 3], &[0, 2], &[0, 1]];

    #[test]
    fn d1_all_itemsets() {
        assert_eq!(mine(&D1, 2, None, true), "0 (3)\n1 (3)\n2 (2)\n3 (2)\n0 1 (2)\n1 3 (2)\n");
    }

    #[test]
    fn d_cd_with_masters() {
        let dcd: [&[u32]; 3] = [&[0, 1, 3], &[1, 2, 3], &[0, 2]];
        assert_eq!(mine(&dcd, 2, Some(&[2, 3]), true), "2 (2)\n3 (2)\n1 3 (2)\n");
    }

    #[test]
    fn empty_tree_emits_nothing() {
        assert_eq!(mine(&[], 1, None, true), "");
    }

    #[test]
    fn chain_enumeration() {
        let (tree, _) = build(&[&[0, 1], &[0, 1], &[0]], 1);
        assert_eq!(single_path_shortcut(&tree), Some(vec![(ItemId(0), 3), (ItemId(1), 2)]));
        assert_eq!(mine(&[&[0, 1], &[0, 1], &[0]], 1, None, true), "0 (3)\n1 (2)\n0 1 (2)\n");
        let (branchy, _) = build(&D1, 1);
        assert_eq!(single_path_shortcut(&branchy), None);
    }

    #[test]
    fn suffix_is_merged_sorted() {
        let (tree, arr) = build(&[&[5, 9]], 1);
        let mut sink = CollectSink::new();
        fpgrowth_star(&tree, &arr, &[ItemId(7)], &SupportThreshold::absolute(1), &mut sink, None, &MineOptions::default()).unwrap();
        let out = format_fimi(&sink.into_sorted());
        assert_eq!(out, "5 7 (1)\n7 9 (1)\n5 7 9 (1)\n");
    }

    #[test]
    fn conditional_trees_are_charged_and_released() {
        let (tree, arr) = build(&D1, 1);
        let tracker = MemoryTracker::new(&crate::fptree::MemoryBudget::new(1 << 20));
        let opts = MineOptions {
            single_path: false,
            tracker: Some(tracker.clone()),
        };
        let mut sink = CollectSink::new();
        fpgrowth_star(&tree, &arr, &[], &SupportThreshold::absolute(1), &mut sink, None, &opts).unwrap();
        assert!(tracker.peak() > 0);
        assert_eq!(tracker.in_use(), 0);
    }
}
