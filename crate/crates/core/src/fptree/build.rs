use super::{FpTree, FreqString, MemoryBudget, MemoryTracker, PairArray};
use crate::error::Result;
use crate::txdb::{ItemId, ScanPosition, Scanner, SupportThreshold};

pub enum BuildOutcome {
    Complete {
        tree: FpTree,
        array: PairArray,
    },
    /// The next transaction would have pushed the tree past the node limit.
    /// `position` is the first transaction not in the tree.
    Aborted {
        tree: FpTree,
        array: PairArray,
        position: ScanPosition,
    },
}

impl BuildOutcome {
    pub fn is_complete(&self) -> bool {
        matches!(self, BuildOutcome::Complete { .. })
    }

    pub fn tree(&self) -> &FpTree {
        match self {
            BuildOutcome::Complete { tree, .. } | BuildOutcome::Aborted { tree, .. } => tree,
        }
    }
}

/// Builds the FP-tree of a scanned database under `budget`.
///
/// With `fill_array`, an aborted build keeps reading to the end of the scan
/// so the pair array covers every transaction.
pub fn build_tree(
    scanner: Scanner,
    order: &FreqString,
    budget: &MemoryBudget,
    tracker: Option<MemoryTracker>,
    fill_array: bool,
) -> Result<BuildOutcome> {
    build_tree_filtered(scanner, order, budget, tracker, fill_array, |_| true)
}

/// As [`build_tree`], inserting only transactions whose rank list passes `keep`.
pub fn build_tree_filtered(
    mut scanner: Scanner,
    order: &FreqString,
    budget: &MemoryBudget,
    tracker: Option<MemoryTracker>,
    fill_array: bool,
    mut keep: impl FnMut(&[u32]) -> bool,
) -> Result<BuildOutcome> {
    budget.validate()?;
    let limit = budget.node_limit();
    let ranks = order.rank_map();
    let mut tree = FpTree::new(order.items.clone(), tracker);
    let mut array = PairArray::new(order.len());
    let mut buf: Vec<ItemId> = Vec::new();
    let mut rbuf: Vec<u32> = Vec::new();

    loop {
        let before = scanner.position();
        if !scanner.next_into(&mut buf)? {
            return Ok(BuildOutcome::Complete { tree, array });
        }
        ranks.project(&buf, &mut rbuf);
        if !keep(&rbuf) {
            continue;
        }
        if tree.n_nodes() + tree.nodes_needed(&rbuf) > limit {
            if fill_array {
                array.add_transaction(&rbuf, 1);
                while scanner.next_into(&mut buf)? {
                    ranks.project(&buf, &mut rbuf);
                    if keep(&rbuf) {
                        array.add_transaction(&rbuf, 1);
                    }
                }
            }
            return Ok(BuildOutcome::Aborted {
                tree,
                array,
                position: before,
            });
        }
        tree.insert(&rbuf, 1);
        array.add_transaction(&rbuf, 1);
    }
}

/// Builds `T_{α.i}` for the item at `rank` by one walk of its node list.
///
/// The new header is read from the array row of `rank`, so no counting pass
/// over the prefix paths is needed. Items keep their conditional-frequency
/// order (descending, ties by id).
pub fn conditional_tree(
    tree: &FpTree,
    array: &PairArray,
    rank: usize,
    threshold: &SupportThreshold,
    tracker: Option<MemoryTracker>,
) -> (FpTree, PairArray) {
    let order = tree.order();
    let mut cands: Vec<(u32, u64)> = (0..rank)
        .map(|k| (k as u32, array.get(rank, k)))
        .filter(|&(_, c)| threshold.is_frequent(c))
        .collect();
    cands.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(order[a.0 as usize].cmp(&order[b.0 as usize])));

    let mut remap = vec![u32::MAX; rank];
    for (new, &(old, _)) in cands.iter().enumerate() {
        remap[old as usize] = new as u32;
    }
    let new_order: Vec<ItemId> = cands.iter().map(|&(old, _)| order[old as usize]).collect();
    let mut cond = FpTree::new(new_order, tracker);
    let mut carray = PairArray::new(cands.len());

    let mut path: Vec<u32> = Vec::new();
    for idx in tree.node_list(rank) {
        let node = tree.node(idx);
        let weight = node.count;
        path.clear();
        let mut p = node.parent;
        while p != FpTree::ROOT {
            let anc = tree.node(p);
            let r = remap[anc.rank as usize];
            if r != u32::MAX {
                path.push(r);
            }
            p = anc.parent;
        }
        path.sort_unstable();
        cond.insert(&path, weight);
        carray.add_transaction(&path, weight);
    }
    (cond, carray)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::txdb::{open_scan, write_db, BlockConfig, DbLocator, IoContext, Transaction};

    fn d1(dir: &std::path::Path, io: &IoContext) -> DbLocator {
        let rows: [&[u32]; 4] = [&[0, 1, 3], &[1, 2, 3], &[0, 2], &[0, 1]];
        let data: Vec<_> = rows.iter().map(|t| Transaction::from_ids(t).unwrap()).collect();
        write_db(&DbLocator::binary(dir.join("d1.db")), io, data).unwrap()
    }

    fn abcd() -> FreqString {
        FreqString {
            items: (0..4).map(ItemId).collect(),
            counts: vec![3, 3, 2, 2],
        }
    }

    #[test]
    fn d1_complete_build() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let loc = d1(dir.path(), &io);
        let out = build_tree(open_scan(&loc, &io, None).unwrap(), &abcd(), &MemoryBudget::unlimited(), None, true).unwrap();
        let BuildOutcome::Complete { tree, array } = out else { panic!("aborted") };
        assert_eq!(tree.n_nodes(), 7);
        assert_eq!(tree.inserted_tx(), 4);
        // a b c d = 0 1 2 3
        assert_eq!(array.get(1, 0), 2);
        assert_eq!(array.get(3, 1), 2);
        assert_eq!(array.get(2, 0), 1);
        assert_eq!(array.get(2, 1), 1);
        assert_eq!(array.get(3, 0), 1);
        assert_eq!(array.get(3, 2), 1);
    }

    #[test]
    fn d1_abort_at_three_nodes_completes_array() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let loc = d1(dir.path(), &io);
        let out = build_tree(
            open_scan(&loc, &io, None).unwrap(),
            &abcd(),
            &MemoryBudget::with_node_limit(3),
            None,
            true,
        )
        .unwrap();
        let BuildOutcome::Aborted { tree, array, position } = out else { panic!("completed") };
        assert_eq!(position.transactions_consumed, 1);
        assert_eq!(tree.n_nodes(), 3);
        assert_eq!(tree.inserted_tx(), 1);
        assert_eq!(array.get(1, 0), 2);
        assert_eq!(array.get(3, 1), 2);
        assert_eq!(io.stats().bytes_read, loc.file_size().unwrap());
    }

    #[test]
    fn zero_node_budget_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let loc = d1(dir.path(), &io);
        let r = build_tree(open_scan(&loc, &io, None).unwrap(), &abcd(), &MemoryBudget::new(1), None, true);
        assert!(matches!(r, Err(Error::BudgetTooSmall { .. })));
    }

    #[test]
    fn conditional_tree_of_d() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let loc = d1(dir.path(), &io);
        let out = build_tree(open_scan(&loc, &io, None).unwrap(), &abcd(), &MemoryBudget::unlimited(), None, true).unwrap();
        let BuildOutcome::Complete { tree, array } = out else { panic!() };
        let th = SupportThreshold::absolute(2);
        let (cond, _) = conditional_tree(&tree, &array, 3, &th, None);
        assert_eq!(cond.order(), &[ItemId(1)]);
        assert_eq!(cond.dump(), "1:2\n");
        assert_eq!(cond.inserted_tx(), tree.header_count(3));

        let (top, _) = conditional_tree(&tree, &array, 0, &th, None);
        assert!(top.is_empty());
        assert_eq!(top.inserted_tx(), 3);
    }
}
